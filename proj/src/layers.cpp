#include "dlp/layers.hpp"

#include <stdexcept>

namespace dlp::nn {

std::vector<std::pair<std::string, ag::Var>> Module::named_parameters() const {
    std::vector<std::pair<std::string, ag::Var>> out;
    for (const auto& [name, p] : params_) out.emplace_back(name, p);
    for (const auto& [name, child] : children_)
        for (const auto& [pname, p] : child->named_parameters())
            out.emplace_back(name + "." + pname, p);
    return out;
}

int64_t Module::parameter_count() const {
    int64_t n = 0;
    for (const auto& [name, p] : named_parameters()) n += p->value.numel();
    return n;
}

void Module::set_trainable(bool trainable) {
    for (auto& [name, p] : named_parameters()) {
        p->trainable = trainable;
        p->requires_grad = trainable;
    }
}

ag::Var Module::add_param(const std::string& name, Tensor init, bool trainable) {
    auto v = ag::leaf(std::move(init), trainable, name);
    params_.emplace_back(name, v);
    return v;
}

void Module::add_child(const std::string& name, ModulePtr child) {
    children_.emplace_back(name, std::move(child));
}

Conv2d::Conv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride, int64_t pad,
               bool reflect, bool bias) {
    if (in_ch < 1 || out_ch < 1 || kernel < 1)
        throw std::invalid_argument("Conv2d: invalid dimensions");
    opts_ = {stride, pad, reflect};
    weight_ = add_param("weight", Tensor({out_ch, in_ch, kernel, kernel}));
    if (bias) bias_ = add_param("bias", Tensor({out_ch}));
}

ag::Var Conv2d::forward(const ag::Var& x) { return ag::conv2d(x, weight_, bias_, opts_); }

ConvTranspose2d::ConvTranspose2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride,
                                 int64_t pad, int64_t out_pad, bool bias) {
    opts_ = {stride, pad, out_pad};
    weight_ = add_param("weight", Tensor({in_ch, out_ch, kernel, kernel}));
    if (bias) bias_ = add_param("bias", Tensor({out_ch}));
}

ag::Var ConvTranspose2d::forward(const ag::Var& x) {
    return ag::conv_transpose2d(x, weight_, bias_, opts_);
}

InstanceNorm2d::InstanceNorm2d(int64_t channels, bool affine, double eps) : eps_(eps) {
    if (affine) {
        gamma_ = add_param("gamma", Tensor({channels}, 1.0));
        beta_ = add_param("beta", Tensor({channels}));
    }
}

ag::Var InstanceNorm2d::forward(const ag::Var& x) {
    return ag::instance_norm(x, gamma_, beta_, eps_);
}

ag::Var ActivationLayer::forward(const ag::Var& x) {
    switch (kind_) {
        case Activation::relu: return ag::relu(x);
        case Activation::leaky_relu: return ag::leaky_relu(x, slope_);
        case Activation::tanh: return ag::tanh_op(x);
        case Activation::sigmoid: return ag::sigmoid(x);
        case Activation::none: return x;
    }
    return x;
}

void Sequential::push(ModulePtr m) {
    add_child(std::to_string(layers_.size()), m);
    layers_.push_back(std::move(m));
}

ag::Var Sequential::forward(const ag::Var& x) {
    ag::Var v = x;
    for (auto& l : layers_) v = l->forward(v);
    return v;
}

ResidualBlock::ResidualBlock(int64_t channels) {
    auto body = std::make_shared<Sequential>();
    body->push(std::make_shared<Conv2d>(channels, channels, 3, 1, 1, /*reflect=*/true));
    body->push(std::make_shared<InstanceNorm2d>(channels));
    body->push(std::make_shared<ActivationLayer>(Activation::relu));
    body->push(std::make_shared<Conv2d>(channels, channels, 3, 1, 1, /*reflect=*/true));
    body->push(std::make_shared<InstanceNorm2d>(channels));
    add_child("body", body);
    body_ = body;
}

ag::Var ResidualBlock::forward(const ag::Var& x) { return ag::add(x, body_->forward(x)); }

DenseFusionBlock::DenseFusionBlock(int64_t channels, int64_t n_layers, int64_t growth)
    : channels_(channels), n_layers_(n_layers), growth_(growth) {
    if (n_layers < 1 || growth < 1)
        throw std::invalid_argument("DenseFusionBlock: invalid layer count or growth");
    for (int64_t i = 0; i < n_layers; ++i) {
        auto layer = std::make_shared<Sequential>();
        layer->push(std::make_shared<Conv2d>(channels + i * growth, growth, 3, 1, 1,
                                             /*reflect=*/true));
        layer->push(std::make_shared<InstanceNorm2d>(growth));
        layer->push(std::make_shared<ActivationLayer>(Activation::relu));
        add_child("dense" + std::to_string(i), layer);
        dense_layers_.push_back(layer);
    }
    auto fusion = std::make_shared<Sequential>();
    fusion->push(std::make_shared<Conv2d>(channels + n_layers * growth, channels, 1, 1, 0));
    fusion->push(std::make_shared<InstanceNorm2d>(channels));
    fusion->push(std::make_shared<ActivationLayer>(Activation::relu));
    add_child("fusion", fusion);
    fusion_ = fusion;
}

ag::Var DenseFusionBlock::fusion_input(const ag::Var& x) {
    std::vector<ag::Var> feats{x};
    for (auto& layer : dense_layers_) {
        ag::Var in = feats.size() == 1 ? feats[0] : ag::concat_channels(feats);
        feats.push_back(layer->forward(in));
    }
    return ag::concat_channels(feats);
}

ag::Var DenseFusionBlock::forward(const ag::Var& x) {
    return fusion_->forward(fusion_input(x));
}

void init_weights(Module& m, double stddev, Rng& rng) {
    for (auto& [name, p] : m.named_parameters()) {
        Tensor& t = p->value;
        if (name.ends_with(".gamma") || name == "gamma") {
            for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(1.0, stddev);
        } else if (name.ends_with(".beta") || name.ends_with(".bias") || name == "beta" ||
                   name == "bias") {
            t.fill(0.0);
        } else {
            for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, stddev);
        }
    }
}

}  // namespace dlp::nn
