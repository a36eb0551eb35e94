#include "dlp/nets.hpp"

#include <algorithm>
#include <stdexcept>

namespace dlp::nets {

namespace {

using nn::ActivationLayer;
using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::InstanceNorm2d;
using nn::ResidualBlock;
using nn::Sequential;

void push_encoder(Sequential& net, int64_t bc) {
    net.push(std::make_shared<Conv2d>(3, bc, 7, 1, 3, /*reflect=*/true));
    net.push(std::make_shared<InstanceNorm2d>(bc));
    net.push(std::make_shared<ActivationLayer>(nn::Activation::relu));
    net.push(std::make_shared<Conv2d>(bc, 2 * bc, 3, 2, 1));
    net.push(std::make_shared<InstanceNorm2d>(2 * bc));
    net.push(std::make_shared<ActivationLayer>(nn::Activation::relu));
    net.push(std::make_shared<Conv2d>(2 * bc, 4 * bc, 3, 2, 1));
    net.push(std::make_shared<InstanceNorm2d>(4 * bc));
    net.push(std::make_shared<ActivationLayer>(nn::Activation::relu));
}

void push_decoder(Sequential& net, int64_t bc) {
    net.push(std::make_shared<ConvTranspose2d>(4 * bc, 2 * bc));
    net.push(std::make_shared<InstanceNorm2d>(2 * bc));
    net.push(std::make_shared<ActivationLayer>(nn::Activation::relu));
    net.push(std::make_shared<ConvTranspose2d>(2 * bc, bc));
    net.push(std::make_shared<InstanceNorm2d>(bc));
    net.push(std::make_shared<ActivationLayer>(nn::Activation::relu));
    net.push(std::make_shared<Conv2d>(bc, 3, 7, 1, 3, /*reflect=*/true));
    net.push(std::make_shared<ActivationLayer>(nn::Activation::tanh));
}

class GeneratorNet : public Sequential {
public:
    explicit GeneratorNet(std::string id) { topology_id_ = std::move(id); }
};

class DiscriminatorNet : public Sequential {
public:
    explicit DiscriminatorNet(std::string id) { topology_id_ = std::move(id); }
};

}  // namespace

void GeneratorSpec::validate() const {
    if (base_channels < 2 || base_channels % 2 != 0)
        throw std::invalid_argument("GeneratorSpec: base_channels must be even and >= 2");
    if (n_residual_blocks_f < 1 || n_residual_blocks_g < 1)
        throw std::invalid_argument("GeneratorSpec: residual block counts must be >= 1");
    if (dense_layers < 1 || dense_growth < 1)
        throw std::invalid_argument("GeneratorSpec: dense layer count and growth must be >= 1");
    if (norm_kind != "instance")
        throw std::invalid_argument("GeneratorSpec: unsupported norm kind '" + norm_kind + "'");
    if (output_activation != "tanh")
        throw std::invalid_argument("GeneratorSpec: unsupported output activation");
}

void DiscriminatorSpec::validate() const {
    if (n_down_layers < 1) throw std::invalid_argument("DiscriminatorSpec: n_down_layers >= 1");
    if (base_channels < 1 || kernel < 1)
        throw std::invalid_argument("DiscriminatorSpec: invalid channels or kernel");
    if (activation != "relu" && activation != "leaky_relu")
        throw std::invalid_argument("DiscriminatorSpec: unknown activation '" + activation + "'");
}

nn::ModulePtr build_residual_generator(const GeneratorSpec& spec) {
    spec.validate();
    auto net = std::make_shared<GeneratorNet>(
        "resnet_generator/bc" + std::to_string(spec.base_channels) + "_r" +
        std::to_string(spec.n_residual_blocks_f));
    push_encoder(*net, spec.base_channels);
    for (int64_t i = 0; i < spec.n_residual_blocks_f; ++i)
        net->push(std::make_shared<ResidualBlock>(4 * spec.base_channels));
    push_decoder(*net, spec.base_channels);
    return net;
}

nn::ModulePtr build_dense_fusion_generator(const GeneratorSpec& spec) {
    spec.validate();
    auto net = std::make_shared<GeneratorNet>(
        "dense_fusion_generator/bc" + std::to_string(spec.base_channels) + "_r" +
        std::to_string(spec.n_residual_blocks_g) + "_d" + std::to_string(spec.dense_layers) +
        "x" + std::to_string(spec.dense_growth));
    push_encoder(*net, spec.base_channels);
    for (int64_t i = 0; i < spec.n_residual_blocks_g; ++i)
        net->push(std::make_shared<ResidualBlock>(4 * spec.base_channels));
    net->push(std::make_shared<nn::DenseFusionBlock>(4 * spec.base_channels, spec.dense_layers,
                                                     spec.dense_growth));
    push_decoder(*net, spec.base_channels);
    return net;
}

nn::ModulePtr build_patch_discriminator(const DiscriminatorSpec& spec) {
    spec.validate();
    auto net = std::make_shared<DiscriminatorNet>(
        "patch_discriminator/bc" + std::to_string(spec.base_channels) + "_n" +
        std::to_string(spec.n_down_layers) + "_" + spec.activation);
    const auto act = spec.activation == "relu" ? nn::Activation::relu : nn::Activation::leaky_relu;
    int64_t in_ch = 3;
    for (int64_t i = 0; i < spec.n_down_layers; ++i) {
        const int64_t out_ch = std::min(spec.base_channels << i, spec.base_channels * 8);
        net->push(std::make_shared<Conv2d>(in_ch, out_ch, spec.kernel, 2, 1));
        if (i > 0) net->push(std::make_shared<InstanceNorm2d>(out_ch));
        net->push(std::make_shared<ActivationLayer>(act));
        in_ch = out_ch;
    }
    net->push(std::make_shared<Conv2d>(in_ch, 1, spec.kernel, 1, 1));
    return net;
}

Tensor forward_generate(nn::Module& net, const Tensor& img) {
    if (img.ndim() != 4 || img.dim(1) != 3)
        throw std::invalid_argument("forward_generate: expected N×3×H×W input");
    if (img.dim(2) % 4 != 0 || img.dim(3) % 4 != 0)
        throw std::invalid_argument("forward_generate: spatial dims must be divisible by 4, got " +
                                    img.shape_str());
    return net.forward(ag::constant(img))->value;
}

int64_t discriminator_score_size(int64_t input, const DiscriminatorSpec& spec) {
    int64_t s = input;
    for (int64_t i = 0; i < spec.n_down_layers; ++i)
        s = kernels::conv2d_out_size(s, spec.kernel, 2, 1);
    return kernels::conv2d_out_size(s, spec.kernel, 1, 1);
}

Tensor forward_discriminate(nn::Module& net, const Tensor& img, const DiscriminatorSpec& spec) {
    const int64_t min_size = int64_t{1} << spec.n_down_layers;
    if (img.ndim() != 4 || img.dim(2) < min_size || img.dim(3) < min_size)
        throw std::invalid_argument("forward_discriminate: input must be at least " +
                                    std::to_string(min_size) + " pixels per side");
    return net.forward(ag::constant(img))->value;
}

int64_t count_parameters(const nn::Module& net) { return net.parameter_count(); }

}  // namespace dlp::nets
