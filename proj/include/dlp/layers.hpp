#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dlp/autodiff.hpp"
#include "dlp/rng.hpp"

namespace dlp::nn {

// Base for anything holding parameters. Parameters are named hierarchically
// ("encoder.0.weight") through the child registry.
class Module {
public:
    virtual ~Module() = default;
    virtual ag::Var forward(const ag::Var& x) = 0;

    std::vector<std::pair<std::string, ag::Var>> named_parameters() const;
    int64_t parameter_count() const;
    void set_trainable(bool trainable);

    const std::string& topology_id() const { return topology_id_; }

protected:
    ag::Var add_param(const std::string& name, Tensor init, bool trainable = true);
    void add_child(const std::string& name, std::shared_ptr<Module> child);
    std::string topology_id_;

private:
    std::vector<std::pair<std::string, ag::Var>> params_;
    std::vector<std::pair<std::string, std::shared_ptr<Module>>> children_;
};

using ModulePtr = std::shared_ptr<Module>;

class Conv2d : public Module {
public:
    Conv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride = 1, int64_t pad = 0,
           bool reflect = false, bool bias = true);
    ag::Var forward(const ag::Var& x) override;

private:
    ag::Var weight_, bias_;
    kernels::Conv2dOpts opts_;
};

class ConvTranspose2d : public Module {
public:
    ConvTranspose2d(int64_t in_ch, int64_t out_ch, int64_t kernel = 3, int64_t stride = 2,
                    int64_t pad = 1, int64_t out_pad = 1, bool bias = true);
    ag::Var forward(const ag::Var& x) override;

private:
    ag::Var weight_, bias_;
    kernels::ConvT2dOpts opts_;
};

class InstanceNorm2d : public Module {
public:
    explicit InstanceNorm2d(int64_t channels, bool affine = true, double eps = 1e-5);
    ag::Var forward(const ag::Var& x) override;

private:
    ag::Var gamma_, beta_;
    double eps_;
};

enum class Activation { relu, leaky_relu, tanh, sigmoid, none };

class ActivationLayer : public Module {
public:
    explicit ActivationLayer(Activation kind, double slope = 0.2) : kind_(kind), slope_(slope) {}
    ag::Var forward(const ag::Var& x) override;

private:
    Activation kind_;
    double slope_;
};

class Sequential : public Module {
public:
    Sequential() = default;
    void push(ModulePtr m);
    ag::Var forward(const ag::Var& x) override;
    size_t size() const { return layers_.size(); }

private:
    std::vector<ModulePtr> layers_;
};

// conv-IN-relu-conv-IN with identity shortcut, reflection padded
class ResidualBlock : public Module {
public:
    explicit ResidualBlock(int64_t channels);
    ag::Var forward(const ag::Var& x) override;

private:
    ModulePtr body_;
};

// Dense block (each layer sees the concatenation of the block input and all
// previous layer outputs) followed by a 1x1 fusion conv back to trunk width.
class DenseFusionBlock : public Module {
public:
    DenseFusionBlock(int64_t channels, int64_t n_layers, int64_t growth);
    ag::Var forward(const ag::Var& x) override;

    // concatenation fed to the fusion conv; exposed for wiring tests
    ag::Var fusion_input(const ag::Var& x);
    int64_t fusion_in_channels() const { return channels_ + n_layers_ * growth_; }

private:
    int64_t channels_, n_layers_, growth_;
    std::vector<ModulePtr> dense_layers_;
    ModulePtr fusion_;
};

// Gaussian init: conv weights ~ N(0, std^2), norm scales ~ N(1, std^2), biases 0.
void init_weights(Module& m, double stddev, Rng& rng);

}  // namespace dlp::nn
