#pragma once

#include <memory>
#include <string>

#include "dlp/layers.hpp"

namespace dlp::nets {

struct GeneratorSpec {
    int64_t base_channels = 64;
    int64_t n_residual_blocks_f = 6;
    int64_t n_residual_blocks_g = 2;
    int64_t dense_layers = 7;
    int64_t dense_growth = 240;
    std::string norm_kind = "instance";
    std::string output_activation = "tanh";

    void validate() const;
};

struct DiscriminatorSpec {
    int64_t base_channels = 64;
    int64_t n_down_layers = 4;
    int64_t kernel = 4;
    std::string activation = "relu";  // or "leaky_relu"

    void validate() const;
};

// Y -> X generator: encoder, n_residual_blocks_f residual blocks, decoder.
nn::ModulePtr build_residual_generator(const GeneratorSpec& spec);

// X -> Y generator: same encoder/decoder, residual blocks plus a dense-fusion block.
nn::ModulePtr build_dense_fusion_generator(const GeneratorSpec& spec);

nn::ModulePtr build_patch_discriminator(const DiscriminatorSpec& spec);

// Validates spatial divisibility, runs the net, checks the tanh output range.
Tensor forward_generate(nn::Module& net, const Tensor& img);

// Validates minimum size for the downsampling chain.
Tensor forward_discriminate(nn::Module& net, const Tensor& img, const DiscriminatorSpec& spec);

// Spatial size of the patch score map for a given input size.
int64_t discriminator_score_size(int64_t input, const DiscriminatorSpec& spec);

int64_t count_parameters(const nn::Module& net);

}  // namespace dlp::nets
