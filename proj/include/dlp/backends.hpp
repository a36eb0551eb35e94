#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dlp/layers.hpp"

namespace dlp::backends {

enum class Kind {
    feature_vgg16_relu3_3,
    edge_dexined,
    lpips_distance,
    stub_feature,
    stub_edge,
    stub_distance,
    stub_inception,  // pooled D-vector features for FID/KID
};

Kind kind_from_string(const std::string& s);
std::string to_string(Kind k);
bool is_stub(Kind k);
bool is_feature_kind(Kind k);
bool is_edge_kind(Kind k);
bool is_distance_kind(Kind k);

// A frozen, deterministic perceptual service. Parameters never receive
// gradient updates; gradients do flow through to the inputs.
struct BackendHandle {
    Kind kind;
    std::string id;  // kind plus weight provenance; recorded in reports
    std::filesystem::path weights_path;

    // staged conv stack; distance kinds tap the output of every stage
    std::vector<nn::ModulePtr> stages;
    std::vector<ag::Var> lin_weights;  // per-tap channel weights (distance kinds)

    // input convention: y = x * in_scale[c] + in_shift[c] applied before the stack
    std::vector<double> in_scale, in_shift;

    int64_t feature_channels = 0;
    int64_t feature_divisor = 1;

    std::vector<std::pair<std::string, ag::Var>> parameters() const;
};

// Stub kinds need no path; file-backed kinds validate the weight directory
// (manifest of entry name -> shape -> dtype, one raw float32 file per entry).
BackendHandle load_backend(Kind kind, const std::filesystem::path& weights_path = {});

// Feature map at the backend's tap layer (relu3_3 for the vgg kind).
ag::Var extract_features(const BackendHandle& b, const ag::Var& img);
Tensor extract_features(const BackendHandle& b, const Tensor& img);

// Single-channel edge map in [0, 1] at input resolution.
ag::Var extract_edges(const BackendHandle& b, const ag::Var& img);
Tensor extract_edges(const BackendHandle& b, const Tensor& img);

// Symmetric nonnegative perceptual distance; single-channel inputs are
// replicated to 3 channels.
ag::Var perceptual_distance(const BackendHandle& b, const ag::Var& a, const ag::Var& c);
double perceptual_distance(const BackendHandle& b, const Tensor& a, const Tensor& c);

// Global-pooled feature vector (stub_inception) for distribution metrics.
std::vector<double> pooled_features(const BackendHandle& b, const Tensor& img);

}  // namespace dlp::backends
