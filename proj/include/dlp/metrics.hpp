#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "dlp/backends.hpp"
#include "dlp/tensor.hpp"

namespace dlp::metrics {

struct ActivationStats {
    std::vector<double> mean;               // length D
    std::vector<double> covariance;         // D×D, row-major, symmetric
    int64_t n_samples = 0;
    int64_t dim() const { return static_cast<int64_t>(mean.size()); }
};

struct MetricReport {
    double fid = 0, kid = 0, psnr_mean = 0, ssim_mean = 0;
    int64_t n_generated = 0, n_reference = 0;
    std::string backend_id;
};

// sample mean and unbiased sample covariance over pooled feature vectors
ActivationStats compute_activation_stats(const std::vector<std::vector<double>>& features);
ActivationStats compute_activation_stats(const std::vector<Tensor>& images,
                                         const backends::BackendHandle& feature_backend);

// ‖μa−μb‖² + Tr(Σa + Σb − 2(ΣaΣb)^½)
double frechet_distance(const ActivationStats& a, const ActivationStats& b);

// unbiased MMD² with k(u,v) = (u·v/D + 1)³, block-averaged for large sets
double kid(const std::vector<std::vector<double>>& features_a,
           const std::vector<std::vector<double>>& features_b);

// 10·log10(255²/MSE); +inf for identical images
double psnr(const cv::Mat& a, const cv::Mat& b);

// mean local SSIM, 11×11 Gaussian window σ=1.5, on ITU-R 601 luma
double ssim(const cv::Mat& a, const cv::Mat& b);

enum class Pairing { paired, unpaired };

MetricReport evaluate_folder(const std::filesystem::path& generated_dir,
                             const std::filesystem::path& reference_dir,
                             const backends::BackendHandle& feature_backend,
                             Pairing pairing = Pairing::paired);

}  // namespace dlp::metrics
