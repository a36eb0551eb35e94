#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "dlp/rng.hpp"
#include "dlp/tensor.hpp"

namespace dlp::data {

struct PreprocessConfig {
    int base_size = 512;
    int expand_size = 588;
    int crop_size = 512;
    double hflip_prob = 0.5;

    void validate() const;
};

struct DomainDataset {
    std::filesystem::path root_path;
    std::vector<std::filesystem::path> image_paths;
    char domain_tag = 'X';  // 'X' or 'Y'
    std::string split = "train";
    int skipped = 0;  // non-image or unreadable entries

    size_t size() const { return image_paths.size(); }
};

// Enumerates png/jpg/jpeg files in lexicographic order; skips everything else.
DomainDataset load_domain_folder(const std::filesystem::path& path, char domain_tag,
                                 const std::string& split);

cv::Mat load_image(const std::filesystem::path& path);

// resize base -> resize expand -> random crop -> random hflip -> [-1, 1].
// Test split: center crop, no flip.
Tensor preprocess(const cv::Mat& raw, const PreprocessConfig& config, Rng& rng,
                  bool train_mode = true);

// Inverse map to 8-bit RGB, rounding half away from zero; out-of-range input
// is clamped and counted in *clamped when provided.
cv::Mat denormalize(const Tensor& t, int* clamped = nullptr);

Tensor tensor_from_rgb(const cv::Mat& rgb8);  // [0,255] u8 -> [-1,1]

// Unpaired batch stream: one epoch is max(|X|, |Y|) draws; the shorter domain
// cycles with a reshuffle. Augmentation streams for X and Y are independent.
class UnpairedSampler {
public:
    UnpairedSampler(const DomainDataset& x, const DomainDataset& y, PreprocessConfig config,
                    uint64_t seed, int64_t epoch = 0);

    int64_t epoch_length() const { return epoch_length_; }

    // indices drawn this step, mainly for the independence tests
    struct Draw {
        Tensor x, y;
        size_t x_index, y_index;
    };
    Draw next();

private:
    size_t next_index(std::vector<size_t>& order, size_t& pos, Rng& rng, size_t n);

    const DomainDataset& x_;
    const DomainDataset& y_;
    PreprocessConfig config_;
    int64_t epoch_length_;
    Rng index_rng_x_, index_rng_y_, aug_rng_x_, aug_rng_y_;
    std::vector<size_t> order_x_, order_y_;
    size_t pos_x_ = 0, pos_y_ = 0;
};

}  // namespace dlp::data
