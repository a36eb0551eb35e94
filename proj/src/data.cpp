#include "dlp/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace dlp::data {

namespace fs = std::filesystem;

void PreprocessConfig::validate() const {
    if (crop_size < 1) throw std::invalid_argument("PreprocessConfig: crop_size must be >= 1");
    if (expand_size < crop_size)
        throw std::invalid_argument("PreprocessConfig: expand_size must be >= crop_size");
    if (base_size < 1) throw std::invalid_argument("PreprocessConfig: base_size must be >= 1");
    if (hflip_prob < 0.0 || hflip_prob > 1.0)
        throw std::invalid_argument("PreprocessConfig: hflip_prob must be a probability");
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

DomainDataset load_domain_folder(const fs::path& path, char domain_tag,
                                 const std::string& split) {
    if (!fs::is_directory(path))
        throw std::runtime_error("load_domain_folder: not a directory: " + path.string());
    DomainDataset ds;
    ds.root_path = path;
    ds.domain_tag = domain_tag;
    ds.split = split;
    std::vector<fs::path> candidates;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        if (has_image_extension(entry.path()))
            candidates.push_back(entry.path());
        else
            ++ds.skipped;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    for (const auto& p : candidates) {
        cv::Mat m = cv::imread(p.string(), cv::IMREAD_COLOR);
        if (m.empty()) {
            ++ds.skipped;
            continue;
        }
        ds.image_paths.push_back(p);
    }
    if (ds.image_paths.empty())
        throw std::runtime_error("load_domain_folder: no images found in " + path.string());
    return ds;
}

cv::Mat load_image(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw std::runtime_error("load_image: cannot decode " + path.string());
    return m;
}

Tensor tensor_from_rgb(const cv::Mat& rgb8) {
    if (rgb8.type() != CV_8UC3) throw std::invalid_argument("tensor_from_rgb: expected CV_8UC3");
    const int64_t h = rgb8.rows, w = rgb8.cols;
    Tensor t({1, 3, h, w});
    for (int64_t r = 0; r < h; ++r) {
        const cv::Vec3b* row = rgb8.ptr<cv::Vec3b>(static_cast<int>(r));
        for (int64_t c = 0; c < w; ++c)
            for (int64_t ch = 0; ch < 3; ++ch)
                t.at(0, ch, r, c) = static_cast<double>(row[c][static_cast<int>(ch)]) / 127.5 - 1.0;
    }
    return t;
}

Tensor preprocess(const cv::Mat& raw, const PreprocessConfig& config, Rng& rng,
                  bool train_mode) {
    config.validate();
    if (raw.empty() || raw.rows < 1 || raw.cols < 1)
        throw std::invalid_argument("preprocess: degenerate image");
    cv::Mat bgr;
    if (raw.type() == CV_8UC3)
        bgr = raw;
    else if (raw.type() == CV_8UC1)
        cv::cvtColor(raw, bgr, cv::COLOR_GRAY2BGR);
    else
        throw std::invalid_argument("preprocess: unsupported image type");

    cv::Mat resized;
    cv::resize(bgr, resized, cv::Size(config.base_size, config.base_size), 0, 0,
               cv::INTER_LINEAR);
    cv::Mat expanded;
    cv::resize(resized, expanded, cv::Size(config.expand_size, config.expand_size), 0, 0,
               cv::INTER_LINEAR);

    const int max_off = config.expand_size - config.crop_size;
    int off_x, off_y;
    bool flip = false;
    if (train_mode) {
        off_x = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(max_off + 1)));
        off_y = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(max_off + 1)));
        flip = rng.bernoulli(config.hflip_prob);
    } else {
        off_x = max_off / 2;
        off_y = max_off / 2;
    }
    cv::Mat crop = expanded(cv::Rect(off_x, off_y, config.crop_size, config.crop_size)).clone();
    if (flip) cv::flip(crop, crop, 1);

    cv::Mat rgb;
    cv::cvtColor(crop, rgb, cv::COLOR_BGR2RGB);
    return tensor_from_rgb(rgb);
}

cv::Mat denormalize(const Tensor& t, int* clamped) {
    if (t.ndim() != 4 || t.dim(0) != 1 || t.dim(1) != 3)
        throw std::invalid_argument("denormalize: expected 1×3×H×W tensor");
    const int64_t h = t.dim(2), w = t.dim(3);
    cv::Mat rgb(static_cast<int>(h), static_cast<int>(w), CV_8UC3);
    int n_clamped = 0;
    for (int64_t r = 0; r < h; ++r) {
        cv::Vec3b* row = rgb.ptr<cv::Vec3b>(static_cast<int>(r));
        for (int64_t c = 0; c < w; ++c) {
            for (int64_t ch = 0; ch < 3; ++ch) {
                double v = t.at(0, ch, r, c);
                if (v < -1.0 || v > 1.0) {
                    v = std::clamp(v, -1.0, 1.0);
                    ++n_clamped;
                }
                // round half away from zero
                const double scaled = (v + 1.0) * 127.5;
                row[c][static_cast<int>(ch)] =
                    static_cast<uchar>(std::clamp(std::round(scaled), 0.0, 255.0));
            }
        }
    }
    if (clamped) *clamped = n_clamped;
    return rgb;
}

UnpairedSampler::UnpairedSampler(const DomainDataset& x, const DomainDataset& y,
                                 PreprocessConfig config, uint64_t seed, int64_t epoch)
    : x_(x), y_(y), config_(std::move(config)) {
    if (x.size() == 0 || y.size() == 0)
        throw std::invalid_argument("UnpairedSampler: empty dataset");
    epoch_length_ = static_cast<int64_t>(std::max(x.size(), y.size()));
    Rng base(seed);
    Rng epoch_rng = base.fork(static_cast<uint64_t>(epoch));
    index_rng_x_ = epoch_rng.fork(1);
    index_rng_y_ = epoch_rng.fork(2);
    aug_rng_x_ = epoch_rng.fork(3);
    aug_rng_y_ = epoch_rng.fork(4);
}

size_t UnpairedSampler::next_index(std::vector<size_t>& order, size_t& pos, Rng& rng, size_t n) {
    if (pos >= order.size()) {
        order.resize(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        // Fisher-Yates
        for (size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        pos = 0;
    }
    return order[pos++];
}

UnpairedSampler::Draw UnpairedSampler::next() {
    Draw d;
    d.x_index = next_index(order_x_, pos_x_, index_rng_x_, x_.size());
    d.y_index = next_index(order_y_, pos_y_, index_rng_y_, y_.size());
    const bool train = x_.split == "train";
    d.x = preprocess(load_image(x_.image_paths[d.x_index]), config_, aug_rng_x_, train);
    d.y = preprocess(load_image(y_.image_paths[d.y_index]), config_, aug_rng_y_,
                     y_.split == "train");
    return d;
}

}  // namespace dlp::data
