#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dlp/data.hpp"

using namespace dlp;

namespace fs = std::filesystem;

namespace {

cv::Mat seeded_image(uint64_t seed, int rows = 24, int cols = 24) {
    Rng rng(seed);
    cv::Mat img(rows, cols, CV_8UC3);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            for (int ch = 0; ch < 3; ++ch)
                img.at<cv::Vec3b>(r, c)[ch] = static_cast<uchar>(rng.uniform_int(256));
    return img;
}

fs::path make_folder(const std::string& name, int n_images, uint64_t seed = 1) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::create_directories(dir);
    for (int i = 0; i < n_images; ++i)
        cv::imwrite((dir / ("img_" + std::to_string(i) + ".png")).string(),
                    seeded_image(seed + static_cast<uint64_t>(i)));
    return dir;
}

data::PreprocessConfig small_config() {
    data::PreprocessConfig c;
    c.base_size = 16;
    c.expand_size = 20;
    c.crop_size = 16;
    return c;
}

}  // namespace

TEST_CASE("folder enumeration is lexicographic and skips non-images") {
    fs::path dir = fs::temp_directory_path() / "data_enum";
    fs::create_directories(dir);
    cv::imwrite((dir / "b.png").string(), seeded_image(1));
    cv::imwrite((dir / "a.jpg").string(), seeded_image(2));
    cv::imwrite((dir / "C.JPEG").string(), seeded_image(3));
    std::ofstream(dir / "notes.txt") << "not an image";
    std::ofstream(dir / "broken.png") << "truncated garbage";

    auto ds = data::load_domain_folder(dir, 'X', "train");
    REQUIRE(ds.size() == 3);
    CHECK(ds.image_paths[0].filename() == "C.JPEG");
    CHECK(ds.image_paths[1].filename() == "a.jpg");
    CHECK(ds.image_paths[2].filename() == "b.png");
    CHECK(ds.skipped == 2);  // the text file and the undecodable png
    fs::remove_all(dir);
}

TEST_CASE("empty or missing folders raise") {
    fs::path dir = fs::temp_directory_path() / "data_empty";
    fs::create_directories(dir);
    CHECK_THROWS_WITH_AS(data::load_domain_folder(dir, 'X', "train"),
                         doctest::Contains("no images found"), std::runtime_error);
    fs::remove_all(dir);
    CHECK_THROWS_AS(data::load_domain_folder("/nonexistent/folder", 'X', "train"),
                    std::runtime_error);
}

TEST_CASE("normalization maps 8-bit extremes to the tanh range endpoints") {
    cv::Mat white(4, 4, CV_8UC3, cv::Scalar(255, 255, 255));
    Tensor t = data::tensor_from_rgb(white);
    CHECK(t.min() == doctest::Approx(1.0));
    CHECK(t.max() == doctest::Approx(1.0));
    cv::Mat black(4, 4, CV_8UC3, cv::Scalar(0, 0, 0));
    CHECK(data::tensor_from_rgb(black).max() == doctest::Approx(-1.0));
    cv::Mat mid(4, 4, CV_8UC3, cv::Scalar(127, 128, 129));
    Tensor m = data::tensor_from_rgb(mid);
    CHECK(m.min() == doctest::Approx(127.0 / 127.5 - 1.0));
}

TEST_CASE("denormalize inverts normalization up to one quantization level") {
    cv::Mat img = seeded_image(7, 8, 8);
    cv::Mat rgb;
    cv::cvtColor(img, rgb, cv::COLOR_BGR2RGB);
    Tensor t = data::tensor_from_rgb(rgb);
    int clamped = -1;
    cv::Mat back = data::denormalize(t, &clamped);
    CHECK(clamped == 0);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            for (int ch = 0; ch < 3; ++ch)
                CHECK(back.at<cv::Vec3b>(r, c)[ch] == rgb.at<cv::Vec3b>(r, c)[ch]);

    Tensor wild({1, 3, 2, 2}, 1.5);
    data::denormalize(wild, &clamped);
    CHECK(clamped == 12);
}

TEST_CASE("preprocess emits the configured crop in [-1, 1], deterministically") {
    auto cfg = small_config();
    cv::Mat img = seeded_image(11, 40, 30);
    Rng rng_a(5), rng_b(5);
    Tensor a = data::preprocess(img, cfg, rng_a, true);
    Tensor b = data::preprocess(img, cfg, rng_b, true);
    REQUIRE(a.shape() == std::vector<int64_t>{1, 3, 16, 16});
    CHECK(a.min() >= -1.0);
    CHECK(a.max() <= 1.0);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("test-split preprocessing is augmentation-free") {
    auto cfg = small_config();
    cfg.hflip_prob = 1.0;
    cv::Mat img = seeded_image(13, 32, 32);
    Rng r1(1), r2(999);  // different streams must not matter in test mode
    Tensor a = data::preprocess(img, cfg, r1, false);
    Tensor b = data::preprocess(img, cfg, r2, false);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("full flip probability mirrors the crop horizontally") {
    auto cfg = small_config();
    cfg.expand_size = 16;  // no crop offset, isolate the flip
    cfg.hflip_prob = 1.0;
    cv::Mat img = seeded_image(17, 20, 20);
    Rng rng(3);
    Tensor flipped = data::preprocess(img, cfg, rng, true);
    cfg.hflip_prob = 0.0;
    Rng rng2(3);
    Tensor plain = data::preprocess(img, cfg, rng2, true);
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t h = 0; h < 16; ++h)
            for (int64_t w = 0; w < 16; ++w)
                CHECK(flipped.at(0, c, h, w) == plain.at(0, c, h, 15 - w));
}

TEST_CASE("preprocess config validation") {
    data::PreprocessConfig bad;
    bad.expand_size = 100;
    bad.crop_size = 200;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = data::PreprocessConfig{};
    bad.hflip_prob = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("epoch length is the larger domain size") {
    fs::path xd = make_folder("data_epoch_x", 3, 20);
    fs::path yd = make_folder("data_epoch_y", 5, 40);
    auto dx = data::load_domain_folder(xd, 'X', "train");
    auto dy = data::load_domain_folder(yd, 'Y', "train");
    data::UnpairedSampler s(dx, dy, small_config(), 1);
    CHECK(s.epoch_length() == 5);
    fs::remove_all(xd);
    fs::remove_all(yd);
}

TEST_CASE("each domain is a reshuffled permutation; draws are reproducible") {
    fs::path xd = make_folder("data_perm_x", 4, 60);
    fs::path yd = make_folder("data_perm_y", 4, 80);
    auto dx = data::load_domain_folder(xd, 'X', "train");
    auto dy = data::load_domain_folder(yd, 'Y', "train");

    data::UnpairedSampler s1(dx, dy, small_config(), 9, 0);
    data::UnpairedSampler s2(dx, dy, small_config(), 9, 0);
    std::vector<size_t> seen_x;
    for (int i = 0; i < 4; ++i) {
        auto d1 = s1.next();
        auto d2 = s2.next();
        CHECK(d1.x_index == d2.x_index);
        CHECK(d1.y_index == d2.y_index);
        for (int64_t j = 0; j < d1.x.numel(); ++j) CHECK(d1.x[j] == d2.x[j]);
        seen_x.push_back(d1.x_index);
    }
    std::sort(seen_x.begin(), seen_x.end());
    CHECK(seen_x == std::vector<size_t>{0, 1, 2, 3});

    data::UnpairedSampler s3(dx, dy, small_config(), 9, 1);  // different epoch stream
    bool any_different = false;
    for (int i = 0; i < 4; ++i)
        if (s3.next().x_index != seen_x[static_cast<size_t>(i)]) any_different = true;
    CHECK(any_different);
    fs::remove_all(xd);
    fs::remove_all(yd);
}

TEST_CASE("x and y index streams are statistically independent") {
    fs::path xd = make_folder("data_chi_x", 4, 100);
    fs::path yd = make_folder("data_chi_y", 4, 120);
    auto dx = data::load_domain_folder(xd, 'X', "train");
    auto dy = data::load_domain_folder(yd, 'Y', "train");

    // pair counts over many epochs; independence => uniform over the 4x4 table
    double counts[4][4] = {};
    const int epochs = 400;
    for (int e = 0; e < epochs; ++e) {
        data::UnpairedSampler sampler(dx, dy, small_config(), 77, e);
        for (int i = 0; i < 4; ++i) {
            auto d = sampler.next();
            counts[d.x_index][d.y_index] += 1.0;
        }
    }
    const double expected = epochs * 4 / 16.0;
    double chi2 = 0.0;
    for (auto& row : counts)
        for (double c : row) chi2 += (c - expected) * (c - expected) / expected;
    // df = 9, p = 0.01 critical value
    CHECK(chi2 < 21.666);
    fs::remove_all(xd);
    fs::remove_all(yd);
}
