#include "dlp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dlp/data.hpp"

namespace dlp::metrics {

ActivationStats compute_activation_stats(const std::vector<std::vector<double>>& features) {
    const int64_t n = static_cast<int64_t>(features.size());
    if (n < 2) throw std::invalid_argument("compute_activation_stats: need at least 2 samples");
    const int64_t d = static_cast<int64_t>(features[0].size());
    ActivationStats s;
    s.n_samples = n;
    s.mean.assign(static_cast<size_t>(d), 0.0);
    for (const auto& f : features) {
        if (static_cast<int64_t>(f.size()) != d)
            throw std::invalid_argument("compute_activation_stats: inconsistent dimensions");
        for (int64_t i = 0; i < d; ++i) s.mean[static_cast<size_t>(i)] += f[static_cast<size_t>(i)];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);
    s.covariance.assign(static_cast<size_t>(d * d), 0.0);
    for (const auto& f : features)
        for (int64_t i = 0; i < d; ++i)
            for (int64_t j = 0; j < d; ++j)
                s.covariance[static_cast<size_t>(i * d + j)] +=
                    (f[static_cast<size_t>(i)] - s.mean[static_cast<size_t>(i)]) *
                    (f[static_cast<size_t>(j)] - s.mean[static_cast<size_t>(j)]);
    for (auto& c : s.covariance) c /= static_cast<double>(n - 1);
    return s;
}

ActivationStats compute_activation_stats(const std::vector<Tensor>& images,
                                         const backends::BackendHandle& feature_backend) {
    std::vector<std::vector<double>> feats;
    feats.reserve(images.size());
    for (const auto& img : images) feats.push_back(backends::pooled_features(feature_backend, img));
    return compute_activation_stats(feats);
}

double frechet_distance(const ActivationStats& a, const ActivationStats& b) {
    const int64_t d = a.dim();
    if (d != b.dim()) throw std::invalid_argument("frechet_distance: dimension mismatch");
    using Mat = Eigen::MatrixXd;
    Mat sa = Eigen::Map<const Mat>(a.covariance.data(), d, d);
    Mat sb = Eigen::Map<const Mat>(b.covariance.data(), d, d);
    sa = 0.5 * (sa + sa.transpose().eval());
    sb = 0.5 * (sb + sb.transpose().eval());

    const double tol = 1e-6 * std::max(1.0, std::max(sa.trace(), sb.trace()));
    auto psd_sqrt = [&](const Mat& m, const char* name) {
        Eigen::SelfAdjointEigenSolver<Mat> es(m);
        const double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < -tol)
            throw std::runtime_error(std::string("frechet_distance: covariance ") + name +
                                     " is not PSD; min eigenvalue " + std::to_string(min_eig));
        Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return Mat(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
    };

    Mat ra = psd_sqrt(sa, "A");
    Mat inner = ra * sb * ra;
    inner = 0.5 * (inner + inner.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Mat> es(inner);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -tol * tol)
        throw std::runtime_error("frechet_distance: cross product is not PSD; min eigenvalue " +
                                 std::to_string(min_eig));
    const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    double mean_term = 0.0;
    for (int64_t i = 0; i < d; ++i) {
        const double diff = a.mean[static_cast<size_t>(i)] - b.mean[static_cast<size_t>(i)];
        mean_term += diff * diff;
    }
    return mean_term + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
}

namespace {

double poly3_kernel(const std::vector<double>& u, const std::vector<double>& v) {
    const double d = static_cast<double>(u.size());
    double dot = 0.0;
    for (size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    const double k = dot / d + 1.0;
    return k * k * k;
}

double mmd2_unbiased(const std::vector<const std::vector<double>*>& xa,
                     const std::vector<const std::vector<double>*>& xb) {
    const int64_t na = static_cast<int64_t>(xa.size());
    const int64_t nb = static_cast<int64_t>(xb.size());
    double kxx = 0.0, kyy = 0.0, kxy = 0.0;
    for (int64_t i = 0; i < na; ++i)
        for (int64_t j = 0; j < na; ++j)
            if (i != j) kxx += poly3_kernel(*xa[i], *xa[j]);
    for (int64_t i = 0; i < nb; ++i)
        for (int64_t j = 0; j < nb; ++j)
            if (i != j) kyy += poly3_kernel(*xb[i], *xb[j]);
    for (int64_t i = 0; i < na; ++i)
        for (int64_t j = 0; j < nb; ++j) kxy += poly3_kernel(*xa[i], *xb[j]);
    return kxx / static_cast<double>(na * (na - 1)) + kyy / static_cast<double>(nb * (nb - 1)) -
           2.0 * kxy / static_cast<double>(na * nb);
}

}  // namespace

double kid(const std::vector<std::vector<double>>& features_a,
           const std::vector<std::vector<double>>& features_b) {
    const int64_t na = static_cast<int64_t>(features_a.size());
    const int64_t nb = static_cast<int64_t>(features_b.size());
    if (na < 2 || nb < 2) throw std::invalid_argument("kid: each set needs at least 2 vectors");
    const int64_t m = std::min<int64_t>(1000, std::min(na, nb));
    if (std::max(na, nb) <= 1000) {
        std::vector<const std::vector<double>*> xa, xb;
        for (const auto& f : features_a) xa.push_back(&f);
        for (const auto& f : features_b) xb.push_back(&f);
        return mmd2_unbiased(xa, xb);
    }
    const int64_t n_blocks = (std::max(na, nb) + m - 1) / m;
    double acc = 0.0;
    for (int64_t t = 0; t < n_blocks; ++t) {
        std::vector<const std::vector<double>*> xa, xb;
        for (int64_t j = 0; j < std::min(m, na); ++j)
            xa.push_back(&features_a[static_cast<size_t>((t * m + j) % na)]);
        for (int64_t j = 0; j < std::min(m, nb); ++j)
            xb.push_back(&features_b[static_cast<size_t>((t * m + j) % nb)]);
        acc += mmd2_unbiased(xa, xb);
    }
    return acc / static_cast<double>(n_blocks);
}

double psnr(const cv::Mat& a, const cv::Mat& b) {
    if (a.size() != b.size() || a.type() != b.type())
        throw std::invalid_argument("psnr: shape mismatch");
    cv::Mat da, db;
    a.convertTo(da, CV_64F);
    b.convertTo(db, CV_64F);
    cv::Mat diff = da - db;
    cv::Scalar sq_sum = cv::sum(diff.mul(diff));
    double mse = 0.0;
    for (int c = 0; c < a.channels(); ++c) mse += sq_sum[c];
    mse /= static_cast<double>(a.total() * static_cast<size_t>(a.channels()));
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const cv::Mat& a, const cv::Mat& b) {
    if (a.size() != b.size()) throw std::invalid_argument("ssim: shape mismatch");
    if (a.rows < 11 || a.cols < 11)
        throw std::invalid_argument("ssim: image smaller than the 11×11 window");
    cv::Mat ga, gb;
    if (a.channels() == 3) {
        cv::cvtColor(a, ga, cv::COLOR_BGR2GRAY);
        cv::cvtColor(b, gb, cv::COLOR_BGR2GRAY);
    } else {
        ga = a;
        gb = b;
    }
    cv::Mat x, y;
    ga.convertTo(x, CV_64F);
    gb.convertTo(y, CV_64F);

    const double L = 255.0;
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);
    const cv::Size win(11, 11);
    const double sigma = 1.5;

    cv::Mat mu_x, mu_y;
    cv::GaussianBlur(x, mu_x, win, sigma);
    cv::GaussianBlur(y, mu_y, win, sigma);
    cv::Mat xx, yy, xy;
    cv::GaussianBlur(x.mul(x), xx, win, sigma);
    cv::GaussianBlur(y.mul(y), yy, win, sigma);
    cv::GaussianBlur(x.mul(y), xy, win, sigma);
    cv::Mat var_x = xx - mu_x.mul(mu_x);
    cv::Mat var_y = yy - mu_y.mul(mu_y);
    cv::Mat cov = xy - mu_x.mul(mu_y);

    cv::Mat num = (2.0 * mu_x.mul(mu_y) + c1).mul(2.0 * cov + c2);
    cv::Mat den = (mu_x.mul(mu_x) + mu_y.mul(mu_y) + c1).mul(var_x + var_y + c2);
    cv::Mat ssim_map = num / den;
    // valid region only (drop the window half-width border)
    const int bw = 5;
    cv::Rect valid(bw, bw, ssim_map.cols - 2 * bw, ssim_map.rows - 2 * bw);
    return cv::mean(ssim_map(valid)).val[0];
}

namespace {

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    auto ds = data::load_domain_folder(dir, 'X', "test");
    return ds.image_paths;
}

}  // namespace

MetricReport evaluate_folder(const std::filesystem::path& generated_dir,
                             const std::filesystem::path& reference_dir,
                             const backends::BackendHandle& feature_backend,
                             Pairing pairing) {
    auto gen_paths = list_images(generated_dir);
    auto ref_paths = list_images(reference_dir);

    MetricReport report;
    report.n_generated = static_cast<int64_t>(gen_paths.size());
    report.n_reference = static_cast<int64_t>(ref_paths.size());
    report.backend_id = feature_backend.id;

    std::vector<std::vector<double>> gen_feats, ref_feats;
    std::map<std::string, cv::Mat> gen_by_name;
    for (const auto& p : gen_paths) {
        cv::Mat img = data::load_image(p);
        cv::Mat rgb;
        cv::cvtColor(img, rgb, cv::COLOR_BGR2RGB);
        gen_feats.push_back(backends::pooled_features(feature_backend, data::tensor_from_rgb(rgb)));
        gen_by_name[p.filename().string()] = img;
    }
    std::vector<cv::Mat> ref_imgs;
    for (const auto& p : ref_paths) {
        cv::Mat img = data::load_image(p);
        cv::Mat rgb;
        cv::cvtColor(img, rgb, cv::COLOR_BGR2RGB);
        ref_feats.push_back(backends::pooled_features(feature_backend, data::tensor_from_rgb(rgb)));
        ref_imgs.push_back(img);
    }

    report.fid = frechet_distance(compute_activation_stats(gen_feats),
                                  compute_activation_stats(ref_feats));
    report.kid = kid(gen_feats, ref_feats);

    double psnr_sum = 0.0, ssim_sum = 0.0;
    int64_t n_pairs = 0;
    if (pairing == Pairing::paired) {
        for (size_t i = 0; i < ref_paths.size(); ++i) {
            auto it = gen_by_name.find(ref_paths[i].filename().string());
            if (it == gen_by_name.end()) continue;
            cv::Mat ref = ref_imgs[i];
            if (ref.size() != it->second.size())
                cv::resize(ref, ref, it->second.size(), 0, 0, cv::INTER_LINEAR);
            psnr_sum += psnr(it->second, ref);
            ssim_sum += ssim(it->second, ref);
            ++n_pairs;
        }
        if (n_pairs == 0)
            throw std::runtime_error("evaluate_folder: paired mode found no filename matches");
    } else {
        const size_t n = std::min(gen_paths.size(), ref_paths.size());
        for (size_t i = 0; i < n; ++i) {
            cv::Mat gen = data::load_image(gen_paths[i]);
            cv::Mat ref = ref_imgs[i];
            if (ref.size() != gen.size())
                cv::resize(ref, ref, gen.size(), 0, 0, cv::INTER_LINEAR);
            psnr_sum += psnr(gen, ref);
            ssim_sum += ssim(gen, ref);
            ++n_pairs;
        }
    }
    report.psnr_mean = psnr_sum / static_cast<double>(n_pairs);
    report.ssim_mean = ssim_sum / static_cast<double>(n_pairs);
    return report;
}

}  // namespace dlp::metrics
