#pragma once

#include <deque>
#include <filesystem>
#include <vector>

#include "dlp/backends.hpp"
#include "dlp/config.hpp"
#include "dlp/data.hpp"
#include "dlp/losses.hpp"
#include "dlp/nets.hpp"

namespace dlp::train {

// One optimizer per fixed parameter list; moments live here, not on the nodes.
class Adam {
public:
    Adam() = default;
    Adam(std::vector<ag::Var> params, double lr, double beta1, double beta2, double eps = 1e-8);

    void step(double lr_scale = 1.0);
    void zero_grad();

    int64_t t() const { return t_; }
    const std::vector<ag::Var>& params() const { return params_; }
    std::vector<std::vector<double>>& moments_m() { return m_; }
    std::vector<std::vector<double>>& moments_v() { return v_; }
    void set_t(int64_t t) { t_ = t; }

private:
    std::vector<ag::Var> params_;
    double lr_ = 0, beta1_ = 0, beta2_ = 0, eps_ = 1e-8;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// History buffer of fake images with 50% replacement; size 0 passes through.
class ImagePool {
public:
    explicit ImagePool(int64_t capacity = 50) : capacity_(capacity) {}

    Tensor query(const Tensor& fake, Rng& rng);

    const std::deque<Tensor>& contents() const { return images_; }
    void restore(std::deque<Tensor> images) { images_ = std::move(images); }
    int64_t capacity() const { return capacity_; }

private:
    int64_t capacity_;
    std::deque<Tensor> images_;
};

struct BackendSet {
    backends::BackendHandle feature, edge, distance;
};

struct TrainState {
    nets::GeneratorSpec gen_spec;
    nets::DiscriminatorSpec disc_spec;
    config::TrainConfig cfg;
    losses::LossWeights weights;

    nn::ModulePtr g, f, d_x, d_y;  // G: X->Y, F: Y->X
    Adam opt_g, opt_dx, opt_dy;
    ImagePool pool_fake_x{50}, pool_fake_y{50};

    int64_t epoch = 0;      // completed epochs
    int64_t iteration = 0;  // completed steps
    double lr_scale = 1.0;
    Rng pool_rng{0};

    // Re-derives the per-epoch streams and the lr schedule factor.
    void begin_epoch(int64_t epoch_index);
};

TrainState make_state(const nets::GeneratorSpec& gs, const nets::DiscriminatorSpec& ds,
                      const config::TrainConfig& cfg, const losses::LossWeights& w);

// One alternation: generator update on the full objective, then one update per
// discriminator against buffered fakes. Throws on non-finite losses, naming
// the offending term.
losses::LossReport training_step(TrainState& state, const Tensor& x, const Tensor& y,
                                 const BackendSet& backends);

void save_checkpoint(const TrainState& state, const std::filesystem::path& dir,
                     const std::string& config_digest);
TrainState load_checkpoint(const std::filesystem::path& dir, const std::string& config_digest,
                           bool ignore_digest = false);

// Full run: writes config snapshot, per-epoch loss rows, checkpoints and
// sample grids under run_dir. Returns the number of completed epochs.
int64_t train(const config::Config& cfg, const std::filesystem::path& run_dir);

}  // namespace dlp::train
