#include "dlp/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace dlp::train {

namespace fs = std::filesystem;

// --------------------------------------------------------------------- Adam

Adam::Adam(std::vector<ag::Var> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(static_cast<size_t>(params_[i]->value.numel()), 0.0);
        v_[i].assign(static_cast<size_t>(params_[i]->value.numel()), 0.0);
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p->grad = Tensor{};
}

void Adam::step(double lr_scale) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double lr = lr_ * lr_scale;
    for (size_t i = 0; i < params_.size(); ++i) {
        ag::Var& p = params_[i];
        const bool has_grad = p->grad.numel() == p->value.numel();
        const int64_t n = p->value.numel();
        for (int64_t j = 0; j < n; ++j) {
            const double g = has_grad ? p->grad[j] : 0.0;
            double& m = m_[i][static_cast<size_t>(j)];
            double& v = v_[i][static_cast<size_t>(j)];
            m = beta1_ * m + (1.0 - beta1_) * g;
            v = beta2_ * v + (1.0 - beta2_) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p->value[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

// --------------------------------------------------------------- ImagePool

Tensor ImagePool::query(const Tensor& fake, Rng& rng) {
    if (capacity_ == 0) return fake;
    if (static_cast<int64_t>(images_.size()) < capacity_) {
        images_.push_back(fake);
        return fake;
    }
    if (rng.bernoulli(0.5)) {
        const size_t idx = static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(capacity_)));
        Tensor out = images_[idx];
        images_[idx] = fake;
        return out;
    }
    return fake;
}

// -------------------------------------------------------------- TrainState

namespace {

std::vector<ag::Var> param_list(const nn::Module& m) {
    std::vector<ag::Var> out;
    for (auto& [name, p] : m.named_parameters()) out.push_back(p);
    return out;
}

std::vector<ag::Var> joined(const nn::Module& a, const nn::Module& b) {
    auto out = param_list(a);
    auto more = param_list(b);
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

}  // namespace

void TrainState::begin_epoch(int64_t epoch_index) {
    Rng base(cfg.seed);
    pool_rng = base.fork(static_cast<uint64_t>(epoch_index)).fork(5);
    lr_scale = 1.0;
    if (cfg.lr_decay == "linear_after_half") {
        const int64_t half = cfg.epochs / 2;
        if (epoch_index >= half) {
            const double span = static_cast<double>(cfg.epochs - half);
            lr_scale = static_cast<double>(cfg.epochs - epoch_index) / span;
        }
    }
}

TrainState make_state(const nets::GeneratorSpec& gs, const nets::DiscriminatorSpec& ds,
                      const config::TrainConfig& cfg, const losses::LossWeights& w) {
    gs.validate();
    ds.validate();
    cfg.validate();
    w.validate();
    TrainState s;
    s.gen_spec = gs;
    s.disc_spec = ds;
    s.cfg = cfg;
    s.weights = w;
    s.g = nets::build_dense_fusion_generator(gs);
    s.f = nets::build_residual_generator(gs);
    s.d_x = nets::build_patch_discriminator(ds);
    s.d_y = nets::build_patch_discriminator(ds);
    Rng base(cfg.seed);
    Rng rg = base.fork(10), rf = base.fork(11), rdx = base.fork(12), rdy = base.fork(13);
    nn::init_weights(*s.g, cfg.init_std, rg);
    nn::init_weights(*s.f, cfg.init_std, rf);
    nn::init_weights(*s.d_x, cfg.init_std, rdx);
    nn::init_weights(*s.d_y, cfg.init_std, rdy);
    s.opt_g = Adam(joined(*s.g, *s.f), cfg.lr, cfg.adam_beta1, cfg.adam_beta2);
    s.opt_dx = Adam(param_list(*s.d_x), cfg.lr, cfg.adam_beta1, cfg.adam_beta2);
    s.opt_dy = Adam(param_list(*s.d_y), cfg.lr, cfg.adam_beta1, cfg.adam_beta2);
    s.pool_fake_x = ImagePool(cfg.buffer_size);
    s.pool_fake_y = ImagePool(cfg.buffer_size);
    s.begin_epoch(0);
    return s;
}

// ----------------------------------------------------------- training step

namespace {

double checked(const ag::Var& v, const char* term) {
    const double x = v->value[0];
    if (!std::isfinite(x))
        throw std::runtime_error(std::string("training_step: non-finite ") + term + " loss");
    return x;
}

double checked(double x, const char* term) {
    if (!std::isfinite(x))
        throw std::runtime_error(std::string("training_step: non-finite ") + term + " loss");
    return x;
}

}  // namespace

losses::LossReport training_step(TrainState& state, const Tensor& x, const Tensor& y,
                                 const BackendSet& be) {
    const losses::LossWeights& w = state.weights;
    losses::LossReport r;

    ag::Var vx = ag::constant(x);
    ag::Var vy = ag::constant(y);
    ag::Var g_x = state.g->forward(vx);  // fake Y
    ag::Var f_y = state.f->forward(vy);  // fake X

    const bool adv_on = w.lambda_gan > 0.0;
    const bool dual_on = w.lambda_dual > 0.0 && (w.use_feature || w.use_semantic);
    const bool id_on = w.lambda_id > 0.0 && w.use_identity;

    ag::Var g_adv, f_adv, feature, semantic, identity;
    if (adv_on) {
        g_adv = losses::lsgan_g_loss(state.d_y->forward(g_x));
        f_adv = losses::lsgan_g_loss(state.d_x->forward(f_y));
        r.g_adv = checked(g_adv, "g_adv");
        r.f_adv = checked(f_adv, "f_adv");
    }
    if (dual_on && w.use_feature) {
        ag::Var rec_x = state.f->forward(g_x);
        ag::Var rec_y = state.g->forward(f_y);
        feature = losses::feature_loss(vx, rec_x, vy, rec_y, be.feature);
        r.feature = checked(feature, "feature");
    }
    if (dual_on && w.use_semantic) {
        semantic = losses::semantic_loss(vx, g_x, vy, f_y, be.edge, be.distance);
        r.semantic = checked(semantic, "semantic");
    }
    if (id_on) {
        identity = losses::identity_loss(vx, state.f->forward(vx), vy, state.g->forward(vy));
        r.identity = checked(identity, "identity");
    }
    r.dual = losses::dual_loss(w.use_feature ? r.feature : 0.0,
                               w.use_semantic ? r.semantic : 0.0, w.mu);

    ag::Var total = losses::total_objective(g_adv, f_adv, feature, semantic, identity, w);
    r.total = checked(total, "total");

    auto update = [&state](Adam& opt, const ag::Var& loss) {
        opt.zero_grad();
        ag::backward(loss);
        opt.step(state.lr_scale);
    };

    auto d_update = [&](Adam& opt, nn::Module& d, const ag::Var& real, ImagePool& pool,
                        const Tensor& fresh_fake, const char* term) {
        Tensor fake = pool.query(fresh_fake, state.pool_rng);
        ag::Var loss =
            losses::lsgan_d_loss(d.forward(real), d.forward(ag::constant(fake)));
        const double v = checked(loss, term);
        update(opt, loss);
        return v;
    };

    if (state.cfg.update_order == "g_then_d") {
        update(state.opt_g, total);
        if (adv_on) {
            r.d_y = d_update(state.opt_dy, *state.d_y, vy, state.pool_fake_y, g_x->value, "d_y");
            r.d_x = d_update(state.opt_dx, *state.d_x, vx, state.pool_fake_x, f_y->value, "d_x");
        }
    } else {
        if (adv_on) {
            r.d_y = d_update(state.opt_dy, *state.d_y, vy, state.pool_fake_y, g_x->value, "d_y");
            r.d_x = d_update(state.opt_dx, *state.d_x, vx, state.pool_fake_x, f_y->value, "d_x");
        }
        update(state.opt_g, total);
    }
    ++state.iteration;
    return r;
}

// ------------------------------------------------------------- checkpoints

namespace {

constexpr const char* kArtifactVersion = "1";
constexpr char kMagic[9] = "DLPCKPT1";

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
    uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(buf, v);
}

struct BinReader {
    const std::string& buf;
    size_t pos = 0;
    uint64_t u64() {
        if (pos + 8 > buf.size()) throw std::runtime_error("checkpoint: truncated state file");
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        uint64_t v = u64();
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
};

void put_params(std::string& buf, const std::vector<ag::Var>& params) {
    put_u64(buf, params.size());
    for (const auto& p : params) {
        put_u64(buf, static_cast<uint64_t>(p->value.numel()));
        for (int64_t i = 0; i < p->value.numel(); ++i) put_f64(buf, p->value[i]);
    }
}

void get_params(BinReader& r, const std::vector<ag::Var>& params) {
    if (r.u64() != params.size())
        throw std::runtime_error("checkpoint: parameter count mismatch");
    for (const auto& p : params) {
        if (r.u64() != static_cast<uint64_t>(p->value.numel()))
            throw std::runtime_error("checkpoint: parameter size mismatch");
        for (int64_t i = 0; i < p->value.numel(); ++i) p->value[i] = r.f64();
    }
}

void put_adam(std::string& buf, Adam& opt) {
    put_u64(buf, static_cast<uint64_t>(opt.t()));
    for (const auto& vec : opt.moments_m())
        for (double d : vec) put_f64(buf, d);
    for (const auto& vec : opt.moments_v())
        for (double d : vec) put_f64(buf, d);
}

void get_adam(BinReader& r, Adam& opt) {
    opt.set_t(static_cast<int64_t>(r.u64()));
    for (auto& vec : opt.moments_m())
        for (double& d : vec) d = r.f64();
    for (auto& vec : opt.moments_v())
        for (double& d : vec) d = r.f64();
}

void put_pool(std::string& buf, const ImagePool& pool) {
    put_u64(buf, pool.contents().size());
    for (const Tensor& t : pool.contents()) {
        put_u64(buf, t.ndim());
        for (size_t i = 0; i < t.ndim(); ++i) put_u64(buf, static_cast<uint64_t>(t.dim(i)));
        for (int64_t i = 0; i < t.numel(); ++i) put_f64(buf, t[i]);
    }
}

void get_pool(BinReader& r, ImagePool& pool) {
    std::deque<Tensor> images;
    const uint64_t n = r.u64();
    for (uint64_t k = 0; k < n; ++k) {
        std::vector<int64_t> shape(r.u64());
        for (auto& d : shape) d = static_cast<int64_t>(r.u64());
        Tensor t(shape);
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = r.f64();
        images.push_back(std::move(t));
    }
    pool.restore(std::move(images));
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void spec_to_json(nlohmann::json& j, const TrainState& s) {
    j["gen"] = {{"base_channels", s.gen_spec.base_channels},
                {"n_residual_blocks_f", s.gen_spec.n_residual_blocks_f},
                {"n_residual_blocks_g", s.gen_spec.n_residual_blocks_g},
                {"dense_layers", s.gen_spec.dense_layers},
                {"dense_growth", s.gen_spec.dense_growth},
                {"norm_kind", s.gen_spec.norm_kind},
                {"output_activation", s.gen_spec.output_activation}};
    j["disc"] = {{"base_channels", s.disc_spec.base_channels},
                 {"n_down_layers", s.disc_spec.n_down_layers},
                 {"kernel", s.disc_spec.kernel},
                 {"activation", s.disc_spec.activation}};
    j["train"] = {{"epochs", s.cfg.epochs},         {"batch_size", s.cfg.batch_size},
                  {"lr", s.cfg.lr},                 {"adam_beta1", s.cfg.adam_beta1},
                  {"adam_beta2", s.cfg.adam_beta2}, {"init_std", s.cfg.init_std},
                  {"buffer_size", s.cfg.buffer_size}, {"lr_decay", s.cfg.lr_decay},
                  {"seed", s.cfg.seed},             {"checkpoint_every", s.cfg.checkpoint_every},
                  {"update_order", s.cfg.update_order}};
    j["loss"] = {{"lambda_gan", s.weights.lambda_gan}, {"lambda_dual", s.weights.lambda_dual},
                 {"lambda_id", s.weights.lambda_id},   {"mu", s.weights.mu},
                 {"use_feature", s.weights.use_feature},
                 {"use_semantic", s.weights.use_semantic},
                 {"use_identity", s.weights.use_identity}};
}

void spec_from_json(const nlohmann::json& j, TrainState& s) {
    const auto& g = j.at("gen");
    s.gen_spec.base_channels = g.at("base_channels");
    s.gen_spec.n_residual_blocks_f = g.at("n_residual_blocks_f");
    s.gen_spec.n_residual_blocks_g = g.at("n_residual_blocks_g");
    s.gen_spec.dense_layers = g.at("dense_layers");
    s.gen_spec.dense_growth = g.at("dense_growth");
    s.gen_spec.norm_kind = g.at("norm_kind");
    s.gen_spec.output_activation = g.at("output_activation");
    const auto& d = j.at("disc");
    s.disc_spec.base_channels = d.at("base_channels");
    s.disc_spec.n_down_layers = d.at("n_down_layers");
    s.disc_spec.kernel = d.at("kernel");
    s.disc_spec.activation = d.at("activation");
    const auto& t = j.at("train");
    s.cfg.epochs = t.at("epochs");
    s.cfg.batch_size = t.at("batch_size");
    s.cfg.lr = t.at("lr");
    s.cfg.adam_beta1 = t.at("adam_beta1");
    s.cfg.adam_beta2 = t.at("adam_beta2");
    s.cfg.init_std = t.at("init_std");
    s.cfg.buffer_size = t.at("buffer_size");
    s.cfg.lr_decay = t.at("lr_decay");
    s.cfg.seed = t.at("seed");
    s.cfg.checkpoint_every = t.at("checkpoint_every");
    s.cfg.update_order = t.at("update_order");
    const auto& w = j.at("loss");
    s.weights.lambda_gan = w.at("lambda_gan");
    s.weights.lambda_dual = w.at("lambda_dual");
    s.weights.lambda_id = w.at("lambda_id");
    s.weights.mu = w.at("mu");
    s.weights.use_feature = w.at("use_feature");
    s.weights.use_semantic = w.at("use_semantic");
    s.weights.use_identity = w.at("use_identity");
}

}  // namespace

void save_checkpoint(const TrainState& state, const fs::path& dir,
                     const std::string& config_digest) {
    fs::create_directories(dir);
    std::string buf(kMagic, 8);
    TrainState& s = const_cast<TrainState&>(state);
    put_params(buf, s.opt_g.params());
    put_params(buf, s.opt_dx.params());
    put_params(buf, s.opt_dy.params());
    put_adam(buf, s.opt_g);
    put_adam(buf, s.opt_dx);
    put_adam(buf, s.opt_dy);
    put_pool(buf, s.pool_fake_x);
    put_pool(buf, s.pool_fake_y);
    // pool rng position, so mid-epoch resumes replay the same swaps
    put_u64(buf, s.pool_rng.state());
    put_u64(buf, s.pool_rng.has_cached() ? 1 : 0);
    put_f64(buf, s.pool_rng.cached_value());
    {
        std::ofstream out(dir / "state.bin", std::ios::binary);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + dir.string());
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    nlohmann::json j;
    j["epoch"] = state.epoch;
    j["iteration"] = state.iteration;
    j["config_digest"] = config_digest;
    j["seed"] = state.cfg.seed;
    j["artifact_version"] = kArtifactVersion;
    j["checksum"] = fnv1a_hex(buf);
    spec_to_json(j, state);
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

TrainState load_checkpoint(const fs::path& dir, const std::string& config_digest,
                           bool ignore_digest) {
    std::ifstream min(dir / "manifest.json");
    if (!min) throw std::runtime_error("checkpoint: cannot open manifest in " + dir.string());
    nlohmann::json j;
    min >> j;
    if (j.at("artifact_version").get<std::string>() != kArtifactVersion)
        throw std::runtime_error("checkpoint: artifact version mismatch");
    if (!ignore_digest && j.at("config_digest").get<std::string>() != config_digest)
        throw std::runtime_error("checkpoint: config digest mismatch (pass the override flag "
                                 "to load anyway)");

    TrainState s;
    spec_from_json(j, s);
    // rebuild with the stored topology, then overwrite the weights
    TrainState fresh = make_state(s.gen_spec, s.disc_spec, s.cfg, s.weights);
    fresh.epoch = j.at("epoch");
    fresh.iteration = j.at("iteration");

    std::ifstream in(dir / "state.bin", std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open state in " + dir.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();
    if (fnv1a_hex(buf) != j.at("checksum").get<std::string>())
        throw std::runtime_error("checkpoint: checksum mismatch, file corrupt or tampered");
    if (buf.size() < 8 || std::string(buf, 0, 8) != std::string(kMagic, 8))
        throw std::runtime_error("checkpoint: bad magic");
    BinReader r{buf, 8};
    get_params(r, fresh.opt_g.params());
    get_params(r, fresh.opt_dx.params());
    get_params(r, fresh.opt_dy.params());
    get_adam(r, fresh.opt_g);
    get_adam(r, fresh.opt_dx);
    get_adam(r, fresh.opt_dy);
    get_pool(r, fresh.pool_fake_x);
    get_pool(r, fresh.pool_fake_y);
    const uint64_t rng_state = r.u64();
    const bool rng_cached = r.u64() != 0;
    const double rng_cache = r.f64();
    fresh.begin_epoch(fresh.epoch);
    fresh.pool_rng.restore(rng_state, rng_cached, rng_cache);
    return fresh;
}

// ------------------------------------------------------------------- train

namespace {

BackendSet backends_from_config(const config::Config& c) {
    using namespace backends;
    BackendSet b;
    b.feature = load_backend(kind_from_string(c.get_string("backends.feature.kind", "stub_feature")),
                             c.get_string("backends.feature.path", ""));
    b.edge = load_backend(kind_from_string(c.get_string("backends.edge.kind", "stub_edge")),
                          c.get_string("backends.edge.path", ""));
    b.distance =
        load_backend(kind_from_string(c.get_string("backends.distance.kind", "stub_distance")),
                     c.get_string("backends.distance.path", ""));
    return b;
}

void write_sample_grid(TrainState& s, const Tensor& x, const fs::path& path) {
    ag::Var vx = ag::constant(x);
    ag::Var translated = s.g->forward(vx);
    ag::Var reconstructed = s.f->forward(translated);
    auto to_bgr = [](const Tensor& t) {
        cv::Mat rgb = data::denormalize(t);
        cv::Mat bgr;
        cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
        return bgr;
    };
    cv::Mat grid;
    std::vector<cv::Mat> cols{to_bgr(x), to_bgr(translated->value), to_bgr(reconstructed->value)};
    cv::hconcat(cols, grid);
    cv::imwrite(path.string(), grid);
}

}  // namespace

int64_t train(const config::Config& cfg, const fs::path& run_dir) {
    fs::create_directories(run_dir);
    const std::string digest = cfg.digest();
    cfg.save(run_dir / "config.txt");

    auto pcfg = config::make_preprocess_config(cfg);
    auto gs = config::make_generator_spec(cfg);
    auto ds = config::make_discriminator_spec(cfg);
    auto w = config::make_loss_weights(cfg);
    auto tc = config::make_train_config(cfg);
    BackendSet be = backends_from_config(cfg);

    auto x_ds = data::load_domain_folder(cfg.require("data.x_dir"), 'X', "train");
    auto y_ds = data::load_domain_folder(cfg.require("data.y_dir"), 'Y', "train");

    TrainState state;
    const std::string resume = cfg.get_string("train.resume", "");
    const bool override_digest = cfg.get_bool("train.resume_ignore_digest", false);
    if (!resume.empty())
        state = load_checkpoint(resume, digest, override_digest);
    else
        state = make_state(gs, ds, tc, w);

    const fs::path losses_path = run_dir / "losses.csv";
    const bool fresh_log = !fs::exists(losses_path) || resume.empty();
    std::ofstream log(losses_path, fresh_log ? std::ios::trunc : std::ios::app);
    if (fresh_log)
        log << "epoch,d_x,d_y,g_adv,f_adv,feature,semantic,dual,identity,total,seconds\n";
    fs::create_directories(run_dir / "checkpoints");
    fs::create_directories(run_dir / "samples");

    for (int64_t e = state.epoch; e < state.cfg.epochs; ++e) {
        const auto start = std::chrono::steady_clock::now();
        state.begin_epoch(e);
        data::UnpairedSampler sampler(x_ds, y_ds, pcfg, state.cfg.seed, e);
        losses::LossReport sum;
        const int64_t steps = sampler.epoch_length();
        for (int64_t i = 0; i < steps; ++i) {
            auto draw = sampler.next();
            auto r = training_step(state, draw.x, draw.y, be);
            sum.d_x += r.d_x;
            sum.d_y += r.d_y;
            sum.g_adv += r.g_adv;
            sum.f_adv += r.f_adv;
            sum.feature += r.feature;
            sum.semantic += r.semantic;
            sum.dual += r.dual;
            sum.identity += r.identity;
            sum.total += r.total;
        }
        state.epoch = e + 1;
        const double n = static_cast<double>(steps);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log << state.epoch << ',' << sum.d_x / n << ',' << sum.d_y / n << ',' << sum.g_adv / n
            << ',' << sum.f_adv / n << ',' << sum.feature / n << ',' << sum.semantic / n << ','
            << sum.dual / n << ',' << sum.identity / n << ',' << sum.total / n << ',' << secs
            << '\n';
        log.flush();

        if (state.epoch % state.cfg.checkpoint_every == 0 || state.epoch == state.cfg.epochs) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%03lld",
                          static_cast<long long>(state.epoch));
            save_checkpoint(state, run_dir / "checkpoints" / name, digest);
            Rng sample_rng(state.cfg.seed);
            Tensor sample = data::preprocess(data::load_image(x_ds.image_paths[0]), pcfg,
                                             sample_rng, /*train_mode=*/false);
            std::snprintf(name, sizeof(name), "epoch_%03lld.png",
                          static_cast<long long>(state.epoch));
            write_sample_grid(state, sample, run_dir / "samples" / name);
        }
    }
    return state.epoch;
}

}  // namespace dlp::train
