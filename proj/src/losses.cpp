#include "dlp/losses.hpp"

#include <stdexcept>

namespace dlp::losses {

using ag::Var;

void LossWeights::validate() const {
    if (lambda_gan < 0 || lambda_dual < 0 || lambda_id < 0 || mu < 0)
        throw std::invalid_argument("LossWeights: weights must be nonnegative");
}

namespace {

void check_finite(const Tensor& t, const char* what) {
    if (!t.all_finite())
        throw std::invalid_argument(std::string(what) + ": non-finite input");
}

Var l1_mean(const Var& a, const Var& b) { return ag::mean_all(ag::abs_op(ag::sub(a, b))); }

}  // namespace

Var lsgan_d_loss(const Var& real_scores, const Var& fake_scores) {
    check_finite(real_scores->value, "lsgan_d_loss");
    check_finite(fake_scores->value, "lsgan_d_loss");
    Var real_term = ag::mean_all(ag::square(ag::add_scalar(real_scores, -1.0)));
    Var fake_term = ag::mean_all(ag::square(fake_scores));
    return ag::mul_scalar(ag::add(real_term, fake_term), 0.5);
}

double lsgan_d_loss(const Tensor& real_scores, const Tensor& fake_scores) {
    return lsgan_d_loss(ag::constant(real_scores), ag::constant(fake_scores))->value[0];
}

Var lsgan_g_loss(const Var& fake_scores) {
    check_finite(fake_scores->value, "lsgan_g_loss");
    return ag::mul_scalar(ag::mean_all(ag::square(ag::add_scalar(fake_scores, -1.0))), 0.5);
}

double lsgan_g_loss(const Tensor& fake_scores) {
    return lsgan_g_loss(ag::constant(fake_scores))->value[0];
}

Var feature_loss(const Var& x, const Var& rec_x, const Var& y, const Var& rec_y,
                 const backends::BackendHandle& feat) {
    Var fx = backends::extract_features(feat, x);
    Var frx = backends::extract_features(feat, rec_x);
    Var fy = backends::extract_features(feat, y);
    Var fry = backends::extract_features(feat, rec_y);
    return ag::add(l1_mean(fx, frx), l1_mean(fy, fry));
}

Var semantic_loss(const Var& x, const Var& g_x, const Var& y, const Var& f_y,
                  const backends::BackendHandle& edge, const backends::BackendHandle& dist) {
    Var ex = backends::extract_edges(edge, x);
    Var egx = backends::extract_edges(edge, g_x);
    Var ey = backends::extract_edges(edge, y);
    Var efy = backends::extract_edges(edge, f_y);
    return ag::add(backends::perceptual_distance(dist, ex, egx),
                   backends::perceptual_distance(dist, ey, efy));
}

double dual_loss(double feature, double semantic, double mu) {
    if (mu < 0) throw std::invalid_argument("dual_loss: mu must be nonnegative");
    return feature + mu * semantic;
}

Var dual_loss(const Var& feature, const Var& semantic, double mu) {
    if (mu < 0) throw std::invalid_argument("dual_loss: mu must be nonnegative");
    if (!semantic) return feature;
    if (!feature) return ag::mul_scalar(semantic, mu);
    return ag::add(feature, ag::mul_scalar(semantic, mu));
}

Var identity_loss(const Var& x, const Var& f_of_x, const Var& y, const Var& g_of_y) {
    if (!x->value.same_shape(f_of_x->value) || !y->value.same_shape(g_of_y->value))
        throw std::invalid_argument("identity_loss: shape mismatch");
    return ag::add(l1_mean(f_of_x, x), l1_mean(g_of_y, y));
}

Var total_objective(const Var& g_adv, const Var& f_adv, const Var& feature, const Var& semantic,
                    const Var& identity, const LossWeights& w) {
    w.validate();
    Var total;
    auto accumulate = [&total](const Var& term, double weight) {
        if (!term || weight == 0.0) return;
        Var scaled = ag::mul_scalar(term, weight);
        total = total ? ag::add(total, scaled) : scaled;
    };
    accumulate(g_adv, w.lambda_gan);
    accumulate(f_adv, w.lambda_gan);
    accumulate(dual_loss(w.use_feature ? feature : nullptr,
                         w.use_semantic ? semantic : nullptr, w.mu),
               w.lambda_dual);
    accumulate(w.use_identity ? identity : nullptr, w.lambda_id);
    if (!total) total = ag::constant(Tensor::scalar(0.0));
    return total;
}

double total_objective(double g_plus_f_adv, double feature, double semantic, double identity,
                       const LossWeights& w) {
    w.validate();
    return w.lambda_gan * g_plus_f_adv + w.lambda_dual * dual_loss(feature, semantic, w.mu) +
           w.lambda_id * identity;
}

}  // namespace dlp::losses
