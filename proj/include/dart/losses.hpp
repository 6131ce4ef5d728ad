#ifndef DART_LOSSES_HPP
#define DART_LOSSES_HPP

#include "dart/ops.hpp"

namespace dart {

enum class Regime { conservative, aggressive };

inline std::string regime_name(Regime r) {
    return r == Regime::conservative ? "conservative" : "aggressive";
}
inline Regime regime_from_name(const std::string& s) {
    if (s == "conservative") return Regime::conservative;
    if (s == "aggressive") return Regime::aggressive;
    throw DataError("unknown regime: " + s);
}

struct CompositeWeights {
    double alpha = 0.5;  // continuity head
    double beta = 1.5;   // extreme head
    double delta = 0.4;  // fused final
};

// Temperature tiers for the extreme-head loss. Coldest applicable tier
// wins; pixels warmer than every tier get base_weight.
struct TierSpec {
    std::vector<std::pair<float, float>> tiers = {{210.0f, 25.0f}, {220.0f, 10.0f}};
    float base_weight = 1.0f;

    float weight_for(float t_gt_kelvin) const {
        for (const auto& [thr, w] : tiers)
            if (t_gt_kelvin <= thr) return w;
        return base_weight;
    }
    void validate() const {
        for (size_t i = 1; i < tiers.size(); ++i) {
            if (!(tiers[i].first > tiers[i - 1].first))
                throw DataError("TierSpec: thresholds must be strictly increasing");
            if (!(tiers[i].second < tiers[i - 1].second))
                throw DataError("TierSpec: weights must be strictly decreasing");
        }
        if (!tiers.empty() && base_weight > tiers.back().second)
            throw DataError("TierSpec: base_weight must not exceed tier weights");
    }
};

template <typename T>
TensorT<T> mse(const TensorT<T>& pred, const TensorT<T>& target) {
    auto d = ops::sub(pred, target);
    return ops::mean_all(ops::ew_mul(d, d));
}

// Weighted squared error with weights keyed to the ground-truth kelvin
// field. normalize_by_weight selects sum(w*e)/sum(w) (default) versus
// sum(w*e)/N.
template <typename T>
TensorT<T> tiered_weighted_mse(const TensorT<T>& pred, const TensorT<T>& target,
                               const std::vector<float>& t_gt_kelvin,
                               const TierSpec& spec = TierSpec(),
                               bool normalize_by_weight = true) {
    if (int(t_gt_kelvin.size()) != pred.numel())
        throw ShapeError("tiered_weighted_mse: ground-truth size mismatch");
    spec.validate();
    std::vector<T> w(t_gt_kelvin.size());
    T wsum = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        w[i] = T(spec.weight_for(t_gt_kelvin[i]));
        wsum += w[i];
    }
    TensorT<T> wt = TensorT<T>::from_values(pred.shape(), std::move(w));
    auto d = ops::sub(pred, target);
    auto weighted = ops::ew_mul(ops::ew_mul(d, d), wt);
    const T denom = normalize_by_weight ? wsum : T(pred.numel());
    return ops::scale(ops::sum_all(weighted), T(1) / denom);
}

template <typename T>
struct DartLossTerms {
    TensorT<T> total;
    double term_cont = 0, term_ext = 0, term_final = 0;
};

// L = alpha*MSE(cont, T_BG) + beta*L_ext(ext, T_RES) + delta*MSE(final, T_GT).
// L_ext is plain MSE in the conservative regime, tiered weighted MSE keyed
// to the raw kelvin ground truth in the aggressive regime. Targets may be
// pre-normalized; t_gt_kelvin always carries raw kelvin for the tiers.
template <typename T>
DartLossTerms<T> composite_dart_loss(
    const TensorT<T>& cont_pred, const TensorT<T>& ext_pred,
    const TensorT<T>& final_pred, const TensorT<T>& t_bg_target,
    const TensorT<T>& t_res_target, const TensorT<T>& t_gt_target,
    const std::vector<float>& t_gt_kelvin, const CompositeWeights& w,
    Regime regime, const TierSpec& spec = TierSpec()) {
    DartLossTerms<T> out;
    auto cont_term = mse(cont_pred, t_bg_target);
    auto ext_term = regime == Regime::aggressive
                        ? tiered_weighted_mse(ext_pred, t_res_target, t_gt_kelvin, spec)
                        : mse(ext_pred, t_res_target);
    auto final_term = mse(final_pred, t_gt_target);
    out.term_cont = double(cont_term.item());
    out.term_ext = double(ext_term.item());
    out.term_final = double(final_term.item());
    out.total = ops::add(
        ops::add(ops::scale(cont_term, T(w.alpha)), ops::scale(ext_term, T(w.beta))),
        ops::scale(final_term, T(w.delta)));
    return out;
}

// Mean local SSIM with a uniform sliding window. Dynamic range defaults to
// the 200 K brightness-temperature span.
template <typename T>
TensorT<T> ssim(const TensorT<T>& pred, const TensorT<T>& target, int window = 11,
                double dynamic_range = 200.0) {
    ops::Dims4 d = ops::as4d(pred, "ssim");
    if (d.h < window || d.w < window)
        throw ShapeError("ssim: field " + std::to_string(d.h) + "x" +
                         std::to_string(d.w) + " smaller than window " +
                         std::to_string(window));
    const T c1 = T(0.01 * dynamic_range) * T(0.01 * dynamic_range);
    const T c2 = T(0.03 * dynamic_range) * T(0.03 * dynamic_range);
    auto mu_x = ops::box_filter(pred, window);
    auto mu_y = ops::box_filter(target, window);
    auto mu_xx = ops::ew_mul(mu_x, mu_x);
    auto mu_yy = ops::ew_mul(mu_y, mu_y);
    auto mu_xy = ops::ew_mul(mu_x, mu_y);
    auto sigma_x = ops::sub(ops::box_filter(ops::ew_mul(pred, pred), window), mu_xx);
    auto sigma_y = ops::sub(ops::box_filter(ops::ew_mul(target, target), window), mu_yy);
    auto sigma_xy = ops::sub(ops::box_filter(ops::ew_mul(pred, target), window), mu_xy);
    auto num = ops::ew_mul(ops::add_scalar(ops::scale(mu_xy, T(2)), c1),
                           ops::add_scalar(ops::scale(sigma_xy, T(2)), c2));
    auto den = ops::ew_mul(ops::add_scalar(ops::add(mu_xx, mu_yy), c1),
                           ops::add_scalar(ops::add(sigma_x, sigma_y), c2));
    return ops::mean_all(ops::ew_div(num, den));
}

// Mean L1 difference of Sobel responses, replicate padding. Single-channel
// fields only (all heads and verification fields are single-channel).
template <typename T>
TensorT<T> sobel_gradient_l1(const TensorT<T>& pred, const TensorT<T>& target) {
    ops::Dims4 d = ops::as4d(pred, "sobel_gradient_l1");
    if (d.c != 1)
        throw ShapeError("sobel_gradient_l1: expected single-channel fields");
    if (d.h < 3 || d.w < 3)
        throw ShapeError("sobel_gradient_l1: field smaller than 3x3");
    static const std::vector<float> gx = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
    static const std::vector<float> gy = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
    auto kx = TensorT<T>::from_values({1, 1, 3, 3}, std::vector<T>(gx.begin(), gx.end()));
    auto ky = TensorT<T>::from_values({1, 1, 3, 3}, std::vector<T>(gy.begin(), gy.end()));
    auto pp = ops::replicate_pad(pred, 1);
    auto tp = ops::replicate_pad(target, 1);
    auto dx = ops::abs_val(ops::sub(ops::conv2d(pp, kx, 1, 0), ops::conv2d(tp, kx, 1, 0)));
    auto dy = ops::abs_val(ops::sub(ops::conv2d(pp, ky, 1, 0), ops::conv2d(tp, ky, 1, 0)));
    return ops::add(ops::mean_all(dx), ops::mean_all(dy));
}

template <typename T>
struct AdvancedLossTerms {
    TensorT<T> total;
    double term_mse = 0, term_ssim = 0, term_grad = 0;
};

// MSE + (1 - SSIM) + Sobel gradient composite used by the baselines.
template <typename T>
AdvancedLossTerms<T> advanced_loss(const TensorT<T>& pred, const TensorT<T>& target,
                                   double w_mse = 1.0, double w_ssim = 0.2,
                                   double w_grad = 0.1, double dynamic_range = 200.0) {
    AdvancedLossTerms<T> out;
    auto m = mse(pred, target);
    auto s = ops::affine(ssim(pred, target, 11, dynamic_range), T(-1), T(1));
    auto g = sobel_gradient_l1(pred, target);
    out.term_mse = double(m.item());
    out.term_ssim = double(s.item());
    out.term_grad = double(g.item());
    out.total = ops::add(ops::add(ops::scale(m, T(w_mse)), ops::scale(s, T(w_ssim))),
                         ops::scale(g, T(w_grad)));
    return out;
}

}  // namespace dart

#endif
