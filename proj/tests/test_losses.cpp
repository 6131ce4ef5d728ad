#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dart/decomposition.hpp"
#include "dart/fdcheck.hpp"
#include "dart/losses.hpp"

using namespace dart;
using D = double;
using TD = TensorT<double>;

namespace {

TD random_tensor(std::vector<int> shape, Rng& rng, bool requires_grad = true,
                 double lo = -1.0, double hi = 1.0) {
    TD t(std::move(shape), requires_grad);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("mse basics") {
    auto a = TD::from_values({1, 2, 2}, {1, 2, 3, 4}, true);
    CHECK(mse(a, a).item() == doctest::Approx(0.0));

    auto b = TD::from_values({1, 2, 2}, {4, 5, 6, 7}, true);
    CHECK(mse(a, b).item() == doctest::Approx(9.0));  // constant offset 3

    Rng rng(81);
    auto x = random_tensor({1, 3, 4}, rng);
    auto y = random_tensor({1, 3, 4}, rng);
    double brute = 0;
    for (int i = 0; i < x.numel(); ++i) {
        double d = x.values()[i] - y.values()[i];
        brute += d * d;
    }
    brute /= x.numel();
    CHECK(mse(x, y).item() == doctest::Approx(brute));

    auto bad = random_tensor({1, 4, 3}, rng);
    CHECK_THROWS_AS(mse(x, bad), ShapeError);
}

TEST_CASE("tiered weights pick the coldest applicable tier") {
    TierSpec spec;
    CHECK(spec.weight_for(205.0f) == 25.0f);
    CHECK(spec.weight_for(210.0f) == 25.0f);
    CHECK(spec.weight_for(215.0f) == 10.0f);
    CHECK(spec.weight_for(220.0f) == 10.0f);
    CHECK(spec.weight_for(250.0f) == 1.0f);
}

TEST_CASE("tiered_weighted_mse hand cases") {
    // all warm -> identical to plain mse
    Rng rng(83);
    auto x = random_tensor({1, 2, 2}, rng);
    auto y = random_tensor({1, 2, 2}, rng);
    std::vector<float> warm = {300, 290, 280, 260};
    CHECK(tiered_weighted_mse(x, y, warm).item() ==
          doctest::Approx(mse(x, y).item()));

    // equal errors: any weighting yields the common squared error
    auto p1 = TD::from_values({2}, {1.0, 1.0}, true);
    auto t1 = TD::from_values({2}, {0.0, 0.0}, true);
    CHECK(tiered_weighted_mse(p1, t1, {205, 300}).item() == doctest::Approx(1.0));

    // unequal errors: 25/26 vs unweighted 0.5
    auto p2 = TD::from_values({2}, {1.0, 0.0}, true);
    CHECK(tiered_weighted_mse(p2, t1, {205, 300}).item() ==
          doctest::Approx(25.0 / 26.0));
    CHECK(mse(p2, t1).item() == doctest::Approx(0.5));

    CHECK_THROWS_AS(tiered_weighted_mse(p2, t1, {205, 300, 300}), ShapeError);
}

TEST_CASE("composite loss: perfect prediction and warm-field hand case") {
    GridGeometry g{2, 2, 0, 1, 0, 1};
    Field2D t_gt(g, Units::kelvin);
    t_gt.values = {300, 280, 260, 240};
    auto d = decompose(t_gt);
    auto as_tensor = [](const Field2D& f, bool rg) {
        return TD::from_values({1, f.height(), f.width()},
                               std::vector<double>(f.values.begin(), f.values.end()),
                               rg);
    };
    auto bg = as_tensor(d.t_bg, false);
    auto res = as_tensor(d.t_res, false);
    auto gt = as_tensor(t_gt, false);

    // perfect prediction on both heads
    auto cont = as_tensor(d.t_bg, true);
    auto ext = as_tensor(d.t_res, true);
    auto fin = ops::add(cont, ext);
    CompositeWeights w;
    auto terms = composite_dart_loss(cont, ext, fin, bg, res, gt, t_gt.values, w,
                                     Regime::conservative);
    CHECK(terms.total.item() == doctest::Approx(0.0));

    // continuity perfect, extreme off by constant c on a warm-only field
    const double c = 2.0;
    auto ext_off = ops::add_scalar(as_tensor(d.t_res, true), c);
    auto fin_off = ops::add(cont, ext_off);
    auto t2 = composite_dart_loss(cont, ext_off, fin_off, bg, res, gt, t_gt.values,
                                  w, Regime::conservative);
    CHECK(t2.total.item() == doctest::Approx((1.5 + 0.4) * c * c));
    CHECK(t2.term_cont == doctest::Approx(0.0));
    CHECK(t2.term_ext == doctest::Approx(c * c));
    CHECK(t2.term_final == doctest::Approx(c * c));

    // scaling beta doubles only the extreme term's contribution
    CompositeWeights w2 = w;
    w2.beta = 2 * w.beta;
    auto t3 = composite_dart_loss(cont, ext_off, fin_off, bg, res, gt, t_gt.values,
                                  w2, Regime::conservative);
    CHECK(t3.total.item() - t2.total.item() ==
          doctest::Approx(w.beta * t2.term_ext));
}

TEST_CASE("with delta=0 the continuity head gets no gradient from the extreme target") {
    Rng rng(85);
    auto cont = random_tensor({1, 4, 4}, rng);
    auto ext = random_tensor({1, 4, 4}, rng);
    auto fin = ops::add(cont, ext);
    auto bg = random_tensor({1, 4, 4}, rng, false);
    auto res = random_tensor({1, 4, 4}, rng, false);
    auto gt = random_tensor({1, 4, 4}, rng, false);
    std::vector<float> kelvin(16, 300.0f);
    CompositeWeights w;
    w.alpha = 0.0;  // isolate the extreme term
    w.delta = 0.0;
    auto terms = composite_dart_loss(cont, ext, fin, bg, res, gt, kelvin, w,
                                     Regime::conservative);
    cont.zero_grad();
    ext.zero_grad();
    terms.total.backward();
    for (double v : cont.grad()) CHECK(v == 0.0);
    bool ext_has_grad = false;
    for (double v : ext.grad()) ext_has_grad = ext_has_grad || v != 0.0;
    CHECK(ext_has_grad);
}

TEST_CASE("ssim basics") {
    Rng rng(87);
    auto x = random_tensor({1, 16, 16}, rng, true, 200, 300);
    CHECK(ssim(x, x).item() == doctest::Approx(1.0).epsilon(1e-6));

    auto cst = TD::from_values({1, 12, 12}, std::vector<double>(144, 250.0), true);
    CHECK(ssim(cst, cst).item() == doctest::Approx(1.0).epsilon(1e-6));

    // anticorrelated structured fields score negative
    TD a({1, 16, 16}, true), b({1, 16, 16}, true);
    for (int i = 0; i < 256; ++i) {
        double s = 40.0 * std::sin(i * 0.7) + 30.0 * std::cos(i * 0.13);
        a.values()[i] = s;
        b.values()[i] = -s;
    }
    CHECK(ssim(a, b).item() < 0.0);

    auto small = random_tensor({1, 8, 8}, rng);
    CHECK_THROWS_AS(ssim(small, small), ShapeError);
}

TEST_CASE("sobel gradient l1 basics") {
    Rng rng(89);
    auto x = random_tensor({1, 5, 5}, rng, true, 200, 300);
    CHECK(sobel_gradient_l1(x, x).item() == doctest::Approx(0.0));

    auto shifted = ops::add_scalar(x, 7.5);
    CHECK(sobel_gradient_l1(x, shifted).item() == doctest::Approx(0.0).epsilon(1e-9));

    // vertical step edge on 5x5 vs flat field, hand-computed response:
    // columns 0,1 = 0; columns 2..4 = 1. Gx response per row is
    // [0,4,4,0,0] (replicate padding), Gy response is 0.
    TD step({1, 5, 5}, true), flat({1, 5, 5}, true);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) step.values()[i * 5 + j] = j >= 2 ? 1.0 : 0.0;
    const double expect_gx = (5 * (0 + 0 + 4 + 4 + 0)) / 25.0;
    CHECK(sobel_gradient_l1(step, flat).item() == doctest::Approx(expect_gx));

    auto tiny = random_tensor({1, 2, 2}, rng);
    CHECK_THROWS_AS(sobel_gradient_l1(tiny, tiny), ShapeError);
}

TEST_CASE("advanced loss composition") {
    Rng rng(91);
    auto t = random_tensor({1, 12, 12}, rng, false, 200, 300);
    auto p = TD::from_values(t.shape(), t.values(), true);
    auto perfect = advanced_loss(p, t);
    CHECK(perfect.total.item() == doctest::Approx(0.0).epsilon(1e-6));

    auto noise = random_tensor({1, 12, 12}, rng, true, -30, 30);
    auto off = ops::add(p, noise);
    auto l1 = advanced_loss(off, t, 1.0, 0.2, 0.1);
    auto l2 = advanced_loss(off, t, 2.0, 0.2, 0.1);
    CHECK(l2.total.item() - l1.total.item() == doctest::Approx(l1.term_mse));

    // loss decreases along the line from noisy field to target
    double prev = 1e300;
    for (int k = 0; k <= 4; ++k) {
        double lam = k / 4.0;
        std::vector<double> mix(t.numel());
        for (int i = 0; i < t.numel(); ++i)
            mix[i] = (1 - lam) * off.values()[i] + lam * t.values()[i];
        auto m = TD::from_values(t.shape(), mix, true);
        double v = advanced_loss(m, t).total.item();
        CHECK(v <= prev + 1e-9);
        prev = v;
    }
}

TEST_CASE("loss gradients match finite differences") {
    Rng rng(93);
    auto p = random_tensor({1, 12, 12}, rng, true, -1, 1);
    auto t = random_tensor({1, 12, 12}, rng, false, -1, 1);
    std::vector<float> kelvin(144);
    for (auto& k : kelvin) k = float(rng.uniform(195, 305));

    auto rep_mse = finite_diff_check<D>([&] { return mse(p, t); }, {p}, 1e-3, 1e-3);
    CHECK_MESSAGE(rep_mse.pass, "mse: ", rep_mse.max_rel_err);

    auto rep_tier = finite_diff_check<D>(
        [&] { return tiered_weighted_mse(p, t, kelvin); }, {p}, 1e-3, 1e-3);
    CHECK_MESSAGE(rep_tier.pass, "tiered: ", rep_tier.max_rel_err);

    auto rep_ssim = finite_diff_check<D>(
        [&] { return ssim(p, t, 11, 2.0); }, {p}, 1e-4, 1e-3);
    CHECK_MESSAGE(rep_ssim.pass, "ssim: ", rep_ssim.max_rel_err);

    // sobel L1 has |.| kinks; evaluate away from zero crossings by separating
    // the fields
    auto p2 = random_tensor({1, 6, 6}, rng, true, 5, 6);
    auto t2 = random_tensor({1, 6, 6}, rng, false, -6, -5);
    auto rep_sob = finite_diff_check<D>(
        [&] { return sobel_gradient_l1(p2, t2); }, {p2}, 1e-5, 1e-3);
    CHECK_MESSAGE(rep_sob.pass, "sobel: ", rep_sob.max_rel_err);

    auto rep_adv = finite_diff_check<D>(
        [&] { return advanced_loss(p, t, 1.0, 0.2, 0.1, 2.0).total; }, {p}, 1e-4,
        1e-3);
    CHECK_MESSAGE(rep_adv.pass, "advanced: ", rep_adv.max_rel_err);
}

TEST_CASE("negative control: a broken backward is caught by the checker") {
    // y = 2x with a backward that claims dy/dx = 4
    auto x = TD::from_values({3}, {1.0, 2.0, 3.0}, true);
    auto broken = [&] {
        TD out = TD::make_op(x.shape(), {x.node()});
        for (int i = 0; i < 3; ++i) out.values()[i] = 2.0 * x.values()[i];
        auto xn = x.node();
        auto on = out.node().get();
        out.set_backward([xn, on] {
            xn->ensure_grad();
            for (int i = 0; i < 3; ++i) xn->grad[i] += 4.0 * on->grad[i];
        });
        return ops::sum_all(out);
    };
    auto rep = finite_diff_check<D>(broken, {x}, 1e-3, 1e-3);
    CHECK_FALSE(rep.pass);
}
