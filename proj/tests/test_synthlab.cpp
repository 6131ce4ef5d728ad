#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dart/decomposition.hpp"
#include "dart/synthlab.hpp"

using namespace dart;

namespace {

ScenarioConfig small_config(uint64_t seed = 1, int n = 20) {
    ScenarioConfig c;
    c.seed = seed;
    c.n_samples = n;
    c.fine_h = 32;
    c.fine_w = 32;
    return c;
}

std::string temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("synthlab_" + tag);
    std::filesystem::remove_all(p);
    return p.string();
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
    const ScenarioConfig cfg = small_config(7);
    Scenario a = generate_scenario(cfg);
    Scenario b = generate_scenario(cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].record.target.values ==
              b.samples[i].record.target.values);
        CHECK(a.samples[i].core_mask == b.samples[i].core_mask);
        for (size_t ch = 0; ch < a.samples[i].record.predictors.fields.size(); ++ch)
            CHECK(a.samples[i].record.predictors.fields[ch].values ==
                  b.samples[i].record.predictors.fields[ch].values);
    }

    ScenarioConfig other = cfg;
    other.seed = 8;
    Scenario c = generate_scenario(other);
    bool any_diff = false;
    for (size_t i = 0; i < a.samples.size() && !any_diff; ++i)
        any_diff = a.samples[i].record.target.values !=
                   c.samples[i].record.target.values;
    CHECK(any_diff);
}

TEST_CASE("zero convection rate yields an all-warm, core-free dataset") {
    ScenarioConfig cfg = small_config(3);
    cfg.convection_rate = 0;
    Scenario sc = generate_scenario(cfg);
    for (const auto& s : sc.samples) {
        for (uint8_t m : s.core_mask) CHECK(m == 0);
        for (float v : s.record.target.values) CHECK(v > 220.0f);
        CHECK(eventfulness(s.record.target) == 0.0);
    }
}

TEST_CASE("default calibration hits rarity and zero-event bands") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        ScenarioConfig cfg;
        cfg.seed = seed;
        Scenario sc = generate_scenario(cfg);
        double mean_cold = 0;
        int zero_events = 0;
        for (const auto& s : sc.samples) {
            const double frac = eventfulness(s.record.target);
            mean_cold += frac;
            if (frac == 0.0) ++zero_events;
        }
        mean_cold = 100.0 * mean_cold / sc.samples.size();
        const double zero_pct = 100.0 * zero_events / sc.samples.size();
        INFO("seed ", seed, " mean ", mean_cold, " zero ", zero_pct);
        CHECK(mean_cold >= 10.0);
        CHECK(mean_cold <= 28.0);
        CHECK(zero_pct >= 18.0);
        CHECK(zero_pct <= 28.0);
    }
}

TEST_CASE("distractor coupling shifts IVT but never the target") {
    ScenarioConfig lo = small_config(11);
    ScenarioConfig hi = lo;
    lo.distractor_coupling = 0.0;
    hi.distractor_coupling = 1.0;
    Scenario a = generate_scenario(lo);
    Scenario b = generate_scenario(hi);
    bool ivt_differs = false;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].record.target.values ==
              b.samples[i].record.target.values);
        CHECK(a.samples[i].core_mask == b.samples[i].core_mask);
        const auto& pa = a.samples[i].record.predictors;
        const auto& pb = b.samples[i].record.predictors;
        for (size_t ch = 0; ch < pa.channel_names.size(); ++ch) {
            if (pa.channel_names[ch] == "IVT") {
                if (pa.fields[ch].values != pb.fields[ch].values)
                    ivt_differs = true;
            } else {
                CHECK(pa.fields[ch].values == pb.fields[ch].values);
            }
        }
    }
    CHECK(ivt_differs);
}

TEST_CASE("core mask matches the cold anomaly footprint") {
    Scenario sc = generate_scenario(small_config(5));
    for (const auto& s : sc.samples) {
        // carved pixels sit strictly below the local warm background, so any
        // pixel at or below 220 K must be inside the mask
        for (size_t p = 0; p < s.record.target.values.size(); ++p)
            if (s.record.target.values[p] <= 220.0f) CHECK(s.core_mask[p] == 1);
    }
}

TEST_CASE("linear probe target is exactly linear in normalized predictors") {
    ScenarioConfig cfg = small_config(13);
    cfg.noise_sigma = 0;
    Scenario sc = linear_probe_scenario(cfg);
    REQUIRE(sc.probe_coefficients.size() == 5);
    CHECK(sc.probe_coefficients[0] == 5.0);
    CHECK(sc.probe_intercept == 260.0);

    std::vector<const PredictorStack*> train;
    for (int i : sc.indices(Split::train))
        train.push_back(&sc.samples[i].record.predictors);
    NormStats stats = compute_norm_stats_stacks(train);

    for (const auto& s : sc.samples) {
        PredictorStack normed = apply_norm(s.record.predictors, stats);
        for (size_t p = 0; p < s.record.target.values.size(); ++p) {
            double t = sc.probe_intercept;
            for (size_t ch = 0; ch < normed.fields.size(); ++ch)
                t += sc.probe_coefficients[ch] * normed.fields[ch].values[p];
            t = std::clamp(t, 150.0, 349.0);
            CHECK(double(s.record.target.values[p]) ==
                  doctest::Approx(t).epsilon(1e-6));
        }
    }
}

TEST_CASE("linear probe accepts custom coefficients and rejects bad counts") {
    ScenarioConfig cfg = small_config(17);
    const std::vector<double> coef = {1, 2, 3, 4, 5};
    Scenario sc = linear_probe_scenario(cfg, coef, 270.0);
    CHECK(sc.probe_coefficients == coef);
    CHECK(sc.probe_intercept == 270.0);
    CHECK_THROWS_AS(linear_probe_scenario(cfg, {1, 2}), DataError);
}

TEST_CASE("splits are chronological 80/10/10") {
    Scenario sc = generate_scenario(small_config(1, 80));
    CHECK(sc.indices(Split::train).size() == 64);
    CHECK(sc.indices(Split::val).size() == 8);
    CHECK(sc.indices(Split::test).size() == 8);
    CHECK(sc.indices(Split::train).back() == 63);
    CHECK(sc.indices(Split::val).front() == 64);
    CHECK(sc.indices(Split::test).front() == 72);
    // timestamps are non-decreasing in index order
    for (size_t i = 1; i < sc.samples.size(); ++i)
        CHECK(sc.samples[i - 1].record.timestamp <= sc.samples[i].record.timestamp);
}

TEST_CASE("write/read round trip preserves config, samples, and masks") {
    ScenarioConfig cfg = small_config(23);
    cfg.distractor_coupling = 0.4;
    Scenario sc = generate_scenario(cfg);
    const std::string dir = temp_dir("roundtrip");
    write_scenario(sc, dir);
    Scenario back = read_scenario(dir);

    CHECK(back.config.seed == cfg.seed);
    CHECK(back.config.n_samples == cfg.n_samples);
    CHECK(back.config.convection_rate == cfg.convection_rate);
    CHECK(back.config.core_depth == cfg.core_depth);
    CHECK(back.config.distractor_coupling == cfg.distractor_coupling);
    CHECK(back.config.activation_threshold == cfg.activation_threshold);
    CHECK(back.config.channels == canonical_channel_order(cfg.channels));
    REQUIRE(back.samples.size() == sc.samples.size());
    for (size_t i = 0; i < sc.samples.size(); ++i) {
        CHECK(back.samples[i].record.id == sc.samples[i].record.id);
        CHECK(back.samples[i].record.timestamp == sc.samples[i].record.timestamp);
        CHECK(back.splits[i] == sc.splits[i]);
        CHECK(back.samples[i].record.target.values ==
              sc.samples[i].record.target.values);
        CHECK(back.samples[i].core_mask == sc.samples[i].core_mask);
        for (size_t ch = 0; ch < sc.samples[i].record.predictors.fields.size(); ++ch)
            CHECK(back.samples[i].record.predictors.fields[ch].values ==
                  sc.samples[i].record.predictors.fields[ch].values);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("probe scenario round trips its oracle") {
    Scenario sc = linear_probe_scenario(small_config(29), {2, -1, 0.5, 3, -7}, 255.0);
    const std::string dir = temp_dir("probe");
    write_scenario(sc, dir);
    Scenario back = read_scenario(dir);
    REQUIRE(back.probe_coefficients.size() == 5);
    for (size_t i = 0; i < 5; ++i)
        CHECK(back.probe_coefficients[i] ==
              doctest::Approx(sc.probe_coefficients[i]).epsilon(1e-12));
    CHECK(back.probe_intercept == doctest::Approx(255.0));
    std::filesystem::remove_all(dir);
}

TEST_CASE("stats report matches the direct distribution report") {
    Scenario sc = generate_scenario(small_config(31));
    auto via_scenario = stats_report(sc);
    auto direct = dataset_distribution_report(sc.targets());
    REQUIRE(via_scenario.size() == direct.size());
    for (size_t i = 0; i < direct.size(); ++i) {
        CHECK(via_scenario[i].threshold == direct[i].threshold);
        CHECK(via_scenario[i].mean_pct == direct[i].mean_pct);
        CHECK(via_scenario[i].zero_pixel_samples == direct[i].zero_pixel_samples);
    }
}

TEST_CASE("config validation rejects bad geometry and coupling") {
    ScenarioConfig c = small_config();
    c.n_samples = 5;
    CHECK_THROWS_AS(c.validate(), DataError);
    c = small_config();
    c.fine_h = 30;
    CHECK_THROWS_AS(c.validate(), DataError);
    c = small_config();
    c.coarse_h = 7;
    CHECK_THROWS_AS(c.validate(), DataError);
    c = small_config();
    c.distractor_coupling = 1.5;
    CHECK_THROWS_AS(c.validate(), DataError);
}
