#include "dart/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dart/dtsr.hpp"
#include "dart/regrid.hpp"

namespace dart {

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Sum of low-frequency cosine modes with seeded random phases, scaled so a
// typical realization has roughly unit variance (the natural sample-to-sample
// spread is kept, which drives the zero-event-sample fraction).
Field2D smooth_field(Rng& rng, const GridGeometry& g, int kmax = 3) {
    Field2D out(g, Units::dimensionless);
    struct Mode {
        double kx, ky, amp, phase;
    };
    std::vector<Mode> modes;
    double var = 0;
    for (int ky = 0; ky <= kmax; ++ky)
        for (int kx = 0; kx <= kmax; ++kx) {
            if (kx == 0 && ky == 0) continue;
            const double amp = 1.0 / (1.0 + kx + ky);
            modes.push_back({double(kx), double(ky), amp,
                             rng.uniform(0.0, kTwoPi)});
            var += 0.5 * amp * amp;
        }
    const double inv_std = 1.0 / std::sqrt(var);
    for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j) {
            double acc = 0;
            const double u = (j + 0.5) / g.width, v = (i + 0.5) / g.height;
            for (const auto& m : modes)
                acc += m.amp * std::cos(kTwoPi * (m.kx * u + m.ky * v) + m.phase);
            out.at(i, j) = float(acc * inv_std);
        }
    return out;
}

std::string sample_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%04d", i);
    return buf;
}

std::string sample_timestamp(int i) {
    // synthetic 6-hourly chronology; index order stands in for time
    const int day = 1 + (i / 4) % 28, month = 1 + (i / 112) % 12;
    const int hour = 6 * (i % 4);
    char buf[32];
    std::snprintf(buf, sizeof buf, "2021-%02d-%02dT%02d:00:00Z", month, day, hour);
    return buf;
}

std::vector<Split> make_splits(int n) {
    std::vector<Split> s(n, Split::test);
    const int n_train = n * 8 / 10, n_val = n / 10;
    for (int i = 0; i < n; ++i)
        s[i] = i < n_train ? Split::train
                           : (i < n_train + n_val ? Split::val : Split::test);
    return s;
}

struct CoarseChannels {
    Field2D z_t500, z_t850, z_rh, z_w500, z_ivt_indep, z_noise, z_sev;
};

CoarseChannels draw_coarse(Rng& rng, const GridGeometry& coarse,
                           const GridGeometry& noise_grid) {
    CoarseChannels c{smooth_field(rng, coarse), smooth_field(rng, coarse),
                     smooth_field(rng, coarse), smooth_field(rng, coarse),
                     smooth_field(rng, coarse), smooth_field(rng, noise_grid, 5),
                     smooth_field(rng, coarse)};
    return c;
}

PredictorStack physical_stack(const CoarseChannels& c, const ScenarioConfig& cfg,
                              const GridGeometry& fine) {
    auto up = [&](const Field2D& f) { return regrid_bilinear(f, fine); };
    PredictorStack stack;
    stack.channel_names = canonical_channel_order(cfg.channels);
    for (const auto& name : stack.channel_names) {
        Field2D f;
        if (name == "IVT") {
            f = up(c.z_t850);
            const Field2D indep = up(c.z_ivt_indep);
            for (size_t i = 0; i < f.values.size(); ++i) {
                const double z = cfg.distractor_coupling * f.values[i] +
                                 (1.0 - cfg.distractor_coupling) * indep.values[i];
                f.values[i] = float(std::max(0.0, 250.0 + 120.0 * z));
            }
            f.units = Units::kg_m1_s1;
        } else if (name == "T500") {
            f = up(c.z_t500);
            for (float& v : f.values) v = float(253.0 + 8.0 * v);
            f.units = Units::kelvin;
        } else if (name == "T850") {
            f = up(c.z_t850);
            for (float& v : f.values) v = float(283.0 + 8.0 * v);
            f.units = Units::kelvin;
        } else if (name == "RH700") {
            f = up(c.z_rh);
            for (float& v : f.values)
                v = float(std::clamp(55.0 + 22.0 * v, 1.0, 99.0));
            f.units = Units::percent;
        } else {  // W500
            f = up(c.z_w500);
            for (float& v : f.values) v = float(-0.4 * v);
            f.units = Units::pa_s;
        }
        stack.fields.push_back(std::move(f));
    }
    return stack;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_samples < 10) throw DataError("ScenarioConfig: need at least 10 samples");
    if (fine_h % 16 != 0 || fine_w % 16 != 0)
        throw DataError("ScenarioConfig: fine dims must be divisible by 16");
    if (fine_h % coarse_h != 0 || fine_w % coarse_w != 0)
        throw DataError("ScenarioConfig: coarse dims must divide fine dims");
    if (distractor_coupling < 0 || distractor_coupling > 1)
        throw DataError("ScenarioConfig: distractor_coupling must be in [0,1]");
    canonical_channel_order(channels);
}

std::vector<int> Scenario::indices(Split s) const {
    std::vector<int> out;
    for (size_t i = 0; i < splits.size(); ++i)
        if (splits[i] == s) out.push_back(int(i));
    return out;
}

std::vector<const Field2D*> Scenario::targets() const {
    std::vector<const Field2D*> out;
    for (const auto& s : samples) out.push_back(&s.record.target);
    return out;
}

Scenario generate_scenario(const ScenarioConfig& config) {
    config.validate();
    const GridGeometry coarse{config.coarse_h, config.coarse_w, 0, 1, 0, 1};
    const GridGeometry fine{config.fine_h, config.fine_w, 0, 1, 0, 1};
    const GridGeometry noise_grid{16, 16, 0, 1, 0, 1};

    Scenario sc;
    sc.config = config;
    sc.splits = make_splits(config.n_samples);

    for (int i = 0; i < config.n_samples; ++i) {
        Rng rng(derive_seed(config.seed, uint64_t(i)));
        CoarseChannels c = draw_coarse(rng, coarse, noise_grid);
        // per-sample storm intensity: quiet days never cross the activation
        // threshold and become the zero-event population
        const double storminess = rng.uniform(0.3, 1.5);

        SyntheticSample s;
        s.record.id = sample_id(i);
        s.record.timestamp = sample_timestamp(i);
        s.record.predictors = physical_stack(c, config, fine);

        // warm background: linear in the T850 envelope plus smooth noise
        const Field2D t850_up = regrid_bilinear(c.z_t850, fine);
        const Field2D noise_up = regrid_bilinear(c.z_noise, fine);
        // convection activation: cold mid-level air plus ascent
        const Field2D t500_up = regrid_bilinear(c.z_t500, fine);
        const Field2D w500_up = regrid_bilinear(c.z_w500, fine);
        const Field2D rh_up = regrid_bilinear(c.z_rh, fine);
        const Field2D sev_up = regrid_bilinear(c.z_sev, fine);

        s.record.target = Field2D(fine, Units::kelvin);
        s.core_mask.assign(s.record.target.values.size(), 0);
        const int fh = fine.height, fw = fine.width;
        // Convective activation lives on the frontal bands of the mid-level
        // flow: the gradient magnitude of W500 - T500 in unit-domain
        // coordinates. The gradient of a stationary field is linearly
        // uncorrelated with the field values at the same point, so a
        // per-pixel regression on channel values carries no linear signal
        // about core placement, while any operator with a neighborhood view
        // recovers it directly.
        std::vector<double> diff(s.record.target.values.size());
        for (size_t p = 0; p < diff.size(); ++p)
            diff[p] = w500_up.values[p] - t500_up.values[p];
        std::vector<double> act(diff.size());
        double act_max = -1e30;
        for (int r = 0; r < fh; ++r) {
            for (int col = 0; col < fw; ++col) {
                const int rm = std::max(r - 1, 0), rp = std::min(r + 1, fh - 1);
                const int cm = std::max(col - 1, 0), cp = std::min(col + 1, fw - 1);
                const double gy = (diff[size_t(rp) * fw + col] - diff[size_t(rm) * fw + col]) /
                                  (double(rp - rm) / fh);
                const double gx = (diff[size_t(r) * fw + cp] - diff[size_t(r) * fw + cm]) /
                                  (double(cp - cm) / fw);
                const size_t p = size_t(r) * fw + col;
                act[p] = config.convection_rate * storminess *
                         std::sqrt(gx * gx + gy * gy);
                act_max = std::max(act_max, act[p]);
            }
        }
        const bool eventful = act_max > config.activation_threshold;
        const double lvl = 0.1;
        const double core_level = lvl * act_max;
        // Which parts of an active band actually glaciate into deep cells
        // is controlled by an independent severity field that never appears
        // in the predictors. At a fixed input pattern the cold/warm label
        // is therefore genuinely ambiguous, which is exactly the regime
        // where tier-weighted training tips predictions cold and a plain
        // least-squares fit stays warm.
        const double storm01 = std::clamp((storminess - 0.3) / 1.2, 0.0, 1.0);
        const double cell_cut = 0.0;
        const double cell_k = 2.0;
        const double bg_amp = 26.0;
        for (size_t p = 0; p < s.record.target.values.size(); ++p) {
            // warm-skewed background with a hard warm floor: quiescent
            // scenes never approach the cold-core regime on their own
            const double bg_base = 266.0;
            // fixed meridional climatology: warm equatorward edge, cool
            // poleward edge, identical in every scene
            const double ramp_amp = 60.0;
            const double lat01 = fh > 1 ? double(p / size_t(fw)) / (fh - 1) : 0.5;
            const double bg =
                std::clamp(bg_base + ramp_amp * (0.5 - lat01) +
                               bg_amp * t850_up.values[p] +
                               config.noise_sigma * noise_up.values[p],
                           238.0, 334.0);
            double t = bg;
            if (eventful && act[p] > core_level) {
                const double shape = (act[p] - core_level) /
                                     std::max(act_max - core_level, 1e-6);
                const double rh01 =
                    std::clamp((55.0 + 22.0 * rh_up.values[p] - 20.0) / 70.0, 0.0, 1.0);
                const double core_floor = 209.0;
                const double sat = std::min(1.0, shape / 0.15);
                // cloud tops replace the background: the plateau of an
                // active band sits at the cold anvil-top temperature, so
                // depth grows with the local background rather than adding
                // unbounded excursions
                // deep anvils form over moderately warm sectors: a window
                // centered near the climatological background keeps carve
                // presence linearly uncorrelated with the background itself
                const double gate_t = 262.0;
                const double gate_w = 18.0;
                const double gz = (bg - gate_t) / gate_w;
                const double gate = std::exp(-0.5 * gz * gz);
                const bool cell =
                    sev_up.values[p] + cell_k * (storm01 - 0.5) > cell_cut;
                // non-cell active pixels still carve, but bottom out at the
                // shield-top floor just above the extreme-cold band: mid-level
                // cloud decks cool the scene without reaching anvil-top
                // temperatures, so only the cell indicator decides whether
                // the pixel crosses 220 K
                const double noncell_floor = 223.0;
                const double depth =
                    std::min(config.core_depth * (0.8 + 0.2 * rh01),
                             bg - core_floor) * sat * gate;
                t = bg - depth;
                if (!cell) t = std::min(bg, std::max(t, noncell_floor));
                s.core_mask[p] = 1;
            }
            s.record.target.values[p] = float(std::clamp(t, 150.0, 340.0));
        }
        s.record.target.check_kelvin_band();
        sc.samples.push_back(std::move(s));
    }

    // infeasible calibration guard
    double mean_cold = 0;
    for (const auto& s : sc.samples) mean_cold += eventfulness(s.record.target);
    mean_cold /= sc.samples.size();
    if (mean_cold > 0.95)
        throw DataError("generate_scenario: calibration infeasible, " +
                        std::to_string(mean_cold * 100) + "% cold pixels");
    return sc;
}

Scenario linear_probe_scenario(const ScenarioConfig& config,
                               const std::vector<double>& coefficients,
                               double intercept) {
    config.validate();
    const GridGeometry coarse{config.coarse_h, config.coarse_w, 0, 1, 0, 1};
    const GridGeometry fine{config.fine_h, config.fine_w, 0, 1, 0, 1};
    const GridGeometry noise_grid{16, 16, 0, 1, 0, 1};

    Scenario sc;
    sc.config = config;
    sc.splits = make_splits(config.n_samples);
    const auto names = canonical_channel_order(config.channels);
    sc.probe_coefficients = coefficients;
    if (sc.probe_coefficients.empty()) {
        const std::vector<double> defaults = {5.0, -8.0, 6.0, 3.0, -4.0};
        for (size_t c = 0; c < names.size(); ++c)
            sc.probe_coefficients.push_back(defaults[c % defaults.size()]);
    }
    if (sc.probe_coefficients.size() != names.size())
        throw DataError("linear_probe_scenario: coefficient count mismatch");
    sc.probe_intercept = intercept;

    for (int i = 0; i < config.n_samples; ++i) {
        Rng rng(derive_seed(config.seed ^ 0xABCDEF, uint64_t(i)));
        CoarseChannels c = draw_coarse(rng, coarse, noise_grid);
        SyntheticSample s;
        s.record.id = sample_id(i);
        s.record.timestamp = sample_timestamp(i);
        s.record.predictors = physical_stack(c, config, fine);
        s.core_mask.assign(size_t(config.fine_h) * config.fine_w, 0);
        sc.samples.push_back(std::move(s));
    }

    // normalization statistics over the training split only, so the stored
    // coefficients live in exactly the basis the MOS fit sees
    std::vector<const PredictorStack*> train_stacks;
    for (int i : sc.indices(Split::train))
        train_stacks.push_back(&sc.samples[i].record.predictors);
    NormStats stats = compute_norm_stats_stacks(train_stacks);

    for (int i = 0; i < config.n_samples; ++i) {
        Rng noise_rng(derive_seed(config.seed ^ 0x5EED50, uint64_t(i)));
        auto& s = sc.samples[i];
        s.record.target = Field2D(fine, Units::kelvin);
        PredictorStack normed = apply_norm(s.record.predictors, stats);
        for (size_t p = 0; p < s.record.target.values.size(); ++p) {
            double t = sc.probe_intercept;
            for (size_t ch = 0; ch < normed.fields.size(); ++ch)
                t += sc.probe_coefficients[ch] * normed.fields[ch].values[p];
            t += config.noise_sigma * noise_rng.normal();
            s.record.target.values[p] = float(std::clamp(t, 150.0, 349.0));
        }
    }
    return sc;
}

std::vector<DistributionRow> stats_report(const Scenario& scenario) {
    return dataset_distribution_report(scenario.targets());
}

void write_scenario(const Scenario& scenario, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "samples");
    fs::create_directories(fs::path(dir) / "masks");
    std::vector<ManifestRow> rows;
    for (size_t i = 0; i < scenario.samples.size(); ++i) {
        const auto& s = scenario.samples[i];
        const std::string pp = "samples/" + s.record.id + "_pred.dtsr";
        const std::string tp = "samples/" + s.record.id + "_targ.dtsr";
        write_sample(s.record, dir + "/" + pp, dir + "/" + tp);
        std::vector<float> mask(s.core_mask.begin(), s.core_mask.end());
        write_dtsr(dir + "/masks/" + s.record.id + "_mask.dtsr",
                   {s.record.target.height(), s.record.target.width()}, mask);
        rows.push_back({s.record.id, s.record.timestamp, pp, tp,
                        split_name(scenario.splits[i])});
    }
    write_manifest(dir + "/manifest.csv", rows);

    std::ofstream oracle(dir + "/oracle.csv", std::ios::trunc);
    if (!oracle) throw DataError("write_scenario: cannot open oracle.csv");
    oracle.precision(17);
    const auto& c = scenario.config;
    oracle << "key,value\n";
    oracle << "seed," << c.seed << "\n";
    oracle << "n_samples," << c.n_samples << "\n";
    oracle << "coarse_h," << c.coarse_h << "\ncoarse_w," << c.coarse_w << "\n";
    oracle << "fine_h," << c.fine_h << "\nfine_w," << c.fine_w << "\n";
    oracle << "convection_rate," << c.convection_rate << "\n";
    oracle << "core_depth," << c.core_depth << "\n";
    oracle << "noise_sigma," << c.noise_sigma << "\n";
    oracle << "distractor_coupling," << c.distractor_coupling << "\n";
    oracle << "activation_threshold," << c.activation_threshold << "\n";
    oracle << "channels,";
    for (size_t i = 0; i < c.channels.size(); ++i)
        oracle << (i ? "|" : "") << c.channels[i];
    oracle << "\n";
    oracle << "probe_intercept," << scenario.probe_intercept << "\n";
    oracle << "probe_coefficients,";
    for (size_t i = 0; i < scenario.probe_coefficients.size(); ++i)
        oracle << (i ? "|" : "") << scenario.probe_coefficients[i];
    oracle << "\n";
}

Scenario read_scenario(const std::string& dir) {
    // oracle.csv restores the config; manifest + DTSR files restore samples
    std::ifstream oracle(dir + "/oracle.csv");
    if (!oracle) throw DataError("read_scenario: cannot open " + dir + "/oracle.csv");
    std::map<std::string, std::string> kv;
    std::string line;
    std::getline(oracle, line);  // header
    while (std::getline(oracle, line)) {
        if (line.empty()) continue;
        auto pos = line.find(',');
        if (pos == std::string::npos)
            throw DataError("read_scenario: malformed oracle row: " + line);
        kv[line.substr(0, pos)] = line.substr(pos + 1);
    }
    auto split_list = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, '|')) out.push_back(tok);
        return out;
    };

    Scenario sc;
    auto& c = sc.config;
    c.seed = std::stoull(kv.at("seed"));
    c.n_samples = std::stoi(kv.at("n_samples"));
    c.coarse_h = std::stoi(kv.at("coarse_h"));
    c.coarse_w = std::stoi(kv.at("coarse_w"));
    c.fine_h = std::stoi(kv.at("fine_h"));
    c.fine_w = std::stoi(kv.at("fine_w"));
    c.convection_rate = std::stod(kv.at("convection_rate"));
    c.core_depth = std::stod(kv.at("core_depth"));
    c.noise_sigma = std::stod(kv.at("noise_sigma"));
    c.distractor_coupling = std::stod(kv.at("distractor_coupling"));
    c.activation_threshold = std::stod(kv.at("activation_threshold"));
    c.channels = split_list(kv.at("channels"));
    sc.probe_intercept = std::stod(kv.at("probe_intercept"));
    for (const auto& tok : split_list(kv.at("probe_coefficients")))
        sc.probe_coefficients.push_back(std::stod(tok));

    const GridGeometry fine{c.fine_h, c.fine_w, 0, 1, 0, 1};
    const auto names = canonical_channel_order(c.channels);
    for (const auto& row : read_manifest(dir + "/manifest.csv")) {
        SyntheticSample s;
        s.record = read_sample(row.id, row.timestamp, dir + "/" + row.predictor_path,
                               dir + "/" + row.target_path, names, fine);
        DtsrTensor mask = read_dtsr(dir + "/masks/" + row.id + "_mask.dtsr");
        s.core_mask.assign(mask.values.size(), 0);
        for (size_t i = 0; i < mask.values.size(); ++i)
            s.core_mask[i] = mask.values[i] != 0.0f;
        sc.samples.push_back(std::move(s));
        sc.splits.push_back(row.split == "train"
                                ? Split::train
                                : (row.split == "val" ? Split::val : Split::test));
    }
    return sc;
}

}  // namespace dart
