// dartkit: command-line front end for scenario generation, training,
// evaluation, sweeps, ablations, verification maps, and report aggregation.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
// failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "dart/baselines.hpp"
#include "dart/dtsr.hpp"
#include "dart/trainer.hpp"

namespace fs = std::filesystem;
using namespace dart;

namespace {

using Config = std::map<std::string, std::string>;

Config read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config file: " + path);
    Config out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(lineno) +
                            ": expected key=value, got '" + line + "'");
        auto trim = [](std::string s) {
            const auto x = s.find_first_not_of(" \t");
            const auto y = s.find_last_not_of(" \t");
            return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw DataError("config line " + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

// Accepts both bare keys and one dotted section prefix; any leftover key is
// a hard usage error listing the offender.
struct ConfigView {
    Config values;
    std::string section;
    std::set<std::string> known;

    std::string lookup(const std::string& key, const std::string& fallback) {
        known.insert(key);
        auto it = values.find(section + "." + key);
        if (it == values.end()) it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }
    void reject_unknown() const {
        for (const auto& [k, v] : values) {
            std::string bare = k;
            if (bare.rfind(section + ".", 0) == 0) bare = bare.substr(section.size() + 1);
            if (!known.count(bare))
                throw CLI::ValidationError("unknown config key: " + k);
        }
    }
};

uint64_t resolve_seed(uint64_t flag_seed, bool flag_set, const std::string& cfg_seed) {
    if (flag_set) return flag_seed;
    if (!cfg_seed.empty()) return std::stoull(cfg_seed);
    if (const char* env = std::getenv("DARTKIT_SEED")) return std::stoull(env);
    return 1;
}

void claim_output_dir(const std::string& dir, bool force) {
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!force)
            throw CLI::ValidationError("output directory '" + dir +
                                       "' is not empty (use --force to overwrite)");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

std::vector<std::string> split_pipe(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, '|')) out.push_back(item);
    return out;
}

ScenarioConfig scenario_from_config(ConfigView& cfg, uint64_t seed) {
    ScenarioConfig sc;
    sc.seed = seed;
    sc.n_samples = std::stoi(cfg.lookup("n_samples", std::to_string(sc.n_samples)));
    sc.coarse_h = std::stoi(cfg.lookup("coarse_h", std::to_string(sc.coarse_h)));
    sc.coarse_w = std::stoi(cfg.lookup("coarse_w", std::to_string(sc.coarse_w)));
    sc.fine_h = std::stoi(cfg.lookup("fine_h", std::to_string(sc.fine_h)));
    sc.fine_w = std::stoi(cfg.lookup("fine_w", std::to_string(sc.fine_w)));
    sc.convection_rate =
        std::stod(cfg.lookup("convection_rate", std::to_string(sc.convection_rate)));
    sc.core_depth = std::stod(cfg.lookup("core_depth", std::to_string(sc.core_depth)));
    sc.noise_sigma =
        std::stod(cfg.lookup("noise_sigma", std::to_string(sc.noise_sigma)));
    sc.distractor_coupling = std::stod(
        cfg.lookup("distractor_coupling", std::to_string(sc.distractor_coupling)));
    sc.activation_threshold = std::stod(
        cfg.lookup("activation_threshold", std::to_string(sc.activation_threshold)));
    const std::string ch = cfg.lookup("channels", "");
    if (!ch.empty()) sc.channels = split_pipe(ch);
    return sc;
}

TrainConfig train_from_config(ConfigView& cfg, uint64_t seed) {
    TrainConfig tc;
    tc.seed = seed;
    tc.model.seed = seed;
    tc.learning_rate =
        std::stod(cfg.lookup("learning_rate", std::to_string(tc.learning_rate)));
    tc.batch_size = std::stoi(cfg.lookup("batch_size", std::to_string(tc.batch_size)));
    tc.max_epochs = std::stoi(cfg.lookup("max_epochs", std::to_string(tc.max_epochs)));
    tc.patience = std::stoi(cfg.lookup("patience", std::to_string(tc.patience)));
    tc.min_delta = std::stod(cfg.lookup("min_delta", std::to_string(tc.min_delta)));
    tc.clip_max_norm =
        std::stod(cfg.lookup("clip_max_norm", std::to_string(tc.clip_max_norm)));
    tc.beta = std::stod(cfg.lookup("beta", std::to_string(tc.beta)));
    tc.regime = regime_from_name(cfg.lookup("regime", regime_name(tc.regime)));
    tc.sampling = sampling_from_name(cfg.lookup("sampling", sampling_name(tc.sampling)));
    tc.split_threshold =
        std::stof(cfg.lookup("split_threshold", std::to_string(tc.split_threshold)));
    tc.model.in_channels =
        std::stoi(cfg.lookup("in_channels", std::to_string(tc.model.in_channels)));
    tc.model.width_scale_num = std::stoi(
        cfg.lookup("width_scale_num", std::to_string(tc.model.width_scale_num)));
    tc.model.width_scale_den = std::stoi(
        cfg.lookup("width_scale_den", std::to_string(tc.model.width_scale_den)));
    return tc;
}

Field2D field_from_dtsr(const std::string& path) {
    DtsrTensor t = read_dtsr(path);
    if (t.dims.size() != 2)
        throw DataError("expected a rank-2 tensor in " + path);
    Field2D f(GridGeometry{t.dims[0], t.dims[1], 0, 1, 0, 1}, Units::kelvin);
    f.values = t.values;
    return f;
}

struct ReportPoint {
    std::string label;
    double csi = 0, bias = 0;
};

// Pull (csi_220, bias_220) pairs out of stored artifacts; never recompute.
std::vector<ReportPoint> collect_points(const std::string& runs_dir) {
    std::vector<ReportPoint> points;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::recursive_directory_iterator(runs_dir))
        paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        if (p.filename() == "beta_sweep.csv") {
            std::ifstream f(p);
            std::string line;
            std::getline(f, line);  // header
            while (std::getline(f, line)) {
                std::stringstream ss(line);
                std::vector<std::string> cells;
                std::string cell;
                while (std::getline(ss, cell, ',')) cells.push_back(cell);
                if (cells.size() < 8) continue;
                ReportPoint pt;
                pt.label = cells[1] + "_beta_" + cells[0];
                pt.csi = std::stod(cells[2]);
                pt.bias = std::stod(cells[6]);
                points.push_back(pt);
            }
        } else if (p.filename() == "report.txt") {
            std::ifstream f(p);
            std::string line;
            ReportPoint pt;
            pt.label = p.parent_path().filename().string();
            bool has_csi = false, has_bias = false;
            while (std::getline(f, line)) {
                if (line.rfind("csi_220=", 0) == 0) {
                    pt.csi = std::stod(line.substr(8));
                    has_csi = true;
                } else if (line.rfind("bias_220=", 0) == 0) {
                    pt.bias = std::stod(line.substr(9));
                    has_bias = true;
                }
            }
            if (has_csi && has_bias) points.push_back(pt);
        }
    }
    return points;
}

void write_scatter_svg(const std::string& path,
                       const std::vector<ReportPoint>& points) {
    double max_bias = 0.1, max_csi = 0.1;
    for (const auto& p : points) {
        max_bias = std::max(max_bias, p.bias);
        max_csi = std::max(max_csi, p.csi);
    }
    max_bias *= 1.15;
    max_csi *= 1.15;
    const int w = 640, h = 480, ml = 70, mb = 50, mt = 20, mr = 20;
    auto sx = [&](double bias) { return ml + bias / max_bias * (w - ml - mr); };
    auto sy = [&](double csi) { return h - mb - csi / max_csi * (h - mt - mb); };
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='"
      << h << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    f << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr
      << "' y2='" << h - mb << "' stroke='black'/>\n";
    f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
      << h - mb << "' stroke='black'/>\n";
    f << "<text x='" << (w / 2) << "' y='" << h - 12
      << "' text-anchor='middle' font-size='14'>frequency bias @220K</text>\n";
    f << "<text x='18' y='" << (h / 2)
      << "' text-anchor='middle' font-size='14' transform='rotate(-90 18 "
      << (h / 2) << ")'>CSI @220K</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double bv = max_bias * t / 4, cv = max_csi * t / 4;
        f << "<text x='" << sx(bv) << "' y='" << h - mb + 18
          << "' text-anchor='middle' font-size='11'>" << bv << "</text>\n";
        f << "<text x='" << ml - 8 << "' y='" << sy(cv) + 4
          << "' text-anchor='end' font-size='11'>" << cv << "</text>\n";
    }
    for (const auto& p : points) {
        f << "<circle cx='" << sx(p.bias) << "' cy='" << sy(p.csi)
          << "' r='5' fill='steelblue' fill-opacity='0.8'/>\n";
        f << "<text x='" << sx(p.bias) + 7 << "' y='" << sy(p.csi) - 7
          << "' font-size='10'>" << p.label << "</text>\n";
    }
    f << "</svg>\n";
}

int run_cli(int argc, char** argv) {
    CLI::App app{"dartkit: dual-decoder extreme-convection toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir, run_dir, runs_dir;
    std::string pred_path, obs_path, model_kind = "dart", scenario_kind = "benchmark";
    uint64_t seed = 0;
    bool force = false;
    float threshold = 220.0f;

    auto add_common = [&](CLI::App* cmd, bool with_config = true) {
        if (with_config) cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--seed", seed, "seed override");
        cmd->add_flag("--force", force, "overwrite a non-empty output directory");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--kind", scenario_kind, "benchmark|probe");
    add_common(synth);

    auto* train = app.add_subcommand("train", "train a model on a scenario");
    train->add_option("--data", data_dir, "scenario directory")->required();
    train->add_option("--out", out_dir, "run artifacts directory")->required();
    train->add_option("--model", model_kind, "dart|unet");
    double beta_flag = -1;
    std::string regime_flag, sampling_flag;
    train->add_option("--beta", beta_flag, "extreme-head loss weight");
    train->add_option("--regime", regime_flag, "conservative|aggressive");
    train->add_option("--sampling", sampling_flag, "uniform|weighted");
    add_common(train);

    auto* eval = app.add_subcommand("eval", "evaluate a stored checkpoint");
    eval->add_option("--data", data_dir, "scenario directory")->required();
    eval->add_option("--run", run_dir, "run directory with checkpoint/ + config.txt")
        ->required();
    eval->add_option("--out", out_dir, "output directory")->required();
    eval->add_option("--model", model_kind, "dart|unet");
    add_common(eval, false);

    auto* sweep = app.add_subcommand("sweep-beta", "beta x regime sensitivity table");
    sweep->add_option("--data", data_dir, "scenario directory")->required();
    sweep->add_option("--out", out_dir, "output directory")->required();
    add_common(sweep);

    auto* ablate = app.add_subcommand("ablate", "21-subset channel ablation study");
    ablate->add_option("--data", data_dir, "scenario directory")->required();
    ablate->add_option("--out", out_dir, "output directory")->required();
    add_common(ablate);

    auto* vmap = app.add_subcommand("verify-map", "hit/miss/false-alarm pixel map");
    vmap->add_option("--pred", pred_path, "prediction DTSR")->required();
    vmap->add_option("--obs", obs_path, "observation DTSR")->required();
    vmap->add_option("--threshold", threshold, "event threshold, kelvin");
    vmap->add_option("--out", out_dir, "output PGM path")->required();
    add_common(vmap, false);

    auto* report = app.add_subcommand("report", "aggregate stored run CSVs");
    report->add_option("--runs", runs_dir, "directory tree of run artifacts")
        ->required();
    report->add_option("--out", out_dir, "output directory")->required();
    add_common(report, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    Config raw;
    if (!config_path.empty()) raw = read_config_file(config_path);
    bool seed_set = false;
    for (CLI::App* c : {synth, train, sweep, ablate})
        if (c->parsed() && c->count("--seed")) seed_set = true;

    if (synth->parsed()) {
        ConfigView cfg{raw, "synth", {}};
        const uint64_t s = resolve_seed(seed, seed_set, cfg.lookup("seed", ""));
        ScenarioConfig sc = scenario_from_config(cfg, s);
        std::string kind = cfg.lookup("kind", scenario_kind);
        if (synth->count("--kind")) kind = scenario_kind;
        std::vector<double> coefs;
        const std::string cstr = cfg.lookup("probe_coefficients", "");
        for (const auto& c : split_pipe(cstr)) coefs.push_back(std::stod(c));
        const double intercept = std::stod(cfg.lookup("probe_intercept", "260"));
        cfg.reject_unknown();
        claim_output_dir(out_dir, force);
        Scenario scenario;
        if (kind == "benchmark")
            scenario = generate_scenario(sc);
        else if (kind == "probe")
            scenario = linear_probe_scenario(sc, coefs, intercept);
        else
            throw CLI::ValidationError("unknown scenario kind: " + kind);
        write_scenario(scenario, out_dir);
        auto rows = stats_report(scenario);
        write_distribution_csv(out_dir + "/distribution.csv", rows);
        std::cout << "wrote scenario (" << scenario.samples.size() << " samples) to "
                  << out_dir << "\n";
        return 0;
    }

    if (train->parsed()) {
        ConfigView cfg{raw, "train", {}};
        const uint64_t s = resolve_seed(seed, seed_set, cfg.lookup("seed", ""));
        TrainConfig tc = train_from_config(cfg, s);
        cfg.reject_unknown();
        if (train->count("--beta")) tc.beta = beta_flag;
        if (!regime_flag.empty()) tc.regime = regime_from_name(regime_flag);
        if (!sampling_flag.empty()) tc.sampling = sampling_from_name(sampling_flag);
        Scenario scenario = read_scenario(data_dir);
        tc.model.in_channels = int(scenario.config.channels.size());
        claim_output_dir(out_dir, force);
        RunReport run;
        if (model_kind == "dart") {
            DartModel model(tc.model);
            run = train_dart(model, scenario, tc, out_dir);
        } else if (model_kind == "unet") {
            UnetModel model(tc.model);
            run = train_unet(model, scenario, tc, out_dir);
        } else {
            throw CLI::ValidationError("unknown model kind: " + model_kind);
        }
        std::ofstream(out_dir + "/config.txt", std::ios::app)
            << "model=" << model_kind << "\n";
        std::cout << "best epoch " << run.best_epoch << ", CSI@220K "
                  << run.test_scores.at(220).csi << ", bias "
                  << run.test_scores.at(220).bias << "\n";
        return 0;
    }

    if (eval->parsed()) {
        Config rc = read_config_file(run_dir + "/config.txt");
        ConfigView cfg{rc, "train", {}};
        TrainConfig tc = train_from_config(cfg, 1);
        const std::string kind = rc.count("model") ? rc.at("model") : model_kind;
        Scenario scenario = read_scenario(data_dir);
        tc.model.in_channels = int(scenario.config.channels.size());
        claim_output_dir(out_dir, force);
        RunReport run;
        if (kind == "unet") {
            UnetModel model(tc.model);
            load_checkpoint(model, run_dir + "/checkpoint");
            run = evaluate_unet(model, scenario, tc.split_threshold, out_dir);
        } else {
            DartModel model(tc.model);
            load_checkpoint(model, run_dir + "/checkpoint");
            run = evaluate_dart(model, scenario, tc.split_threshold, out_dir);
        }
        std::cout << "CSI@220K " << run.test_scores.at(220).csi << ", RMSE "
                  << run.test_bulk.rmse << "\n";
        return 0;
    }

    if (sweep->parsed()) {
        ConfigView cfg{raw, "train", {}};
        const uint64_t s = resolve_seed(seed, seed_set, cfg.lookup("seed", ""));
        TrainConfig tc = train_from_config(cfg, s);
        cfg.reject_unknown();
        Scenario scenario = read_scenario(data_dir);
        tc.model.in_channels = int(scenario.config.channels.size());
        claim_output_dir(out_dir, force);
        auto rows = beta_sweep(scenario, tc, out_dir);
        std::cout << "wrote " << rows.size() << " sweep rows to " << out_dir
                  << "/beta_sweep.csv\n";
        return 0;
    }

    if (ablate->parsed()) {
        ConfigView cfg{raw, "train", {}};
        const uint64_t s = resolve_seed(seed, seed_set, cfg.lookup("seed", ""));
        TrainConfig tc = train_from_config(cfg, s);
        cfg.reject_unknown();
        Scenario scenario = read_scenario(data_dir);
        claim_output_dir(out_dir, force);
        auto rows = ablation_run(scenario, tc, out_dir);
        std::cout << "wrote " << rows.size() << " ablation rows to " << out_dir
                  << "/ablation.csv\n";
        return 0;
    }

    if (vmap->parsed()) {
        Field2D pred = field_from_dtsr(pred_path);
        Field2D obs = field_from_dtsr(obs_path);
        VerificationMap map = verification_map(pred, obs, threshold);
        write_verification_pgm(map, out_dir);
        std::cout << "hits " << map.table.hits << ", misses " << map.table.misses
                  << ", false alarms " << map.table.false_alarms
                  << ", correct negatives " << map.table.correct_negatives << "\n";
        return 0;
    }

    if (report->parsed()) {
        auto points = collect_points(runs_dir);
        if (points.empty()) throw DataError("no run artifacts found in " + runs_dir);
        claim_output_dir(out_dir, force);
        std::ofstream csv(out_dir + "/report.csv", std::ios::trunc);
        csv.precision(10);
        csv << "label,csi_220,bias_220\n";
        for (const auto& p : points)
            csv << p.label << ',' << p.csi << ',' << p.bias << '\n';
        write_scatter_svg(out_dir + "/scatter.svg", points);
        std::cout << "aggregated " << points.size() << " runs into " << out_dir
                  << "\n";
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DartError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
