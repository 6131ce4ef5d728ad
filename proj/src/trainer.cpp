#include "dart/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dart/decomposition.hpp"
#include "dart/optim.hpp"

namespace dart {

namespace {

// affine working basis for all network targets: x' = (x - offset) / scale.
// Shared scale keeps the additive continuity+extreme fusion exact.
constexpr double kOffset = 260.0, kScale = 30.0;

const std::vector<int> kScoreThresholds = {230, 220, 210};

struct PreparedItem {
    std::string id;
    std::vector<float> input;      // normalized predictors, C*H*W
    std::vector<float> bg, res, gt;  // transformed targets, H*W
    std::vector<float> gt_kelvin;    // raw kelvin, H*W
    double weight = 0;
};

struct Prepared {
    int c = 0, h = 0, w = 0;
    GridGeometry geom;
    std::vector<PreparedItem> train, val, test;
};

Prepared prepare(const Scenario& scenario, float split_threshold) {
    std::vector<const PredictorStack*> train_stacks;
    for (int i : scenario.indices(Split::train))
        train_stacks.push_back(&scenario.samples[i].record.predictors);
    if (train_stacks.empty()) throw DataError("train: empty training split");
    NormStats stats = compute_norm_stats_stacks(train_stacks);

    Prepared out;
    const auto& first = scenario.samples.front().record;
    out.c = int(first.predictors.fields.size());
    out.h = first.target.height();
    out.w = first.target.width();
    out.geom = first.target.geom;

    for (size_t i = 0; i < scenario.samples.size(); ++i) {
        const auto& r = scenario.samples[i].record;
        PreparedItem item;
        item.id = r.id;
        PredictorStack normed = apply_norm(r.predictors, stats);
        for (const auto& f : normed.fields)
            item.input.insert(item.input.end(), f.values.begin(), f.values.end());
        DecomposedTarget d = decompose(r.target, split_threshold);
        item.bg.reserve(r.target.size());
        item.res.reserve(r.target.size());
        item.gt.reserve(r.target.size());
        for (size_t p = 0; p < r.target.size(); ++p) {
            item.bg.push_back(float((d.t_bg.values[p] - kOffset) / kScale));
            item.res.push_back(float(d.t_res.values[p] / kScale));
            item.gt.push_back(float((r.target.values[p] - kOffset) / kScale));
        }
        item.gt_kelvin.assign(r.target.values.begin(), r.target.values.end());
        item.weight = sampler_weight(eventfulness(r.target));
        switch (scenario.splits[i]) {
            case Split::train: out.train.push_back(std::move(item)); break;
            case Split::val: out.val.push_back(std::move(item)); break;
            case Split::test: out.test.push_back(std::move(item)); break;
        }
    }
    if (out.val.empty() || out.test.empty())
        throw DataError("train: scenario lacks a validation or test split");
    return out;
}

struct Batch {
    TensorT<float> input;                  // [B,C,H,W]
    TensorT<float> bg, res, gt;            // [B,1,H,W]
    std::vector<float> gt_kelvin;          // B*H*W
};

Batch make_batch(const Prepared& data, const std::vector<PreparedItem>& items,
                 const std::vector<int>& indices, Split split,
                 const TrainHooks& hooks) {
    const int b = int(indices.size());
    std::vector<float> in, bg, res, gt;
    Batch out;
    for (int idx : indices) {
        if (hooks.on_sample_access) hooks.on_sample_access(split, idx);
        const auto& it = items[idx];
        in.insert(in.end(), it.input.begin(), it.input.end());
        bg.insert(bg.end(), it.bg.begin(), it.bg.end());
        res.insert(res.end(), it.res.begin(), it.res.end());
        gt.insert(gt.end(), it.gt.begin(), it.gt.end());
        out.gt_kelvin.insert(out.gt_kelvin.end(), it.gt_kelvin.begin(),
                             it.gt_kelvin.end());
    }
    out.input = TensorT<float>::from_values({b, data.c, data.h, data.w},
                                            std::move(in));
    out.bg = TensorT<float>::from_values({b, 1, data.h, data.w}, std::move(bg));
    out.res = TensorT<float>::from_values({b, 1, data.h, data.w}, std::move(res));
    out.gt = TensorT<float>::from_values({b, 1, data.h, data.w}, std::move(gt));
    return out;
}

Field2D to_kelvin_field(const std::vector<float>& transformed, size_t offset,
                        const GridGeometry& geom) {
    Field2D f(geom, Units::kelvin);
    for (size_t p = 0; p < f.size(); ++p)
        f.values[p] =
            float(std::clamp(kOffset + kScale * transformed[offset + p], 150.0, 349.0));
    return f;
}

std::string unique_scratch_dir(uint64_t seed) {
    static std::atomic<uint64_t> counter{0};
    const auto n = counter.fetch_add(1);
    return (std::filesystem::temp_directory_path() /
            ("dart_run_" + std::to_string(seed) + "_" + std::to_string(n)))
        .string();
}

struct LossValue {
    TensorT<float> total;
    double term_cont = 0, term_ext = 0, term_final = 0;
};

void write_config_txt(const std::string& path, const TrainConfig& c) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("train: cannot open " + path);
    f.precision(17);
    f << "learning_rate=" << c.learning_rate << "\n"
      << "batch_size=" << c.batch_size << "\n"
      << "max_epochs=" << c.max_epochs << "\n"
      << "patience=" << c.patience << "\n"
      << "min_delta=" << c.min_delta << "\n"
      << "clip_max_norm=" << c.clip_max_norm << "\n"
      << "beta=" << c.beta << "\n"
      << "regime=" << regime_name(c.regime) << "\n"
      << "sampling=" << sampling_name(c.sampling) << "\n"
      << "seed=" << c.seed << "\n"
      << "split_threshold=" << c.split_threshold << "\n"
      << "width_scale_num=" << c.model.width_scale_num << "\n"
      << "width_scale_den=" << c.model.width_scale_den << "\n"
      << "in_channels=" << c.model.in_channels << "\n";
}

void write_epochs_csv(const std::string& path, const RunReport& r) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("train: cannot open " + path);
    f.precision(10);
    f << "epoch,train_loss,val_loss,term_cont,term_ext,term_final,improved\n";
    for (const auto& e : r.epochs)
        f << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ','
          << e.term_cont << ',' << e.term_ext << ',' << e.term_final << ','
          << (e.improved ? 1 : 0) << '\n';
}

void write_report_txt(const std::string& path, const RunReport& r) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("train: cannot open " + path);
    f.precision(6);
    f << "epochs_run=" << r.epochs.size() << "\n"
      << "best_epoch=" << r.best_epoch << "\n"
      << "stopped_early=" << (r.stopped_early ? "yes" : "no") << "\n"
      << "wall_seconds=" << r.wall_seconds << "\n";
    for (const auto& [thr, s] : r.test_scores)
        f << "csi_" << thr << "=" << s.csi << (s.csi_degenerate ? " (degenerate)" : "")
          << "\nbias_" << thr << "=" << s.bias
          << (s.bias_degenerate ? " (degenerate)" : "") << "\npod_" << thr << "="
          << s.pod << "\n";
    f << "rmse=" << r.test_bulk.rmse << "\ncorr=" << r.test_bulk.pearson_corr
      << "\nssim=" << r.test_bulk.ssim << "\n";
}

template <typename Model, typename Predict>
void eval_on_test(Model& model, const Prepared& data, Predict predict,
                  const TrainHooks& hooks, RunReport& report);

// Shared loop. forward_loss(batch, train_mode) must build the graph and
// return the scalar objective; predict(batch) the fused [B,1,H,W] output.
template <typename Model, typename ForwardLoss, typename Predict>
RunReport run_training(Model& model, const Prepared& data, const TrainConfig& cfg,
                       const std::string& artifacts_dir, const TrainHooks& hooks,
                       ForwardLoss forward_loss, Predict predict) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string dir =
        artifacts_dir.empty() ? unique_scratch_dir(cfg.seed) : artifacts_dir;
    std::filesystem::create_directories(dir);
    const std::string ckpt = dir + "/checkpoint";
    write_config_txt(dir + "/config.txt", cfg);

    std::vector<double> weights;
    for (const auto& it : data.train)
        weights.push_back(cfg.sampling == Sampling::weighted ? it.weight : 1.0);

    AdamWT<float> opt(&model.params(), float(cfg.learning_rate));
    EarlyStopper stopper{cfg.patience, cfg.min_delta};
    RunReport report;

    const int n_train = int(data.train.size());
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        // the stream restarts identically each epoch, so a full run is a
        // pure function of (config, scenario)
        WeightedBatchStream stream(weights, cfg.batch_size, cfg.seed);
        EpochRecord rec;
        rec.epoch = epoch;
        int drawn = 0, batches = 0;
        while (drawn < n_train) {
            std::vector<int> idx;
            for (int k = 0; k < cfg.batch_size && drawn < n_train; ++k, ++drawn)
                idx.push_back(stream.draw());
            Batch batch = make_batch(data, data.train, idx, Split::train, hooks);
            LossValue loss = forward_loss(model, batch, true);
            const double lv = double(loss.total.item());
            if (!std::isfinite(lv))
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batches + 1) +
                                   "; best checkpoint retained in " + ckpt);
            opt.zero_grad();
            loss.total.backward();
            clip_grad_norm(model.params(), float(cfg.clip_max_norm));
            opt.step();
            rec.train_loss += lv;
            rec.term_cont += loss.term_cont;
            rec.term_ext += loss.term_ext;
            rec.term_final += loss.term_final;
            ++batches;
        }
        rec.train_loss /= batches;
        rec.term_cont /= batches;
        rec.term_ext /= batches;
        rec.term_final /= batches;

        // validation pass on frozen statistics
        double val = 0;
        int val_n = 0;
        for (int start = 0; start < int(data.val.size()); start += cfg.batch_size) {
            std::vector<int> idx;
            for (int k = start;
                 k < std::min<int>(start + cfg.batch_size, int(data.val.size())); ++k)
                idx.push_back(k);
            Batch batch = make_batch(data, data.val, idx, Split::val, hooks);
            LossValue loss = forward_loss(model, batch, false);
            const double lv = double(loss.total.item());
            if (!std::isfinite(lv))
                throw NumericError("train: non-finite validation loss at epoch " +
                                   std::to_string(epoch));
            val += lv * int(idx.size());
            val_n += int(idx.size());
        }
        rec.val_loss = val / val_n;

        const double prev_best = stopper.best_loss;
        const bool stop = stopper.update(epoch, rec.val_loss);
        rec.improved = stopper.best_loss < prev_best;
        if (rec.improved) save_checkpoint(model, ckpt);
        report.epochs.push_back(rec);
        if (hooks.on_epoch_end) hooks.on_epoch_end(rec);
        if (stop) {
            report.stopped_early = true;
            break;
        }
    }
    report.best_epoch = stopper.best_epoch;
    if (report.best_epoch > 0) load_checkpoint(model, ckpt);

    // held-out evaluation, only after training concluded
    eval_on_test(model, data, predict, hooks, report);

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_epochs_csv(dir + "/epochs.csv", report);
    write_scores_csv(dir + "/scores.csv", report.test_rows);
    write_report_txt(dir + "/report.txt", report);
    return report;
}

template <typename Model, typename Predict>
void eval_on_test(Model& model, const Prepared& data, Predict predict,
                  const TrainHooks& hooks, RunReport& report) {
    ContingencyTable pooled[3];
    for (int t = 0; t < int(data.test.size()); ++t) {
        Batch batch = make_batch(data, data.test, {t}, Split::test, hooks);
        TensorT<float> pred = predict(model, batch);
        Field2D pred_field = to_kelvin_field(pred.values(), 0, data.geom);
        Field2D obs(data.geom, Units::kelvin);
        obs.values = data.test[t].gt_kelvin;
        BulkScores bulk = bulk_scores(pred_field, obs);
        report.test_bulk.rmse += bulk.rmse;
        report.test_bulk.pearson_corr += bulk.pearson_corr;
        report.test_bulk.ssim += bulk.ssim;
        report.test_bulk.r2 += bulk.r2;
        for (size_t k = 0; k < kScoreThresholds.size(); ++k) {
            const float thr = float(kScoreThresholds[k]);
            ContingencyTable tab = contingency(pred_field, obs, thr);
            pooled[k] += tab;
            ScoreRow row;
            row.sample_id = data.test[t].id;
            row.threshold = thr;
            row.cat = categorical_scores(tab);
            row.bulk = bulk;
            row.coverage_pct = coverage_pct(obs, thr);
            report.test_rows.push_back(row);
        }
    }
    const double nt = double(data.test.size());
    report.test_bulk.rmse /= nt;
    report.test_bulk.pearson_corr /= nt;
    report.test_bulk.ssim /= nt;
    report.test_bulk.r2 /= nt;
    for (size_t k = 0; k < kScoreThresholds.size(); ++k)
        report.test_scores[kScoreThresholds[k]] = categorical_scores(pooled[k]);
}

template <typename Model, typename Predict>
RunReport run_evaluation(Model& model, const Scenario& scenario,
                         float split_threshold, const std::string& artifacts_dir,
                         Predict predict) {
    const auto t0 = std::chrono::steady_clock::now();
    Prepared data = prepare(scenario, split_threshold);
    if (data.c != model.config().in_channels)
        throw ShapeError("evaluate: scenario has " + std::to_string(data.c) +
                         " channels, model expects " +
                         std::to_string(model.config().in_channels));
    RunReport report;
    eval_on_test(model, data, predict, TrainHooks{}, report);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!artifacts_dir.empty()) {
        std::filesystem::create_directories(artifacts_dir);
        write_scores_csv(artifacts_dir + "/scores.csv", report.test_rows);
        write_report_txt(artifacts_dir + "/report.txt", report);
    }
    return report;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(patience < max_epochs))
        throw DataError("TrainConfig: patience must be < max_epochs");
    if (!(min_delta > 0)) throw DataError("TrainConfig: min_delta must be > 0");
    if (batch_size < 1) throw DataError("TrainConfig: batch_size must be >= 1");
    if (learning_rate < 0) throw DataError("TrainConfig: learning_rate must be >= 0");
    if (clip_max_norm <= 0) throw DataError("TrainConfig: clip_max_norm must be > 0");
    if (beta < 0) throw DataError("TrainConfig: beta must be >= 0");
    model.validate();
}

WeightedBatchStream::WeightedBatchStream(std::vector<double> weights,
                                         int batch_size, uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
    if (weights.empty()) throw DataError("WeightedBatchStream: empty weights");
    if (batch_size < 1) throw DataError("WeightedBatchStream: batch_size must be >= 1");
    double acc = 0;
    for (double w : weights) {
        if (w < 0 || !std::isfinite(w))
            throw DataError("WeightedBatchStream: weights must be finite and >= 0");
        acc += w;
        cumulative_.push_back(acc);
    }
    if (!(acc > 0)) throw DataError("WeightedBatchStream: all weights are zero");
}

int WeightedBatchStream::draw() {
    const double u = rng_.uniform(0.0, cumulative_.back());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return int(it - cumulative_.begin());
}

std::vector<int> WeightedBatchStream::next_batch() {
    std::vector<int> out;
    out.reserve(batch_size_);
    for (int i = 0; i < batch_size_; ++i) out.push_back(draw());
    return out;
}

RunReport train_dart(DartModel& model, const Scenario& scenario,
                     const TrainConfig& config, const std::string& artifacts_dir,
                     const TrainHooks& hooks) {
    config.validate();
    Prepared data = prepare(scenario, config.split_threshold);
    if (data.c != model.config().in_channels)
        throw ShapeError("train_dart: scenario has " + std::to_string(data.c) +
                         " channels, model expects " +
                         std::to_string(model.config().in_channels));
    const CompositeWeights w{0.5, config.beta, 0.4};
    auto forward_loss = [&](DartModel& m, const Batch& b, bool train) {
        DartOutputs out = m.forward(b.input, train);
        auto terms = composite_dart_loss(out.continuity, out.extreme, out.final,
                                         b.bg, b.res, b.gt, b.gt_kelvin, w,
                                         config.regime);
        return LossValue{terms.total, terms.term_cont, terms.term_ext,
                         terms.term_final};
    };
    auto predict = [](DartModel& m, const Batch& b) {
        return m.forward(b.input, false).final;
    };
    return run_training(model, data, config, artifacts_dir, hooks, forward_loss,
                        predict);
}

RunReport train_unet(UnetModel& model, const Scenario& scenario,
                     const TrainConfig& config, const std::string& artifacts_dir,
                     const TrainHooks& hooks) {
    config.validate();
    Prepared data = prepare(scenario, config.split_threshold);
    if (data.c != model.config().in_channels)
        throw ShapeError("train_unet: scenario has " + std::to_string(data.c) +
                         " channels, model expects " +
                         std::to_string(model.config().in_channels));
    // single head: the regime selects plain or tiered MSE on the full target
    auto forward_loss = [&config](UnetModel& m, const Batch& b, bool train) {
        TensorT<float> out = m.forward(b.input, train);
        auto loss = config.regime == Regime::aggressive
                        ? tiered_weighted_mse(out, b.gt, b.gt_kelvin)
                        : mse(out, b.gt);
        return LossValue{loss, 0, 0, double(loss.item())};
    };
    auto predict = [](UnetModel& m, const Batch& b) { return m.forward(b.input, false); };
    return run_training(model, data, config, artifacts_dir, hooks, forward_loss,
                        predict);
}

RunReport evaluate_dart(DartModel& model, const Scenario& scenario,
                        float split_threshold, const std::string& artifacts_dir) {
    auto predict = [](DartModel& m, const Batch& b) {
        return m.forward(b.input, false).final;
    };
    return run_evaluation(model, scenario, split_threshold, artifacts_dir, predict);
}

RunReport evaluate_unet(UnetModel& model, const Scenario& scenario,
                        float split_threshold, const std::string& artifacts_dir) {
    auto predict = [](UnetModel& m, const Batch& b) { return m.forward(b.input, false); };
    return run_evaluation(model, scenario, split_threshold, artifacts_dir, predict);
}

std::vector<SweepRow> beta_sweep(const Scenario& scenario, const TrainConfig& base,
                                 const std::string& out_dir,
                                 const std::vector<double>& betas) {
    std::vector<SweepRow> rows;
    for (Regime regime : {Regime::conservative, Regime::aggressive}) {
        for (double beta : betas) {
            TrainConfig cfg = base;
            cfg.beta = beta;
            cfg.regime = regime;
            DartModel model(cfg.model);
            char tag[64];
            std::snprintf(tag, sizeof tag, "%s_beta_%.2f", regime_name(regime).c_str(),
                          beta);
            RunReport run =
                train_dart(model, scenario, cfg, out_dir + "/" + tag);
            SweepRow row;
            row.beta = beta;
            row.regime = regime;
            row.scores_220 = run.test_scores.at(220);
            row.bulk = run.test_bulk;
            rows.push_back(row);
        }
    }
    write_sweep_csv(out_dir + "/beta_sweep.csv", rows);
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_sweep_csv: cannot open " + path);
    f.precision(10);
    f << "beta,regime,csi_220,csi_degenerate,pod_220,far_220,bias_220,"
         "bias_degenerate,rmse,corr,ssim\n";
    for (const auto& r : rows)
        f << r.beta << ',' << regime_name(r.regime) << ',' << r.scores_220.csi << ','
          << (r.scores_220.csi_degenerate ? 1 : 0) << ',' << r.scores_220.pod << ','
          << r.scores_220.far << ',' << r.scores_220.bias << ','
          << (r.scores_220.bias_degenerate ? 1 : 0) << ',' << r.bulk.rmse << ','
          << r.bulk.pearson_corr << ',' << r.bulk.ssim << '\n';
}

std::vector<std::vector<std::string>> ablation_channel_sets() {
    // fixed 21-entry study: 5 singles, 6 pairs, 4 triplets, 5 leave-one-out,
    // and the full set; pairs/triplets are a documented curated list
    return {
        {"IVT"},
        {"T500"},
        {"T850"},
        {"RH700"},
        {"W500"},
        {"T500", "W500"},
        {"T500", "T850"},
        {"T500", "RH700"},
        {"T850", "W500"},
        {"RH700", "W500"},
        {"IVT", "T500"},
        {"T500", "T850", "W500"},
        {"T500", "RH700", "W500"},
        {"T500", "T850", "RH700"},
        {"IVT", "T500", "W500"},
        {"T500", "T850", "RH700", "W500"},   // no_IVT
        {"IVT", "T850", "RH700", "W500"},    // no_T500
        {"IVT", "T500", "RH700", "W500"},    // no_T850
        {"IVT", "T500", "T850", "W500"},     // no_RH700
        {"IVT", "T500", "T850", "RH700"},    // no_W500
        {"IVT", "T500", "T850", "RH700", "W500"},
    };
}

namespace {

std::string subset_name(const std::vector<std::string>& channels,
                        const std::vector<std::string>& all) {
    if (channels.size() == all.size()) return "full";
    if (channels.size() + 1 == all.size()) {
        for (const auto& c : all)
            if (std::find(channels.begin(), channels.end(), c) == channels.end())
                return "no_" + c;
    }
    static const char* kind[] = {"", "single", "pair", "triplet", "quad"};
    std::string name = kind[channels.size()];
    for (const auto& c : channels) name += "_" + c;
    return name;
}

}  // namespace

std::vector<AblationRow> ablation_run(const Scenario& scenario,
                                      const TrainConfig& base,
                                      const std::string& out_dir) {
    const auto all = canonical_channel_order(scenario.config.channels);
    const auto sets = ablation_channel_sets();

    auto run_subset = [&](const std::vector<std::string>& channels) {
        Scenario view = scenario;
        for (auto& s : view.samples)
            s.record.predictors = s.record.predictors.select(channels);
        TrainConfig cfg = base;
        cfg.model.in_channels = int(channels.size());
        DartModel model(cfg.model);
        const std::string name = subset_name(canonical_channel_order(channels), all);
        return std::pair<std::string, RunReport>(
            name, train_dart(model, view, cfg, out_dir + "/" + name));
    };

    // full model first: the leave-one-out reference
    auto [full_name, full_run] = run_subset(all);
    const double csi_full = full_run.test_scores.at(220).csi;

    std::vector<AblationRow> rows;
    for (const auto& raw : sets) {
        const auto channels = canonical_channel_order(raw);
        AblationRow row;
        row.channels = channels;
        row.name = subset_name(channels, all);
        const RunReport run = row.name == full_name
                                  ? full_run
                                  : run_subset(channels).second;
        row.csi_230 = run.test_scores.at(230).csi;
        row.csi_220 = run.test_scores.at(220).csi;
        row.csi_210 = run.test_scores.at(210).csi;
        row.csi_220_degenerate = run.test_scores.at(220).csi_degenerate;
        row.rmse = run.test_bulk.rmse;
        row.is_leave_one_out = channels.size() + 1 == all.size();
        if (row.is_leave_one_out) {
            if (csi_full > 0)
                row.pct_delta_csi_220 = (row.csi_220 - csi_full) / csi_full * 100.0;
            else
                row.pct_delta_degenerate = true;
        }
        rows.push_back(row);
    }
    write_ablation_csv(out_dir + "/ablation.csv", rows);
    return rows;
}

void write_ablation_csv(const std::string& path,
                        const std::vector<AblationRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_ablation_csv: cannot open " + path);
    f.precision(10);
    f << "name,channels,csi_230,csi_220,csi_210,rmse,csi_220_degenerate,"
         "pct_delta_csi_220,pct_delta_degenerate\n";
    for (const auto& r : rows) {
        f << r.name << ',';
        for (size_t i = 0; i < r.channels.size(); ++i)
            f << (i ? "|" : "") << r.channels[i];
        f << ',' << r.csi_230 << ',' << r.csi_220 << ',' << r.csi_210 << ','
          << r.rmse << ',' << (r.csi_220_degenerate ? 1 : 0) << ','
          << (r.is_leave_one_out && !r.pct_delta_degenerate
                  ? std::to_string(r.pct_delta_csi_220)
                  : "")
          << ',' << (r.pct_delta_degenerate ? 1 : 0) << '\n';
    }
}

}  // namespace dart
