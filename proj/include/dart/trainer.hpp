#ifndef DART_TRAINER_HPP
#define DART_TRAINER_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dart/losses.hpp"
#include "dart/net.hpp"
#include "dart/synthlab.hpp"
#include "dart/verify.hpp"

namespace dart {

enum class Sampling { uniform, weighted };
inline std::string sampling_name(Sampling s) {
    return s == Sampling::uniform ? "uniform" : "weighted";
}
inline Sampling sampling_from_name(const std::string& s) {
    if (s == "uniform") return Sampling::uniform;
    if (s == "weighted") return Sampling::weighted;
    throw DataError("unknown sampling mode: " + s);
}

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 4;  // operational reference value is 8
    int max_epochs = 50;
    int patience = 10;
    double min_delta = 1e-4;
    double clip_max_norm = 1.0;
    double beta = 1.5;  // extreme-head loss weight
    Regime regime = Regime::aggressive;
    Sampling sampling = Sampling::weighted;
    uint64_t seed = 1;
    float split_threshold = 225.0f;  // background/residual decomposition
    DartConfig model;

    void validate() const;
};

// Deterministic with-replacement sampler, probability proportional to weight.
class WeightedBatchStream {
public:
    WeightedBatchStream(std::vector<double> weights, int batch_size, uint64_t seed);
    int draw();
    std::vector<int> next_batch();

private:
    std::vector<double> cumulative_;
    int batch_size_;
    Rng rng_;
};

// Stop after `patience` epochs without a val improvement of at least
// min_delta. update() returns true when training should stop.
struct EarlyStopper {
    int patience;
    double min_delta;
    double best_loss = 1e300;
    int best_epoch = 0;  // 1-based
    int stale_epochs = 0;

    bool update(int epoch, double val_loss) {
        if (val_loss < best_loss - min_delta) {
            best_loss = val_loss;
            best_epoch = epoch;
            stale_epochs = 0;
            return false;
        }
        return ++stale_epochs >= patience;
    }
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0, val_loss = 0;
    double term_cont = 0, term_ext = 0, term_final = 0;
    bool improved = false;
};

struct RunReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    bool stopped_early = false;
    std::map<int, ScoreSet> test_scores;  // pooled, keyed by kelvin threshold
    BulkScores test_bulk;                 // averaged over test samples
    std::vector<ScoreRow> test_rows;      // one row per (sample, threshold)
    double wall_seconds = 0;
};

// Optional observation hooks; on_sample_access fires for every read of a
// sample's tensors with the split it belongs to (leakage auditing).
struct TrainHooks {
    std::function<void(Split, int)> on_sample_access;
    std::function<void(const EpochRecord&)> on_epoch_end;
};

// Loop: forward -> composite loss -> backward -> clip -> adamw step, one
// validation pass per epoch, best-val checkpoint restored before the test
// evaluation. artifacts_dir receives config.txt/epochs.csv/scores.csv/
// checkpoint/report.txt.
RunReport train_dart(DartModel& model, const Scenario& scenario,
                     const TrainConfig& config, const std::string& artifacts_dir,
                     const TrainHooks& hooks = {});

// Single-decoder baseline trained on plain MSE against the full target.
RunReport train_unet(UnetModel& model, const Scenario& scenario,
                     const TrainConfig& config, const std::string& artifacts_dir,
                     const TrainHooks& hooks = {});

// Test-split evaluation of an already-trained model; fills only the test
// fields of the report. artifacts_dir (optional) receives scores.csv and
// report.txt.
RunReport evaluate_dart(DartModel& model, const Scenario& scenario,
                        float split_threshold = 225.0f,
                        const std::string& artifacts_dir = "");
RunReport evaluate_unet(UnetModel& model, const Scenario& scenario,
                        float split_threshold = 225.0f,
                        const std::string& artifacts_dir = "");

struct SweepRow {
    double beta = 0;
    Regime regime = Regime::conservative;
    ScoreSet scores_220;
    BulkScores bulk;
};

// One train+eval per (beta, regime) cell with a shared seed; 8 rows.
std::vector<SweepRow> beta_sweep(const Scenario& scenario, const TrainConfig& base,
                                 const std::string& out_dir,
                                 const std::vector<double>& betas = {1.0, 1.2, 1.5,
                                                                     2.0});
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

struct AblationRow {
    std::string name;                   // e.g. "pair_T500_W500", "no_IVT", "full"
    std::vector<std::string> channels;  // canonical order
    double csi_230 = 0, csi_220 = 0, csi_210 = 0, rmse = 0;
    bool csi_220_degenerate = false;
    // leave-one-out rows only: (CSI_without - CSI_full)/CSI_full * 100
    double pct_delta_csi_220 = 0;
    bool pct_delta_degenerate = false;
    bool is_leave_one_out = false;
};

// The fixed 21-combination study: 5 singles, 6 curated pairs, 4 curated
// triplets, 5 leave-one-out, full set.
std::vector<std::vector<std::string>> ablation_channel_sets();
std::vector<AblationRow> ablation_run(const Scenario& scenario,
                                      const TrainConfig& base,
                                      const std::string& out_dir);
void write_ablation_csv(const std::string& path,
                        const std::vector<AblationRow>& rows);

}  // namespace dart

#endif
