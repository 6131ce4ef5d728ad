#ifndef DART_VERIFY_HPP
#define DART_VERIFY_HPP

#include <string>
#include <vector>

#include "dart/field.hpp"

namespace dart {

// Event convention everywhere: a pixel is an event when value <= threshold.
struct ContingencyTable {
    long hits = 0, misses = 0, false_alarms = 0, correct_negatives = 0;
    long total() const { return hits + misses + false_alarms + correct_negatives; }
    ContingencyTable& operator+=(const ContingencyTable& o) {
        hits += o.hits;
        misses += o.misses;
        false_alarms += o.false_alarms;
        correct_negatives += o.correct_negatives;
        return *this;
    }
};

// Categorical scores. Ratios with zero denominators come back 0 with the
// corresponding degenerate flag set, so all-warm samples cannot inflate means.
struct ScoreSet {
    double csi = 0, hss = 0, pod = 0, far = 0, bias = 0;
    bool csi_degenerate = false, hss_degenerate = false, pod_degenerate = false,
         far_degenerate = false, bias_degenerate = false;
};

ContingencyTable contingency(const Field2D& pred, const Field2D& obs,
                             float threshold);
ScoreSet categorical_scores(const ContingencyTable& t);

struct BulkScores {
    double rmse = 0, pearson_corr = 0, ssim = 0, r2 = 0;
    bool corr_degenerate = false, r2_degenerate = false;
};
BulkScores bulk_scores(const Field2D& pred, const Field2D& obs,
                       double ssim_dynamic_range = 200.0);

struct RocCurve {
    std::vector<double> fpr, tpr;  // ordered by sweep threshold
    std::vector<float> thresholds;
    double auc = 0;
    bool degenerate = false;  // truth all-positive or all-negative
};
RocCurve roc_auc(const Field2D& pred, const Field2D& obs,
                 float event_threshold = 220.0f, float sweep_lo = 180.0f,
                 float sweep_hi = 280.0f, float sweep_step = 1.0f);

// Coverage as a percentage in [0, 100].
double coverage_pct(const Field2D& field, float threshold = 220.0f);
std::vector<int> filter_significant(const std::vector<const Field2D*>& targets,
                                    double min_coverage_pct = 1.0,
                                    float threshold = 220.0f);

enum class PixelCategory : uint8_t { hit = 0, miss = 1, false_alarm = 2,
                                     correct_negative = 3 };
struct VerificationMap {
    int height = 0, width = 0;
    std::vector<PixelCategory> categories;
    ContingencyTable table;
};
VerificationMap verification_map(const Field2D& pred, const Field2D& obs,
                                 float threshold);
// PGM (P2) with codes 0..3 plus a side-car legend text file.
void write_verification_pgm(const VerificationMap& map, const std::string& path);

// One row per (sample, threshold) with categorical + bulk scores.
struct ScoreRow {
    std::string sample_id;
    float threshold = 0;
    ScoreSet cat;
    BulkScores bulk;
    double coverage_pct = 0;
};
void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(const std::string& path);

}  // namespace dart

#endif
