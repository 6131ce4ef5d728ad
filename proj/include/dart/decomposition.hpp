#ifndef DART_DECOMPOSITION_HPP
#define DART_DECOMPOSITION_HPP

#include <string>
#include <vector>

#include "dart/field.hpp"

namespace dart {

// Background/residual split of a brightness-temperature field.
// t_bg = max(t_gt, split), t_res = t_gt - t_bg, so t_bg + t_res reconstructs
// the ground truth bitwise and t_res <= 0 everywhere.
struct DecomposedTarget {
    Field2D t_bg;
    Field2D t_res;
    float split_threshold = 225.0f;
};

DecomposedTarget decompose(const Field2D& t_gt, float split = 225.0f);
Field2D recombine(const DecomposedTarget& d);

// Fraction of pixels at or below the threshold (<= convention throughout).
double eventfulness(const Field2D& t_gt, float threshold = 220.0f);

// Oversampling weight: eventfulness plus the 0.1 floor.
double sampler_weight(double eventfulness_fraction);

struct EventStats {
    double pct_le_230 = 0, pct_le_220 = 0, pct_le_210 = 0;
    double sampler_weight = 0.1;
};
EventStats event_stats(const Field2D& t_gt);

// Per-threshold dataset distribution summary (Tables 1/2 layout).
struct DistributionRow {
    float threshold;
    double mean_pct, std_pct, median_pct;
    int zero_pixel_samples;
    int below_1pct_samples;
    int total_samples;
};
std::vector<DistributionRow> dataset_distribution_report(
    const std::vector<const Field2D*>& targets,
    const std::vector<float>& thresholds = {230.0f, 220.0f, 210.0f});

void write_distribution_csv(const std::string& path,
                            const std::vector<DistributionRow>& rows);

}  // namespace dart

#endif
