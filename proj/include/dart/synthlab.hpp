#ifndef DART_SYNTHLAB_HPP
#define DART_SYNTHLAB_HPP

#include <map>
#include <string>
#include <vector>

#include "dart/decomposition.hpp"
#include "dart/field.hpp"

namespace dart {

// Synthetic scenario generator. The transfer function is fully known:
//   background  = warm field linear in T850 (plus smooth noise)
//   cold cores  = carved where the T500/W500 activation exceeds a threshold,
//                 depth modulated by RH700, floor-clipped at 150 K
//   IVT         = smooth distractor correlated with the T850 envelope but
//                 never entering the target (causality probe)
struct ScenarioConfig {
    uint64_t seed = 1;
    int n_samples = 240;
    int coarse_h = 8, coarse_w = 8;
    int fine_h = 64, fine_w = 64;
    std::vector<std::string> channels = {"IVT", "T500", "T850", "RH700", "W500"};
    double convection_rate = 2.0;   // scales activation strength
    double core_depth = 420.0;      // kelvin depth of the deepest cores
    double noise_sigma = 1.0;       // kelvin, fine-scale background noise
    double distractor_coupling = 0.7;  // IVT vs envelope mixing in [0,1]
    double activation_threshold = 36.0;  // cores form where activation exceeds

    void validate() const;
};

struct SyntheticSample {
    SampleRecord record;
    std::vector<uint8_t> core_mask;  // fine grid, 1 where a core was carved
};

enum class Split { train, val, test };
inline std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

struct Scenario {
    ScenarioConfig config;
    std::vector<SyntheticSample> samples;  // chronological order
    std::vector<Split> splits;             // 80/10/10 by index
    // linear-probe oracle: per-channel coefficient and intercept, empty for
    // the benchmark scenario
    std::vector<double> probe_coefficients;
    double probe_intercept = 0;

    std::vector<int> indices(Split s) const;
    std::vector<const Field2D*> targets() const;
};

Scenario generate_scenario(const ScenarioConfig& config);

// Target is a known linear map of the stored, train-split normalized
// channels, plus optional noise. Coefficients live in the scenario for
// exact least-squares recovery checks.
Scenario linear_probe_scenario(const ScenarioConfig& config,
                               const std::vector<double>& coefficients = {},
                               double intercept = 260.0);

std::vector<DistributionRow> stats_report(const Scenario& scenario);

// Emits manifest.csv + per-sample DTSR pairs + oracle.csv + mask files into
// dir, in the exact layout the trainer and CLI consume.
void write_scenario(const Scenario& scenario, const std::string& dir);
Scenario read_scenario(const std::string& dir);

}  // namespace dart

#endif
