#ifndef DART_BASELINES_HPP
#define DART_BASELINES_HPP

#include <string>
#include <vector>

#include "dart/field.hpp"

namespace dart {

// Per-pixel linear regression baseline: one independent ordinary-least-squares
// model per fine-grid pixel, fit on normalized predictor channels. Produces
// statistically excellent bulk reconstructions that miss rare cold extremes.
struct MosModel {
    int height = 0, width = 0;
    std::vector<std::string> channel_names;
    NormStats stats;             // training-split normalization basis
    std::vector<double> coeffs;  // height*width*(channels+1), intercept last

    int n_coef() const { return int(channel_names.size()) + 1; }
    double coef(int i, int j, int k) const {
        return coeffs[(size_t(i) * width + j) * n_coef() + k];
    }
    void validate() const;
};

// Ordinary least squares per pixel via normal equations; rank-deficient
// pixels get a 1e-8 ridge retry and finally an intercept-only (mean) fall
// back. Requires at least channels+2 samples.
MosModel mos_fit(const std::vector<const SampleRecord*>& train_samples);

Field2D mos_predict(const MosModel& model, const PredictorStack& predictors);

void save_mos(const MosModel& model, const std::string& dir);
MosModel load_mos(const std::string& dir);

// Information-destroying smoother: block-mean downsample by factor, then
// cubic upsample back to the original grid. Factor must divide both dims.
Field2D bicubic_baseline(const Field2D& target, int factor);

}  // namespace dart

#endif
