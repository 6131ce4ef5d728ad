#include "dart/baselines.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dart/dtsr.hpp"
#include "dart/regrid.hpp"

namespace dart {

namespace {

// Cholesky solve of a small symmetric system. Returns false when the matrix
// is not numerically positive definite.
bool spd_solve(std::vector<double> a, std::vector<double> b, int n,
               std::vector<double>& x) {
    for (int k = 0; k < n; ++k) {
        double d = a[size_t(k) * n + k];
        for (int p = 0; p < k; ++p) d -= a[size_t(k) * n + p] * a[size_t(k) * n + p];
        if (!(d > 0) || !std::isfinite(d)) return false;
        const double lkk = std::sqrt(d);
        a[size_t(k) * n + k] = lkk;
        for (int i = k + 1; i < n; ++i) {
            double s = a[size_t(i) * n + k];
            for (int p = 0; p < k; ++p) s -= a[size_t(i) * n + p] * a[size_t(k) * n + p];
            a[size_t(i) * n + k] = s / lkk;
        }
    }
    // forward then backward substitution on the factor
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int p = 0; p < i; ++p) s -= a[size_t(i) * n + p] * b[p];
        b[i] = s / a[size_t(i) * n + i];
    }
    x.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int p = i + 1; p < n; ++p) s -= a[size_t(p) * n + i] * x[p];
        x[i] = s / a[size_t(i) * n + i];
    }
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

void MosModel::validate() const {
    if (height <= 0 || width <= 0)
        throw DataError("MosModel: empty coefficient grid");
    if (channel_names.empty())
        throw DataError("MosModel: no channels");
    if (coeffs.size() != size_t(height) * width * n_coef())
        throw DataError("MosModel: coefficient count does not match grid");
    if (stats.channel_names != channel_names)
        throw DataError("MosModel: normalization stats channel mismatch");
}

MosModel mos_fit(const std::vector<const SampleRecord*>& train_samples) {
    if (train_samples.empty()) throw DataError("mos_fit: no training samples");
    const auto& first = *train_samples.front();
    const int nch = int(first.predictors.channel_names.size());
    const int n = int(train_samples.size());
    if (n < nch + 2)
        throw DataError("mos_fit: need at least channels+2 samples, got " +
                        std::to_string(n));
    for (const auto* s : train_samples) {
        s->predictors.validate();
        if (s->predictors.channel_names != first.predictors.channel_names)
            throw DataError("mos_fit: inconsistent channel sets");
        if (!(s->target.geom == first.target.geom))
            throw ShapeError("mos_fit: inconsistent target geometry");
    }

    MosModel model;
    model.height = first.target.height();
    model.width = first.target.width();
    model.channel_names = first.predictors.channel_names;

    std::vector<const PredictorStack*> stacks;
    for (const auto* s : train_samples) stacks.push_back(&s->predictors);
    model.stats = compute_norm_stats_stacks(stacks);

    std::vector<PredictorStack> normed;
    normed.reserve(train_samples.size());
    for (const auto* s : train_samples)
        normed.push_back(apply_norm(s->predictors, model.stats));

    const int nc = nch + 1;  // intercept column last
    model.coeffs.assign(size_t(model.height) * model.width * nc, 0.0);

    std::vector<double> xtx(size_t(nc) * nc), xty(nc), row(nc), sol;
    for (int i = 0; i < model.height; ++i)
        for (int j = 0; j < model.width; ++j) {
            std::fill(xtx.begin(), xtx.end(), 0.0);
            std::fill(xty.begin(), xty.end(), 0.0);
            double ysum = 0;
            for (int s = 0; s < n; ++s) {
                for (int c = 0; c < nch; ++c) row[c] = normed[s].fields[c].at(i, j);
                row[nch] = 1.0;
                const double y = train_samples[s]->target.at(i, j);
                ysum += y;
                for (int a = 0; a < nc; ++a) {
                    for (int b = a; b < nc; ++b)
                        xtx[size_t(a) * nc + b] += row[a] * row[b];
                    xty[a] += row[a] * y;
                }
            }
            for (int a = 0; a < nc; ++a)
                for (int b = 0; b < a; ++b)
                    xtx[size_t(a) * nc + b] = xtx[size_t(b) * nc + a];

            bool ok = spd_solve(xtx, xty, nc, sol);
            if (!ok) {
                // ridge retry for rank-deficient pixels
                auto jittered = xtx;
                for (int a = 0; a < nc; ++a) jittered[size_t(a) * nc + a] += 1e-8;
                ok = spd_solve(jittered, xty, nc, sol);
            }
            if (!ok) {
                // intercept-only fall back: the pixel's climatological mean
                sol.assign(nc, 0.0);
                sol[nch] = ysum / n;
            }
            for (int k = 0; k < nc; ++k)
                model.coeffs[(size_t(i) * model.width + j) * nc + k] = sol[k];
        }
    return model;
}

Field2D mos_predict(const MosModel& model, const PredictorStack& predictors) {
    model.validate();
    predictors.validate();
    if (predictors.channel_names != model.channel_names)
        throw DataError("mos_predict: channel set does not match the model");
    if (predictors.fields.front().height() != model.height ||
        predictors.fields.front().width() != model.width)
        throw ShapeError("mos_predict: predictor grid does not match the model");

    const PredictorStack normed = apply_norm(predictors, model.stats);
    const int nch = int(model.channel_names.size());
    Field2D out(predictors.fields.front().geom, Units::kelvin);
    for (int i = 0; i < model.height; ++i)
        for (int j = 0; j < model.width; ++j) {
            double t = model.coef(i, j, nch);
            for (int c = 0; c < nch; ++c)
                t += model.coef(i, j, c) * normed.fields[c].at(i, j);
            out.at(i, j) = float(t);
        }
    return out;
}

void save_mos(const MosModel& model, const std::string& dir) {
    model.validate();
    std::filesystem::create_directories(dir);
    std::vector<float> vals(model.coeffs.begin(), model.coeffs.end());
    write_dtsr(dir + "/coeffs.dtsr", {model.height, model.width, model.n_coef()},
               vals);
    std::ofstream meta(dir + "/meta.txt", std::ios::trunc);
    if (!meta) throw DataError("save_mos: cannot open " + dir + "/meta.txt");
    meta.precision(17);
    for (size_t c = 0; c < model.channel_names.size(); ++c)
        meta << model.channel_names[c] << '\t' << model.stats.mean[c] << '\t'
             << model.stats.stddev[c] << '\n';
}

MosModel load_mos(const std::string& dir) {
    DtsrTensor t = read_dtsr(dir + "/coeffs.dtsr");
    if (t.dims.size() != 3)
        throw DataError("load_mos: coefficient tensor must be rank 3");
    MosModel model;
    model.height = t.dims[0];
    model.width = t.dims[1];
    model.coeffs.assign(t.values.begin(), t.values.end());

    std::ifstream meta(dir + "/meta.txt");
    if (!meta) throw DataError("load_mos: cannot open " + dir + "/meta.txt");
    std::string name;
    double mean, sd;
    while (meta >> name >> mean >> sd) {
        model.channel_names.push_back(name);
        model.stats.channel_names.push_back(name);
        model.stats.mean.push_back(mean);
        model.stats.stddev.push_back(sd);
    }
    if (t.dims[2] != model.n_coef())
        throw DataError("load_mos: coefficient depth does not match channels");
    model.validate();
    return model;
}

Field2D bicubic_baseline(const Field2D& target, int factor) {
    if (factor < 1) throw DataError("bicubic_baseline: factor must be >= 1");
    if (target.height() % factor != 0 || target.width() % factor != 0)
        throw ShapeError("bicubic_baseline: factor must divide field dims");
    const int ch = target.height() / factor, cw = target.width() / factor;
    if (ch < 4 || cw < 4)
        throw ShapeError("bicubic_baseline: downsampled grid below 4x4");

    GridGeometry coarse = target.geom;
    coarse.height = ch;
    coarse.width = cw;
    Field2D down(coarse, target.units);
    const double inv = 1.0 / (double(factor) * factor);
    for (int i = 0; i < ch; ++i)
        for (int j = 0; j < cw; ++j) {
            double acc = 0;
            for (int di = 0; di < factor; ++di)
                for (int dj = 0; dj < factor; ++dj)
                    acc += target.at(i * factor + di, j * factor + dj);
            down.at(i, j) = float(acc * inv);
        }
    Field2D up = regrid_bicubic(down, target.geom);
    up.units = target.units;
    return up;
}

}  // namespace dart
