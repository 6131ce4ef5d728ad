#include "dart/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dart {

DecomposedTarget decompose(const Field2D& t_gt, float split) {
    DecomposedTarget d;
    d.split_threshold = split;
    d.t_bg = t_gt;
    d.t_res = Field2D(t_gt.geom, Units::kelvin);
    for (size_t i = 0; i < t_gt.values.size(); ++i) {
        const float v = t_gt.values[i];
        const float bg = v > split ? v : split;
        d.t_bg.values[i] = bg;
        d.t_res.values[i] = v - bg;
    }
    return d;
}

Field2D recombine(const DecomposedTarget& d) {
    if (!(d.t_bg.geom == d.t_res.geom))
        throw ShapeError("recombine: component grids differ");
    Field2D out(d.t_bg.geom, Units::kelvin);
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = d.t_bg.values[i] + d.t_res.values[i];
    return out;
}

double eventfulness(const Field2D& t_gt, float threshold) {
    size_t count = 0;
    for (float v : t_gt.values)
        if (v <= threshold) ++count;
    return double(count) / double(t_gt.values.size());
}

double sampler_weight(double eventfulness_fraction) {
    return eventfulness_fraction + 0.1;
}

EventStats event_stats(const Field2D& t_gt) {
    EventStats s;
    s.pct_le_230 = eventfulness(t_gt, 230.0f);
    s.pct_le_220 = eventfulness(t_gt, 220.0f);
    s.pct_le_210 = eventfulness(t_gt, 210.0f);
    s.sampler_weight = sampler_weight(s.pct_le_220);
    return s;
}

std::vector<DistributionRow> dataset_distribution_report(
    const std::vector<const Field2D*>& targets,
    const std::vector<float>& thresholds) {
    if (targets.empty())
        throw DataError("dataset_distribution_report: empty dataset");
    std::vector<DistributionRow> rows;
    for (float t : thresholds) {
        std::vector<double> pcts;
        pcts.reserve(targets.size());
        DistributionRow r{};
        r.threshold = t;
        r.total_samples = int(targets.size());
        for (const Field2D* f : targets) {
            const double p = eventfulness(*f, t);
            pcts.push_back(p);
            if (p == 0.0) ++r.zero_pixel_samples;
            if (p < 0.01) ++r.below_1pct_samples;
        }
        double sum = 0;
        for (double p : pcts) sum += p;
        r.mean_pct = sum / pcts.size();
        double var = 0;
        for (double p : pcts) var += (p - r.mean_pct) * (p - r.mean_pct);
        r.std_pct = std::sqrt(var / pcts.size());
        std::vector<double> sorted = pcts;
        std::sort(sorted.begin(), sorted.end());
        const size_t n = sorted.size();
        r.median_pct = n % 2 ? sorted[n / 2]
                             : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        rows.push_back(r);
    }
    return rows;
}

void write_distribution_csv(const std::string& path,
                            const std::vector<DistributionRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_distribution_csv: cannot open " + path);
    f << "threshold_k,mean_pct,std_pct,median_pct,zero_pixel_samples,"
         "below_1pct_samples,total_samples\n";
    for (const auto& r : rows)
        f << r.threshold << ',' << r.mean_pct * 100.0 << ',' << r.std_pct * 100.0
          << ',' << r.median_pct * 100.0 << ',' << r.zero_pixel_samples << ','
          << r.below_1pct_samples << ',' << r.total_samples << '\n';
}

}  // namespace dart
