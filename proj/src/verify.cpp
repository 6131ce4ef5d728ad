#include "dart/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dart {

namespace {

void check_match(const Field2D& pred, const Field2D& obs, const char* who) {
    if (pred.height() != obs.height() || pred.width() != obs.width())
        throw ShapeError(std::string(who) + ": field dims differ (" +
                         std::to_string(pred.height()) + "x" +
                         std::to_string(pred.width()) + " vs " +
                         std::to_string(obs.height()) + "x" +
                         std::to_string(obs.width()) + ")");
}

double safe_ratio(double num, double den, bool& degenerate) {
    if (den == 0.0) {
        degenerate = true;
        return 0.0;
    }
    return num / den;
}

}  // namespace

ContingencyTable contingency(const Field2D& pred, const Field2D& obs,
                             float threshold) {
    check_match(pred, obs, "contingency");
    ContingencyTable t;
    for (size_t i = 0; i < obs.values.size(); ++i) {
        const bool p = pred.values[i] <= threshold;
        const bool o = obs.values[i] <= threshold;
        if (p && o)
            ++t.hits;
        else if (!p && o)
            ++t.misses;
        else if (p && !o)
            ++t.false_alarms;
        else
            ++t.correct_negatives;
    }
    return t;
}

ScoreSet categorical_scores(const ContingencyTable& t) {
    const double a = double(t.hits), b = double(t.false_alarms),
                 c = double(t.misses), d = double(t.correct_negatives);
    ScoreSet s;
    s.csi = safe_ratio(a, a + b + c, s.csi_degenerate);
    s.pod = safe_ratio(a, a + c, s.pod_degenerate);
    s.far = safe_ratio(b, a + b, s.far_degenerate);
    s.bias = safe_ratio(a + b, a + c, s.bias_degenerate);
    s.hss = safe_ratio(2.0 * (a * d - b * c),
                       (a + c) * (c + d) + (a + b) * (b + d), s.hss_degenerate);
    return s;
}

BulkScores bulk_scores(const Field2D& pred, const Field2D& obs,
                       double ssim_dynamic_range) {
    check_match(pred, obs, "bulk_scores");
    const size_t n = obs.values.size();
    if (n < 2) throw ShapeError("bulk_scores: need at least 2 pixels");
    BulkScores b;
    double se = 0, mp = 0, mo = 0;
    for (size_t i = 0; i < n; ++i) {
        const double d = double(pred.values[i]) - obs.values[i];
        se += d * d;
        mp += pred.values[i];
        mo += obs.values[i];
    }
    b.rmse = std::sqrt(se / double(n));
    mp /= double(n);
    mo /= double(n);
    double spp = 0, soo = 0, spo = 0;
    for (size_t i = 0; i < n; ++i) {
        const double dp = pred.values[i] - mp, dob = obs.values[i] - mo;
        spp += dp * dp;
        soo += dob * dob;
        spo += dp * dob;
    }
    if (soo == 0.0 || spp == 0.0) {
        b.corr_degenerate = true;
        b.pearson_corr = 0.0;
    } else {
        b.pearson_corr = spo / std::sqrt(spp * soo);
    }
    if (soo == 0.0) {
        b.r2_degenerate = true;
        b.r2 = 0.0;
    } else {
        b.r2 = 1.0 - se / soo;
    }

    // Local-window SSIM when the field fits an 11x11 window; global-statistics
    // SSIM otherwise (small fields appear only in unit tests).
    const int win = 11;
    if (pred.height() >= win && pred.width() >= win) {
        const double c1 = std::pow(0.01 * ssim_dynamic_range, 2);
        const double c2 = std::pow(0.03 * ssim_dynamic_range, 2);
        const int oh = pred.height() - win + 1, ow = pred.width() - win + 1;
        const double inv = 1.0 / double(win * win);
        double acc = 0;
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
                for (int u = 0; u < win; ++u)
                    for (int v = 0; v < win; ++v) {
                        const double x = pred.at(i + u, j + v);
                        const double y = obs.at(i + u, j + v);
                        sx += x;
                        sy += y;
                        sxx += x * x;
                        syy += y * y;
                        sxy += x * y;
                    }
                const double mx = sx * inv, my = sy * inv;
                const double vx = sxx * inv - mx * mx;
                const double vy = syy * inv - my * my;
                const double cxy = sxy * inv - mx * my;
                acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        b.ssim = acc / double(oh * ow);
    } else {
        const double c1 = std::pow(0.01 * ssim_dynamic_range, 2);
        const double c2 = std::pow(0.03 * ssim_dynamic_range, 2);
        const double vx = spp / double(n), vy = soo / double(n),
                     cxy = spo / double(n);
        b.ssim = ((2 * mp * mo + c1) * (2 * cxy + c2)) /
                 ((mp * mp + mo * mo + c1) * (vx + vy + c2));
    }
    return b;
}

RocCurve roc_auc(const Field2D& pred, const Field2D& obs, float event_threshold,
                 float sweep_lo, float sweep_hi, float sweep_step) {
    check_match(pred, obs, "roc_auc");
    RocCurve roc;
    long pos = 0;
    const long n = long(obs.values.size());
    for (float v : obs.values)
        if (v <= event_threshold) ++pos;
    const long neg = n - pos;
    if (pos == 0 || neg == 0) roc.degenerate = true;

    for (float t = sweep_lo; t <= sweep_hi + 1e-6f; t += sweep_step) {
        long tp = 0, fp = 0;
        for (size_t i = 0; i < obs.values.size(); ++i) {
            const bool p = pred.values[i] <= t;
            const bool o = obs.values[i] <= event_threshold;
            if (p && o) ++tp;
            if (p && !o) ++fp;
        }
        roc.thresholds.push_back(t);
        roc.tpr.push_back(pos ? double(tp) / double(pos) : 0.0);
        roc.fpr.push_back(neg ? double(fp) / double(neg) : 0.0);
    }

    // trapezoid over FPR with (0,0) and (1,1) endpoints
    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(0.0, 0.0);
    for (size_t i = 0; i < roc.fpr.size(); ++i)
        pts.emplace_back(roc.fpr[i], roc.tpr[i]);
    pts.emplace_back(1.0, 1.0);
    std::sort(pts.begin(), pts.end());
    double auc = 0;
    for (size_t i = 1; i < pts.size(); ++i)
        auc += 0.5 * (pts[i].first - pts[i - 1].first) *
               (pts[i].second + pts[i - 1].second);
    roc.auc = auc;
    return roc;
}

double coverage_pct(const Field2D& field, float threshold) {
    long count = 0;
    for (float v : field.values)
        if (v <= threshold) ++count;
    return 100.0 * double(count) / double(field.values.size());
}

std::vector<int> filter_significant(const std::vector<const Field2D*>& targets,
                                    double min_coverage_pct, float threshold) {
    std::vector<int> keep;
    for (size_t i = 0; i < targets.size(); ++i) {
        const Field2D& f = *targets[i];
        long count = 0;
        for (float v : f.values)
            if (v <= threshold) ++count;
        // compare whole pixels: the required count is floored so a sample
        // within one pixel of the cutoff (e.g. 655 of 65536 at 1%) stays in
        const long needed = std::max<long>(
            1, long(std::floor(min_coverage_pct / 100.0 * double(f.values.size()))));
        if (count >= needed) keep.push_back(int(i));
    }
    return keep;
}

VerificationMap verification_map(const Field2D& pred, const Field2D& obs,
                                 float threshold) {
    check_match(pred, obs, "verification_map");
    VerificationMap m;
    m.height = obs.height();
    m.width = obs.width();
    m.categories.resize(obs.values.size());
    for (size_t i = 0; i < obs.values.size(); ++i) {
        const bool p = pred.values[i] <= threshold;
        const bool o = obs.values[i] <= threshold;
        PixelCategory cat;
        if (p && o) {
            cat = PixelCategory::hit;
            ++m.table.hits;
        } else if (!p && o) {
            cat = PixelCategory::miss;
            ++m.table.misses;
        } else if (p && !o) {
            cat = PixelCategory::false_alarm;
            ++m.table.false_alarms;
        } else {
            cat = PixelCategory::correct_negative;
            ++m.table.correct_negatives;
        }
        m.categories[i] = cat;
    }
    return m;
}

void write_verification_pgm(const VerificationMap& map, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_verification_pgm: cannot open " + path);
    f << "P2\n" << map.width << ' ' << map.height << "\n3\n";
    for (int i = 0; i < map.height; ++i) {
        for (int j = 0; j < map.width; ++j)
            f << int(map.categories[size_t(i) * map.width + j]) << (j + 1 < map.width ? ' ' : '\n');
    }
    std::ofstream legend(path + ".legend.txt", std::ios::trunc);
    legend << "0 hit\n1 miss\n2 false_alarm\n3 correct_negative\n";
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_scores_csv: cannot open " + path);
    f << "sample_id,threshold_k,csi,hss,pod,far,bias,rmse,corr,ssim,r2,"
         "coverage_pct,csi_degenerate,bias_degenerate,corr_degenerate\n";
    f.precision(10);
    for (const auto& r : rows)
        f << r.sample_id << ',' << r.threshold << ',' << r.cat.csi << ','
          << r.cat.hss << ',' << r.cat.pod << ',' << r.cat.far << ','
          << r.cat.bias << ',' << r.bulk.rmse << ',' << r.bulk.pearson_corr
          << ',' << r.bulk.ssim << ',' << r.bulk.r2 << ',' << r.coverage_pct
          << ',' << int(r.cat.csi_degenerate) << ',' << int(r.cat.bias_degenerate)
          << ',' << int(r.bulk.corr_degenerate) << '\n';
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("read_scores_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line))
        throw DataError("read_scores_csv: empty file " + path);
    std::vector<ScoreRow> rows;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 15)
            throw DataError("read_scores_csv: malformed row at line " +
                            std::to_string(lineno));
        ScoreRow r;
        r.sample_id = cols[0];
        r.threshold = std::stof(cols[1]);
        r.cat.csi = std::stod(cols[2]);
        r.cat.hss = std::stod(cols[3]);
        r.cat.pod = std::stod(cols[4]);
        r.cat.far = std::stod(cols[5]);
        r.cat.bias = std::stod(cols[6]);
        r.bulk.rmse = std::stod(cols[7]);
        r.bulk.pearson_corr = std::stod(cols[8]);
        r.bulk.ssim = std::stod(cols[9]);
        r.bulk.r2 = std::stod(cols[10]);
        r.coverage_pct = std::stod(cols[11]);
        r.cat.csi_degenerate = cols[12] == "1";
        r.cat.bias_degenerate = cols[13] == "1";
        r.bulk.corr_degenerate = cols[14] == "1";
        rows.push_back(r);
    }
    return rows;
}

}  // namespace dart
