#include "dart/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dart/dtsr.hpp"

namespace dart {

std::string units_name(Units u) {
    switch (u) {
        case Units::kelvin: return "kelvin";
        case Units::kg_m1_s1: return "kg_m1_s1";
        case Units::percent: return "percent";
        case Units::pa_s: return "pa_s";
        case Units::dimensionless: return "dimensionless";
    }
    return "dimensionless";
}

Units units_from_name(const std::string& s) {
    if (s == "kelvin") return Units::kelvin;
    if (s == "kg_m1_s1") return Units::kg_m1_s1;
    if (s == "percent") return Units::percent;
    if (s == "pa_s") return Units::pa_s;
    if (s == "dimensionless") return Units::dimensionless;
    throw DataError("unknown units: " + s);
}

bool GridGeometry::operator==(const GridGeometry& o) const {
    auto close = [](double a, double b) { return std::abs(a - b) < 1e-9; };
    return height == o.height && width == o.width && close(lat_min, o.lat_min) &&
           close(lat_max, o.lat_max) && close(lon_min, o.lon_min) &&
           close(lon_max, o.lon_max);
}

void GridGeometry::validate() const {
    if (height <= 0 || width <= 0)
        throw ShapeError("grid dimensions must be positive");
    if (!(lat_min < lat_max) || !(lon_min < lon_max))
        throw ShapeError("grid bounds must satisfy lat_min<lat_max, lon_min<lon_max");
}

Field2D::Field2D(GridGeometry g, Units u, float fill) : geom(g), units(u) {
    geom.validate();
    values.assign(size_t(g.height) * g.width, fill);
}

float Field2D::min_value() const {
    return *std::min_element(values.begin(), values.end());
}
float Field2D::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

void Field2D::check_kelvin_band() const {
    if (units != Units::kelvin) return;
    for (float v : values)
        if (v < 150.0f || v > 350.0f)
            throw DataError("kelvin field value " + std::to_string(v) +
                            " outside plausibility band [150,350]");
}

const std::vector<std::string> kAllChannels = {"IVT", "T500", "T850", "RH700",
                                               "W500"};

bool is_valid_channel(const std::string& name) {
    return std::find(kAllChannels.begin(), kAllChannels.end(), name) !=
           kAllChannels.end();
}

std::vector<std::string> canonical_channel_order(std::vector<std::string> names) {
    std::vector<std::string> out;
    for (const auto& c : kAllChannels) {
        auto it = std::find(names.begin(), names.end(), c);
        if (it != names.end()) {
            out.push_back(c);
            names.erase(it);
        }
    }
    if (!names.empty()) throw DataError("unknown predictor channel: " + names[0]);
    return out;
}

void PredictorStack::validate() const {
    if (channel_names.size() != fields.size())
        throw ShapeError("predictor stack: name/field count mismatch");
    auto canon = canonical_channel_order(channel_names);
    if (canon != channel_names)
        throw DataError("predictor channels not in canonical order");
    for (size_t i = 1; i < fields.size(); ++i)
        if (!(fields[i].geom == fields[0].geom))
            throw ShapeError("predictor stack: channel grids differ");
}

const Field2D& PredictorStack::channel(const std::string& name) const {
    for (size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == name) return fields[i];
    throw DataError("channel not present: " + name);
}

PredictorStack PredictorStack::select(const std::vector<std::string>& names) const {
    PredictorStack out;
    out.channel_names = canonical_channel_order(names);
    for (const auto& n : out.channel_names) out.fields.push_back(channel(n));
    return out;
}

Field2D ivt_magnitude(const Field2D& viwve, const Field2D& viwvn) {
    if (!(viwve.geom == viwvn.geom))
        throw ShapeError("ivt_magnitude: component grids differ");
    Field2D out(viwve.geom, Units::kg_m1_s1);
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = std::sqrt(viwve.values[i] * viwve.values[i] +
                                  viwvn.values[i] * viwvn.values[i]);
    return out;
}

NormStats compute_norm_stats_stacks(
    const std::vector<const PredictorStack*>& stacks) {
    if (stacks.empty()) throw DataError("compute_norm_stats: empty training set");
    NormStats st;
    st.channel_names = stacks[0]->channel_names;
    const size_t nch = st.channel_names.size();
    for (size_t c = 0; c < nch; ++c) {
        double sum = 0.0, n = 0.0;
        for (const auto* s : stacks) {
            const auto& f = s->fields[c];
            for (float v : f.values) sum += v;
            n += double(f.values.size());
        }
        const double mean = sum / n;
        double var = 0.0;
        for (const auto* s : stacks)
            for (float v : s->fields[c].values) var += (v - mean) * (v - mean);
        var /= n;  // population convention
        if (var <= 0.0)
            throw DataError("compute_norm_stats: zero-variance channel " +
                            st.channel_names[c]);
        st.mean.push_back(mean);
        st.stddev.push_back(std::sqrt(var));
    }
    return st;
}

NormStats compute_norm_stats(const std::vector<SampleRecord>& train_samples) {
    std::vector<const PredictorStack*> stacks;
    stacks.reserve(train_samples.size());
    for (const auto& s : train_samples) stacks.push_back(&s.predictors);
    return compute_norm_stats_stacks(stacks);
}

PredictorStack apply_norm(const PredictorStack& stack, const NormStats& stats) {
    if (stack.channel_names != stats.channel_names)
        throw DataError("apply_norm: channel mismatch");
    PredictorStack out = stack;
    for (size_t c = 0; c < out.fields.size(); ++c) {
        const float m = float(stats.mean[c]), s = float(stats.stddev[c]);
        for (float& v : out.fields[c].values) v = (v - m) / s;
        out.fields[c].units = Units::dimensionless;
    }
    return out;
}

PredictorStack invert_norm(const PredictorStack& stack, const NormStats& stats) {
    if (stack.channel_names != stats.channel_names)
        throw DataError("invert_norm: channel mismatch");
    PredictorStack out = stack;
    for (size_t c = 0; c < out.fields.size(); ++c) {
        const float m = float(stats.mean[c]), s = float(stats.stddev[c]);
        for (float& v : out.fields[c].values) v = v * s + m;
    }
    return out;
}

void write_sample(const SampleRecord& s, const std::string& predictor_path,
                  const std::string& target_path) {
    s.predictors.validate();
    if (!s.predictors.fields.empty() &&
        !(s.target.geom == s.predictors.fields[0].geom))
        throw ShapeError("write_sample: predictor/target geometry mismatch");
    const int c = int(s.predictors.fields.size());
    const int h = s.target.height(), w = s.target.width();
    std::vector<float> flat;
    flat.reserve(size_t(c) * h * w);
    for (const auto& f : s.predictors.fields)
        flat.insert(flat.end(), f.values.begin(), f.values.end());
    write_dtsr(predictor_path, {c, h, w}, flat);
    write_dtsr(target_path, {h, w}, s.target.values);
}

SampleRecord read_sample(const std::string& id, const std::string& timestamp,
                         const std::string& predictor_path,
                         const std::string& target_path,
                         const std::vector<std::string>& channel_names,
                         const GridGeometry& geom) {
    SampleRecord s;
    s.id = id;
    s.timestamp = timestamp;
    DtsrTensor pred = read_dtsr(predictor_path);
    if (pred.dims.size() != 3 || pred.dims[0] != int(channel_names.size()) ||
        pred.dims[1] != geom.height || pred.dims[2] != geom.width)
        throw DataError("read_sample: predictor tensor shape mismatch in " +
                        predictor_path);
    s.predictors.channel_names = channel_names;
    const size_t hw = size_t(geom.height) * geom.width;
    for (size_t c = 0; c < channel_names.size(); ++c) {
        Field2D f(geom, Units::dimensionless);
        std::copy_n(pred.values.begin() + c * hw, hw, f.values.begin());
        s.predictors.fields.push_back(std::move(f));
    }
    DtsrTensor tgt = read_dtsr(target_path);
    if (tgt.dims.size() != 2 || tgt.dims[0] != geom.height ||
        tgt.dims[1] != geom.width)
        throw DataError("read_sample: target tensor shape mismatch in " +
                        target_path);
    s.target = Field2D(geom, Units::kelvin);
    s.target.values = std::move(tgt.values);
    return s;
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_manifest: cannot open " + path);
    f << "id,timestamp,predictor_path,target_path,split\n";
    for (const auto& r : rows) {
        if (r.split != "train" && r.split != "val" && r.split != "test")
            throw DataError("write_manifest: unknown split label '" + r.split + "'");
        f << r.id << ',' << r.timestamp << ',' << r.predictor_path << ','
          << r.target_path << ',' << r.split << '\n';
    }
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("read_manifest: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) ||
        line != "id,timestamp,predictor_path,target_path,split")
        throw DataError("read_manifest: bad header in " + path);
    std::vector<ManifestRow> rows;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        ManifestRow r;
        std::string extra;
        if (!std::getline(ss, r.id, ',') || !std::getline(ss, r.timestamp, ',') ||
            !std::getline(ss, r.predictor_path, ',') ||
            !std::getline(ss, r.target_path, ',') || !std::getline(ss, r.split))
            throw DataError("read_manifest: malformed row at line " +
                            std::to_string(lineno));
        if (r.split != "train" && r.split != "val" && r.split != "test")
            throw DataError("read_manifest: unknown split '" + r.split +
                            "' at line " + std::to_string(lineno));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace dart
