#ifndef DART_FIELD_HPP
#define DART_FIELD_HPP

#include <string>
#include <vector>

#include "dart/common.hpp"

namespace dart {

enum class Units { kelvin, kg_m1_s1, percent, pa_s, dimensionless };

std::string units_name(Units u);
Units units_from_name(const std::string& s);

struct GridGeometry {
    int height = 0, width = 0;
    double lat_min = 0, lat_max = 1, lon_min = 0, lon_max = 1;

    bool operator==(const GridGeometry& o) const;
    // cell-center coordinates, row i / column j
    double lat_of_row(int i) const {
        return lat_min + (i + 0.5) * (lat_max - lat_min) / height;
    }
    double lon_of_col(int j) const {
        return lon_min + (j + 0.5) * (lon_max - lon_min) / width;
    }
    void validate() const;
};

// Rectangular scalar grid with geographic bounds. Row 0 is lat_min edge.
struct Field2D {
    GridGeometry geom;
    Units units = Units::dimensionless;
    std::vector<float> values;  // row-major, height*width

    Field2D() = default;
    Field2D(GridGeometry g, Units u, float fill = 0.0f);

    int height() const { return geom.height; }
    int width() const { return geom.width; }
    float& at(int i, int j) { return values[size_t(i) * geom.width + j]; }
    float at(int i, int j) const { return values[size_t(i) * geom.width + j]; }
    size_t size() const { return values.size(); }

    float min_value() const;
    float max_value() const;
    // kelvin brightness-temperature plausibility band (150..350 K)
    void check_kelvin_band() const;
};

// Predictor channels in canonical order. Only this fixed set is valid.
extern const std::vector<std::string> kAllChannels;  // IVT,T500,T850,RH700,W500
bool is_valid_channel(const std::string& name);
// sorts + validates a subset into canonical order
std::vector<std::string> canonical_channel_order(std::vector<std::string> names);

struct PredictorStack {
    std::vector<std::string> channel_names;
    std::vector<Field2D> fields;  // one per channel, shared geometry

    void validate() const;
    const Field2D& channel(const std::string& name) const;
    PredictorStack select(const std::vector<std::string>& names) const;
};

struct SampleRecord {
    std::string id;
    std::string timestamp;  // ISO-8601
    PredictorStack predictors;
    Field2D target;  // kelvin, same geometry as predictors
};

struct NormStats {
    std::vector<std::string> channel_names;
    std::vector<double> mean;
    std::vector<double> stddev;  // population convention, must be > 0
};

// --- operations -----------------------------------------------------------

Field2D ivt_magnitude(const Field2D& viwve, const Field2D& viwvn);

NormStats compute_norm_stats(const std::vector<SampleRecord>& train_samples);
NormStats compute_norm_stats_stacks(const std::vector<const PredictorStack*>& stacks);
PredictorStack apply_norm(const PredictorStack& stack, const NormStats& stats);
PredictorStack invert_norm(const PredictorStack& stack, const NormStats& stats);

// --- persistence ----------------------------------------------------------

struct ManifestRow {
    std::string id, timestamp, predictor_path, target_path, split;
};

void write_sample(const SampleRecord& s, const std::string& predictor_path,
                  const std::string& target_path);
SampleRecord read_sample(const std::string& id, const std::string& timestamp,
                         const std::string& predictor_path,
                         const std::string& target_path,
                         const std::vector<std::string>& channel_names,
                         const GridGeometry& geom);
void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::string& path);

}  // namespace dart

#endif
