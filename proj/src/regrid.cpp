#include "dart/regrid.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace dart {

namespace {

// fractional source row/col of a destination cell center, cell-center
// registration on both grids
inline double src_frac_row(const GridGeometry& s, double lat) {
    return (lat - s.lat_min) / (s.lat_max - s.lat_min) * s.height - 0.5;
}
inline double src_frac_col(const GridGeometry& s, double lon) {
    return (lon - s.lon_min) / (s.lon_max - s.lon_min) * s.width - 0.5;
}

inline double catmull_rom(double t, double pm1, double p0, double p1, double p2) {
    // a = -0.5
    const double t2 = t * t, t3 = t2 * t;
    return 0.5 * ((2.0 * p0) + (-pm1 + p1) * t +
                  (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2) * t2 +
                  (-pm1 + 3.0 * p0 - 3.0 * p1 + p2) * t3);
}

}  // namespace

Field2D regrid_bilinear(const Field2D& src, const GridGeometry& dst_geometry) {
    src.geom.validate();
    dst_geometry.validate();
    if (src.height() == 1 || src.width() == 1)
        std::cerr << "regrid_bilinear: degenerate source grid " << src.height()
                  << "x" << src.width() << ", falling back to linear/nearest\n";
    Field2D out(dst_geometry, src.units);
    const int sh = src.height(), sw = src.width();
    for (int i = 0; i < dst_geometry.height; ++i) {
        const double fr =
            std::clamp(src_frac_row(src.geom, dst_geometry.lat_of_row(i)), 0.0,
                       double(sh - 1));
        const int r0 = std::min(int(fr), sh - 2 >= 0 ? sh - 2 : 0);
        const double wr = sh > 1 ? fr - r0 : 0.0;
        for (int j = 0; j < dst_geometry.width; ++j) {
            const double fc =
                std::clamp(src_frac_col(src.geom, dst_geometry.lon_of_col(j)), 0.0,
                           double(sw - 1));
            const int c0 = std::min(int(fc), sw - 2 >= 0 ? sw - 2 : 0);
            const double wc = sw > 1 ? fc - c0 : 0.0;
            const int r1 = std::min(r0 + 1, sh - 1), c1 = std::min(c0 + 1, sw - 1);
            const double v = (1 - wr) * ((1 - wc) * src.at(r0, c0) + wc * src.at(r0, c1)) +
                             wr * ((1 - wc) * src.at(r1, c0) + wc * src.at(r1, c1));
            out.at(i, j) = float(v);
        }
    }
    return out;
}

Field2D regrid_bicubic(const Field2D& src, const GridGeometry& dst_geometry) {
    src.geom.validate();
    dst_geometry.validate();
    const int sh = src.height(), sw = src.width();
    if (sh < 4 || sw < 4)
        throw ShapeError("regrid_bicubic: source must be at least 4x4, got " +
                         std::to_string(sh) + "x" + std::to_string(sw));
    Field2D out(dst_geometry, src.units);
    auto sample = [&](int r, int c) {
        return double(src.at(std::clamp(r, 0, sh - 1), std::clamp(c, 0, sw - 1)));
    };
    for (int i = 0; i < dst_geometry.height; ++i) {
        const double fr =
            std::clamp(src_frac_row(src.geom, dst_geometry.lat_of_row(i)), 0.0,
                       double(sh - 1));
        const int r0 = int(std::floor(fr));
        const double tr = fr - r0;
        for (int j = 0; j < dst_geometry.width; ++j) {
            const double fc =
                std::clamp(src_frac_col(src.geom, dst_geometry.lon_of_col(j)), 0.0,
                           double(sw - 1));
            const int c0 = int(std::floor(fc));
            const double tc = fc - c0;
            double rows[4];
            for (int r = -1; r <= 2; ++r)
                rows[r + 1] = catmull_rom(tc, sample(r0 + r, c0 - 1),
                                          sample(r0 + r, c0), sample(r0 + r, c0 + 1),
                                          sample(r0 + r, c0 + 2));
            out.at(i, j) = float(catmull_rom(tr, rows[0], rows[1], rows[2], rows[3]));
        }
    }
    return out;
}

}  // namespace dart
