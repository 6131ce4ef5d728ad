#ifndef DART_REGRID_HPP
#define DART_REGRID_HPP

#include "dart/field.hpp"

namespace dart {

// Bilinear resampling between regular cell-center-registered lat/lon grids.
// Boundary pixels clamp to the source edge.
Field2D regrid_bilinear(const Field2D& src, const GridGeometry& dst_geometry);

// Separable Catmull-Rom cubic (a = -0.5). Reproduces source nodes exactly
// and polynomials up to degree 1. Requires a source of at least 4x4.
Field2D regrid_bicubic(const Field2D& src, const GridGeometry& dst_geometry);

}  // namespace dart

#endif
