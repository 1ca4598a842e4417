#pragma once

#include <array>
#include <vector>

#include "sdfplan/sdf.hpp"

namespace sdfplan {

/// Axis-aligned regular grid X_h: never rotated, lower corner at `origin`,
/// uniform spacing, `shape[k]` points per axis. Values are stored row-major
/// in axis order (last axis fastest).
struct GridSpec {
  int dim = 2;
  Vec3 origin = Vec3::Zero();  // first `dim` components used
  double spacing = 0.01;
  std::array<int, 3> shape = {0, 0, 1};

  static GridSpec make2(const Vec2& origin, double spacing, int nx, int ny);
  static GridSpec make3(const Vec3& origin, double spacing, int nx, int ny, int nz);

  long num_points() const;
  /// Cell measure of the midpoint rule: spacing^dim.
  double cell_measure() const;
  Vec2 point2(int i, int j) const;
  Vec3 point3(int i, int j, int k) const;
  Vec2 point2_flat(long idx) const;
  long index(int i, int j) const { return static_cast<long>(i) * shape[1] + j; }

  /// Workspace bounds [origin, origin + spacing*(shape-1)] per axis.
  Vec2 upper2() const;
  bool contains2(const Vec2& x) const;
  Vec2 clamp2(const Vec2& x) const;

  bool operator==(const GridSpec& o) const;
  void validate() const;
};

/// A field sampled on a GridSpec (values[index(i,j)] etc.).
struct GridField {
  GridSpec spec;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<size_t>(spec.index(i, j))]; }
};

/// values[i] = eval(shape, pose, point(spec, i)) for every grid index.
GridField evaluate_grid(const SdfShape& shape, const RigidTransform& pose,
                        const GridSpec& spec);

/// Grid values plus per-point partials w.r.t. the pose parameters
/// (2D: three fields dx, dy, dtheta).
struct GridEval {
  GridField field;
  std::array<std::vector<double>, 3> dpose;
};
GridEval evaluate_grid_with_pose_grads(const SdfShape& shape, const RigidTransform& pose,
                                       const GridSpec& spec);

/// Bilinear interpolation with clamping outside the grid extent; `clamped`
/// (optional) is set when the query was out of range.
double interpolate(const GridField& f, const Vec2& x, bool* clamped = nullptr);
/// Interpolated value plus its spatial gradient (piecewise bilinear).
void interpolate_with_grad(const GridField& f, const Vec2& x, double& value, Vec2& grad,
                           bool* clamped = nullptr);

}  // namespace sdfplan
