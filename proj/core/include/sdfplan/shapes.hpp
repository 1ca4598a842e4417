#pragma once

#include "sdfplan/sdf.hpp"

namespace sdfplan {

/// Two perpendicular arms joined at a shared corner, axis-aligned in the
/// body frame with the corner at the origin.
SdfShape make_lshape(double arm1_len, double arm1_wid, double arm2_len, double arm2_wid);

/// Out-of-distribution composite shapes assembled from box unions.
SdfShape make_plus(double arm_len, double arm_wid);
SdfShape make_tee(double top_len, double top_wid, double stem_len, double stem_wid);
SdfShape make_ushape(double width, double height, double wall);

/// 2D mug profile: an annular cup wall with an opening cut at the top and a
/// handle loop of three capsules attached to the outer wall. The enclosed
/// gap between the handle capsules and the wall is free space; a hook wire
/// inside it cannot escape, which is what makes hanging possible.
struct MugParams {
  double outer_radius = 0.06;
  double wall = 0.012;
  double opening_half_width = 0.025;
  double handle_height_ratio = 0.0;  // attach height as fraction of outer radius
  double handle_extent = 0.045;      // outward reach of the loop
  double handle_gap = 0.035;         // vertical distance between the loop arms
  double handle_thickness = 0.008;   // capsule radius
};
SdfShape make_mug_profile(const MugParams& p);

/// Inner clear height of the mug's handle hole (gap minus both capsule radii).
double mug_hole_clearance(const MugParams& p);

/// 2D hook: a polyline of two or three capsule segments, anchored at `base`.
/// Angles are absolute (radians, measured from +x); a typical hook rises and
/// then bends outward.
struct HookParams {
  Vec2 base = Vec2(0.0, -0.08);
  double radius = 0.008;
  std::vector<double> segment_lengths = {0.10, 0.07};
  std::vector<double> segment_angles = {M_PI / 2, M_PI / 6};
};
SdfShape make_hook(const HookParams& p);
/// Wire polyline vertices (base first).
std::vector<Vec2> hook_polyline(const HookParams& p);

/// Area and centroid of a bounded 2D shape via indicator sums at `spacing`,
/// over the shape's bounding disk.
struct AreaCentroid {
  double area = 0.0;
  Vec2 centroid = Vec2::Zero();
};
AreaCentroid shape_area_centroid(const SdfShape& shape, double spacing = 0.002);

/// Uniform interior sample points (body frame) at `spacing`, used by the
/// contact oracles. Deterministic.
std::vector<Vec2> interior_points(const SdfShape& shape, double spacing);

}  // namespace sdfplan
