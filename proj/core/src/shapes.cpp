#include "sdfplan/shapes.hpp"

#include <cmath>
#include <stdexcept>

namespace sdfplan {

SdfShape make_lshape(double arm1_len, double arm1_wid, double arm2_len, double arm2_wid) {
  // Horizontal arm along +x, vertical arm along +y, sharing the corner at the
  // origin's quadrant corner.
  SdfShape arm1 = translated(make_box2(arm1_len / 2, arm1_wid / 2),
                             Vec2(arm1_len / 2, arm1_wid / 2));
  SdfShape arm2 = translated(make_box2(arm2_wid / 2, arm2_len / 2),
                             Vec2(arm2_wid / 2, arm2_len / 2));
  return make_union({std::move(arm1), std::move(arm2)});
}

SdfShape make_plus(double arm_len, double arm_wid) {
  SdfShape h = make_box2(arm_len / 2, arm_wid / 2);
  SdfShape v = make_box2(arm_wid / 2, arm_len / 2);
  return make_union({std::move(h), std::move(v)});
}

SdfShape make_tee(double top_len, double top_wid, double stem_len, double stem_wid) {
  SdfShape top = translated(make_box2(top_len / 2, top_wid / 2), Vec2(0.0, stem_len / 2));
  SdfShape stem =
      translated(make_box2(stem_wid / 2, stem_len / 2), Vec2(0.0, -top_wid / 2));
  return make_union({std::move(top), std::move(stem)});
}

SdfShape make_ushape(double width, double height, double wall) {
  SdfShape left =
      translated(make_box2(wall / 2, height / 2), Vec2(-(width - wall) / 2, 0.0));
  SdfShape right =
      translated(make_box2(wall / 2, height / 2), Vec2((width - wall) / 2, 0.0));
  SdfShape bottom =
      translated(make_box2(width / 2, wall / 2), Vec2(0.0, -(height - wall) / 2));
  return make_union({std::move(left), std::move(right), std::move(bottom)});
}

SdfShape make_mug_profile(const MugParams& p) {
  if (p.wall <= 0.0 || p.outer_radius <= 2.0 * p.wall)
    throw std::invalid_argument("mug: wall must be positive and thinner than the radius");
  const double ro = p.outer_radius;
  const double ri = ro - p.wall;

  // Cup: annulus minus an opening box at the top.
  SdfShape annulus = make_intersection({make_circle(ro), make_complement(make_circle(ri))});
  SdfShape opening = translated(
      make_box2(p.opening_half_width, (ro - ri) / 2 + 0.004), Vec2(0.0, (ro + ri) / 2));
  SdfShape cup = make_intersection({std::move(annulus), make_complement(std::move(opening))});

  // Handle: U-loop of three capsules attached to the outer wall at height yh.
  // The mug wall closes the loop, enclosing a genuine hole.
  const double yh = p.handle_height_ratio * ro;
  const double half_gap = p.handle_gap / 2;
  const double rmid = ro - p.wall / 2;
  const double ylo = yh - half_gap, yhi = yh + half_gap;
  auto attach_x = [&](double y) {
    const double s = rmid * rmid - y * y;
    return std::sqrt(std::max(s, 1e-8));
  };
  const double xo = std::max(attach_x(ylo), attach_x(yhi)) + p.handle_extent;
  const double rc = p.handle_thickness;
  SdfShape lower = make_capsule2(Vec2(attach_x(ylo), ylo), Vec2(xo, ylo), rc);
  SdfShape upper = make_capsule2(Vec2(attach_x(yhi), yhi), Vec2(xo, yhi), rc);
  SdfShape outer = make_capsule2(Vec2(xo, ylo), Vec2(xo, yhi), rc);

  return make_union({std::move(cup), std::move(lower), std::move(upper), std::move(outer)});
}

double mug_hole_clearance(const MugParams& p) {
  return p.handle_gap - 2.0 * p.handle_thickness;
}

std::vector<Vec2> hook_polyline(const HookParams& p) {
  if (p.segment_lengths.size() != p.segment_angles.size() || p.segment_lengths.empty())
    throw std::invalid_argument("hook: lengths and angles must match and be non-empty");
  std::vector<Vec2> pts;
  pts.push_back(p.base);
  Vec2 cur = p.base;
  for (size_t i = 0; i < p.segment_lengths.size(); ++i) {
    cur += p.segment_lengths[i] * Vec2(std::cos(p.segment_angles[i]),
                                       std::sin(p.segment_angles[i]));
    pts.push_back(cur);
  }
  return pts;
}

SdfShape make_hook(const HookParams& p) {
  if (p.segment_lengths.size() < 1 || p.segment_lengths.size() > 3)
    throw std::invalid_argument("hook: 1 to 3 segments supported");
  const auto pts = hook_polyline(p);
  std::vector<SdfShape> caps;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    caps.push_back(make_capsule2(pts[i], pts[i + 1], p.radius));
  if (caps.size() == 1) return caps.front();
  return make_union(std::move(caps));
}

AreaCentroid shape_area_centroid(const SdfShape& shape, double spacing) {
  AreaCentroid out;
  const double r = bounding_radius(shape);
  const int n = static_cast<int>(std::ceil(2.0 * r / spacing)) + 1;
  double sx = 0.0, sy = 0.0;
  long count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 x(-r + i * spacing, -r + j * spacing);
      if (eval_body2(shape, x) < 0.0) {
        sx += x.x();
        sy += x.y();
        ++count;
      }
    }
  }
  if (count == 0) return out;
  out.area = static_cast<double>(count) * spacing * spacing;
  out.centroid = Vec2(sx / count, sy / count);
  return out;
}

std::vector<Vec2> interior_points(const SdfShape& shape, double spacing) {
  std::vector<Vec2> pts;
  const double r = bounding_radius(shape);
  const int n = static_cast<int>(std::ceil(2.0 * r / spacing)) + 1;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 x(-r + i * spacing, -r + j * spacing);
      if (eval_body2(shape, x) < 0.0) pts.push_back(x);
    }
  }
  return pts;
}

}  // namespace sdfplan
