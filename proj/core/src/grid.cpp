#include "sdfplan/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace sdfplan {

GridSpec GridSpec::make2(const Vec2& origin, double spacing, int nx, int ny) {
  GridSpec g;
  g.dim = 2;
  g.origin = Vec3(origin.x(), origin.y(), 0.0);
  g.spacing = spacing;
  g.shape = {nx, ny, 1};
  g.validate();
  return g;
}

GridSpec GridSpec::make3(const Vec3& origin, double spacing, int nx, int ny, int nz) {
  GridSpec g;
  g.dim = 3;
  g.origin = origin;
  g.spacing = spacing;
  g.shape = {nx, ny, nz};
  g.validate();
  return g;
}

long GridSpec::num_points() const {
  long n = 1;
  for (int k = 0; k < dim; ++k) n *= shape[static_cast<size_t>(k)];
  return n;
}

double GridSpec::cell_measure() const { return std::pow(spacing, dim); }

Vec2 GridSpec::point2(int i, int j) const {
  return Vec2(origin.x() + spacing * i, origin.y() + spacing * j);
}

Vec3 GridSpec::point3(int i, int j, int k) const {
  return origin + spacing * Vec3(i, j, k);
}

Vec2 GridSpec::point2_flat(long idx) const {
  const int j = static_cast<int>(idx % shape[1]);
  const int i = static_cast<int>(idx / shape[1]);
  return point2(i, j);
}

Vec2 GridSpec::upper2() const {
  return Vec2(origin.x() + spacing * (shape[0] - 1), origin.y() + spacing * (shape[1] - 1));
}

bool GridSpec::contains2(const Vec2& x) const {
  const Vec2 u = upper2();
  return x.x() >= origin.x() && x.x() <= u.x() && x.y() >= origin.y() && x.y() <= u.y();
}

Vec2 GridSpec::clamp2(const Vec2& x) const {
  const Vec2 u = upper2();
  return Vec2(std::clamp(x.x(), origin.x(), u.x()), std::clamp(x.y(), origin.y(), u.y()));
}

bool GridSpec::operator==(const GridSpec& o) const {
  return dim == o.dim && origin == o.origin && spacing == o.spacing && shape == o.shape;
}

void GridSpec::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid: dim must be 2 or 3");
  if (spacing <= 0.0) throw std::invalid_argument("grid: spacing must be > 0");
  for (int k = 0; k < dim; ++k)
    if (shape[static_cast<size_t>(k)] < 2)
      throw std::invalid_argument("grid: at least 2 points per axis");
}

GridField evaluate_grid(const SdfShape& shape, const RigidTransform& pose,
                        const GridSpec& spec) {
  if (shape.dim != spec.dim || pose.dim != spec.dim)
    throw std::invalid_argument("evaluate_grid: dimension mismatch");
  GridField f;
  f.spec = spec;
  f.values.resize(static_cast<size_t>(spec.num_points()));
  if (spec.dim == 2) {
    size_t idx = 0;
    for (int i = 0; i < spec.shape[0]; ++i) {
      for (int j = 0; j < spec.shape[1]; ++j) {
        f.values[idx++] = eval_body2(shape, pose.apply_inverse(spec.point2(i, j)));
      }
    }
  } else {
    size_t idx = 0;
    for (int i = 0; i < spec.shape[0]; ++i)
      for (int j = 0; j < spec.shape[1]; ++j)
        for (int k = 0; k < spec.shape[2]; ++k)
          f.values[idx++] = eval(shape, pose, spec.point3(i, j, k));
  }
  return f;
}

GridEval evaluate_grid_with_pose_grads(const SdfShape& shape, const RigidTransform& pose,
                                       const GridSpec& spec) {
  if (spec.dim != 2)
    throw std::invalid_argument("evaluate_grid_with_pose_grads: 2D grids only");
  if (shape.dim != 2 || pose.dim != 2)
    throw std::invalid_argument("evaluate_grid_with_pose_grads: dimension mismatch");
  GridEval out;
  out.field.spec = spec;
  const size_t n = static_cast<size_t>(spec.num_points());
  out.field.values.resize(n);
  for (auto& d : out.dpose) d.resize(n);
  const Mat2 rot = pose.rot2();
  size_t idx = 0;
  for (int i = 0; i < spec.shape[0]; ++i) {
    for (int j = 0; j < spec.shape[1]; ++j) {
      const Vec2 xw = spec.point2(i, j);
      const Vec2 xb = pose.apply_inverse(xw);
      double v;
      Vec2 gb;
      eval_grad_body2(shape, xb, v, gb);
      const Vec2 gw = rot * gb;
      out.field.values[idx] = v;
      out.dpose[0][idx] = -gw.x();
      out.dpose[1][idx] = -gw.y();
      out.dpose[2][idx] = cross2(gb, xb);
      ++idx;
    }
  }
  return out;
}

double interpolate(const GridField& f, const Vec2& x, bool* clamped) {
  double v;
  Vec2 g;
  interpolate_with_grad(f, x, v, g, clamped);
  return v;
}

void interpolate_with_grad(const GridField& f, const Vec2& x, double& value, Vec2& grad,
                           bool* clamped) {
  const GridSpec& s = f.spec;
  if (s.dim != 2) throw std::invalid_argument("interpolate: 2D grids only");
  double fx = (x.x() - s.origin.x()) / s.spacing;
  double fy = (x.y() - s.origin.y()) / s.spacing;
  const double mx = static_cast<double>(s.shape[0] - 1);
  const double my = static_cast<double>(s.shape[1] - 1);
  const bool clip_x = fx < 0.0 || fx > mx;
  const bool clip_y = fy < 0.0 || fy > my;
  const bool clip = clip_x || clip_y;
  fx = std::clamp(fx, 0.0, mx);
  fy = std::clamp(fy, 0.0, my);
  int i0 = static_cast<int>(std::floor(fx));
  int j0 = static_cast<int>(std::floor(fy));
  if (i0 >= s.shape[0] - 1) i0 = s.shape[0] - 2;
  if (j0 >= s.shape[1] - 1) j0 = s.shape[1] - 2;
  const double tx = fx - i0, ty = fy - j0;
  const double v00 = f.at(i0, j0), v10 = f.at(i0 + 1, j0);
  const double v01 = f.at(i0, j0 + 1), v11 = f.at(i0 + 1, j0 + 1);
  value = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 +
          tx * ty * v11;
  grad.x() = ((1 - ty) * (v10 - v00) + ty * (v11 - v01)) / s.spacing;
  grad.y() = ((1 - tx) * (v01 - v00) + tx * (v11 - v10)) / s.spacing;
  if (clip_x) grad.x() = 0.0;
  if (clip_y) grad.y() = 0.0;
  if (clamped) *clamped = clip;
}

}  // namespace sdfplan
