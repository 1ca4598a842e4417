#include "sdfplan/sdf.hpp"

#include <cmath>
#include <stdexcept>

namespace sdfplan {

namespace {

// Primitive evaluation in the primitive's own frame (after `local`).

double prim_circle(const Eigen::VectorXd& p, const Vec2& x) { return x.norm() - p[0]; }

double prim_box2(const Eigen::VectorXd& p, const Vec2& x) {
  const Vec2 q(std::abs(x.x()) - p[0], std::abs(x.y()) - p[1]);
  const Vec2 qa = q.cwiseMax(0.0);
  return qa.norm() + std::min(std::max(q.x(), q.y()), 0.0);
}

double prim_capsule2(const Eigen::VectorXd& p, const Vec2& x) {
  const Vec2 a(p[0], p[1]), b(p[2], p[3]);
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (a + t * ab)).norm() - p[4];
}

double prim_halfplane(const Eigen::VectorXd& p, const Vec2& x) {
  return p[2] - (p[0] * x.x() + p[1] * x.y());
}

Vec2 grad_circle2(const Eigen::VectorXd&, const Vec2& x) {
  const double n = x.norm();
  if (n == 0.0) return Vec2(1.0, 0.0);  // deterministic choice at the center
  return x / n;
}

Vec2 grad_box2(const Eigen::VectorXd& p, const Vec2& x) {
  const Vec2 ax(std::abs(x.x()), std::abs(x.y()));
  const Vec2 q(ax.x() - p[0], ax.y() - p[1]);
  const Vec2 sgn(x.x() < 0.0 ? -1.0 : 1.0, x.y() < 0.0 ? -1.0 : 1.0);
  if (q.x() > 0.0 || q.y() > 0.0) {
    const Vec2 qa = q.cwiseMax(0.0);
    const double n = qa.norm();
    return Vec2(sgn.x() * qa.x() / n, sgn.y() * qa.y() / n);
  }
  // Inside: the nearest face is the axis with the largest q; first axis wins ties.
  if (q.x() >= q.y()) return Vec2(sgn.x(), 0.0);
  return Vec2(0.0, sgn.y());
}

Vec2 grad_capsule2(const Eigen::VectorXd& p, const Vec2& x) {
  const Vec2 a(p[0], p[1]), b(p[2], p[3]);
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 d = x - (a + t * ab);
  const double n = d.norm();
  if (n == 0.0) {
    // On the segment axis: deterministic perpendicular.
    if (len2 > 0.0) return perp(ab).normalized();
    return Vec2(1.0, 0.0);
  }
  return d / n;
}

double prim_sphere(const Eigen::VectorXd& p, const Vec3& x) { return x.norm() - p[0]; }

double prim_box3(const Eigen::VectorXd& p, const Vec3& x) {
  const Vec3 q = x.cwiseAbs() - Vec3(p[0], p[1], p[2]);
  const Vec3 qa = q.cwiseMax(0.0);
  return qa.norm() + std::min(q.maxCoeff(), 0.0);
}

double prim_capsule3(const Eigen::VectorXd& p, const Vec3& x) {
  const Vec3 a(p[0], p[1], p[2]), b(p[3], p[4], p[5]);
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (a + t * ab)).norm() - p[6];
}

Vec3 grad_sphere(const Eigen::VectorXd&, const Vec3& x) {
  const double n = x.norm();
  if (n == 0.0) return Vec3(1.0, 0.0, 0.0);
  return x / n;
}

Vec3 grad_box3(const Eigen::VectorXd& p, const Vec3& x) {
  const Vec3 ax = x.cwiseAbs();
  const Vec3 q = ax - Vec3(p[0], p[1], p[2]);
  Vec3 sgn;
  for (int i = 0; i < 3; ++i) sgn[i] = x[i] < 0.0 ? -1.0 : 1.0;
  if ((q.array() > 0.0).any()) {
    const Vec3 qa = q.cwiseMax(0.0);
    const double n = qa.norm();
    return (sgn.array() * qa.array() / n).matrix();
  }
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (q[i] > q[k]) k = i;
  Vec3 g = Vec3::Zero();
  g[k] = sgn[k];
  return g;
}

Vec3 grad_capsule3(const Eigen::VectorXd& p, const Vec3& x) {
  const Vec3 a(p[0], p[1], p[2]), b(p[3], p[4], p[5]);
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec3 d = x - (a + t * ab);
  const double n = d.norm();
  if (n == 0.0) {
    if (len2 > 0.0) {
      const Vec3 u = ab.normalized();
      Vec3 v = u.cross(Vec3::UnitX());
      if (v.squaredNorm() < 1e-12) v = u.cross(Vec3::UnitY());
      return v.normalized();
    }
    return Vec3(1.0, 0.0, 0.0);
  }
  return d / n;
}

}  // namespace

const char* shape_kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Circle: return "circle";
    case ShapeKind::Box: return "box";
    case ShapeKind::Capsule: return "capsule";
    case ShapeKind::HalfPlane: return "halfplane";
    case ShapeKind::Union: return "union";
    case ShapeKind::Intersection: return "intersection";
    case ShapeKind::Complement: return "complement";
  }
  return "?";
}

ShapeKind shape_kind_from_name(const std::string& name) {
  for (ShapeKind k : {ShapeKind::Circle, ShapeKind::Box, ShapeKind::Capsule,
                      ShapeKind::HalfPlane, ShapeKind::Union, ShapeKind::Intersection,
                      ShapeKind::Complement}) {
    if (name == shape_kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown shape kind: " + name);
}

SdfShape make_circle(double radius) {
  SdfShape s;
  s.kind = ShapeKind::Circle;
  s.dim = 2;
  s.params.resize(1);
  s.params << radius;
  return s;
}

SdfShape make_sphere(double radius) {
  SdfShape s = make_circle(radius);
  s.dim = 3;
  s.local = RigidTransform::identity(3);
  return s;
}

SdfShape make_box2(double hx, double hy) {
  SdfShape s;
  s.kind = ShapeKind::Box;
  s.dim = 2;
  s.params.resize(2);
  s.params << hx, hy;
  return s;
}

SdfShape make_box3(double hx, double hy, double hz) {
  SdfShape s;
  s.kind = ShapeKind::Box;
  s.dim = 3;
  s.local = RigidTransform::identity(3);
  s.params.resize(3);
  s.params << hx, hy, hz;
  return s;
}

SdfShape make_capsule2(const Vec2& a, const Vec2& b, double r) {
  SdfShape s;
  s.kind = ShapeKind::Capsule;
  s.dim = 2;
  s.params.resize(5);
  s.params << a.x(), a.y(), b.x(), b.y(), r;
  return s;
}

SdfShape make_capsule3(const Vec3& a, const Vec3& b, double r) {
  SdfShape s;
  s.kind = ShapeKind::Capsule;
  s.dim = 3;
  s.local = RigidTransform::identity(3);
  s.params.resize(7);
  s.params << a.x(), a.y(), a.z(), b.x(), b.y(), b.z(), r;
  return s;
}

SdfShape make_halfplane(const Vec2& n, double d) {
  SdfShape s;
  s.kind = ShapeKind::HalfPlane;
  s.dim = 2;
  const Vec2 u = n.normalized();
  s.params.resize(3);
  s.params << u.x(), u.y(), d;
  return s;
}

SdfShape compose(ShapeKind kind, std::vector<SdfShape> children) {
  if (kind != ShapeKind::Union && kind != ShapeKind::Intersection &&
      kind != ShapeKind::Complement)
    throw std::invalid_argument("compose: kind must be union/intersection/complement");
  if (children.empty()) throw std::invalid_argument("compose: needs at least one child");
  if (kind == ShapeKind::Complement && children.size() != 1)
    throw std::invalid_argument("complement: exactly one child required");
  SdfShape s;
  s.kind = kind;
  s.dim = children.front().dim;
  s.local = RigidTransform::identity(s.dim);
  for (const auto& c : children)
    if (c.dim != s.dim) throw std::invalid_argument("compose: mixed dimensions");
  s.children = std::move(children);
  return s;
}

SdfShape make_union(std::vector<SdfShape> children) {
  return compose(ShapeKind::Union, std::move(children));
}
SdfShape make_intersection(std::vector<SdfShape> children) {
  return compose(ShapeKind::Intersection, std::move(children));
}
SdfShape make_complement(SdfShape child) {
  std::vector<SdfShape> c;
  c.push_back(std::move(child));
  return compose(ShapeKind::Complement, std::move(c));
}

SdfShape translated(SdfShape s, const Vec2& t) {
  s.local = compose(RigidTransform::make2(t.x(), t.y(), 0.0), s.local);
  return s;
}

SdfShape posed(SdfShape s, const RigidTransform& q) {
  s.local = compose(q, s.local);
  return s;
}

double eval_body2(const SdfShape& s, const Vec2& x) {
  const Vec2 xb = s.local.is_identity() ? x : s.local.apply_inverse(x);
  switch (s.kind) {
    case ShapeKind::Circle: return prim_circle(s.params, xb);
    case ShapeKind::Box: return prim_box2(s.params, xb);
    case ShapeKind::Capsule: return prim_capsule2(s.params, xb);
    case ShapeKind::HalfPlane: return prim_halfplane(s.params, xb);
    case ShapeKind::Union: {
      double v = eval_body2(s.children[0], xb);
      for (size_t i = 1; i < s.children.size(); ++i)
        v = std::min(v, eval_body2(s.children[i], xb));
      return v;
    }
    case ShapeKind::Intersection: {
      double v = eval_body2(s.children[0], xb);
      for (size_t i = 1; i < s.children.size(); ++i)
        v = std::max(v, eval_body2(s.children[i], xb));
      return v;
    }
    case ShapeKind::Complement: return -eval_body2(s.children[0], xb);
  }
  return 0.0;
}

void eval_grad_body2(const SdfShape& s, const Vec2& x, double& value, Vec2& g) {
  const bool ident = s.local.is_identity();
  const Vec2 xb = ident ? x : s.local.apply_inverse(x);
  Vec2 gb;
  switch (s.kind) {
    case ShapeKind::Circle:
      value = prim_circle(s.params, xb);
      gb = grad_circle2(s.params, xb);
      break;
    case ShapeKind::Box:
      value = prim_box2(s.params, xb);
      gb = grad_box2(s.params, xb);
      break;
    case ShapeKind::Capsule:
      value = prim_capsule2(s.params, xb);
      gb = grad_capsule2(s.params, xb);
      break;
    case ShapeKind::HalfPlane:
      value = prim_halfplane(s.params, xb);
      gb = Vec2(-s.params[0], -s.params[1]);
      break;
    case ShapeKind::Union: {
      eval_grad_body2(s.children[0], xb, value, gb);
      for (size_t i = 1; i < s.children.size(); ++i) {
        double vi;
        Vec2 gi;
        eval_grad_body2(s.children[i], xb, vi, gi);
        if (vi < value) {  // strict: first child wins ties
          value = vi;
          gb = gi;
        }
      }
      break;
    }
    case ShapeKind::Intersection: {
      eval_grad_body2(s.children[0], xb, value, gb);
      for (size_t i = 1; i < s.children.size(); ++i) {
        double vi;
        Vec2 gi;
        eval_grad_body2(s.children[i], xb, vi, gi);
        if (vi > value) {
          value = vi;
          gb = gi;
        }
      }
      break;
    }
    case ShapeKind::Complement: {
      eval_grad_body2(s.children[0], xb, value, gb);
      value = -value;
      gb = -gb;
      break;
    }
  }
  g = ident ? gb : Vec2(s.local.rot2() * gb);
}

namespace {

double eval_body3(const SdfShape& s, const Vec3& x) {
  const Vec3 xb = s.local.is_identity() ? x : s.local.apply_inverse(x);
  switch (s.kind) {
    case ShapeKind::Circle: return prim_sphere(s.params, xb);
    case ShapeKind::Box: return prim_box3(s.params, xb);
    case ShapeKind::Capsule: return prim_capsule3(s.params, xb);
    case ShapeKind::HalfPlane:
      throw std::invalid_argument("halfplane is 2D only");
    case ShapeKind::Union: {
      double v = eval_body3(s.children[0], xb);
      for (size_t i = 1; i < s.children.size(); ++i)
        v = std::min(v, eval_body3(s.children[i], xb));
      return v;
    }
    case ShapeKind::Intersection: {
      double v = eval_body3(s.children[0], xb);
      for (size_t i = 1; i < s.children.size(); ++i)
        v = std::max(v, eval_body3(s.children[i], xb));
      return v;
    }
    case ShapeKind::Complement: return -eval_body3(s.children[0], xb);
  }
  return 0.0;
}

void eval_grad_body3(const SdfShape& s, const Vec3& x, double& value, Vec3& g) {
  const bool ident = s.local.is_identity();
  const Vec3 xb = ident ? x : s.local.apply_inverse(x);
  Vec3 gb;
  switch (s.kind) {
    case ShapeKind::Circle:
      value = prim_sphere(s.params, xb);
      gb = grad_sphere(s.params, xb);
      break;
    case ShapeKind::Box:
      value = prim_box3(s.params, xb);
      gb = grad_box3(s.params, xb);
      break;
    case ShapeKind::Capsule:
      value = prim_capsule3(s.params, xb);
      gb = grad_capsule3(s.params, xb);
      break;
    case ShapeKind::HalfPlane:
      throw std::invalid_argument("halfplane is 2D only");
    case ShapeKind::Union: {
      eval_grad_body3(s.children[0], xb, value, gb);
      for (size_t i = 1; i < s.children.size(); ++i) {
        double vi;
        Vec3 gi;
        eval_grad_body3(s.children[i], xb, vi, gi);
        if (vi < value) {
          value = vi;
          gb = gi;
        }
      }
      break;
    }
    case ShapeKind::Intersection: {
      eval_grad_body3(s.children[0], xb, value, gb);
      for (size_t i = 1; i < s.children.size(); ++i) {
        double vi;
        Vec3 gi;
        eval_grad_body3(s.children[i], xb, vi, gi);
        if (vi > value) {
          value = vi;
          gb = gi;
        }
      }
      break;
    }
    case ShapeKind::Complement: {
      eval_grad_body3(s.children[0], xb, value, gb);
      value = -value;
      gb = -gb;
      break;
    }
  }
  g = ident ? gb : Vec3(s.local.rot3() * gb);
}

void check_dim(const SdfShape& shape, const RigidTransform& pose, int xdim) {
  if (shape.dim != xdim || pose.dim != xdim)
    throw std::invalid_argument("eval: dimension mismatch between shape, pose and point");
}

}  // namespace

double eval(const SdfShape& shape, const RigidTransform& pose, const Vec2& x) {
  check_dim(shape, pose, 2);
  return eval_body2(shape, pose.is_identity() ? x : pose.apply_inverse(x));
}

double eval(const SdfShape& shape, const RigidTransform& pose, const Vec3& x) {
  check_dim(shape, pose, 3);
  return eval_body3(shape, pose.is_identity() ? x : pose.apply_inverse(x));
}

double eval(const SdfShape& shape, const RigidTransform& pose, const Eigen::VectorXd& x) {
  if (x.size() == 2) return eval(shape, pose, Vec2(x[0], x[1]));
  if (x.size() == 3) return eval(shape, pose, Vec3(x[0], x[1], x[2]));
  throw std::invalid_argument("eval: point must be 2D or 3D");
}

Vec2 grad2(const SdfShape& shape, const RigidTransform& pose, const Vec2& x) {
  check_dim(shape, pose, 2);
  double v;
  Vec2 gb;
  eval_grad_body2(shape, pose.apply_inverse(x), v, gb);
  return pose.rot2() * gb;
}

Vec3 grad3(const SdfShape& shape, const RigidTransform& pose, const Vec3& x) {
  check_dim(shape, pose, 3);
  double v;
  Vec3 gb;
  eval_grad_body3(shape, pose.apply_inverse(x), v, gb);
  return pose.rot3() * gb;
}

Eigen::VectorXd grad(const SdfShape& shape, const RigidTransform& pose,
                     const Eigen::VectorXd& x) {
  if (x.size() == 2) {
    const Vec2 g = grad2(shape, pose, Vec2(x[0], x[1]));
    return Eigen::Vector2d(g.x(), g.y());
  }
  if (x.size() == 3) {
    const Vec3 g = grad3(shape, pose, Vec3(x[0], x[1], x[2]));
    return g;
  }
  throw std::invalid_argument("grad: point must be 2D or 3D");
}

SdfEval eval_full(const SdfShape& shape, const RigidTransform& pose,
                  const Eigen::VectorXd& x) {
  SdfEval out;
  if (x.size() == 2) {
    check_dim(shape, pose, 2);
    const Vec2 xw(x[0], x[1]);
    const Vec2 xb = pose.apply_inverse(xw);
    double v;
    Vec2 gb;
    eval_grad_body2(shape, xb, v, gb);
    const Vec2 gw = pose.rot2() * gb;
    out.value = v;
    out.grad_x = Eigen::Vector2d(gw.x(), gw.y());
    out.grad_pose.resize(3);
    // d/dt = -grad_x ; d/dtheta = cross2(g_body, x_body)
    out.grad_pose[0] = -gw.x();
    out.grad_pose[1] = -gw.y();
    out.grad_pose[2] = cross2(gb, xb);
    return out;
  }
  if (x.size() == 3) {
    check_dim(shape, pose, 3);
    const Vec3 xw(x[0], x[1], x[2]);
    const Vec3 xb = pose.apply_inverse(xw);
    double v;
    Vec3 gb;
    eval_grad_body3(shape, xb, v, gb);
    const Vec3 gw = pose.rot3() * gb;
    out.value = v;
    out.grad_x = gw;
    out.grad_pose.resize(7);
    out.grad_pose.head<3>() = -gw;
    // Raw-quaternion partials of x_b = R(q)^T (x - t) with the standard
    // unit-quaternion rotation formula evaluated on raw components.
    const Vec3 d = xw - pose.translation;
    const double qw = pose.rotation.w(), qx = pose.rotation.x(), qy = pose.rotation.y(),
                 qz = pose.rotation.z();
    // R(q)^T d; partials of R^T w.r.t. each component applied to d.
    const Vec3 qv(qx, qy, qz);
    // R^T d = d + 2 qw (d x qv) + 2 qv x (d x qv)  (conjugate rotation)
    // Use explicit matrix partials for clarity.
    auto RT_partial = [&](int k) -> Mat3 {
      Mat3 dR;
      const double w = qw, xq = qx, yq = qy, zq = qz;
      switch (k) {
        case 0:  // d/dw of R(q)
          dR << 2 * w, -2 * zq, 2 * yq, 2 * zq, 2 * w, -2 * xq, -2 * yq, 2 * xq, 2 * w;
          break;
        case 1:  // d/dx
          dR << 2 * xq, 2 * yq, 2 * zq, 2 * yq, -2 * xq, -2 * w, 2 * zq, 2 * w, -2 * xq;
          break;
        case 2:  // d/dy
          dR << -2 * yq, 2 * xq, 2 * w, 2 * xq, 2 * yq, 2 * zq, -2 * w, 2 * zq, -2 * yq;
          break;
        default:  // d/dz
          dR << -2 * zq, -2 * w, 2 * xq, 2 * w, -2 * zq, 2 * yq, 2 * xq, 2 * yq, 2 * zq;
          break;
      }
      return dR.transpose();  // partial of R^T
    };
    for (int k = 0; k < 4; ++k) {
      const Vec3 dxb = RT_partial(k) * d;
      out.grad_pose[3 + k] = gb.dot(dxb);
    }
    return out;
  }
  throw std::invalid_argument("eval_full: point must be 2D or 3D");
}

double bounding_radius(const SdfShape& s) {
  double r = 0.0;
  switch (s.kind) {
    case ShapeKind::Circle: r = s.params[0]; break;
    case ShapeKind::Box:
      r = s.dim == 2 ? std::hypot(s.params[0], s.params[1])
                     : Vec3(s.params[0], s.params[1], s.params[2]).norm();
      break;
    case ShapeKind::Capsule:
      if (s.dim == 2) {
        r = std::max(Vec2(s.params[0], s.params[1]).norm(),
                     Vec2(s.params[2], s.params[3]).norm()) +
            s.params[4];
      } else {
        r = std::max(Vec3(s.params[0], s.params[1], s.params[2]).norm(),
                     Vec3(s.params[3], s.params[4], s.params[5]).norm()) +
            s.params[6];
      }
      break;
    case ShapeKind::HalfPlane:
      throw std::invalid_argument("bounding_radius: halfplane is unbounded");
    case ShapeKind::Union:
    case ShapeKind::Intersection: {
      // Upper bound: for intersections the first child already bounds it.
      if (s.kind == ShapeKind::Intersection) {
        r = bounding_radius(s.children[0]);
      } else {
        for (const auto& c : s.children) r = std::max(r, bounding_radius(c));
      }
      break;
    }
    case ShapeKind::Complement:
      throw std::invalid_argument("bounding_radius: complement is unbounded");
  }
  const double off = s.local.translation.head(s.dim).norm();
  return r + off;
}

void validate(const SdfShape& s) {
  const auto need = [&](Eigen::Index n) {
    if (s.params.size() != n)
      throw std::invalid_argument(std::string("shape ") + shape_kind_name(s.kind) +
                                  ": wrong parameter count");
  };
  if (s.dim != 2 && s.dim != 3) throw std::invalid_argument("shape dim must be 2 or 3");
  if (s.local.dim != s.dim) throw std::invalid_argument("shape local pose dim mismatch");
  switch (s.kind) {
    case ShapeKind::Circle:
      need(1);
      if (s.params[0] <= 0.0) throw std::invalid_argument("circle: radius must be > 0");
      break;
    case ShapeKind::Box:
      need(s.dim);
      if ((s.params.array() <= 0.0).any())
        throw std::invalid_argument("box: half-extents must be > 0");
      break;
    case ShapeKind::Capsule:
      need(s.dim == 2 ? 5 : 7);
      if (s.params[s.params.size() - 1] <= 0.0)
        throw std::invalid_argument("capsule: radius must be > 0");
      break;
    case ShapeKind::HalfPlane:
      if (s.dim != 2) throw std::invalid_argument("halfplane is 2D only");
      need(3);
      break;
    case ShapeKind::Union:
    case ShapeKind::Intersection:
      if (s.children.empty())
        throw std::invalid_argument("composite: needs at least one child");
      break;
    case ShapeKind::Complement:
      if (s.children.size() != 1)
        throw std::invalid_argument("complement: exactly one child");
      break;
  }
  for (const auto& c : s.children) {
    if (c.dim != s.dim) throw std::invalid_argument("composite: mixed dimensions");
    validate(c);
  }
}

}  // namespace sdfplan
