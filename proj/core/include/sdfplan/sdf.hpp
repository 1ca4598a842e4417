#pragma once

#include <string>
#include <vector>

#include "sdfplan/rigid_transform.hpp"

namespace sdfplan {

enum class ShapeKind {
  Circle,      // params: [radius]           (sphere in 3D)
  Box,         // params: [hx, hy] / [hx, hy, hz] half-extents
  Capsule,     // params: [ax, ay, bx, by, r] / [ax..az, bx..bz, r]
  HalfPlane,   // params: [nx, ny, d], inside = { n.x >= d }, n unit (2D)
  Union,       // pointwise min of children
  Intersection,  // pointwise max of children
  Complement,  // negation, exactly one child
};

const char* shape_kind_name(ShapeKind k);
ShapeKind shape_kind_from_name(const std::string& name);

/// Closed algebraic signed-distance field: primitives composed by CSG.
///
/// Primitive fields are exact Euclidean SDFs (Lipschitz-1). Min/max CSG
/// yields a pseudo-SDF: the sign is exact everywhere, the magnitude is a
/// lower bound on the true distance. Every shape node carries a body-frame
/// placement `local` applied before its own evaluation, so composites can be
/// assembled from offset parts.
struct SdfShape {
  ShapeKind kind = ShapeKind::Circle;
  int dim = 2;
  Eigen::VectorXd params;
  RigidTransform local = RigidTransform::identity(2);
  std::vector<SdfShape> children;
};

SdfShape make_circle(double radius);
SdfShape make_sphere(double radius);
SdfShape make_box2(double hx, double hy);
SdfShape make_box3(double hx, double hy, double hz);
SdfShape make_capsule2(const Vec2& a, const Vec2& b, double r);
SdfShape make_capsule3(const Vec3& a, const Vec3& b, double r);
SdfShape make_halfplane(const Vec2& n, double d);

SdfShape make_union(std::vector<SdfShape> children);
SdfShape make_intersection(std::vector<SdfShape> children);
SdfShape make_complement(SdfShape child);
/// `kind` must be one of Union / Intersection / Complement.
SdfShape compose(ShapeKind kind, std::vector<SdfShape> children);

SdfShape translated(SdfShape s, const Vec2& t);
SdfShape posed(SdfShape s, const RigidTransform& q);

/// Signed distance of the posed shape at x: T(q)[phi](x) = phi(R^T (x - r)).
double eval(const SdfShape& shape, const RigidTransform& pose, const Vec2& x);
double eval(const SdfShape& shape, const RigidTransform& pose, const Vec3& x);
double eval(const SdfShape& shape, const RigidTransform& pose, const Eigen::VectorXd& x);

/// Spatial gradient (world frame). At non-smooth points the gradient of the
/// active branch is returned, first child winning ties.
Vec2 grad2(const SdfShape& shape, const RigidTransform& pose, const Vec2& x);
Vec3 grad3(const SdfShape& shape, const RigidTransform& pose, const Vec3& x);
Eigen::VectorXd grad(const SdfShape& shape, const RigidTransform& pose,
                     const Eigen::VectorXd& x);

/// Value, world-frame spatial gradient and the gradient w.r.t. the pose
/// parameters (3 in 2D: x, y, theta; 7 in 3D: translation + raw quaternion
/// components of the unit-quaternion rotation formula).
struct SdfEval {
  double value = 0.0;
  Eigen::VectorXd grad_x;     // dim entries
  Eigen::VectorXd grad_pose;  // 3 (2D) or 7 (3D) entries
};
SdfEval eval_full(const SdfShape& shape, const RigidTransform& pose,
                  const Eigen::VectorXd& x);

/// Fast 2D path: value + body-frame gradient for a shape with identity pose.
double eval_body2(const SdfShape& shape, const Vec2& x);
void eval_grad_body2(const SdfShape& shape, const Vec2& x, double& value, Vec2& grad);

/// Conservative radius of a circle centered at the body origin containing
/// the shape, from primitive extents (exact for primitives, upper bound for
/// composites).
double bounding_radius(const SdfShape& shape);

/// Validates parameter counts, child arity and dimensions; throws on errors.
void validate(const SdfShape& shape);

}  // namespace sdfplan
