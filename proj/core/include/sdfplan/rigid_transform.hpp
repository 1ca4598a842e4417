#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace sdfplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Scalar 2D cross product a.x*b.y - a.y*b.x.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// 90-degree counter-clockwise rotation of a 2D vector.
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

/// Rigid transformation applied to signed-distance fields by pulling the
/// query point into the body frame: posed(x) = body(R^T (x - t)).
///
/// 2D poses are (x, y, theta) with theta wrapped to (-pi, pi]; 3D poses are
/// translation plus a unit quaternion (|q| = 1 within 1e-9).
struct RigidTransform {
  int dim = 2;
  Vec3 translation = Vec3::Zero();       // first `dim` components used
  double theta = 0.0;                    // 2D rotation
  Eigen::Quaterniond rotation{1, 0, 0, 0};  // 3D rotation (w, x, y, z)

  static RigidTransform identity(int dim = 2);
  static RigidTransform make2(double x, double y, double theta);
  static RigidTransform make3(const Vec3& t, const Eigen::Quaterniond& q);

  bool is_identity() const;

  Mat2 rot2() const;
  Mat3 rot3() const;

  Vec2 apply(const Vec2& x) const;          // body -> world
  Vec2 apply_inverse(const Vec2& x) const;  // world -> body
  Vec3 apply(const Vec3& x) const;
  Vec3 apply_inverse(const Vec3& x) const;

  /// Pose parameter vector: (x, y, theta) in 2D; (x, y, z, qw, qx, qy, qz) in 3D.
  Eigen::VectorXd params() const;
  static RigidTransform from_params(int dim, const Eigen::VectorXd& p);

  /// Renormalizes the quaternion (3D); validates invariants otherwise.
  void normalize();
};

/// Composition: (a * b)(x) = a(b(x)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& a);

/// Relative transform taking pose `from` to pose `to`: to = delta * from.
RigidTransform delta_pose(const RigidTransform& from, const RigidTransform& to);

}  // namespace sdfplan
