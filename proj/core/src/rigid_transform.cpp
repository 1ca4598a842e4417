#include "sdfplan/rigid_transform.hpp"

#include <cmath>
#include <stdexcept>

namespace sdfplan {

double wrap_angle(double theta) {
  // Wrap to (-pi, pi].
  double t = std::fmod(theta, 2.0 * M_PI);
  if (t <= -M_PI) t += 2.0 * M_PI;
  if (t > M_PI) t -= 2.0 * M_PI;
  return t;
}

RigidTransform RigidTransform::identity(int dim) {
  RigidTransform q;
  q.dim = dim;
  return q;
}

RigidTransform RigidTransform::make2(double x, double y, double theta) {
  RigidTransform q;
  q.dim = 2;
  q.translation = Vec3(x, y, 0.0);
  q.theta = wrap_angle(theta);
  return q;
}

RigidTransform RigidTransform::make3(const Vec3& t, const Eigen::Quaterniond& rot) {
  RigidTransform q;
  q.dim = 3;
  q.translation = t;
  q.rotation = rot.normalized();
  return q;
}

bool RigidTransform::is_identity() const {
  if (translation.head(dim).norm() != 0.0) return false;
  if (dim == 2) return theta == 0.0;
  return rotation.w() == 1.0 && rotation.vec().isZero(0.0);
}

Mat2 RigidTransform::rot2() const {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Mat3 RigidTransform::rot3() const {
  // Homogeneous form R = (w^2 - |v|^2) I + 2 v v^T + 2 w [v]_x, a polynomial
  // in the raw components; coincides with the rotation matrix at |q| = 1 and
  // keeps the pose partials in eval_full consistent with evaluation.
  const double w = rotation.w(), x = rotation.x(), y = rotation.y(), z = rotation.z();
  const double s = w * w - (x * x + y * y + z * z);
  Mat3 r;
  r << s + 2 * x * x, 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), s + 2 * y * y, 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), s + 2 * z * z;
  return r;
}

Vec2 RigidTransform::apply(const Vec2& x) const {
  const double c = std::cos(theta), s = std::sin(theta);
  return Vec2(c * x.x() - s * x.y() + translation.x(),
              s * x.x() + c * x.y() + translation.y());
}

Vec2 RigidTransform::apply_inverse(const Vec2& x) const {
  const double c = std::cos(theta), s = std::sin(theta);
  const double dx = x.x() - translation.x(), dy = x.y() - translation.y();
  return Vec2(c * dx + s * dy, -s * dx + c * dy);
}

Vec3 RigidTransform::apply(const Vec3& x) const { return rot3() * x + translation; }

Vec3 RigidTransform::apply_inverse(const Vec3& x) const {
  return rot3().transpose() * (x - translation);
}

Eigen::VectorXd RigidTransform::params() const {
  if (dim == 2) {
    Eigen::VectorXd p(3);
    p << translation.x(), translation.y(), theta;
    return p;
  }
  Eigen::VectorXd p(7);
  p << translation.x(), translation.y(), translation.z(), rotation.w(), rotation.x(),
      rotation.y(), rotation.z();
  return p;
}

RigidTransform RigidTransform::from_params(int dim, const Eigen::VectorXd& p) {
  if (dim == 2) {
    if (p.size() != 3) throw std::invalid_argument("2D pose needs 3 parameters");
    return make2(p[0], p[1], p[2]);
  }
  if (p.size() != 7) throw std::invalid_argument("3D pose needs 7 parameters");
  return make3(Vec3(p[0], p[1], p[2]), Eigen::Quaterniond(p[3], p[4], p[5], p[6]));
}

void RigidTransform::normalize() {
  if (dim == 2) {
    theta = wrap_angle(theta);
    return;
  }
  const double n = rotation.norm();
  if (n == 0.0) throw std::invalid_argument("zero quaternion");
  rotation.coeffs() /= n;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  if (a.dim != b.dim) throw std::invalid_argument("compose: dimension mismatch");
  RigidTransform r;
  r.dim = a.dim;
  if (a.dim == 2) {
    const Vec2 t = a.apply(Vec2(b.translation.x(), b.translation.y()));
    r.translation = Vec3(t.x(), t.y(), 0.0);
    r.theta = wrap_angle(a.theta + b.theta);
  } else {
    r.translation = a.rot3() * b.translation + a.translation;
    r.rotation = (a.rotation * b.rotation).normalized();
  }
  return r;
}

RigidTransform inverse(const RigidTransform& a) {
  RigidTransform r;
  r.dim = a.dim;
  if (a.dim == 2) {
    const double c = std::cos(a.theta), s = std::sin(a.theta);
    r.theta = wrap_angle(-a.theta);
    r.translation = Vec3(-(c * a.translation.x() + s * a.translation.y()),
                         -(-s * a.translation.x() + c * a.translation.y()), 0.0);
  } else {
    r.rotation = a.rotation.conjugate();
    r.translation = -(r.rot3() * a.translation);
  }
  return r;
}

RigidTransform delta_pose(const RigidTransform& from, const RigidTransform& to) {
  return compose(to, inverse(from));
}

}  // namespace sdfplan
