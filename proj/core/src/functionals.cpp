#include "sdfplan/functionals.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdfplan {

double sigmoid_stable(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

int pose_param_count(int dim) { return dim == 2 ? 3 : 7; }

}  // namespace

FunctionalValue h_coll(const SdfShape& s1, const RigidTransform& q1, const SdfShape& s2,
                       const RigidTransform& q2, const GridSpec& spec, double a) {
  if (a <= 0.0) throw std::invalid_argument("h_coll: sharpness a must be > 0");
  if (s1.dim != s2.dim || s1.dim != spec.dim)
    throw std::invalid_argument("h_coll: dimension mismatch");
  const double cell = spec.cell_measure();
  if (spec.dim == 2) {
    const GridEval g1 = evaluate_grid_with_pose_grads(s1, q1, spec);
    const GridEval g2 = evaluate_grid_with_pose_grads(s2, q2, spec);
    return h_coll_from_grids(g1, g2, a, cell);
  }
  // 3D: direct accumulation over grid points.
  FunctionalValue out;
  const int np = pose_param_count(3);
  out.grad_q = Eigen::VectorXd::Zero(2 * np);
  for (int i = 0; i < spec.shape[0]; ++i) {
    for (int j = 0; j < spec.shape[1]; ++j) {
      for (int k = 0; k < spec.shape[2]; ++k) {
        const Vec3 x = spec.point3(i, j, k);
        const SdfEval e1 = eval_full(s1, q1, x);
        const SdfEval e2 = eval_full(s2, q2, x);
        const double sg1 = sigmoid_stable(-a * e1.value);
        const double sg2 = sigmoid_stable(-a * e2.value);
        out.value += sg1 * sg2 * cell;
        const double d1 = -a * sg1 * (1.0 - sg1) * sg2 * cell;
        const double d2 = -a * sg2 * (1.0 - sg2) * sg1 * cell;
        out.grad_q.head(np) += d1 * e1.grad_pose;
        out.grad_q.tail(np) += d2 * e2.grad_pose;
      }
    }
  }
  return out;
}

FunctionalValue h_coll_from_grids(const GridEval& g1, const GridEval& g2, double a,
                                  double cell_measure) {
  FunctionalValue out;
  out.grad_q = Eigen::VectorXd::Zero(6);
  const size_t n = g1.field.values.size();
  if (g2.field.values.size() != n)
    throw std::invalid_argument("h_coll_from_grids: grid size mismatch");
  double value = 0.0;
  double gq[6] = {0, 0, 0, 0, 0, 0};
  for (size_t i = 0; i < n; ++i) {
    const double sg1 = sigmoid_stable(-a * g1.field.values[i]);
    const double sg2 = sigmoid_stable(-a * g2.field.values[i]);
    value += sg1 * sg2;
    const double d1 = -a * sg1 * (1.0 - sg1) * sg2;
    const double d2 = -a * sg2 * (1.0 - sg2) * sg1;
    gq[0] += d1 * g1.dpose[0][i];
    gq[1] += d1 * g1.dpose[1][i];
    gq[2] += d1 * g1.dpose[2][i];
    gq[3] += d2 * g2.dpose[0][i];
    gq[4] += d2 * g2.dpose[1][i];
    gq[5] += d2 * g2.dpose[2][i];
  }
  out.value = value * cell_measure;
  for (int k = 0; k < 6; ++k) out.grad_q[k] = gq[k] * cell_measure;
  return out;
}

FunctionalValue h_goal(const SdfShape& obj, const RigidTransform& q_obj,
                       const SdfShape& goal, const GridSpec& spec, double a) {
  if (a <= 0.0) throw std::invalid_argument("h_goal: sharpness a must be > 0");
  if (obj.dim != goal.dim || obj.dim != spec.dim)
    throw std::invalid_argument("h_goal: dimension mismatch");
  if (spec.dim == 2) {
    const GridEval g_obj = evaluate_grid_with_pose_grads(obj, q_obj, spec);
    const GridField g_goal = evaluate_grid(goal, RigidTransform::identity(2), spec);
    return h_goal_from_grids(g_obj, g_goal, a, spec.cell_measure());
  }
  FunctionalValue out;
  const int np = pose_param_count(3);
  out.grad_q = Eigen::VectorXd::Zero(np);
  const double cell = spec.cell_measure();
  const RigidTransform id3 = RigidTransform::identity(3);
  for (int i = 0; i < spec.shape[0]; ++i) {
    for (int j = 0; j < spec.shape[1]; ++j) {
      for (int k = 0; k < spec.shape[2]; ++k) {
        const Vec3 x = spec.point3(i, j, k);
        const SdfEval eo = eval_full(obj, q_obj, x);
        const double pg = eval(goal, id3, x);
        const double so = sigmoid_stable(-a * eo.value);
        const double sg = sigmoid_stable(a * pg);
        out.value += so * sg * cell;
        out.grad_q += (-a * so * (1.0 - so) * sg * cell) * eo.grad_pose;
      }
    }
  }
  return out;
}

FunctionalValue h_goal_from_grids(const GridEval& g_obj, const GridField& g_goal,
                                  double a, double cell_measure) {
  FunctionalValue out;
  out.grad_q = Eigen::VectorXd::Zero(3);
  const size_t n = g_obj.field.values.size();
  if (g_goal.values.size() != n)
    throw std::invalid_argument("h_goal_from_grids: grid size mismatch");
  double value = 0.0;
  double gq[3] = {0, 0, 0};
  for (size_t i = 0; i < n; ++i) {
    const double so = sigmoid_stable(-a * g_obj.field.values[i]);
    const double sg = sigmoid_stable(a * g_goal.values[i]);
    value += so * sg;
    const double d = -a * so * (1.0 - so) * sg;
    gq[0] += d * g_obj.dpose[0][i];
    gq[1] += d * g_obj.dpose[1][i];
    gq[2] += d * g_obj.dpose[2][i];
  }
  out.value = value * cell_measure;
  for (int k = 0; k < 3; ++k) out.grad_q[k] = gq[k] * cell_measure;
  return out;
}

PocResidual h_poc_residual(const SdfShape& s1, const RigidTransform& q1,
                           const SdfShape& s2, const RigidTransform& q2,
                           const GridSpec& spec, const Eigen::VectorXd& p) {
  if (s1.dim != s2.dim || s1.dim != spec.dim || p.size() != spec.dim)
    throw std::invalid_argument("h_poc_residual: dimension mismatch");
  PocResidual out;
  if (spec.dim != 2)
    throw std::invalid_argument("h_poc_residual: 2D only at this scale");
  const Vec2 praw(p[0], p[1]);
  const Vec2 pc = spec.clamp2(praw);
  out.clamped = (pc - praw).squaredNorm() > 0.0;
  const Vec2 dp = praw - pc;
  out.bound_penalty = dp.squaredNorm();
  out.bound_penalty_grad_p = Eigen::VectorXd(2);
  out.bound_penalty_grad_p << 2.0 * dp.x(), 2.0 * dp.y();

  const Eigen::VectorXd pcv = (Eigen::VectorXd(2) << pc.x(), pc.y()).finished();
  const SdfEval e1 = eval_full(s1, q1, pcv);
  const SdfEval e2 = eval_full(s2, q2, pcv);
  out.r1 = e1.value;
  out.r2 = e2.value;
  out.grad_q1_r1 = e1.grad_pose;
  out.grad_q2_r2 = e2.grad_pose;
  // Gradient w.r.t. p is zero in clamped directions (residual constant there).
  Eigen::VectorXd gp1 = e1.grad_x, gp2 = e2.grad_x;
  for (int k = 0; k < 2; ++k) {
    if (dp[k] != 0.0) {
      gp1[k] = 0.0;
      gp2[k] = 0.0;
    }
  }
  out.grad_p_r1 = gp1;
  out.grad_p_r2 = gp2;
  return out;
}

GridField occupancy_transform(const GridField& f, double b) {
  if (!(b > 0.0) && !std::isinf(b))
    throw std::invalid_argument("occupancy: b must be > 0 or infinity");
  GridField out = f;
  if (std::isinf(b)) {
    for (auto& v : out.values) v = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  } else {
    for (auto& v : out.values) v = std::tanh(b * v);
  }
  return out;
}

GridField occupancy_field(const SdfShape& shape, const RigidTransform& pose,
                          const GridSpec& spec, double b) {
  return occupancy_transform(evaluate_grid(shape, pose, spec), b);
}

}  // namespace sdfplan
