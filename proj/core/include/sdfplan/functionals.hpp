#pragma once

#include "sdfplan/grid.hpp"

namespace sdfplan {

/// Sigmoid sharpness for the smoothed indicator brackets: collision and goal
/// integrals use sigma(-a*phi) with the respective parameter.
struct SmoothingParams {
  double a_coll = 500.0;
  double a_goal = 100.0;
};

/// Numerically stable logistic sigmoid.
double sigmoid_stable(double z);

/// Value of a task functional together with its partial derivatives w.r.t.
/// every pose parameter involved (concatenated per object) and, when present,
/// w.r.t. the auxiliary contact point.
struct FunctionalValue {
  double value = 0.0;
  Eigen::VectorXd grad_q;
  Eigen::VectorXd grad_p;
};

/// Pair-collision overlap integral: midpoint Riemann sum over the grid of
/// sigma(-a phi1) sigma(-a phi2) times the cell measure. Approximately the
/// overlap area (2D) / volume (3D) for sharp a; zero when disjoint.
/// grad_q holds [d/dq1, d/dq2].
FunctionalValue h_coll(const SdfShape& s1, const RigidTransform& q1, const SdfShape& s2,
                       const RigidTransform& q2, const GridSpec& spec, double a);

/// Goal containment integral: sigma(-a phi_obj) sigma(+a phi_goal) summed over
/// the grid; zero (up to smoothing tolerance) iff the object lies fully inside
/// the static goal region, approximately the outside-goal object area
/// otherwise. grad_q holds d/dq_obj.
FunctionalValue h_goal(const SdfShape& obj, const RigidTransform& q_obj,
                       const SdfShape& goal, const GridSpec& spec, double a);

/// Point-of-contact residual pair (phi1(p), phi2(p)): both zero iff p is a
/// shared surface point. p is clamped into the grid extent when outside
/// (flagged), with a quadratic bound penalty reported for the optimizer.
struct PocResidual {
  double r1 = 0.0, r2 = 0.0;
  Eigen::VectorXd grad_q1_r1;  // d r1 / d q1
  Eigen::VectorXd grad_q2_r2;  // d r2 / d q2
  Eigen::VectorXd grad_p_r1;   // d r1 / d p (at the clamped point)
  Eigen::VectorXd grad_p_r2;
  bool clamped = false;
  double bound_penalty = 0.0;  // |p - clamp(p)|^2
  Eigen::VectorXd bound_penalty_grad_p;
};
PocResidual h_poc_residual(const SdfShape& s1, const RigidTransform& q1,
                           const SdfShape& s2, const RigidTransform& q2,
                           const GridSpec& spec, const Eigen::VectorXd& p);

/// Occupancy transform of the SDF grid: hard sign for b = infinity, else
/// tanh(b * phi). Baseline experiments only.
GridField occupancy_field(const SdfShape& shape, const RigidTransform& pose,
                          const GridSpec& spec, double b);
/// Same transform applied to an existing field.
GridField occupancy_transform(const GridField& f, double b);

/// Grid-cache variants used by the planner: fields and per-point pose
/// gradients are evaluated once per (object, timestep) and shared between
/// functionals.
FunctionalValue h_coll_from_grids(const GridEval& g1, const GridEval& g2, double a,
                                  double cell_measure);
FunctionalValue h_goal_from_grids(const GridEval& g_obj, const GridField& g_goal,
                                  double a, double cell_measure);

}  // namespace sdfplan
