#pragma once

#include "sdfplan/scene.hpp"

namespace sdfplan {

/// Quasi-static pushing parameters: pusher-object friction ratio, the
/// ellipsoidal limit-surface anisotropy c (ratio of maximal torque to maximal
/// force resistance, in meters) and the integration substep (pusher
/// arc-length per step).
struct PushParams {
  double mu = 0.5;
  double c = 0.05;
  double substep = 0.0015;
  double penetration_tol = 1e-5;
  double fault_depth = 0.05;  // unresolvable penetration depth

  void validate() const;
};

struct SimFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mutable simulation state: poses of every scene object plus cached
/// per-object mass properties (area centroid, interior samples for
/// object-object contact).
class PushSim {
 public:
  PushSim(const Scene& scene, const PushParams& params = {});

  /// Moves the pusher by `displacement`, resolving quasi-static single-contact
  /// pushing in substeps. Movable objects hit by the pusher (or by other
  /// movable objects downstream) move per the ellipsoidal limit-surface
  /// model; obstacles never move. Throws SimFault on unresolvable deep
  /// penetration.
  void step_push(const Vec2& displacement);

  const RigidTransform& pose(int object) const;
  void set_pose(int object, const RigidTransform& q);
  const Scene& scene() const { return *scene_; }
  const PushParams& params() const { return params_; }

 private:
  struct Body {
    Vec2 com_body = Vec2::Zero();
    double area = 0.0;
    std::vector<Vec2> samples;  // interior points, body frame
  };

  void resolve_contact(int obj, const Vec2& contact_pt, const Vec2& normal_out,
                       double depth, const Vec2& pusher_motion, int chain_depth);
  void resolve_object_object(int src, int chain_depth);
  bool object_pair_contact(int a, int b, Vec2& point, Vec2& normal_out,
                           double& depth) const;

  const Scene* scene_;
  PushParams params_;
  std::vector<RigidTransform> poses_;
  std::vector<Body> bodies_;
};

/// Open-loop execution: linear interpolation with `interp_steps` substeps
/// between consecutive planned pusher positions; returns the final poses and
/// the goal coverage of the target object.
struct ExecutionResult {
  std::vector<RigidTransform> final_poses;
  double coverage = 0.0;
  bool fault = false;
  std::string fault_message;
};
ExecutionResult execute_open_loop(const Scene& scene,
                                  const std::vector<Vec2>& pusher_positions,
                                  const PushParams& params = {}, int interp_steps = 20);

/// Fraction of the object's area inside the goal region, via sharp indicator
/// sums on a fine grid (spacing = scene spacing / 4).
double coverage(const SdfShape& object, const RigidTransform& pose, const SdfShape& goal,
                double fine_spacing);

/// Quasi-static 2D drop oracle for hanging. The mug descends under gravity
/// by projected energy descent (center-of-mass height with contact
/// resolution against the hook); stable iff an equilibrium above the ground
/// is reached and persists under +-1 cm / +-5 deg pose perturbations.
/// An initial mug-hook overlap counts as collision (unstable).
struct DropParams {
  double ground_y = 0.0;          // ground height (world)
  double step = 0.002;            // descent step (m)
  int max_iters = 4000;
  double collision_tol = 5e-4;    // initial penetration depth counted as collision (m)
  double sample_spacing = 0.004;  // mug interior sampling
  double perturb_dx = 0.01;
  double perturb_dtheta = 5.0 * M_PI / 180.0;
};

struct DropResult {
  bool stable = false;
  bool initial_collision = false;
  RigidTransform settled;
};
DropResult drop_stability(const SdfShape& hook, const SdfShape& mug,
                          const RigidTransform& q0, const DropParams& params);

}  // namespace sdfplan
