#include "sdfplan/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace sdfplan {

void PushParams::validate() const {
  if (!(mu > 0.0 && mu <= 2.0)) throw std::invalid_argument("push: mu must be in (0, 2]");
  if (!(c > 0.0)) throw std::invalid_argument("push: limit-surface ratio c must be > 0");
  if (!(substep > 0.0)) throw std::invalid_argument("push: substep must be > 0");
}

namespace {

/// Pose update that rotates the body by dtheta about a world-frame pivot and
/// then translates by dx.
RigidTransform twist_pose(const RigidTransform& q, const Vec2& pivot, const Vec2& dx,
                          double dtheta) {
  const RigidTransform rot =
      compose(RigidTransform::make2(pivot.x() + dx.x(), pivot.y() + dx.y(), dtheta),
              RigidTransform::make2(-pivot.x(), -pivot.y(), 0.0));
  return compose(rot, q);
}

/// Ellipsoidal limit-surface response: object twist produced by pushing at
/// contact point with offset r from the center of mass, inward normal n_in,
/// friction mu, anisotropy c, and pusher contact-point motion v.
/// Returns (dx, dtheta) of the object (dx at the center of mass).
void limit_surface_twist(const Vec2& r, const Vec2& n_in, const Vec2& v, double mu,
                         double c, Vec2& dx, double& dtheta) {
  const double c2 = c * c;
  // Sticking: solve (I + perp(r) perp(r)^T / c^2) F = v.
  const Vec2 pr = perp(r);
  Mat2 M = Mat2::Identity();
  M.noalias() += (pr * pr.transpose()) / c2;
  const Vec2 F = M.inverse() * v;

  const Vec2 t_hat = perp(n_in);
  const double fn = F.dot(n_in);
  const double ft = F.dot(t_hat);
  if (fn <= 0.0) {
    // Pusher separating; no force transmitted.
    dx = Vec2::Zero();
    dtheta = 0.0;
    return;
  }
  if (std::abs(ft) <= mu * fn) {
    // Sticking: the object's contact point follows the pusher exactly.
    dx = F;
    dtheta = cross2(r, F) / c2;
    return;
  }
  // Sliding: force saturates on the friction cone edge the sticking solution
  // pointed at; magnitude set by matching the normal approach rate.
  const double s = ft > 0.0 ? 1.0 : -1.0;
  const Vec2 f_hat = (n_in + s * mu * t_hat).normalized();
  const Vec2 Mf = Vec2(f_hat + (cross2(r, f_hat) / c2) * pr);
  const double denom = Mf.dot(n_in);
  if (denom <= 1e-12) {
    dx = v.dot(n_in) * n_in;  // degenerate: pure normal push
    dtheta = 0.0;
    return;
  }
  const double kappa = v.dot(n_in) / denom;
  dx = kappa * f_hat;
  dtheta = kappa * cross2(r, f_hat) / c2;
}

}  // namespace

PushSim::PushSim(const Scene& scene, const PushParams& params)
    : scene_(&scene), params_(params) {
  params_.validate();
  scene.validate();
  if (scene.pusher < 0) throw std::invalid_argument("PushSim: scene has no pusher");
  for (const auto& o : scene.objects) {
    poses_.push_back(o.pose);
    Body b;
    if (o.role == ObjectRole::Movable) {
      const AreaCentroid ac = shape_area_centroid(o.shape, 0.002);
      if (ac.area <= 0.0)
        throw std::invalid_argument("PushSim: movable object has zero area");
      b.com_body = ac.centroid;
      b.area = ac.area;
      b.samples = interior_points(o.shape, 0.004);
    }
    bodies_.push_back(std::move(b));
  }
}

const RigidTransform& PushSim::pose(int object) const {
  return poses_.at(static_cast<size_t>(object));
}

void PushSim::set_pose(int object, const RigidTransform& q) {
  poses_.at(static_cast<size_t>(object)) = q;
}

void PushSim::step_push(const Vec2& displacement) {
  const double len = displacement.norm();
  const int nsub = std::max(1, static_cast<int>(std::ceil(len / params_.substep)));
  const Vec2 dv = displacement / static_cast<double>(nsub);
  const int pusher = scene_->pusher;
  const double rp = scene_->objects[static_cast<size_t>(pusher)].shape.params[0];

  for (int s = 0; s < nsub; ++s) {
    RigidTransform& qp = poses_[static_cast<size_t>(pusher)];
    qp.translation.x() += dv.x();
    qp.translation.y() += dv.y();
    const Vec2 cp(qp.translation.x(), qp.translation.y());

    // Single contact against the nearest movable object.
    for (int iter = 0; iter < 25; ++iter) {
      int hit = -1;
      double deepest = params_.penetration_tol;
      for (const int oi : scene_->movable_indices()) {
        const auto& obj = scene_->objects[static_cast<size_t>(oi)];
        const double phi = eval(obj.shape, poses_[static_cast<size_t>(oi)], cp);
        const double pen = rp - phi;
        if (pen > deepest) {
          deepest = pen;
          hit = oi;
        }
      }
      if (hit < 0) break;
      if (deepest > params_.fault_depth + rp)
        throw SimFault("step_push: unresolvable penetration of " +
                       std::to_string(deepest) + " m");
      const auto& obj = scene_->objects[static_cast<size_t>(hit)];
      const RigidTransform& qo = poses_[static_cast<size_t>(hit)];
      const double phi = eval(obj.shape, qo, cp);
      const Vec2 n_out = grad2(obj.shape, qo, cp);  // away from the object
      const Vec2 contact = cp - phi * n_out;        // nearest surface point
      const Vec2 n_in = -n_out;
      const double pen = rp - phi;
      // Effective pusher motion at the contact: resolve the accumulated
      // normal overlap, keep this substep's tangential slide.
      const Vec2 t_hat = perp(n_in);
      const Vec2 v_eff = pen * n_in + dv.dot(t_hat) * t_hat;
      resolve_contact(hit, contact, n_out, pen, v_eff, 0);
    }
  }
}

void PushSim::resolve_contact(int obj, const Vec2& contact_pt, const Vec2& normal_out,
                              double /*depth*/, const Vec2& pusher_motion,
                              int chain_depth) {
  const Body& body = bodies_[static_cast<size_t>(obj)];
  RigidTransform& q = poses_[static_cast<size_t>(obj)];
  const Vec2 com_world = q.apply(body.com_body);
  const Vec2 r = contact_pt - com_world;
  Vec2 dx;
  double dtheta;
  limit_surface_twist(r, -normal_out, pusher_motion, params_.mu, params_.c, dx, dtheta);
  if (dx.squaredNorm() == 0.0 && dtheta == 0.0) return;
  q = twist_pose(q, com_world, dx, dtheta);
  q.theta = wrap_angle(q.theta);
  if (chain_depth < 3) resolve_object_object(obj, chain_depth + 1);
}

bool PushSim::object_pair_contact(int a, int b, Vec2& point, Vec2& normal_out,
                                  double& depth) const {
  // Deepest mutual penetration, probing a's interior samples in b's field and
  // vice versa. normal_out points out of the *other* body (the direction that
  // separates the probing body).
  depth = 0.0;
  bool found = false;
  auto probe = [&](int src, int dst, bool flip) {
    const Body& sb = bodies_[static_cast<size_t>(src)];
    const auto& dst_obj = scene_->objects[static_cast<size_t>(dst)];
    const RigidTransform& qs = poses_[static_cast<size_t>(src)];
    const RigidTransform& qd = poses_[static_cast<size_t>(dst)];
    const std::vector<Vec2>* samples = &sb.samples;
    std::vector<Vec2> tmp;
    if (samples->empty()) {
      tmp = interior_points(scene_->objects[static_cast<size_t>(src)].shape, 0.004);
      samples = &tmp;
    }
    for (const Vec2& s : *samples) {
      const Vec2 x = qs.apply(s);
      const double phi = eval(dst_obj.shape, qd, x);
      if (phi < 0.0) {
        const double d = -phi;
        if (d > depth) {
          depth = d;
          point = x;
          Vec2 g = grad2(dst_obj.shape, qd, x);
          normal_out = flip ? Vec2(-g) : g;
          found = true;
        }
      }
    }
  };
  probe(a, b, false);   // a's samples inside b: separate a along +grad(b)
  probe(b, a, true);    // b's samples inside a: separate a along -grad(a)
  return found && depth > params_.penetration_tol;
}

void PushSim::resolve_object_object(int src, int chain_depth) {
  // src just moved; push any movable object it now overlaps, or back off from
  // obstacles.
  const Body& sb = bodies_[static_cast<size_t>(src)];
  for (size_t bi = 0; bi < scene_->objects.size(); ++bi) {
    const int b = static_cast<int>(bi);
    if (b == src || b == scene_->pusher) continue;
    const ObjectRole role = scene_->objects[bi].role;
    if (role != ObjectRole::Movable && role != ObjectRole::Obstacle) continue;

    for (int iter = 0; iter < 20; ++iter) {
      Vec2 point, n_sep;
      double depth;
      // n_sep: direction separating src from b.
      if (!object_pair_contact(src, b, point, n_sep, depth)) break;
      if (depth > params_.fault_depth)
        throw SimFault("object contact: unresolvable penetration");
      if (role == ObjectRole::Obstacle) {
        // Obstacles are immovable: push src back out.
        RigidTransform& qs = poses_[static_cast<size_t>(src)];
        qs.translation.x() += n_sep.x() * depth;
        qs.translation.y() += n_sep.y() * depth;
      } else {
        // Treat src as the pusher of b: b yields along -n_sep.
        const RigidTransform& qb = poses_[bi];
        const Body& bb = bodies_[bi];
        const Vec2 com_b = qb.apply(bb.com_body);
        const Vec2 rb = point - com_b;
        Vec2 dxb;
        double dthb;
        limit_surface_twist(rb, -n_sep, depth * (-n_sep), params_.mu, params_.c, dxb,
                            dthb);
        if (dxb.squaredNorm() == 0.0 && dthb == 0.0) {
          // Fall back: translate b out.
          dxb = -n_sep * depth;
          dthb = 0.0;
        }
        RigidTransform& qbm = poses_[bi];
        qbm = twist_pose(qbm, com_b, dxb, dthb);
        qbm.theta = wrap_angle(qbm.theta);
        if (chain_depth < 3) resolve_object_object(b, chain_depth + 1);
      }
    }
  }
  (void)sb;
}

ExecutionResult execute_open_loop(const Scene& scene,
                                  const std::vector<Vec2>& pusher_positions,
                                  const PushParams& params, int interp_steps) {
  ExecutionResult res;
  PushSim sim(scene, params);
  try {
    if (!pusher_positions.empty()) {
      // Snap the simulated pusher to the plan's starting position first.
      RigidTransform q0 = sim.pose(scene.pusher);
      const Vec2 start(q0.translation.x(), q0.translation.y());
      Vec2 prev = start;
      for (const Vec2& target : pusher_positions) {
        const Vec2 delta = (target - prev) / static_cast<double>(interp_steps);
        for (int k = 0; k < interp_steps; ++k) sim.step_push(delta);
        prev = target;
      }
    }
  } catch (const SimFault& f) {
    res.fault = true;
    res.fault_message = f.what();
  }
  for (size_t i = 0; i < scene.objects.size(); ++i)
    res.final_poses.push_back(sim.pose(static_cast<int>(i)));
  if (scene.goal && scene.target >= 0) {
    res.coverage = coverage(scene.target_obj().shape,
                            res.final_poses[static_cast<size_t>(scene.target)],
                            *scene.goal, scene.grid.spacing / 4.0);
  }
  return res;
}

double coverage(const SdfShape& object, const RigidTransform& pose, const SdfShape& goal,
                double fine_spacing) {
  const double r = bounding_radius(object);
  const Vec2 c(pose.translation.x(), pose.translation.y());
  const int n = static_cast<int>(std::ceil(2.0 * r / fine_spacing)) + 1;
  const RigidTransform id = RigidTransform::identity(2);
  long inside = 0, inside_goal = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 x = c + Vec2(-r + i * fine_spacing, -r + j * fine_spacing);
      if (eval(object, pose, x) < 0.0) {
        ++inside;
        if (eval(goal, id, x) < 0.0) ++inside_goal;
      }
    }
  }
  if (inside == 0) throw std::invalid_argument("coverage: object has zero area");
  return static_cast<double>(inside_goal) / static_cast<double>(inside);
}

// ---------------------------------------------------------------------------
// Drop oracle (2D hanging)

namespace {

struct DropContext {
  const SdfShape* hook;
  std::vector<Vec2> samples;      // mug interior, body frame
  std::vector<double> mug_depth;  // -phi_mug at each sample (> 0)
  Vec2 com_body;
  double ground_y;
  double tol;
};

struct ContactInfo {
  bool contact = false;
  double depth = 0.0;
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  // pushes the mug out of the hook
};

ContactInfo deepest_contact(const DropContext& ctx, const RigidTransform& q) {
  ContactInfo info;
  const RigidTransform id = RigidTransform::identity(2);
  for (size_t i = 0; i < ctx.samples.size(); ++i) {
    const Vec2 x = q.apply(ctx.samples[i]);
    const double phi = eval(*ctx.hook, id, x);
    if (phi < 0.0) {
      const double d = std::min(-phi, ctx.mug_depth[i]);
      if (d > info.depth) {
        info.depth = d;
        info.point = x;
        info.contact = true;
      }
    }
  }
  if (info.contact) info.normal = grad2(*ctx.hook, id, info.point);
  return info;
}

double lowest_point_y(const DropContext& ctx, const RigidTransform& q) {
  double lo = std::numeric_limits<double>::infinity();
  const double c = std::cos(q.theta), s = std::sin(q.theta);
  for (const Vec2& p : ctx.samples) {
    const double y = s * p.x() + c * p.y() + q.translation.y();
    lo = std::min(lo, y);
  }
  return lo;
}

double com_y(const DropContext& ctx, const RigidTransform& q) {
  const Vec2 c = q.apply(ctx.com_body);
  return c.y();
}

bool feasible(const DropContext& ctx, const RigidTransform& q) {
  return deepest_contact(ctx, q).depth <= ctx.tol;
}

/// Projects q out of penetration along the contact normal; false if stuck.
bool project_out(const DropContext& ctx, RigidTransform& q) {
  for (int i = 0; i < 12; ++i) {
    const ContactInfo ci = deepest_contact(ctx, q);
    if (ci.depth <= ctx.tol) return true;
    q.translation.x() += ci.normal.x() * (ci.depth + 1e-5);
    q.translation.y() += ci.normal.y() * (ci.depth + 1e-5);
  }
  return deepest_contact(ctx, q).depth <= ctx.tol;
}

enum class DescentOutcome { Equilibrium, Ground, NoConvergence };

DescentOutcome descend(const DropContext& ctx, RigidTransform& q, const DropParams& prm) {
  const double dth = prm.step / 0.05;  // rotation step matching ~5 cm lever arm
  for (int iter = 0; iter < prm.max_iters; ++iter) {
    if (lowest_point_y(ctx, q) <= ctx.ground_y) return DescentOutcome::Ground;
    const double e0 = com_y(ctx, q);
    const ContactInfo ci = deepest_contact(ctx, q);

    RigidTransform best = q;
    double best_e = e0 - 1e-9;
    bool improved = false;
    auto consider = [&](const RigidTransform& cand) {
      if (!feasible(ctx, cand)) return;
      const double e = com_y(ctx, cand);
      if (e < best_e) {
        best_e = e;
        best = cand;
        improved = true;
      }
    };

    // Straight drop, with projection when it lands in contact.
    {
      RigidTransform cand = q;
      cand.translation.y() -= prm.step;
      if (!feasible(ctx, cand)) project_out(ctx, cand);
      consider(cand);
    }
    if (ci.contact || ci.depth > 0.0) {
      const Vec2 pivot = ci.point;
      for (const double s : {dth, -dth}) {
        RigidTransform cand = twist_pose(q, pivot, Vec2::Zero(), s);
        cand.theta = wrap_angle(cand.theta);
        if (!feasible(ctx, cand)) project_out(ctx, cand);
        consider(cand);
      }
      const Vec2 t_hat = perp(ci.normal);
      for (const double s : {prm.step, -prm.step}) {
        RigidTransform cand = q;
        cand.translation.x() += t_hat.x() * s;
        cand.translation.y() += t_hat.y() * s;
        if (!feasible(ctx, cand)) project_out(ctx, cand);
        consider(cand);
      }
    }
    if (!improved) return DescentOutcome::Equilibrium;
    q = best;
  }
  return DescentOutcome::NoConvergence;
}

}  // namespace

DropResult drop_stability(const SdfShape& hook, const SdfShape& mug,
                          const RigidTransform& q0, const DropParams& prm) {
  DropResult res;
  DropContext ctx;
  ctx.hook = &hook;
  ctx.samples = interior_points(mug, prm.sample_spacing);
  if (ctx.samples.empty()) throw std::invalid_argument("drop_stability: empty mug");
  ctx.mug_depth.reserve(ctx.samples.size());
  Vec2 com = Vec2::Zero();
  for (const Vec2& s : ctx.samples) {
    ctx.mug_depth.push_back(-eval_body2(mug, s));
    com += s;
  }
  com /= static_cast<double>(ctx.samples.size());
  ctx.com_body = com;
  ctx.ground_y = prm.ground_y;
  ctx.tol = 5e-4;

  RigidTransform q = q0;

  // Initial collision rejects immediately.
  if (deepest_contact(ctx, q).depth > prm.collision_tol) {
    res.initial_collision = true;
    res.stable = false;
    res.settled = q;
    return res;
  }

  // Fast reject: if the mug's x-range cannot reach the hook, it falls
  // straight to the ground.
  {
    const double mug_r = bounding_radius(mug);
    const double hook_r = bounding_radius(hook);
    const double dxc = std::abs(q.translation.x());
    if (dxc > mug_r + hook_r) {
      res.stable = false;
      res.settled = q;
      return res;
    }
  }

  const DescentOutcome out = descend(ctx, q, prm);
  if (out != DescentOutcome::Equilibrium) {
    res.stable = false;
    res.settled = q;
    return res;
  }

  // Perturbation persistence: the settled pose must survive lateral and
  // angular nudges (the drop-impulse analog).
  const RigidTransform settled = q;
  res.settled = settled;
  for (int k = 0; k < 4; ++k) {
    RigidTransform qp = settled;
    switch (k) {
      case 0: qp.translation.x() += prm.perturb_dx; break;
      case 1: qp.translation.x() -= prm.perturb_dx; break;
      case 2:
      case 3: {
        const Vec2 com_w = settled.apply(ctx.com_body);
        qp = twist_pose(settled, com_w, Vec2::Zero(),
                        k == 2 ? prm.perturb_dtheta : -prm.perturb_dtheta);
        qp.theta = wrap_angle(qp.theta);
        break;
      }
    }
    if (!project_out(ctx, qp)) {
      res.stable = false;
      return res;
    }
    if (descend(ctx, qp, prm) != DescentOutcome::Equilibrium) {
      res.stable = false;
      return res;
    }
  }
  res.stable = true;
  return res;
}

}  // namespace sdfplan
