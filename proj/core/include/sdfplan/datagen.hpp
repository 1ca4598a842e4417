#pragma once

#include "sdfplan/models.hpp"
#include "sdfplan/scene.hpp"
#include "sdfplan/sim.hpp"

namespace sdfplan {

/// Workspace defaults: pushing on a 0.64 m square at 1 cm resolution,
/// hanging on a 0.48 m square. The paper-scale pushing grid (140 x 140 over
/// 1.4 m) is available through the harness flags.
GridSpec default_push_grid();
GridSpec default_hang_grid();
GridSpec paper_push_grid();

struct PushDataGenConfig {
  GridSpec grid = default_push_grid();
  double box_half_min = 0.03, box_half_max = 0.08;
  double l_len_min = 0.10, l_len_max = 0.16;
  double l_wid_min = 0.03, l_wid_max = 0.05;
  double pusher_r_min = 0.012, pusher_r_max = 0.025;
  double segment_min = 0.02, segment_max = 0.10;
  double bias_sigma_deg = 30.0;  // angular noise around the object-center direction
  int record_every = 20;         // substeps between recorded instants
  int max_transitions = 10;      // per-scene cap
  int max_segments = 60;
  double margin_cells = 2.0;     // initial placement margin
  std::string shape_set = "train";  // "train" (boxes + L) or "ood" (plus/T/U)
  PushParams push;

  std::string describe() const;
};

/// Shapes and recorded poses of one generated scene (for consistency checks).
struct PushSceneLog {
  SdfShape object, pusher;
  std::vector<RigidTransform> object_poses, pusher_poses;  // at recorded instants
};

/// Per scene: sample shapes and poses, push with segments biased toward the
/// object center, record a transition every `record_every` substeps, stop
/// when the object's center leaves the workspace. Deterministic per seed,
/// independent of worker count (per-scene derived streams).
PushDataset gen_push_dataset(int n_scenes, uint64_t seed, const PushDataGenConfig& cfg,
                             int workers = 1, std::vector<PushSceneLog>* logs = nullptr);

struct HangDataGenConfig {
  GridSpec grid = default_hang_grid();
  int configs_per_scene = 20;
  int attempt_cap = 5000;
  int scene_resample_cap = 10;
  // Mug parameter ranges.
  double mug_radius_min = 0.050, mug_radius_max = 0.075;
  double mug_wall_min = 0.010, mug_wall_max = 0.014;
  double opening_min = 0.020, opening_max = 0.035;
  double handle_height_min = -0.35, handle_height_max = 0.35;
  double handle_extent_min = 0.035, handle_extent_max = 0.060;
  double handle_gap_min = 0.030, handle_gap_max = 0.046;
  double handle_thickness_min = 0.006, handle_thickness_max = 0.009;
  // Hook parameter ranges.
  double hook_radius_min = 0.005, hook_radius_max = 0.009;
  DropParams drop;

  std::string describe() const;
};

MugParams sample_mug(Rng& rng, const HangDataGenConfig& cfg);
HookParams sample_hook(Rng& rng, const HangDataGenConfig& cfg);

/// Per scene: sample mug and hook, uniformly sample mug poses until at least
/// one drop-stable configuration (cap, then resample the scene), then fill to
/// `configs_per_scene` labeled samples. Most scenes end up with exactly one
/// positive among twenty.
HangDataset gen_hang_dataset(int n_scenes, uint64_t seed, const HangDataGenConfig& cfg,
                             int workers = 1);

struct EvalSceneConfig {
  GridSpec push_grid = default_push_grid();
  GridSpec hang_grid = default_hang_grid();
  double center_jitter = 0.03;   // object offset from the workspace middle
  double pusher_gap_cells = 2.0; // initial pusher clearance
  double goal_dist_min = 0.16, goal_dist_max = 0.22;
  double goal_noise_sigma = 0.02;  // Gaussian noise on the 8 ring positions
  double goal_radius_factor = 1.15;
  double goal_radius_pad = 0.02;
  PushDataGenConfig shapes;  // shape ranges reused
  HangDataGenConfig hang;

  std::string describe() const;
};

/// Evaluation scenes per task: push_box, push_L, push_ood, push_obstacle,
/// push_three_objects, hang.
std::vector<Scene> gen_eval_scenes(const std::string& task, int n, uint64_t seed,
                                   const EvalSceneConfig& cfg);

/// Shared samplers (exposed for tests).
SdfShape sample_push_object(Rng& rng, const PushDataGenConfig& cfg);
SdfShape sample_ood_object(Rng& rng, const PushDataGenConfig& cfg);

}  // namespace sdfplan
