#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdfplan/autodiff.hpp"
#include "sdfplan/functionals.hpp"
#include "sdfplan/grid.hpp"
#include "sdfplan/util.hpp"

namespace sdfplan {

enum class ModelKind { Flow, Direct, DeltaQ, Success };
enum class FieldRepr { Sdf, OccupancyHard, OccupancySmooth };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);
const char* field_repr_name(FieldRepr r);
FieldRepr field_repr_from_name(const std::string& s);

/// Architecture and data-representation configuration shared by all models.
/// Conv stack: channels 3/5/5, kernels 3/5/5, strides 1/2/2, ReLU, then a
/// linear layer to a 200-dim feature. Dynamics heads additionally encode the
/// query point into 100 dims with one dense+ReLU layer.
struct ModelConfig {
  ModelKind kind = ModelKind::Flow;
  FieldRepr repr = FieldRepr::Sdf;
  double occupancy_b = 1000.0;  // only for OccupancySmooth
  GridSpec grid;
  int input_channels = 1;  // 1 per dynamics grid; 2 stacked for success
  int feature_dim = 200;
  int query_feature_dim = 100;
  int hidden = 300;
  std::array<int, 3> conv_channels = {3, 5, 5};
  std::array<int, 3> conv_kernels = {3, 5, 5};
  std::array<int, 3> conv_strides = {1, 2, 2};
};

/// Named parameter list; all tensors are autodiff leaves with requires_grad.
struct ParamSet {
  std::vector<ad::Tensor> tensors;
  std::vector<std::string> names;

  ad::Tensor add(const std::string& name, std::vector<int> shape, Eigen::ArrayXd init);
  ad::Tensor get(const std::string& name) const;
  long total_size() const;
};

/// Applies the model's field representation to a raw SDF grid (identity for
/// FieldRepr::Sdf).
void apply_repr(const ModelConfig& cfg, const float* src, double* dst, long n);
Eigen::ArrayXd apply_repr_copy(const ModelConfig& cfg, const GridField& f);

/// Forward dynamics model in field space: three grids (object at t-1, second
/// object at t-1 and t) pass through one shared conv encoder; the head maps
/// [features, query point] to the predicted field value at that point.
/// Flow mode predicts the change from the previous object field.
struct DynamicsModel {
  ModelConfig cfg;
  ParamSet params;

  static DynamicsModel create(const ModelConfig& cfg, uint64_t seed);
  /// Zeroes the final head layer; a flow model then reproduces the previous
  /// field exactly (persistence anchor).
  void zero_head();
};

/// Kinematic success model: both grids stacked as a 2-channel input, conv
/// encoder, 3x300 ReLU MLP, softplus output (so H = 0 is attainable).
struct SuccessModel {
  ModelConfig cfg;
  ParamSet params;

  static SuccessModel create(const ModelConfig& cfg, uint64_t seed);
};

/// Baseline that predicts the rigid transformation (dx, dy, dtheta) of the
/// pushed object instead of its field.
struct DeltaQModel {
  ModelConfig cfg;
  ParamSet params;

  static DeltaQModel create(const ModelConfig& cfg, uint64_t seed);
};

/// One recorded pushing transition: fields of both objects at consecutive
/// recording instants plus the ground-truth object motion and contact flag.
struct PushDataset {
  GridSpec grid;
  uint64_t seed = 0;
  uint64_t config_digest = 0;
  std::string generator_config;  // resolved generator parameters, text
  // Per-sample grids, concatenated (n * num_points floats each).
  std::vector<float> g1prev, g1curr, g2prev, g2curr;
  std::vector<Eigen::Vector3d> dq;  // ground-truth object delta (x, y, theta)
  std::vector<uint8_t> contact;
  std::vector<uint32_t> scene_id;

  long n() const { return static_cast<long>(contact.size()); }
  long grid_points() const { return grid.num_points(); }
};

/// Labeled static configuration for the hanging task.
struct HangDataset {
  GridSpec grid;
  uint64_t seed = 0;
  uint64_t config_digest = 0;
  std::string generator_config;
  std::vector<float> mug, hook;  // n * num_points each
  std::vector<uint8_t> label;
  std::vector<uint32_t> scene_id;

  long n() const { return static_cast<long>(label.size()); }
};

// Graph-building forward passes (autodiff; used for training and gradcheck).

/// Shared conv encoder over one grid (input [C,H,W] flattened row-major).
ad::Tensor encode_grid(const ModelConfig& cfg, const ParamSet& p, const ad::Tensor& grid);

/// Regular quadrature subset of the grid: every stride-th point per axis,
/// offset to center the pattern. stride 1 returns every point.
std::vector<long> quadrature_indices(const GridSpec& spec, int stride);

/// Dynamics head at the given query points (rows of `query_xy`); returns the
/// predicted field values [M]. Flow mode adds gather(g1prev, idx).
ad::Tensor dynamics_forward(const DynamicsModel& m, const ad::Tensor& g1prev,
                            const ad::Tensor& g2prev, const ad::Tensor& g2curr,
                            const Eigen::MatrixX2d& query_xy,
                            const std::vector<long>& grid_indices);

/// Success functional H >= 0 for a stacked [2,H,W] input.
ad::Tensor success_forward(const SuccessModel& m, const ad::Tensor& stacked);

/// DeltaQ head: predicted (dx, dy, dtheta).
ad::Tensor deltaq_forward(const DeltaQModel& m, const ad::Tensor& g1prev,
                          const ad::Tensor& g2prev, const ad::Tensor& g2curr);

/// Predict field values of the object at time t at arbitrary points.
/// Out-of-grid queries use clamped interpolation for the flow base and are
/// flagged via `clamped`.
Eigen::VectorXd predict(const DynamicsModel& m, const GridField& g1prev,
                        const GridField& g2prev, const GridField& g2curr,
                        const Eigen::MatrixX2d& points, bool* clamped = nullptr);

Eigen::Vector3d predict_deltaq(const DeltaQModel& m, const GridField& g1prev,
                               const GridField& g2prev, const GridField& g2curr);

double success_value(const SuccessModel& m, const GridField& mug, const GridField& hook);

// Losses (autodiff graphs over a batch of dataset rows).

/// Mean over the batch of the cell-measure-weighted squared prediction error
/// (the dynamics functional of the training integral). `point_indices` picks
/// the quadrature subset; empty means the full grid.
ad::Tensor loss_dynamics(const DynamicsModel& m, const PushDataset& data,
                         const std::vector<long>& rows,
                         const std::vector<long>& point_indices);

/// Success loss: mean over batch of y H^2 + (1-y) exp(-H).
ad::Tensor loss_success(const SuccessModel& m, const HangDataset& data,
                        const std::vector<long>& rows);

/// Mean squared error of predicted delta poses over the batch.
ad::Tensor loss_deltaq(const DeltaQModel& m, const PushDataset& data,
                       const std::vector<long>& rows);

// Training.

struct TrainConfig {
  int batch = 32;
  double lr = 1e-4;
  int epochs = 10;
  uint64_t seed = 0;
  int points_per_sample = 128;  // stochastic quadrature for dynamics steps
  int eval_points = 512;        // fixed quadrature for per-epoch test loss
  bool verbose = false;
};

struct TrainResult {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> test_loss;
  int best_epoch = -1;
  double best_test = 0.0;
};

/// Deterministic single-threaded training with per-epoch train/test losses;
/// the model is left at the best-test parameters.
TrainResult train_dynamics(DynamicsModel& m, ad::AdamState& adam, const PushDataset& train,
                           const PushDataset& test, const TrainConfig& cfg);
TrainResult train_success(SuccessModel& m, ad::AdamState& adam, const HangDataset& train,
                          const HangDataset& test, const TrainConfig& cfg);
TrainResult train_deltaq(DeltaQModel& m, ad::AdamState& adam, const PushDataset& train,
                         const PushDataset& test, const TrainConfig& cfg);

/// One optimizer step on an explicit batch; exposed for resume tests.
double train_step_dynamics(DynamicsModel& m, ad::AdamState& adam, const PushDataset& data,
                           const std::vector<long>& rows,
                           const std::vector<long>& point_indices);

// Evaluation.

struct RmseStats {
  double mean = 0.0;
  double stddev = 0.0;
  long count = 0;
};

/// Field RMSE per sample (sqrt of the grid-mean squared residual), split by
/// the contact flag, reported in mm (field units x1000). The persistence
/// baseline (previous field carried forward) is evaluated alongside.
struct RmseReport {
  RmseStats contact;
  RmseStats no_contact;
  RmseStats persistence_contact;
  RmseStats persistence_no_contact;
};
RmseReport eval_rmse(const DynamicsModel& m, const PushDataset& data);

/// DeltaQ errors per component: x and y in mm, theta in degrees.
struct DeltaQReport {
  RmseStats x_mm, y_mm, theta_deg;
  RmseStats x_mm_contact, y_mm_contact, theta_deg_contact;
};
DeltaQReport eval_deltaq(const DeltaQModel& m, const PushDataset& data);

// The dynamics functional over poses (analytic SDFs evaluated on the model's
// grid). grad_q = [d/dq1_prev, d/dq1_curr, d/dq2_prev, d/dq2_curr], 12 entries.
// `stride` subsamples the quadrature (stride 1 = the full training grid).
FunctionalValue h_dynamics(const DynamicsModel& m, const SdfShape& obj,
                           const RigidTransform& q1_prev, const RigidTransform& q1_curr,
                           const SdfShape& other, const RigidTransform& q2_prev,
                           const RigidTransform& q2_curr, int stride = 1);

/// Value-only variant with explicit fields (used by tests to inject
/// candidates).
double h_dynamics_fields(const DynamicsModel& m, const GridField& g1prev,
                         const GridField& g1curr, const GridField& g2prev,
                         const GridField& g2curr, int stride = 1);

// Fast fused evaluators (no autodiff graph) used in the planner's inner loop.
// They produce values and pose-gradients identical to h_dynamics.

struct EncoderPlan;  // dense weight views for the fused encoder

class DynamicsEvaluator {
 public:
  DynamicsEvaluator(const DynamicsModel& m, int stride);

  /// One dynamics term bound to four cached grid evaluations.
  struct Term {
    int g1prev = -1, g1curr = -1, g2prev = -1, g2curr = -1;  // indices into grids
  };

  /// Evaluates all terms over a shared table of grid evaluations. Returns
  /// per-term values; when `weights` is non-null, additionally accumulates
  /// d(sum_i weights[i] * h_i)/d(pose of grid slot k) into pose_grads[k]
  /// (3 entries per grid slot).
  void eval_terms(const std::vector<const GridEval*>& grids,
                  const std::vector<Term>& terms, std::vector<double>& values,
                  const std::vector<double>* weights,
                  std::vector<Eigen::Vector3d>* pose_grads) const;

  int stride() const { return stride_; }
  long quadrature_points() const { return static_cast<long>(idx_.size()); }

 private:
  const DynamicsModel& model_;
  int stride_;
  std::vector<long> idx_;  // quadrature node indices into the full grid
  std::shared_ptr<const EncoderPlan> plan_;
  Eigen::MatrixXd q1_;  // precomputed query contribution [M x hidden]
  // Dense copies of the head weights.
  Eigen::MatrixXd w1g_, w2_;
  Eigen::VectorXd w3_, b2_;
  double b3_ = 0.0;
  bool flow_ = true;
};

/// Success functional H plus d(H)/d(mug pose) from cached mug grid evals.
class SuccessEvaluator {
 public:
  explicit SuccessEvaluator(const SuccessModel& m);
  double eval(const GridEval& mug, const GridField& hook, Eigen::Vector3d* pose_grad) const;

 private:
  const SuccessModel& model_;
  std::shared_ptr<const EncoderPlan> plan_;
};

}  // namespace sdfplan
