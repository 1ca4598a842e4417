#include "sdfplan/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sdfplan {

using ad::Tensor;

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Flow: return "flow";
    case ModelKind::Direct: return "direct";
    case ModelKind::DeltaQ: return "deltaq";
    case ModelKind::Success: return "success";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& s) {
  for (ModelKind k : {ModelKind::Flow, ModelKind::Direct, ModelKind::DeltaQ,
                      ModelKind::Success})
    if (s == model_kind_name(k)) return k;
  throw std::invalid_argument("unknown model kind: " + s);
}

const char* field_repr_name(FieldRepr r) {
  switch (r) {
    case FieldRepr::Sdf: return "sdf";
    case FieldRepr::OccupancyHard: return "occupancy";
    case FieldRepr::OccupancySmooth: return "occupancy-smooth";
  }
  return "?";
}

FieldRepr field_repr_from_name(const std::string& s) {
  for (FieldRepr r :
       {FieldRepr::Sdf, FieldRepr::OccupancyHard, FieldRepr::OccupancySmooth})
    if (s == field_repr_name(r)) return r;
  throw std::invalid_argument("unknown field representation: " + s);
}

ad::Tensor ParamSet::add(const std::string& name, std::vector<int> shape,
                         Eigen::ArrayXd init) {
  Tensor t = Tensor::leaf(std::move(shape), std::move(init), true);
  tensors.push_back(t);
  names.push_back(name);
  return t;
}

ad::Tensor ParamSet::get(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  throw std::invalid_argument("parameter not found: " + name);
}

long ParamSet::total_size() const {
  long n = 0;
  for (const auto& t : tensors) n += t.numel();
  return n;
}

namespace {

Eigen::ArrayXd he_normal(Rng& rng, long n, long fan_in) {
  Eigen::ArrayXd v(n);
  const double s = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (long i = 0; i < n; ++i) v[i] = s * rng.normal();
  return v;
}

Eigen::ArrayXd glorot_uniform(Rng& rng, long n, long fan_in, long fan_out) {
  Eigen::ArrayXd v(n);
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (long i = 0; i < n; ++i) v[i] = rng.uniform(-s, s);
  return v;
}

struct ConvOut {
  int h = 0, w = 0;
};

ConvOut conv_out(int h, int w, int k, int s) {
  return {(h - k) / s + 1, (w - k) / s + 1};
}

/// Flattened conv-stack output size for the given grid.
long encoder_flat_size(const ModelConfig& cfg) {
  int h = cfg.grid.shape[0], w = cfg.grid.shape[1];
  for (int l = 0; l < 3; ++l) {
    const ConvOut o = conv_out(h, w, cfg.conv_kernels[static_cast<size_t>(l)],
                               cfg.conv_strides[static_cast<size_t>(l)]);
    h = o.h;
    w = o.w;
    if (h < 1 || w < 1) throw std::invalid_argument("grid too small for the conv stack");
  }
  return static_cast<long>(cfg.conv_channels[2]) * h * w;
}

void add_encoder_params(ParamSet& p, const ModelConfig& cfg, Rng& rng) {
  int ci = cfg.input_channels;
  for (int l = 0; l < 3; ++l) {
    const int co = cfg.conv_channels[static_cast<size_t>(l)];
    const int k = cfg.conv_kernels[static_cast<size_t>(l)];
    const long fan = static_cast<long>(ci) * k * k;
    p.add("enc.k" + std::to_string(l + 1), {co, ci, k, k},
          he_normal(rng, static_cast<long>(co) * ci * k * k, fan));
    p.add("enc.b" + std::to_string(l + 1), {co}, Eigen::ArrayXd::Zero(co));
    ci = co;
  }
  const long flat = encoder_flat_size(cfg);
  p.add("enc.wf", {cfg.feature_dim, static_cast<int>(flat)},
        he_normal(rng, cfg.feature_dim * flat, flat));
  p.add("enc.bf", {cfg.feature_dim}, Eigen::ArrayXd::Zero(cfg.feature_dim));
}

}  // namespace

void apply_repr(const ModelConfig& cfg, const float* src, double* dst, long n) {
  switch (cfg.repr) {
    case FieldRepr::Sdf:
      for (long i = 0; i < n; ++i) dst[i] = static_cast<double>(src[i]);
      break;
    case FieldRepr::OccupancyHard:
      for (long i = 0; i < n; ++i)
        dst[i] = src[i] > 0.f ? 1.0 : (src[i] < 0.f ? -1.0 : 0.0);
      break;
    case FieldRepr::OccupancySmooth:
      for (long i = 0; i < n; ++i)
        dst[i] = std::tanh(cfg.occupancy_b * static_cast<double>(src[i]));
      break;
  }
}

Eigen::ArrayXd apply_repr_copy(const ModelConfig& cfg, const GridField& f) {
  const long n = static_cast<long>(f.values.size());
  Eigen::ArrayXd out(n);
  switch (cfg.repr) {
    case FieldRepr::Sdf:
      for (long i = 0; i < n; ++i) out[i] = f.values[static_cast<size_t>(i)];
      break;
    case FieldRepr::OccupancyHard:
      for (long i = 0; i < n; ++i) {
        const double v = f.values[static_cast<size_t>(i)];
        out[i] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      }
      break;
    case FieldRepr::OccupancySmooth:
      for (long i = 0; i < n; ++i)
        out[i] = std::tanh(cfg.occupancy_b * f.values[static_cast<size_t>(i)]);
      break;
  }
  return out;
}

DynamicsModel DynamicsModel::create(const ModelConfig& cfg_in, uint64_t seed) {
  DynamicsModel m;
  m.cfg = cfg_in;
  m.cfg.input_channels = 1;
  if (m.cfg.kind != ModelKind::Flow && m.cfg.kind != ModelKind::Direct)
    throw std::invalid_argument("DynamicsModel: kind must be flow or direct");
  Rng rng(seed, 17);
  add_encoder_params(m.params, m.cfg, rng);
  const int H = m.cfg.hidden, F = m.cfg.feature_dim, Q = m.cfg.query_feature_dim;
  m.params.add("q.w", {Q, 2}, he_normal(rng, Q * 2, 2));
  m.params.add("q.b", {Q}, Eigen::ArrayXd::Zero(Q));
  m.params.add("head.w1g", {H, 3 * F}, he_normal(rng, static_cast<long>(H) * 3 * F, 3 * F + Q));
  m.params.add("head.w1q", {H, Q}, he_normal(rng, static_cast<long>(H) * Q, 3 * F + Q));
  m.params.add("head.b1", {H}, Eigen::ArrayXd::Zero(H));
  m.params.add("head.w2", {H, H}, he_normal(rng, static_cast<long>(H) * H, H));
  m.params.add("head.b2", {H}, Eigen::ArrayXd::Zero(H));
  if (m.cfg.kind == ModelKind::Flow) {
    // Zero final layer: the model starts exactly at the persistence baseline.
    m.params.add("head.w3", {1, H}, Eigen::ArrayXd::Zero(H));
    m.params.add("head.b3", {1}, Eigen::ArrayXd::Zero(1));
  } else {
    m.params.add("head.w3", {1, H}, glorot_uniform(rng, H, H, 1));
    m.params.add("head.b3", {1}, Eigen::ArrayXd::Zero(1));
  }
  return m;
}

void DynamicsModel::zero_head() {
  params.get("head.w3").value_mut().setZero();
  params.get("head.b3").value_mut().setZero();
}

SuccessModel SuccessModel::create(const ModelConfig& cfg_in, uint64_t seed) {
  SuccessModel m;
  m.cfg = cfg_in;
  m.cfg.kind = ModelKind::Success;
  m.cfg.input_channels = 2;
  Rng rng(seed, 23);
  add_encoder_params(m.params, m.cfg, rng);
  const int H = m.cfg.hidden, F = m.cfg.feature_dim;
  m.params.add("mlp.w1", {H, F}, he_normal(rng, static_cast<long>(H) * F, F));
  m.params.add("mlp.b1", {H}, Eigen::ArrayXd::Zero(H));
  m.params.add("mlp.w2", {H, H}, he_normal(rng, static_cast<long>(H) * H, H));
  m.params.add("mlp.b2", {H}, Eigen::ArrayXd::Zero(H));
  m.params.add("mlp.w3", {H, H}, he_normal(rng, static_cast<long>(H) * H, H));
  m.params.add("mlp.b3", {H}, Eigen::ArrayXd::Zero(H));
  m.params.add("mlp.w4", {1, H}, glorot_uniform(rng, H, H, 1));
  m.params.add("mlp.b4", {1}, Eigen::ArrayXd::Zero(1));
  return m;
}

DeltaQModel DeltaQModel::create(const ModelConfig& cfg_in, uint64_t seed) {
  DeltaQModel m;
  m.cfg = cfg_in;
  m.cfg.kind = ModelKind::DeltaQ;
  m.cfg.input_channels = 1;
  Rng rng(seed, 29);
  add_encoder_params(m.params, m.cfg, rng);
  const int H = m.cfg.hidden, F = m.cfg.feature_dim;
  m.params.add("head.w1", {H, 3 * F}, he_normal(rng, static_cast<long>(H) * 3 * F, 3 * F));
  m.params.add("head.b1", {H}, Eigen::ArrayXd::Zero(H));
  m.params.add("head.w2", {H, H}, he_normal(rng, static_cast<long>(H) * H, H));
  m.params.add("head.b2", {H}, Eigen::ArrayXd::Zero(H));
  // Zero final layer: untrained model predicts no motion.
  m.params.add("head.w3", {3, H}, Eigen::ArrayXd::Zero(3L * H));
  m.params.add("head.b3", {3}, Eigen::ArrayXd::Zero(3));
  return m;
}

ad::Tensor encode_grid(const ModelConfig& cfg, const ParamSet& p, const Tensor& grid) {
  Tensor x = grid;
  if (x.shape().size() == 1)
    x = ad::reshape(x, {cfg.input_channels, cfg.grid.shape[0], cfg.grid.shape[1]});
  for (int l = 0; l < 3; ++l) {
    x = ad::relu(ad::conv2d(x, p.get("enc.k" + std::to_string(l + 1)),
                            p.get("enc.b" + std::to_string(l + 1)),
                            cfg.conv_strides[static_cast<size_t>(l)]));
  }
  x = ad::reshape(x, {static_cast<int>(x.numel())});
  return ad::dense(x, p.get("enc.wf"), p.get("enc.bf"));
}

std::vector<long> quadrature_indices(const GridSpec& spec, int stride) {
  if (stride < 1) throw std::invalid_argument("quadrature stride must be >= 1");
  std::vector<long> idx;
  const int nx = spec.shape[0], ny = spec.shape[1];
  const int ox = ((nx - 1) % stride) / 2, oy = ((ny - 1) % stride) / 2;
  for (int i = ox; i < nx; i += stride)
    for (int j = oy; j < ny; j += stride) idx.push_back(spec.index(i, j));
  return idx;
}

ad::Tensor dynamics_forward(const DynamicsModel& m, const Tensor& g1prev,
                            const Tensor& g2prev, const Tensor& g2curr,
                            const Eigen::MatrixX2d& query_xy,
                            const std::vector<long>& grid_indices) {
  const auto& p = m.params;
  const Tensor f1 = encode_grid(m.cfg, p, g1prev);
  const Tensor f2 = encode_grid(m.cfg, p, g2prev);
  const Tensor f3 = encode_grid(m.cfg, p, g2curr);
  const Tensor fall = ad::concat({f1, f2, f3});

  const long M = query_xy.rows();
  Eigen::ArrayXd xq(M * 2);
  for (long i = 0; i < M; ++i) {
    xq[2 * i] = query_xy(i, 0);
    xq[2 * i + 1] = query_xy(i, 1);
  }
  const Tensor xq_t = Tensor::leaf({static_cast<int>(M), 2}, std::move(xq), false);
  const Tensor qfeat = ad::relu(ad::dense(xq_t, p.get("q.w"), p.get("q.b")));

  // First head layer split into the grid-feature part (vector) and the
  // query part (per row); equivalent to one dense layer on the concat.
  const Tensor zq = ad::dense(qfeat, p.get("head.w1q"), p.get("head.b1"));
  const Tensor zero_h = Tensor::zeros({m.cfg.hidden}, false);
  const Tensor zg = ad::dense(fall, p.get("head.w1g"), zero_h);
  const Tensor a1 = ad::relu(ad::add_rowvec(zq, zg));
  const Tensor a2 = ad::relu(ad::dense(a1, p.get("head.w2"), p.get("head.b2")));
  Tensor out = ad::dense(a2, p.get("head.w3"), p.get("head.b3"));
  out = ad::reshape(out, {static_cast<int>(M)});

  if (m.cfg.kind == ModelKind::Flow) {
    if (static_cast<long>(grid_indices.size()) != M)
      throw std::invalid_argument("dynamics_forward: flow mode needs grid indices");
    out = ad::add(out, ad::gather(g1prev, grid_indices));
  }
  return out;
}

ad::Tensor success_forward(const SuccessModel& m, const Tensor& stacked) {
  const auto& p = m.params;
  Tensor f = encode_grid(m.cfg, p, stacked);
  f = ad::relu(ad::dense(f, p.get("mlp.w1"), p.get("mlp.b1")));
  f = ad::relu(ad::dense(f, p.get("mlp.w2"), p.get("mlp.b2")));
  f = ad::relu(ad::dense(f, p.get("mlp.w3"), p.get("mlp.b3")));
  f = ad::dense(f, p.get("mlp.w4"), p.get("mlp.b4"));
  return ad::softplus(f);
}

ad::Tensor deltaq_forward(const DeltaQModel& m, const Tensor& g1prev, const Tensor& g2prev,
                          const Tensor& g2curr) {
  const auto& p = m.params;
  const Tensor fall = ad::concat({encode_grid(m.cfg, p, g1prev),
                                  encode_grid(m.cfg, p, g2prev),
                                  encode_grid(m.cfg, p, g2curr)});
  Tensor h = ad::relu(ad::dense(fall, p.get("head.w1"), p.get("head.b1")));
  h = ad::relu(ad::dense(h, p.get("head.w2"), p.get("head.b2")));
  return ad::dense(h, p.get("head.w3"), p.get("head.b3"));
}

namespace {

Tensor grid_leaf_from_floats(const ModelConfig& cfg, const float* src, long n,
                             bool requires_grad) {
  Eigen::ArrayXd v(n);
  apply_repr(cfg, src, v.data(), n);
  return Tensor::leaf({static_cast<int>(n)}, std::move(v), requires_grad);
}

Eigen::MatrixX2d points_for_indices(const GridSpec& spec, const std::vector<long>& idx) {
  Eigen::MatrixX2d pts(static_cast<long>(idx.size()), 2);
  for (size_t i = 0; i < idx.size(); ++i) {
    const Vec2 x = spec.point2_flat(idx[i]);
    pts(static_cast<long>(i), 0) = x.x();
    pts(static_cast<long>(i), 1) = x.y();
  }
  return pts;
}

}  // namespace

ad::Tensor loss_dynamics(const DynamicsModel& m, const PushDataset& data,
                         const std::vector<long>& rows,
                         const std::vector<long>& point_indices) {
  if (rows.empty()) throw std::invalid_argument("loss_dynamics: empty batch");
  if (!(data.grid == m.cfg.grid))
    throw std::invalid_argument("loss_dynamics: dataset grid does not match the model");
  const long N = data.grid_points();
  std::vector<long> idx = point_indices;
  if (idx.empty()) {
    idx.resize(static_cast<size_t>(N));
    for (long i = 0; i < N; ++i) idx[static_cast<size_t>(i)] = i;
  }
  const Eigen::MatrixX2d pts = points_for_indices(data.grid, idx);
  const double total_measure =
      static_cast<double>(N) * data.grid.cell_measure();  // |X|

  Tensor acc;
  for (const long r : rows) {
    const long off = r * N;
    const Tensor g1p = grid_leaf_from_floats(m.cfg, data.g1prev.data() + off, N, false);
    const Tensor g2p = grid_leaf_from_floats(m.cfg, data.g2prev.data() + off, N, false);
    const Tensor g2c = grid_leaf_from_floats(m.cfg, data.g2curr.data() + off, N, false);
    const Tensor pred = dynamics_forward(m, g1p, g2p, g2c, pts, idx);

    Eigen::ArrayXd tgt(static_cast<long>(idx.size()));
    {
      Eigen::ArrayXd full(N);
      apply_repr(m.cfg, data.g1curr.data() + off, full.data(), N);
      for (size_t i = 0; i < idx.size(); ++i) tgt[static_cast<long>(i)] = full[idx[i]];
    }
    const Tensor target = Tensor::leaf({static_cast<int>(idx.size())}, std::move(tgt), false);
    const Tensor sample_loss = ad::scale(ad::mse_reduce(pred, target), total_measure);
    acc = acc.valid() ? ad::add(acc, sample_loss) : sample_loss;
  }
  return ad::scale(acc, 1.0 / static_cast<double>(rows.size()));
}

ad::Tensor loss_success(const SuccessModel& m, const HangDataset& data,
                        const std::vector<long>& rows) {
  if (rows.empty()) throw std::invalid_argument("loss_success: empty batch");
  const long N = data.grid.num_points();
  Tensor acc;
  for (const long r : rows) {
    const long off = r * N;
    Eigen::ArrayXd stacked(2 * N);
    apply_repr(m.cfg, data.mug.data() + off, stacked.data(), N);
    apply_repr(m.cfg, data.hook.data() + off, stacked.data() + N, N);
    const Tensor input = Tensor::leaf(
        {2, data.grid.shape[0], data.grid.shape[1]}, std::move(stacked), false);
    const Tensor H = success_forward(m, input);
    const double y = data.label[static_cast<size_t>(r)] ? 1.0 : 0.0;
    Tensor contrib;
    if (y > 0.5) {
      contrib = ad::square(H);
    } else {
      contrib = ad::exp_neg(H);
    }
    acc = acc.valid() ? ad::add(acc, contrib) : contrib;
  }
  return ad::scale(ad::sum(acc), 1.0 / static_cast<double>(rows.size()));
}

ad::Tensor loss_deltaq(const DeltaQModel& m, const PushDataset& data,
                       const std::vector<long>& rows) {
  if (rows.empty()) throw std::invalid_argument("loss_deltaq: empty batch");
  const long N = data.grid_points();
  Tensor acc;
  for (const long r : rows) {
    const long off = r * N;
    const Tensor g1p = grid_leaf_from_floats(m.cfg, data.g1prev.data() + off, N, false);
    const Tensor g2p = grid_leaf_from_floats(m.cfg, data.g2prev.data() + off, N, false);
    const Tensor g2c = grid_leaf_from_floats(m.cfg, data.g2curr.data() + off, N, false);
    const Tensor pred = deltaq_forward(m, g1p, g2p, g2c);
    Eigen::ArrayXd t(3);
    const auto& dq = data.dq[static_cast<size_t>(r)];
    t << dq.x(), dq.y(), dq.z();
    const Tensor target = Tensor::leaf({3}, std::move(t), false);
    const Tensor sample_loss = ad::sum(ad::square(ad::sub(pred, target)));
    acc = acc.valid() ? ad::add(acc, sample_loss) : sample_loss;
  }
  return ad::scale(acc, 1.0 / static_cast<double>(rows.size()));
}

namespace {

std::vector<long> sample_distinct(Rng& rng, long n, long k) {
  if (k >= n) {
    std::vector<long> all(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
    return all;
  }
  // Partial Fisher-Yates on an index array.
  std::vector<long> pool(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
  std::vector<long> out(static_cast<size_t>(k));
  for (long i = 0; i < k; ++i) {
    const long j = i + static_cast<long>(rng.uniform_index(static_cast<uint64_t>(n - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    out[static_cast<size_t>(i)] = pool[static_cast<size_t>(i)];
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<long> epoch_order(Rng& rng, long n) {
  std::vector<long> order(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  for (long i = n - 1; i > 0; --i) {
    const long j = static_cast<long>(rng.uniform_index(static_cast<uint64_t>(i + 1)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  return order;
}

struct BestTracker {
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  std::vector<Eigen::ArrayXd> params, m, v;
  long step = 0;

  void consider(int epoch, double test_loss, const ParamSet& p, const ad::AdamState& a) {
    if (test_loss >= best) return;
    best = test_loss;
    best_epoch = epoch;
    params.clear();
    for (const auto& t : p.tensors) params.push_back(t.value());
    m = a.m;
    v = a.v;
    step = a.step;
  }

  void restore(ParamSet& p, ad::AdamState& a) const {
    if (best_epoch < 0) return;
    for (size_t i = 0; i < p.tensors.size(); ++i) p.tensors[i].value_mut() = params[i];
    a.m = m;
    a.v = v;
    a.step = step;
  }
};

template <typename LossFn>
TrainResult train_generic(ParamSet& params, ad::AdamState& adam, long n_train, long n_test,
                          const TrainConfig& cfg, LossFn&& make_loss) {
  if (n_train == 0 || n_test == 0)
    throw std::invalid_argument("train: empty train or test split");
  TrainResult result;
  BestTracker best;
  adam.lr = cfg.lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng order_rng(cfg.seed, 1000 + static_cast<uint64_t>(epoch));
    const std::vector<long> order = epoch_order(order_rng, n_train);
    double epoch_loss = 0.0;
    long steps = 0;
    for (long s = 0; s * cfg.batch < n_train; ++s) {
      const long lo = s * cfg.batch;
      const long hi = std::min<long>(lo + cfg.batch, n_train);
      const std::vector<long> rows(order.begin() + lo, order.begin() + hi);
      Rng pt_rng(cfg.seed, 7000003ULL * static_cast<uint64_t>(epoch) +
                               static_cast<uint64_t>(s) + 13);
      const Tensor loss = make_loss(rows, /*train=*/true, pt_rng);
      ad::zero_grad(params.tensors);
      ad::backward(loss);
      ad::adam_step(params.tensors, adam);
      epoch_loss += loss.item();
      ++steps;
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(steps));

    // Test loss on a fixed quadrature, without updates.
    double test_loss = 0.0;
    long tsteps = 0;
    for (long s = 0; s * cfg.batch < n_test; ++s) {
      const long lo = s * cfg.batch;
      const long hi = std::min<long>(lo + cfg.batch, n_test);
      std::vector<long> rows;
      for (long r = lo; r < hi; ++r) rows.push_back(r);
      Rng pt_rng(cfg.seed, 999);
      const Tensor loss = make_loss(rows, /*train=*/false, pt_rng);
      test_loss += loss.item() * static_cast<double>(hi - lo);
      ++tsteps;
    }
    test_loss /= static_cast<double>(n_test);
    result.test_loss.push_back(test_loss);
    best.consider(epoch, test_loss, params, adam);
    if (cfg.verbose)
      std::printf("epoch %3d  train %.6g  test %.6g%s\n", epoch,
                  result.train_loss.back(), test_loss,
                  best.best_epoch == epoch ? "  *" : "");
  }
  best.restore(params, adam);
  result.best_epoch = best.best_epoch;
  result.best_test = best.best;
  return result;
}

}  // namespace

TrainResult train_dynamics(DynamicsModel& m, ad::AdamState& adam, const PushDataset& train,
                           const PushDataset& test, const TrainConfig& cfg) {
  const long N = train.grid_points();
  return train_generic(
      m.params, adam, train.n(), test.n(), cfg,
      [&](const std::vector<long>& rows, bool is_train, Rng& rng) {
        const long k = is_train ? cfg.points_per_sample : cfg.eval_points;
        const std::vector<long> pts = sample_distinct(rng, N, std::min<long>(k, N));
        return loss_dynamics(m, is_train ? train : test, rows, pts);
      });
}

TrainResult train_success(SuccessModel& m, ad::AdamState& adam, const HangDataset& train,
                          const HangDataset& test, const TrainConfig& cfg) {
  return train_generic(m.params, adam, train.n(), test.n(), cfg,
                       [&](const std::vector<long>& rows, bool is_train, Rng&) {
                         return loss_success(m, is_train ? train : test, rows);
                       });
}

TrainResult train_deltaq(DeltaQModel& m, ad::AdamState& adam, const PushDataset& train,
                         const PushDataset& test, const TrainConfig& cfg) {
  return train_generic(m.params, adam, train.n(), test.n(), cfg,
                       [&](const std::vector<long>& rows, bool is_train, Rng&) {
                         return loss_deltaq(m, is_train ? train : test, rows);
                       });
}

double train_step_dynamics(DynamicsModel& m, ad::AdamState& adam, const PushDataset& data,
                           const std::vector<long>& rows,
                           const std::vector<long>& point_indices) {
  const Tensor loss = loss_dynamics(m, data, rows, point_indices);
  ad::zero_grad(m.params.tensors);
  ad::backward(loss);
  ad::adam_step(m.params.tensors, adam);
  return loss.item();
}

}  // namespace sdfplan
