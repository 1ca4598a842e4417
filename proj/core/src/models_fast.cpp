// Fused forward/backward paths for the learned functionals. These compute
// the same quantities as the autodiff graphs in models.cpp but batch all
// head queries into dense GEMMs and skip weight gradients, which is what the
// planner's inner loop needs.

#include <cmath>
#include <stdexcept>

#include "sdfplan/models.hpp"

namespace sdfplan {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {
struct ConvDims {
  int ci, h, w, co, k, stride, ho, wo;
};
}  // namespace

struct EncoderPlan {
  std::array<ConvDims, 3> conv;
  long flat = 0;
  RowMat kmat[3];  // [co, ci*k*k]
  Eigen::VectorXd kbias[3];
  RowMat wf;  // [feature, flat]
  Eigen::VectorXd bf;
};

namespace {

EncoderPlan make_encoder_plan(const ModelConfig& cfg, const ParamSet& p) {
  EncoderPlan e;
  int ci = cfg.input_channels, h = cfg.grid.shape[0], w = cfg.grid.shape[1];
  for (int l = 0; l < 3; ++l) {
    ConvDims d;
    d.ci = ci;
    d.h = h;
    d.w = w;
    d.co = cfg.conv_channels[static_cast<size_t>(l)];
    d.k = cfg.conv_kernels[static_cast<size_t>(l)];
    d.stride = cfg.conv_strides[static_cast<size_t>(l)];
    d.ho = (d.h - d.k) / d.stride + 1;
    d.wo = (d.w - d.k) / d.stride + 1;
    e.conv[static_cast<size_t>(l)] = d;
    const auto kt = p.get("enc.k" + std::to_string(l + 1));
    e.kmat[l] = Eigen::Map<const RowMat>(kt.value().data(), d.co,
                                         static_cast<long>(d.ci) * d.k * d.k);
    const auto bt = p.get("enc.b" + std::to_string(l + 1));
    e.kbias[l] = Eigen::Map<const Eigen::VectorXd>(bt.value().data(), d.co);
    ci = d.co;
    h = d.ho;
    w = d.wo;
  }
  e.flat = static_cast<long>(ci) * h * w;
  const auto wf = p.get("enc.wf");
  e.wf = Eigen::Map<const RowMat>(wf.value().data(), cfg.feature_dim, e.flat);
  e.bf = Eigen::Map<const Eigen::VectorXd>(p.get("enc.bf").value().data(), cfg.feature_dim);
  return e;
}

void im2col(const double* x, const ConvDims& d, RowMat& cols) {
  cols.resize(static_cast<long>(d.ho) * d.wo, static_cast<long>(d.ci) * d.k * d.k);
  for (int oy = 0; oy < d.ho; ++oy) {
    for (int ox = 0; ox < d.wo; ++ox) {
      const long row = static_cast<long>(oy) * d.wo + ox;
      long col = 0;
      for (int c = 0; c < d.ci; ++c) {
        const long base = static_cast<long>(c) * d.h * d.w;
        for (int ky = 0; ky < d.k; ++ky) {
          const long rb = base + static_cast<long>(oy * d.stride + ky) * d.w + ox * d.stride;
          for (int kx = 0; kx < d.k; ++kx) cols(row, col++) = x[rb + kx];
        }
      }
    }
  }
}

void col2im_add(const RowMat& dcols, const ConvDims& d, double* dx) {
  for (int oy = 0; oy < d.ho; ++oy) {
    for (int ox = 0; ox < d.wo; ++ox) {
      const long row = static_cast<long>(oy) * d.wo + ox;
      long col = 0;
      for (int c = 0; c < d.ci; ++c) {
        const long base = static_cast<long>(c) * d.h * d.w;
        for (int ky = 0; ky < d.k; ++ky) {
          const long rb = base + static_cast<long>(oy * d.stride + ky) * d.w + ox * d.stride;
          for (int kx = 0; kx < d.k; ++kx) dx[rb + kx] += dcols(row, col++);
        }
      }
    }
  }
}

struct EncStash {
  // Post-ReLU activations per conv layer in [co, ho, wo] layout.
  Eigen::ArrayXd a[3];
  Eigen::VectorXd feat;
};

void encoder_forward(const EncoderPlan& e, const double* input, EncStash& st) {
  thread_local RowMat cols, convt;
  const double* cur = input;
  for (int l = 0; l < 3; ++l) {
    const ConvDims& d = e.conv[static_cast<size_t>(l)];
    im2col(cur, d, cols);
    convt.noalias() = cols * e.kmat[l].transpose();  // [pix, co]
    const long npix = static_cast<long>(d.ho) * d.wo;
    st.a[l].resize(static_cast<long>(d.co) * npix);
    for (int c = 0; c < d.co; ++c) {
      const double b = e.kbias[l][c];
      for (long i = 0; i < npix; ++i)
        st.a[l][static_cast<long>(c) * npix + i] = std::max(convt(i, c) + b, 0.0);
    }
    cur = st.a[l].data();
  }
  st.feat.noalias() =
      e.wf * Eigen::Map<const Eigen::VectorXd>(st.a[2].data(), e.flat) + e.bf;
}

// Input gradient only (weights are fixed at plan time).
void encoder_backward_input(const EncoderPlan& e, const EncStash& st,
                            const Eigen::VectorXd& dfeat, Eigen::ArrayXd& dinput) {
  Eigen::VectorXd dflat = e.wf.transpose() * dfeat;
  Eigen::ArrayXd dcur = dflat.array();
  thread_local RowMat g, dcols;
  for (int l = 2; l >= 0; --l) {
    const ConvDims& d = e.conv[static_cast<size_t>(l)];
    const long npix = static_cast<long>(d.ho) * d.wo;
    // ReLU mask, then reshape to [pix, co] for the GEMM.
    g.resize(npix, d.co);
    for (int c = 0; c < d.co; ++c)
      for (long i = 0; i < npix; ++i) {
        const long k = static_cast<long>(c) * npix + i;
        g(i, c) = st.a[l][k] > 0.0 ? dcur[k] : 0.0;
      }
    dcols.noalias() = g * e.kmat[l];
    dcur = Eigen::ArrayXd::Zero(static_cast<long>(d.ci) * d.h * d.w);
    col2im_add(dcols, d, dcur.data());
  }
  dinput = std::move(dcur);
}

double repr_chain_factor(const ModelConfig& cfg, double raw_value) {
  switch (cfg.repr) {
    case FieldRepr::Sdf: return 1.0;
    case FieldRepr::OccupancyHard: return 0.0;  // sign has zero gradient a.e.
    case FieldRepr::OccupancySmooth: {
      const double t = std::tanh(cfg.occupancy_b * raw_value);
      return cfg.occupancy_b * (1.0 - t * t);
    }
  }
  return 1.0;
}

void accumulate_stats(RmseStats& s, const std::vector<double>& xs) {
  s.count = static_cast<long>(xs.size());
  if (xs.empty()) return;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace

// ---------------------------------------------------------------------------
// DynamicsEvaluator

DynamicsEvaluator::DynamicsEvaluator(const DynamicsModel& m, int stride)
    : model_(m), stride_(stride) {
  if (m.cfg.grid.dim != 2)
    throw std::invalid_argument("DynamicsEvaluator: 2D grids only");
  plan_ = std::make_shared<const EncoderPlan>(make_encoder_plan(m.cfg, m.params));
  idx_ = quadrature_indices(m.cfg.grid, stride);
  const long M = static_cast<long>(idx_.size());
  const int H = m.cfg.hidden, Q = m.cfg.query_feature_dim;

  const auto& p = m.params;
  const RowMat wq = Eigen::Map<const RowMat>(p.get("q.w").value().data(), Q, 2);
  const Eigen::VectorXd bq =
      Eigen::Map<const Eigen::VectorXd>(p.get("q.b").value().data(), Q);
  const RowMat w1q = Eigen::Map<const RowMat>(p.get("head.w1q").value().data(), H, Q);
  const Eigen::VectorXd b1 =
      Eigen::Map<const Eigen::VectorXd>(p.get("head.b1").value().data(), H);

  RowMat xq(M, 2);
  for (long i = 0; i < M; ++i) {
    const Vec2 x = m.cfg.grid.point2_flat(idx_[static_cast<size_t>(i)]);
    xq(i, 0) = x.x();
    xq(i, 1) = x.y();
  }
  RowMat qf = (xq * wq.transpose()).rowwise() + bq.transpose();
  qf = qf.cwiseMax(0.0);
  q1_ = qf * w1q.transpose();
  q1_.rowwise() += b1.transpose();

  w1g_ = Eigen::Map<const RowMat>(p.get("head.w1g").value().data(), H,
                                  3L * m.cfg.feature_dim);
  w2_ = Eigen::Map<const RowMat>(p.get("head.w2").value().data(), H, H);
  b2_ = Eigen::Map<const Eigen::VectorXd>(p.get("head.b2").value().data(), H);
  w3_ = Eigen::Map<const Eigen::VectorXd>(p.get("head.w3").value().data(), H);
  b3_ = p.get("head.b3").value()[0];
  flow_ = m.cfg.kind == ModelKind::Flow;
}

void DynamicsEvaluator::eval_terms(const std::vector<const GridEval*>& grids,
                                   const std::vector<Term>& terms,
                                   std::vector<double>& values,
                                   const std::vector<double>* weights,
                                   std::vector<Eigen::Vector3d>* pose_grads) const {
  const long M = static_cast<long>(idx_.size());
  const long T = static_cast<long>(terms.size());
  const long G = static_cast<long>(grids.size());
  const int H = model_.cfg.hidden, F = model_.cfg.feature_dim;
  const long N = model_.cfg.grid.num_points();
  const double total_measure = static_cast<double>(N) * model_.cfg.grid.cell_measure();
  const EncoderPlan& enc = *plan_;

  // Representation-transformed copies and chain factors per grid.
  std::vector<Eigen::ArrayXd> repr_vals(static_cast<size_t>(G));
  std::vector<char> need_encode(static_cast<size_t>(G), 0), need_nodes(static_cast<size_t>(G), 0);
  for (const Term& t : terms) {
    need_encode[static_cast<size_t>(t.g1prev)] = 1;
    need_encode[static_cast<size_t>(t.g2prev)] = 1;
    need_encode[static_cast<size_t>(t.g2curr)] = 1;
    need_nodes[static_cast<size_t>(t.g1curr)] = 1;
    if (flow_) need_nodes[static_cast<size_t>(t.g1prev)] = 1;
  }
  for (long g = 0; g < G; ++g) {
    if (!need_encode[static_cast<size_t>(g)] && !need_nodes[static_cast<size_t>(g)]) continue;
    repr_vals[static_cast<size_t>(g)] = apply_repr_copy(model_.cfg, grids[static_cast<size_t>(g)]->field);
  }

  // Encode unique input grids.
  std::vector<EncStash> stash(static_cast<size_t>(G));
  for (long g = 0; g < G; ++g)
    if (need_encode[static_cast<size_t>(g)])
      encoder_forward(enc, repr_vals[static_cast<size_t>(g)].data(), stash[static_cast<size_t>(g)]);

  // Head forward, batched over all terms.
  RowMat zg(T, H);
  for (long t = 0; t < T; ++t) {
    Eigen::VectorXd fall(3L * F);
    fall.segment(0, F) = stash[static_cast<size_t>(terms[static_cast<size_t>(t)].g1prev)].feat;
    fall.segment(F, F) = stash[static_cast<size_t>(terms[static_cast<size_t>(t)].g2prev)].feat;
    fall.segment(2L * F, F) = stash[static_cast<size_t>(terms[static_cast<size_t>(t)].g2curr)].feat;
    zg.row(t) = (w1g_ * fall).transpose();
  }

  RowMat a1(T * M, H);
  for (long t = 0; t < T; ++t)
    a1.middleRows(t * M, M) = (q1_.rowwise() + zg.row(t)).cwiseMax(0.0);
  RowMat a2 = a1 * w2_.transpose();
  a2.rowwise() += b2_.transpose();
  a2 = a2.cwiseMax(0.0);
  Eigen::VectorXd out = a2 * w3_;
  out.array() += b3_;

  // Residuals and values.
  values.assign(static_cast<size_t>(T), 0.0);
  RowMat resid(T, M);
  for (long t = 0; t < T; ++t) {
    const Term& tm = terms[static_cast<size_t>(t)];
    const Eigen::ArrayXd& cand = repr_vals[static_cast<size_t>(tm.g1curr)];
    const Eigen::ArrayXd* base = flow_ ? &repr_vals[static_cast<size_t>(tm.g1prev)] : nullptr;
    double sum = 0.0;
    for (long i = 0; i < M; ++i) {
      double pred = out[t * M + i];
      if (base) pred += (*base)[idx_[static_cast<size_t>(i)]];
      const double r = cand[idx_[static_cast<size_t>(i)]] - pred;
      resid(t, i) = r;
      sum += r * r;
    }
    values[static_cast<size_t>(t)] = sum / static_cast<double>(M) * total_measure;
  }

  if (!weights || !pose_grads) return;

  // Backward of sum_t weights[t] * h_t.
  pose_grads->assign(static_cast<size_t>(G), Eigen::Vector3d::Zero());
  std::vector<Eigen::ArrayXd> dvals(static_cast<size_t>(G));  // grads w.r.t. repr values
  for (long g = 0; g < G; ++g)
    if (need_encode[static_cast<size_t>(g)] || need_nodes[static_cast<size_t>(g)])
      dvals[static_cast<size_t>(g)] = Eigen::ArrayXd::Zero(N);

  Eigen::VectorXd dout(T * M);
  for (long t = 0; t < T; ++t) {
    const Term& tm = terms[static_cast<size_t>(t)];
    const double w = (*weights)[static_cast<size_t>(t)];
    const double c = 2.0 * w * total_measure / static_cast<double>(M);
    auto& dcand = dvals[static_cast<size_t>(tm.g1curr)];
    auto* dbase = flow_ ? &dvals[static_cast<size_t>(tm.g1prev)] : nullptr;
    for (long i = 0; i < M; ++i) {
      const double dr = c * resid(t, i);
      dcand[idx_[static_cast<size_t>(i)]] += dr;
      if (dbase) (*dbase)[idx_[static_cast<size_t>(i)]] -= dr;
      dout[t * M + i] = -dr;
    }
  }

  // dZ2 = (dout w3^T) o mask(a2); dA1 = dZ2 W2; dZ1 = dA1 o mask(a1).
  RowMat dz2 = dout * w3_.transpose();
  dz2.array() *= (a2.array() > 0.0).cast<double>();
  RowMat da1 = dz2 * w2_;
  da1.array() *= (a1.array() > 0.0).cast<double>();

  std::vector<Eigen::VectorXd> dfeat(static_cast<size_t>(G));
  for (long g = 0; g < G; ++g)
    if (need_encode[static_cast<size_t>(g)]) dfeat[static_cast<size_t>(g)] = Eigen::VectorXd::Zero(F);
  for (long t = 0; t < T; ++t) {
    const Eigen::VectorXd dzg = da1.middleRows(t * M, M).colwise().sum().transpose();
    const Eigen::VectorXd dfall = w1g_.transpose() * dzg;
    const Term& tm = terms[static_cast<size_t>(t)];
    dfeat[static_cast<size_t>(tm.g1prev)] += dfall.segment(0, F);
    dfeat[static_cast<size_t>(tm.g2prev)] += dfall.segment(F, F);
    dfeat[static_cast<size_t>(tm.g2curr)] += dfall.segment(2L * F, F);
  }

  for (long g = 0; g < G; ++g) {
    if (need_encode[static_cast<size_t>(g)]) {
      Eigen::ArrayXd dinput;
      encoder_backward_input(enc, stash[static_cast<size_t>(g)], dfeat[static_cast<size_t>(g)], dinput);
      dvals[static_cast<size_t>(g)] += dinput;
    }
  }

  // Chain through the representation and dot with the pose-gradient fields.
  for (long g = 0; g < G; ++g) {
    if (dvals[static_cast<size_t>(g)].size() == 0) continue;
    const GridEval* ge = grids[static_cast<size_t>(g)];
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    const Eigen::ArrayXd& dv = dvals[static_cast<size_t>(g)];
    for (long i = 0; i < N; ++i) {
      const double d = dv[i];
      if (d == 0.0) continue;
      const double chain =
          repr_chain_factor(model_.cfg, ge->field.values[static_cast<size_t>(i)]);
      const double dc = d * chain;
      acc[0] += dc * ge->dpose[0][static_cast<size_t>(i)];
      acc[1] += dc * ge->dpose[1][static_cast<size_t>(i)];
      acc[2] += dc * ge->dpose[2][static_cast<size_t>(i)];
    }
    (*pose_grads)[static_cast<size_t>(g)] = acc;
  }
}

// ---------------------------------------------------------------------------
// SuccessEvaluator

SuccessEvaluator::SuccessEvaluator(const SuccessModel& m) : model_(m) {
  if (m.cfg.grid.dim != 2)
    throw std::invalid_argument("SuccessEvaluator: 2D grids only");
  plan_ = std::make_shared<const EncoderPlan>(make_encoder_plan(m.cfg, m.params));
}

double SuccessEvaluator::eval(const GridEval& mug, const GridField& hook,
                              Eigen::Vector3d* pose_grad) const {
  const ModelConfig& cfg = model_.cfg;
  const long N = cfg.grid.num_points();
  if (static_cast<long>(mug.field.values.size()) != N ||
      static_cast<long>(hook.values.size()) != N)
    throw std::invalid_argument("SuccessEvaluator: grid shape mismatch with the model");
  const EncoderPlan& enc = *plan_;

  Eigen::ArrayXd input(2 * N);
  input.head(N) = apply_repr_copy(cfg, mug.field);
  input.tail(N) = apply_repr_copy(cfg, hook);

  EncStash st;
  encoder_forward(enc, input.data(), st);

  const auto& p = model_.params;
  const int H = cfg.hidden;
  auto layer = [&](const char* w, const char* b, const Eigen::VectorXd& x) {
    const RowMat W = Eigen::Map<const RowMat>(p.get(w).value().data(), H,
                                              x.size());
    const Eigen::VectorXd B =
        Eigen::Map<const Eigen::VectorXd>(p.get(b).value().data(), H);
    return Eigen::VectorXd((W * x + B).cwiseMax(0.0));
  };
  const Eigen::VectorXd h1 = layer("mlp.w1", "mlp.b1", st.feat);
  const Eigen::VectorXd h2 = layer("mlp.w2", "mlp.b2", h1);
  const Eigen::VectorXd h3 = layer("mlp.w3", "mlp.b3", h2);
  const Eigen::VectorXd w4 =
      Eigen::Map<const Eigen::VectorXd>(p.get("mlp.w4").value().data(), H);
  const double b4 = p.get("mlp.b4").value()[0];
  const double z = w4.dot(h3) + b4;
  const double Hval = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));

  if (!pose_grad) return Hval;

  // Backward: dH/dz = sigmoid(z), down the MLP and encoder to channel 0.
  const double dz = sigmoid_stable(z);
  Eigen::VectorXd dh3 = dz * w4;
  auto back = [&](const char* w, const Eigen::VectorXd& act, const Eigen::VectorXd& dact,
                  long in_dim) {
    const RowMat W = Eigen::Map<const RowMat>(p.get(w).value().data(), H, in_dim);
    Eigen::VectorXd masked = dact;
    for (int i = 0; i < H; ++i)
      if (act[i] <= 0.0) masked[i] = 0.0;
    return Eigen::VectorXd(W.transpose() * masked);
  };
  const Eigen::VectorXd dh2 = back("mlp.w3", h3, dh3, H);
  const Eigen::VectorXd dh1 = back("mlp.w2", h2, dh2, H);
  Eigen::VectorXd dfeat = back("mlp.w1", h1, dh1, cfg.feature_dim);

  Eigen::ArrayXd dinput;
  encoder_backward_input(enc, st, dfeat, dinput);

  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (long i = 0; i < N; ++i) {
    const double chain = repr_chain_factor(cfg, mug.field.values[static_cast<size_t>(i)]);
    const double d = dinput[i] * chain;
    acc[0] += d * mug.dpose[0][static_cast<size_t>(i)];
    acc[1] += d * mug.dpose[1][static_cast<size_t>(i)];
    acc[2] += d * mug.dpose[2][static_cast<size_t>(i)];
  }
  *pose_grad = acc;
  return Hval;
}

// ---------------------------------------------------------------------------
// Functional over poses, via the autodiff path (reference implementation).

FunctionalValue h_dynamics(const DynamicsModel& m, const SdfShape& obj,
                           const RigidTransform& q1_prev, const RigidTransform& q1_curr,
                           const SdfShape& other, const RigidTransform& q2_prev,
                           const RigidTransform& q2_curr, int stride) {
  const GridSpec& spec = m.cfg.grid;
  if (spec.dim != 2) throw std::invalid_argument("h_dynamics: 2D grids only");
  const GridEval e1p = evaluate_grid_with_pose_grads(obj, q1_prev, spec);
  const GridEval e1c = evaluate_grid_with_pose_grads(obj, q1_curr, spec);
  const GridEval e2p = evaluate_grid_with_pose_grads(other, q2_prev, spec);
  const GridEval e2c = evaluate_grid_with_pose_grads(other, q2_curr, spec);

  DynamicsEvaluator ev(m, stride);
  std::vector<const GridEval*> grids = {&e1p, &e1c, &e2p, &e2c};
  std::vector<DynamicsEvaluator::Term> terms(1);
  terms[0].g1prev = 0;
  terms[0].g1curr = 1;
  terms[0].g2prev = 2;
  terms[0].g2curr = 3;
  std::vector<double> values;
  const std::vector<double> weights = {1.0};
  std::vector<Eigen::Vector3d> pose_grads;
  ev.eval_terms(grids, terms, values, &weights, &pose_grads);

  FunctionalValue out;
  out.value = values[0];
  out.grad_q.resize(12);
  out.grad_q.segment(0, 3) = pose_grads[0];
  out.grad_q.segment(3, 3) = pose_grads[1];
  out.grad_q.segment(6, 3) = pose_grads[2];
  out.grad_q.segment(9, 3) = pose_grads[3];
  return out;
}

double h_dynamics_fields(const DynamicsModel& m, const GridField& g1prev,
                         const GridField& g1curr, const GridField& g2prev,
                         const GridField& g2curr, int stride) {
  const GridSpec& spec = m.cfg.grid;
  for (const GridField* f : {&g1prev, &g1curr, &g2prev, &g2curr})
    if (!(f->spec == spec))
      throw std::invalid_argument("h_dynamics_fields: grid shape mismatch with the model");
  auto wrap = [](const GridField& f) {
    GridEval e;
    e.field = f;
    const size_t n = f.values.size();
    for (auto& d : e.dpose) d.assign(n, 0.0);
    return e;
  };
  const GridEval e1p = wrap(g1prev), e1c = wrap(g1curr), e2p = wrap(g2prev),
                 e2c = wrap(g2curr);
  DynamicsEvaluator ev(m, stride);
  std::vector<const GridEval*> grids = {&e1p, &e1c, &e2p, &e2c};
  std::vector<DynamicsEvaluator::Term> terms(1);
  terms[0] = {0, 1, 2, 3};
  std::vector<double> values;
  ev.eval_terms(grids, terms, values, nullptr, nullptr);
  return values[0];
}

// ---------------------------------------------------------------------------
// Prediction and evaluation.

Eigen::VectorXd predict(const DynamicsModel& m, const GridField& g1prev,
                        const GridField& g2prev, const GridField& g2curr,
                        const Eigen::MatrixX2d& points, bool* clamped) {
  const ModelConfig& cfg = m.cfg;
  for (const GridField* f : {&g1prev, &g2prev, &g2curr})
    if (!(f->spec == cfg.grid))
      throw std::invalid_argument("predict: grid shape mismatch with the model");
  const long M = points.rows();
  const EncoderPlan enc = make_encoder_plan(cfg, m.params);
  const Eigen::ArrayXd v1 = apply_repr_copy(cfg, g1prev);
  const Eigen::ArrayXd v2 = apply_repr_copy(cfg, g2prev);
  const Eigen::ArrayXd v3 = apply_repr_copy(cfg, g2curr);
  EncStash s1, s2, s3;
  encoder_forward(enc, v1.data(), s1);
  encoder_forward(enc, v2.data(), s2);
  encoder_forward(enc, v3.data(), s3);

  const auto& p = m.params;
  const int H = cfg.hidden, F = cfg.feature_dim, Q = cfg.query_feature_dim;
  const RowMat wq = Eigen::Map<const RowMat>(p.get("q.w").value().data(), Q, 2);
  const Eigen::VectorXd bq =
      Eigen::Map<const Eigen::VectorXd>(p.get("q.b").value().data(), Q);
  const RowMat w1q = Eigen::Map<const RowMat>(p.get("head.w1q").value().data(), H, Q);
  const RowMat w1g =
      Eigen::Map<const RowMat>(p.get("head.w1g").value().data(), H, 3L * F);
  const Eigen::VectorXd b1 =
      Eigen::Map<const Eigen::VectorXd>(p.get("head.b1").value().data(), H);
  const RowMat w2 = Eigen::Map<const RowMat>(p.get("head.w2").value().data(), H, H);
  const Eigen::VectorXd b2 =
      Eigen::Map<const Eigen::VectorXd>(p.get("head.b2").value().data(), H);
  const Eigen::VectorXd w3 =
      Eigen::Map<const Eigen::VectorXd>(p.get("head.w3").value().data(), H);
  const double b3 = p.get("head.b3").value()[0];

  Eigen::VectorXd fall(3L * F);
  fall << s1.feat, s2.feat, s3.feat;
  const Eigen::VectorXd zg = w1g * fall + b1;

  RowMat qf = (points * wq.transpose()).rowwise() + bq.transpose();
  qf = qf.cwiseMax(0.0);
  RowMat a1 = qf * w1q.transpose();
  a1.rowwise() += zg.transpose();
  a1 = a1.cwiseMax(0.0);
  RowMat a2 = a1 * w2.transpose();
  a2.rowwise() += b2.transpose();
  a2 = a2.cwiseMax(0.0);
  Eigen::VectorXd out = a2 * w3;
  out.array() += b3;

  bool any_clamped = false;
  if (cfg.kind == ModelKind::Flow) {
    // Interpolate the previous field in representation space.
    GridField prev_repr = g1prev;
    for (long i = 0; i < static_cast<long>(prev_repr.values.size()); ++i)
      prev_repr.values[static_cast<size_t>(i)] = v1[i];
    for (long i = 0; i < M; ++i) {
      bool c = false;
      out[i] += interpolate(prev_repr, Vec2(points(i, 0), points(i, 1)), &c);
      any_clamped = any_clamped || c;
    }
  }
  if (clamped) *clamped = any_clamped;
  return out;
}

Eigen::Vector3d predict_deltaq(const DeltaQModel& m, const GridField& g1prev,
                               const GridField& g2prev, const GridField& g2curr) {
  using ad::Tensor;
  const long N = m.cfg.grid.num_points();
  auto leaf = [&](const GridField& f) {
    return Tensor::leaf({static_cast<int>(N)}, apply_repr_copy(m.cfg, f), false);
  };
  const Tensor out = deltaq_forward(m, leaf(g1prev), leaf(g2prev), leaf(g2curr));
  return Eigen::Vector3d(out.value()[0], out.value()[1], out.value()[2]);
}

double success_value(const SuccessModel& m, const GridField& mug, const GridField& hook) {
  GridEval e;
  e.field = mug;
  const size_t n = mug.values.size();
  for (auto& d : e.dpose) d.assign(n, 0.0);
  SuccessEvaluator ev(m);
  return ev.eval(e, hook, nullptr);
}

RmseReport eval_rmse(const DynamicsModel& m, const PushDataset& data) {
  if (!(data.grid == m.cfg.grid))
    throw std::invalid_argument("eval_rmse: dataset grid does not match the model");
  if (data.contact.empty()) throw std::invalid_argument("eval_rmse: empty dataset");
  const long N = data.grid_points();
  std::vector<double> rc, rn, pc, pn;
  // Fields are representation-transformed here, so evaluate with an Sdf view
  // of the model (shares the parameter tensors).
  DynamicsModel view = m;
  view.cfg.repr = FieldRepr::Sdf;
  const DynamicsEvaluator ev_view(view, 1);
  GridEval e1p, e1c, e2p, e2c;
  for (GridEval* e : {&e1p, &e1c, &e2p, &e2c}) {
    e->field.spec = data.grid;
    e->field.values.resize(static_cast<size_t>(N));
    for (auto& d : e->dpose) d.assign(static_cast<size_t>(N), 0.0);
  }
  for (long r = 0; r < data.n(); ++r) {
    const long off = r * N;
    Eigen::ArrayXd v1(N), vc(N), v2(N), v3(N);
    apply_repr(m.cfg, data.g1prev.data() + off, v1.data(), N);
    apply_repr(m.cfg, data.g1curr.data() + off, vc.data(), N);
    apply_repr(m.cfg, data.g2prev.data() + off, v2.data(), N);
    apply_repr(m.cfg, data.g2curr.data() + off, v3.data(), N);
    for (long i = 0; i < N; ++i) {
      e1p.field.values[static_cast<size_t>(i)] = v1[i];
      e1c.field.values[static_cast<size_t>(i)] = vc[i];
      e2p.field.values[static_cast<size_t>(i)] = v2[i];
      e2c.field.values[static_cast<size_t>(i)] = v3[i];
    }
    std::vector<const GridEval*> grids = {&e1p, &e1c, &e2p, &e2c};
    std::vector<DynamicsEvaluator::Term> terms(1);
    terms[0] = {0, 1, 2, 3};
    std::vector<double> values;
    ev_view.eval_terms(grids, terms, values, nullptr, nullptr);
    const double total_measure = static_cast<double>(N) * data.grid.cell_measure();
    const double rmse = std::sqrt(values[0] / total_measure) * 1000.0;
    double pers = 0.0;
    for (long i = 0; i < N; ++i) pers += (vc[i] - v1[i]) * (vc[i] - v1[i]);
    pers = std::sqrt(pers / static_cast<double>(N)) * 1000.0;
    if (data.contact[static_cast<size_t>(r)]) {
      rc.push_back(rmse);
      pc.push_back(pers);
    } else {
      rn.push_back(rmse);
      pn.push_back(pers);
    }
  }
  RmseReport rep;
  accumulate_stats(rep.contact, rc);
  accumulate_stats(rep.no_contact, rn);
  accumulate_stats(rep.persistence_contact, pc);
  accumulate_stats(rep.persistence_no_contact, pn);
  return rep;
}

DeltaQReport eval_deltaq(const DeltaQModel& m, const PushDataset& data) {
  if (!(data.grid == m.cfg.grid))
    throw std::invalid_argument("eval_deltaq: dataset grid does not match the model");
  std::vector<double> ex, ey, et, exc, eyc, etc_;
  const long N = data.grid_points();
  for (long r = 0; r < data.n(); ++r) {
    const long off = r * N;
    GridField g1p, g2p, g2c;
    for (auto [g, src] : {std::pair{&g1p, data.g1prev.data() + off},
                          std::pair{&g2p, data.g2prev.data() + off},
                          std::pair{&g2c, data.g2curr.data() + off}}) {
      g->spec = data.grid;
      g->values.resize(static_cast<size_t>(N));
      for (long i = 0; i < N; ++i) g->values[static_cast<size_t>(i)] = src[i];
    }
    const Eigen::Vector3d pred = predict_deltaq(m, g1p, g2p, g2c);
    const Eigen::Vector3d err = pred - data.dq[static_cast<size_t>(r)];
    ex.push_back(std::abs(err.x()) * 1000.0);
    ey.push_back(std::abs(err.y()) * 1000.0);
    et.push_back(std::abs(err.z()) * 180.0 / M_PI);
    if (data.contact[static_cast<size_t>(r)]) {
      exc.push_back(ex.back());
      eyc.push_back(ey.back());
      etc_.push_back(et.back());
    }
  }
  DeltaQReport rep;
  accumulate_stats(rep.x_mm, ex);
  accumulate_stats(rep.y_mm, ey);
  accumulate_stats(rep.theta_deg, et);
  accumulate_stats(rep.x_mm_contact, exc);
  accumulate_stats(rep.y_mm_contact, eyc);
  accumulate_stats(rep.theta_deg_contact, etc_);
  return rep;
}

}  // namespace sdfplan
