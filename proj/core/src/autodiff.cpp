#include "sdfplan/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace sdfplan::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("autodiff: " + msg);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

NodePtr make_node(std::vector<int> shape, Eigen::ArrayXd value,
                  std::vector<NodePtr> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

}  // namespace

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad = Eigen::ArrayXd::Zero(value.size());
}

Tensor Tensor::leaf(std::vector<int> shape, Eigen::ArrayXd data, bool requires_grad) {
  long n = 1;
  for (int d : shape) n *= d;
  require(n == data.size(), "leaf: data length does not match shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Eigen::ArrayXd d(1);
  d << v;
  return leaf({1}, std::move(d), requires_grad);
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  long n = 1;
  for (int d : shape) n *= d;
  return leaf(std::move(shape), Eigen::ArrayXd::Zero(n), requires_grad);
}

const Eigen::ArrayXd& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

double Tensor::item() const {
  require(node_->numel() == 1, "item: tensor is not scalar");
  return node_->value[0];
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto n = make_node(a.shape(), a.value() + b.value(), {a.node(), b.node()});
  n->backward_fn = [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      p->grad += self.grad;
    }
  };
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto n = make_node(a.shape(), a.value() - b.value(), {a.node(), b.node()});
  n->backward_fn = [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad += self.grad;
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      pb->grad -= self.grad;
    }
  };
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto n = make_node(a.shape(), a.value() * b.value(), {a.node(), b.node()});
  n->backward_fn = [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad += self.grad * pb->value;
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      pb->grad += self.grad * pa->value;
    }
  };
  return Tensor(n);
}

Tensor scale(const Tensor& a, double c) {
  auto n = make_node(a.shape(), a.value() * c, {a.node()});
  n->backward_fn = [c](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad * c;
  };
  return Tensor(n);
}

Tensor square(const Tensor& a) {
  auto n = make_node(a.shape(), a.value().square(), {a.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad * 2.0 * p->value;
  };
  return Tensor(n);
}

Tensor exp_neg(const Tensor& a) {
  auto n = make_node(a.shape(), (-a.value()).exp(), {a.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad -= self.grad * self.value;
  };
  return Tensor(n);
}

Tensor relu(const Tensor& a) {
  auto n = make_node(a.shape(), a.value().max(0.0), {a.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad * (p->value > 0.0).cast<double>();
  };
  return Tensor(n);
}

Tensor tanh_op(const Tensor& a) {
  auto n = make_node(a.shape(), a.value().tanh(), {a.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad * (1.0 - self.value.square());
  };
  return Tensor(n);
}

Tensor sigmoid(const Tensor& a) {
  auto n = make_node(a.shape(), 1.0 / (1.0 + (-a.value()).exp()), {a.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad * self.value * (1.0 - self.value);
  };
  return Tensor(n);
}

Tensor softplus(const Tensor& a) {
  // log(1 + exp(x)), stable form: max(x, 0) + log1p(exp(-|x|)).
  Eigen::ArrayXd v = a.value().max(0.0) + (-a.value().abs()).exp().log1p();
  auto n = make_node(a.shape(), std::move(v), {a.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad / (1.0 + (-p->value).exp());
  };
  return Tensor(n);
}

Tensor sum(const Tensor& a) {
  Eigen::ArrayXd v(1);
  v << a.value().sum();
  auto n = make_node({1}, std::move(v), {a.node()});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad[0];
  };
  return Tensor(n);
}

Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor mse_reduce(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_reduce");
  return mean(square(sub(pred, target)));
}

Tensor concat(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat: empty list");
  long total = 0;
  std::vector<NodePtr> parents;
  for (const auto& t : parts) {
    total += t.numel();
    parents.push_back(t.node());
  }
  Eigen::ArrayXd v(total);
  long off = 0;
  for (const auto& t : parts) {
    v.segment(off, t.numel()) = t.value();
    off += t.numel();
  }
  auto n = make_node({static_cast<int>(total)}, std::move(v), std::move(parents));
  n->backward_fn = [](Node& self) {
    long off2 = 0;
    for (auto& p : self.parents) {
      const long m = p->numel();
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad += self.grad.segment(off2, m);
      }
      off2 += m;
    }
  };
  return Tensor(n);
}

Tensor gather(const Tensor& a, std::vector<long> indices) {
  Eigen::ArrayXd v(static_cast<long>(indices.size()));
  for (size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] >= 0 && indices[i] < a.numel(), "gather: index out of range");
    v[static_cast<long>(i)] = a.value()[indices[i]];
  }
  auto n = make_node({static_cast<int>(indices.size())}, std::move(v), {a.node()});
  n->backward_fn = [idx = std::move(indices)](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < idx.size(); ++i)
      p->grad[idx[i]] += self.grad[static_cast<long>(i)];
  };
  return Tensor(n);
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  long n = 1;
  for (int d : shape) n *= d;
  require(n == a.numel(), "reshape: element count mismatch");
  auto node = make_node(std::move(shape), a.value(), {a.node()});
  node->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += self.grad;
  };
  return Tensor(node);
}

Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b) {
  require(W.shape().size() == 2, "dense: W must be 2-D");
  const int out_dim = W.shape()[0], in_dim = W.shape()[1];
  require(b.shape().size() == 1 && b.shape()[0] == out_dim, "dense: bias shape mismatch");
  const bool batched = x.shape().size() == 2;
  const int rows = batched ? x.shape()[0] : 1;
  const int xin = batched ? x.shape()[1] : x.shape()[0];
  require(xin == in_dim, "dense: input dim " + std::to_string(xin) + " != W cols " +
                             std::to_string(in_dim));

  MapConstMat Xm(x.value().data(), rows, in_dim);
  MapConstMat Wm(W.value().data(), out_dim, in_dim);
  Eigen::ArrayXd out(static_cast<long>(rows) * out_dim);
  MapMat Om(out.data(), rows, out_dim);
  Om.noalias() = Xm * Wm.transpose();
  MapConstMat Bm(b.value().data(), 1, out_dim);
  Om.rowwise() += Bm.row(0);

  std::vector<int> oshape = batched ? std::vector<int>{rows, out_dim}
                                    : std::vector<int>{out_dim};
  auto n = make_node(std::move(oshape), std::move(out), {x.node(), W.node(), b.node()});
  n->backward_fn = [rows, in_dim, out_dim](Node& self) {
    auto& px = self.parents[0];
    auto& pw = self.parents[1];
    auto& pb = self.parents[2];
    MapConstMat Gm(self.grad.data(), rows, out_dim);
    if (px->requires_grad) {
      px->ensure_grad();
      MapMat Gx(px->grad.data(), rows, in_dim);
      MapConstMat Wm2(pw->value.data(), out_dim, in_dim);
      Gx.noalias() += Gm * Wm2;
    }
    if (pw->requires_grad) {
      pw->ensure_grad();
      MapMat Gw(pw->grad.data(), out_dim, in_dim);
      MapConstMat Xm2(px->value.data(), rows, in_dim);
      Gw.noalias() += Gm.transpose() * Xm2;
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      Eigen::Map<Eigen::VectorXd> Gb(pb->grad.data(), out_dim);
      Gb.noalias() += Gm.colwise().sum().transpose();
    }
  };
  return Tensor(n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2, "matmul: 2-D tensors required");
  const int m = a.shape()[0], k = a.shape()[1];
  require(b.shape()[0] == k, "matmul: inner dims differ");
  const int n_cols = b.shape()[1];
  MapConstMat Am(a.value().data(), m, k);
  MapConstMat Bm(b.value().data(), k, n_cols);
  Eigen::ArrayXd out(static_cast<long>(m) * n_cols);
  MapMat Om(out.data(), m, n_cols);
  Om.noalias() = Am * Bm;
  auto node = make_node({m, n_cols}, std::move(out), {a.node(), b.node()});
  node->backward_fn = [m, k, n_cols](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    MapConstMat Gm(self.grad.data(), m, n_cols);
    if (pa->requires_grad) {
      pa->ensure_grad();
      MapMat Ga(pa->grad.data(), m, k);
      MapConstMat Bm2(pb->value.data(), k, n_cols);
      Ga.noalias() += Gm * Bm2.transpose();
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      MapMat Gb(pb->grad.data(), k, n_cols);
      MapConstMat Am2(pa->value.data(), m, k);
      Gb.noalias() += Am2.transpose() * Gm;
    }
  };
  return Tensor(node);
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  require(m.shape().size() == 2 && v.shape().size() == 1, "add_rowvec: [N,d] + [d]");
  const int rows = m.shape()[0], cols = m.shape()[1];
  require(v.shape()[0] == cols, "add_rowvec: width mismatch");
  Eigen::ArrayXd out = m.value();
  MapMat Om(out.data(), rows, cols);
  MapConstMat Vm(v.value().data(), 1, cols);
  Om.rowwise() += Vm.row(0);
  auto n = make_node({rows, cols}, std::move(out), {m.node(), v.node()});
  n->backward_fn = [rows, cols](Node& self) {
    auto& pm = self.parents[0];
    auto& pv = self.parents[1];
    if (pm->requires_grad) {
      pm->ensure_grad();
      pm->grad += self.grad;
    }
    if (pv->requires_grad) {
      pv->ensure_grad();
      MapConstMat Gm(self.grad.data(), rows, cols);
      Eigen::Map<Eigen::VectorXd> Gv(pv->grad.data(), cols);
      Gv.noalias() += Gm.colwise().sum().transpose();
    }
  };
  return Tensor(n);
}

namespace {

struct ConvDims {
  int ci, h, w, co, kh, kw, ho, wo, stride;
};

ConvDims conv_dims(const Tensor& x, const Tensor& k, int stride) {
  require(x.shape().size() == 3, "conv2d: input must be [Ci,H,W]");
  require(k.shape().size() == 4, "conv2d: kernels must be [Co,Ci,kh,kw]");
  require(stride >= 1, "conv2d: stride must be >= 1");
  ConvDims d;
  d.ci = x.shape()[0];
  d.h = x.shape()[1];
  d.w = x.shape()[2];
  d.co = k.shape()[0];
  d.kh = k.shape()[2];
  d.kw = k.shape()[3];
  d.stride = stride;
  require(k.shape()[1] == d.ci, "conv2d: channel mismatch (input " + std::to_string(d.ci) +
                                    ", kernels expect " + std::to_string(k.shape()[1]) + ")");
  require(d.h >= d.kh && d.w >= d.kw, "conv2d: kernel larger than input");
  d.ho = (d.h - d.kh) / stride + 1;
  d.wo = (d.w - d.kw) / stride + 1;
  return d;
}

// im2col: [Ho*Wo, Ci*kh*kw], rows in output scan order.
RowMat im2col(const Eigen::ArrayXd& x, const ConvDims& d) {
  RowMat cols(static_cast<long>(d.ho) * d.wo, static_cast<long>(d.ci) * d.kh * d.kw);
  for (int oy = 0; oy < d.ho; ++oy) {
    for (int ox = 0; ox < d.wo; ++ox) {
      const long row = static_cast<long>(oy) * d.wo + ox;
      long col = 0;
      for (int c = 0; c < d.ci; ++c) {
        const long base = static_cast<long>(c) * d.h * d.w;
        for (int ky = 0; ky < d.kh; ++ky) {
          const long rowbase = base + static_cast<long>(oy * d.stride + ky) * d.w +
                               ox * d.stride;
          for (int kx = 0; kx < d.kw; ++kx) cols(row, col++) = x[rowbase + kx];
        }
      }
    }
  }
  return cols;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride) {
  const ConvDims d = conv_dims(x, kernels, stride);
  require(bias.shape().size() == 1 && bias.shape()[0] == d.co, "conv2d: bias shape");

  const RowMat cols = im2col(x.value(), d);
  MapConstMat Km(kernels.value().data(), d.co, static_cast<long>(d.ci) * d.kh * d.kw);
  // out[co, oy, ox]; compute as [Ho*Wo, Co] then transpose into layout.
  RowMat out_t = cols * Km.transpose();  // [Ho*Wo, Co]
  Eigen::ArrayXd out(static_cast<long>(d.co) * d.ho * d.wo);
  for (int c = 0; c < d.co; ++c) {
    const double b = bias.value()[c];
    for (long i = 0; i < static_cast<long>(d.ho) * d.wo; ++i)
      out[static_cast<long>(c) * d.ho * d.wo + i] = out_t(i, c) + b;
  }

  auto n = make_node({d.co, d.ho, d.wo}, std::move(out),
                     {x.node(), kernels.node(), bias.node()});
  n->backward_fn = [d](Node& self) {
    auto& px = self.parents[0];
    auto& pk = self.parents[1];
    auto& pb = self.parents[2];
    const long npix = static_cast<long>(d.ho) * d.wo;
    // dOut as [Ho*Wo, Co].
    RowMat g(npix, d.co);
    for (int c = 0; c < d.co; ++c)
      for (long i = 0; i < npix; ++i) g(i, c) = self.grad[static_cast<long>(c) * npix + i];
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (int c = 0; c < d.co; ++c) pb->grad[c] += g.col(c).sum();
    }
    if (pk->requires_grad) {
      pk->ensure_grad();
      const RowMat cols = im2col(px->value, d);
      MapMat Gk(pk->grad.data(), d.co, static_cast<long>(d.ci) * d.kh * d.kw);
      Gk.noalias() += g.transpose() * cols;
    }
    if (px->requires_grad) {
      px->ensure_grad();
      MapConstMat Km(pk->value.data(), d.co, static_cast<long>(d.ci) * d.kh * d.kw);
      const RowMat dcols = g * Km;  // [Ho*Wo, Ci*kh*kw]
      // col2im scatter-add.
      for (int oy = 0; oy < d.ho; ++oy) {
        for (int ox = 0; ox < d.wo; ++ox) {
          const long row = static_cast<long>(oy) * d.wo + ox;
          long col = 0;
          for (int c = 0; c < d.ci; ++c) {
            const long base = static_cast<long>(c) * d.h * d.w;
            for (int ky = 0; ky < d.kh; ++ky) {
              const long rowbase = base + static_cast<long>(oy * d.stride + ky) * d.w +
                                   ox * d.stride;
              for (int kx = 0; kx < d.kw; ++kx) px->grad[rowbase + kx] += dcols(row, col++);
            }
          }
        }
      }
    }
  };
  return Tensor(n);
}

void backward(const Tensor& loss) {
  if (!loss.valid() || loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  // Topological order by iterative post-order DFS.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child++].get();
      if (!visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->requires_grad) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

void zero_grad(const std::vector<Tensor>& tensors) {
  for (const auto& t : tensors) {
    t.node()->ensure_grad();
    t.node()->grad.setZero();
  }
}

AdamState AdamState::make(const std::vector<Tensor>& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (const auto& p : params) {
    s.m.push_back(Eigen::ArrayXd::Zero(p.numel()));
    s.v.push_back(Eigen::ArrayXd::Zero(p.numel()));
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (params.size() != state.m.size())
    throw std::invalid_argument("adam_step: state does not match parameter list");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Node* n = params[i].node().get();
    n->ensure_grad();
    if (state.m[i].size() != n->value.size())
      throw std::invalid_argument("adam_step: moment shape mismatch");
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * n->grad;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * n->grad.square();
    const Eigen::ArrayXd mhat = state.m[i] / bc1;
    const Eigen::ArrayXd vhat = state.v[i] / bc2;
    n->value -= state.lr * mhat / (vhat.sqrt() + state.eps);
  }
}

}  // namespace sdfplan::ad
