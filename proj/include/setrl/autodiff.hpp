#pragma once

// Reverse-mode automatic differentiation over the exact operation set the
// networks need. The graph lives in an arena (creation order is already a
// topological order), so backward is a single reverse sweep with no recursion
// and no per-node heap traffic after warm-up; reset() keeps buffer capacity so
// training loops reuse memory. One Tape per thread; distinct tapes are
// independent.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "setrl/matrix.hpp"

namespace setrl {

using NodeId = int32_t;

enum class Op : uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kScale,        // s0 * x
  kAddRowvec,    // (N x k) + broadcast (1 x k)
  kMatmul,       // A B
  kMatmulNT,     // A B^T
  kRelu,
  kRowSoftmax,
  kRowLogSoftmax,
  kRowProjectLp,  // s0 = p
  kClipScalar,    // s0 = clip level
  kRff,           // fused row-wise feedforward; parents (x, a, b), i0 = m
  kTakeCols,      // columns [i0, i1)
  kSqFrobenius,   // sum of squares -> 1x1
  kPick,          // x(i0, i1) -> 1x1
};

struct Node {
  Matrix val;
  Matrix grad;
  Matrix aux;   // op-specific cache (rff hidden activations, projection norms)
  Matrix aux2;  // op-specific scratch used during backward
  NodeId p0 = -1, p1 = -1, p2 = -1;
  Op op = Op::kLeaf;
  double s0 = 0.0;
  int i0 = 0, i1 = 0;
  uint32_t grad_epoch = 0;
  bool needs_grad = true;
};

class Tape {
 public:
  NodeId leaf(const Matrix& v, bool needs_grad = true) {
    Node& n = alloc();
    n.op = Op::kLeaf;
    n.val = v;
    n.needs_grad = needs_grad;
    return used_ - 1;
  }

  const Matrix& value(NodeId id) const { return nodes_[id].val; }
  // Mutable access to a leaf's stored value (optimizer updates leaves in place).
  Matrix& value_mut(NodeId id) { return nodes_[id].val; }

  // Gradient of the last backward() output w.r.t. node id (zeros if unreached).
  Matrix grad(NodeId id) const {
    const Node& n = nodes_[id];
    if (n.grad_epoch != epoch_) return Matrix(n.val.rows, n.val.cols);
    return n.grad;
  }
  bool grad_nonzero(NodeId id) const { return nodes_[id].grad_epoch == epoch_; }
  // In-place read: valid only when grad_nonzero(id).
  const Matrix& grad_ref(NodeId id) const { return nodes_[id].grad; }

  void reset() { used_ = 0; }
  int size() const { return used_; }
  // Drop nodes back to a watermark (parameters uploaded below it survive).
  void truncate(int watermark) { used_ = watermark; }

  // ---- graph construction ----

  NodeId add(NodeId x, NodeId y) {
    require_same_shape(x, y, "tape add");
    Node& n = new_node(Op::kAdd, x, y);
    const Matrix& a = nodes_[n.p0].val;
    const Matrix& b = nodes_[n.p1].val;
    n.val.resize(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) n.val.a[i] = a.a[i] + b.a[i];
    return used_ - 1;
  }

  NodeId sub(NodeId x, NodeId y) {
    require_same_shape(x, y, "tape sub");
    Node& n = new_node(Op::kSub, x, y);
    const Matrix& a = nodes_[n.p0].val;
    const Matrix& b = nodes_[n.p1].val;
    n.val.resize(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) n.val.a[i] = a.a[i] - b.a[i];
    return used_ - 1;
  }

  NodeId scale(NodeId x, double c) {
    Node& n = new_node(Op::kScale, x);
    n.s0 = c;
    const Matrix& a = nodes_[n.p0].val;
    n.val.resize(a.rows, a.cols);
    for (int i = 0; i < a.size(); ++i) n.val.a[i] = c * a.a[i];
    return used_ - 1;
  }

  NodeId add_rowvec(NodeId x, NodeId r) {
    if (nodes_[r].val.rows != 1 || nodes_[r].val.cols != nodes_[x].val.cols)
      throw std::invalid_argument("tape add_rowvec: need 1 x cols vector");
    Node& n = new_node(Op::kAddRowvec, x, r);
    const Matrix& a = nodes_[n.p0].val;
    const Matrix& b = nodes_[n.p1].val;
    n.val.resize(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < a.cols; ++j) n.val(i, j) = a(i, j) + b(0, j);
    return used_ - 1;
  }

  NodeId matmul(NodeId x, NodeId y) {
    Node& n = new_node(Op::kMatmul, x, y);
    matmul_into(n.val, nodes_[n.p0].val, nodes_[n.p1].val);
    return used_ - 1;
  }

  NodeId matmul_nt(NodeId x, NodeId y) {
    Node& n = new_node(Op::kMatmulNT, x, y);
    matmul_nt_into(n.val, nodes_[n.p0].val, nodes_[n.p1].val);
    return used_ - 1;
  }

  NodeId relu(NodeId x) {
    Node& n = new_node(Op::kRelu, x);
    relu_into(n.val, nodes_[n.p0].val);
    return used_ - 1;
  }

  NodeId row_softmax(NodeId x) {
    Node& n = new_node(Op::kRowSoftmax, x);
    row_softmax_into(n.val, nodes_[n.p0].val);
    return used_ - 1;
  }

  NodeId row_log_softmax(NodeId x) {
    Node& n = new_node(Op::kRowLogSoftmax, x);
    const Matrix& a = nodes_[n.p0].val;
    n.val.resize(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
      const double* xi = a.row(i);
      double mx = -kInf;
      for (int j = 0; j < a.cols; ++j) mx = std::max(mx, xi[j]);
      double z = 0.0;
      for (int j = 0; j < a.cols; ++j) z += std::exp(xi[j] - mx);
      const double lse = mx + std::log(z);
      for (int j = 0; j < a.cols; ++j) n.val(i, j) = xi[j] - lse;
    }
    return used_ - 1;
  }

  NodeId row_project_lp(NodeId x, double p) {
    if (p < 1.0) throw std::domain_error("tape row_project_lp: p < 1");
    Node& n = new_node(Op::kRowProjectLp, x);
    n.s0 = p;
    const Matrix& a = nodes_[n.p0].val;
    n.val.resize(a.rows, a.cols);
    n.aux.resize(a.rows, 1);  // row norms
    for (int i = 0; i < a.rows; ++i) {
      const double nrm = row_lp_norm(a, i, p);
      n.aux(i, 0) = nrm;
      const double s = nrm > 1.0 + kProjGuard ? 1.0 / nrm : 1.0;
      for (int j = 0; j < a.cols; ++j) n.val(i, j) = a(i, j) * s;
    }
    return used_ - 1;
  }

  NodeId clip_scalar(NodeId x, double v) {
    if (v <= 0.0) throw std::domain_error("tape clip_scalar: v <= 0");
    if (nodes_[x].val.rows != 1 || nodes_[x].val.cols != 1)
      throw std::invalid_argument("tape clip_scalar: need 1x1");
    Node& n = new_node(Op::kClipScalar, x);
    n.s0 = v;
    n.val.resize(1, 1);
    n.val(0, 0) = setrl::clip_scalar(nodes_[n.p0].val(0, 0), v);
    return used_ - 1;
  }

  // Fused rFF block: out[i,k] = sum_j a[(k m)+j] * relu(b_{kj}^T x_i).
  // x: N x d; avec: 1 x (d m); bmat: d x (d m) with column (k m)+j = b_{kj}.
  NodeId rff(NodeId x, NodeId avec, NodeId bmat, int m) {
    {
      const Matrix& xm = nodes_[x].val;
      const Matrix& am = nodes_[avec].val;
      const Matrix& bm = nodes_[bmat].val;
      const int d = xm.cols;
      if (bm.rows != d || bm.cols != d * m || am.rows != 1 || am.cols != d * m)
        throw std::invalid_argument("tape rff: parameter shapes inconsistent with (d,m)");
    }
    Node& n = new_node(Op::kRff, x, avec, bmat);
    n.i0 = m;
    const Matrix& xm = nodes_[n.p0].val;
    const Matrix& am = nodes_[n.p1].val;
    const Matrix& bm = nodes_[n.p2].val;
    const int d = xm.cols;
    matmul_into(n.aux, xm, bm);  // pre-activations N x (d m)
    for (double& v : n.aux.a) v = v > 0.0 ? v : 0.0;
    n.val.resize(xm.rows, d);
    for (int i = 0; i < xm.rows; ++i) {
      const double* h = n.aux.row(i);
      double* out = n.val.row(i);
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        const double* ak = am.row(0) + k * m;
        const double* hk = h + k * m;
        for (int j = 0; j < m; ++j) s += ak[j] * hk[j];
        out[k] = s;
      }
    }
    return used_ - 1;
  }

  NodeId take_cols(NodeId x, int c0, int c1) {
    if (c0 < 0 || c1 > nodes_[x].val.cols || c0 >= c1)
      throw std::invalid_argument("tape take_cols: bad range");
    Node& n = new_node(Op::kTakeCols, x);
    n.i0 = c0;
    n.i1 = c1;
    const Matrix& a = nodes_[n.p0].val;
    n.val.resize(a.rows, c1 - c0);
    for (int i = 0; i < a.rows; ++i)
      for (int j = c0; j < c1; ++j) n.val(i, j - c0) = a(i, j);
    return used_ - 1;
  }

  NodeId sq_frobenius(NodeId x) {
    Node& n = new_node(Op::kSqFrobenius, x);
    const Matrix& a = nodes_[n.p0].val;
    n.val.resize(1, 1);
    double s = 0.0;
    for (double v : a.a) s += v * v;
    n.val(0, 0) = s;
    return used_ - 1;
  }

  NodeId pick(NodeId x, int i, int j) {
    if (i < 0 || i >= nodes_[x].val.rows || j < 0 || j >= nodes_[x].val.cols)
      throw std::invalid_argument("tape pick: index out of range");
    Node& n = new_node(Op::kPick, x);
    n.i0 = i;
    n.i1 = j;
    n.val.resize(1, 1);
    n.val(0, 0) = nodes_[n.p0].val(i, j);
    return used_ - 1;
  }

  // Convenience: 1x1 constant.
  NodeId constant(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return leaf(m, /*needs_grad=*/false);
  }

  // ---- backward ----

  void backward(NodeId out) {
    Node& o = nodes_[out];
    if (o.val.rows != 1 || o.val.cols != 1)
      throw std::logic_error("backward: output must be scalar");
    ++epoch_;
    touch_grad(out);
    o.grad(0, 0) = 1.0;
    for (NodeId id = out; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad_epoch != epoch_ || n.op == Op::kLeaf) continue;
      step_backward(n);
    }
  }

 private:
  std::vector<Node> nodes_;
  int used_ = 0;
  uint32_t epoch_ = 0;

  Node& alloc() {
    if (used_ == static_cast<int>(nodes_.size())) nodes_.emplace_back();
    Node& n = nodes_[used_++];
    n.p0 = n.p1 = n.p2 = -1;
    n.s0 = 0.0;
    n.i0 = n.i1 = 0;
    n.grad_epoch = 0;
    n.needs_grad = true;
    return n;
  }

  Node& new_node(Op op, NodeId p0, NodeId p1 = -1, NodeId p2 = -1) {
    check_id(p0);
    if (p1 >= 0) check_id(p1);
    if (p2 >= 0) check_id(p2);
    Node& n = alloc();
    n.op = op;
    n.p0 = p0;
    n.p1 = p1;
    n.p2 = p2;
    return n;
  }

  void require_same_shape(NodeId x, NodeId y, const char* what) const {
    check_id(x);
    check_id(y);
    if (!nodes_[x].val.same_shape(nodes_[y].val))
      throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }

  void check_id(NodeId id) const {
    if (id < 0 || id >= used_) throw std::out_of_range("tape: node id out of range");
  }

  Matrix& touch_grad(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad_epoch != epoch_) {
      n.grad.resize(n.val.rows, n.val.cols);  // fills with zeros
      n.grad_epoch = epoch_;
    }
    return n.grad;
  }

  bool wants_grad(NodeId id) const {
    const Node& n = nodes_[id];
    return n.op != Op::kLeaf || n.needs_grad;
  }

  void step_backward(Node& n) {
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd: {
        if (wants_grad(n.p0)) accumulate(n.p0, g, 1.0);
        if (wants_grad(n.p1)) accumulate(n.p1, g, 1.0);
        break;
      }
      case Op::kSub: {
        if (wants_grad(n.p0)) accumulate(n.p0, g, 1.0);
        if (wants_grad(n.p1)) accumulate(n.p1, g, -1.0);
        break;
      }
      case Op::kScale: {
        if (wants_grad(n.p0)) accumulate(n.p0, g, n.s0);
        break;
      }
      case Op::kAddRowvec: {
        if (wants_grad(n.p0)) accumulate(n.p0, g, 1.0);
        if (wants_grad(n.p1)) {
          Matrix& gr = touch_grad(n.p1);
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) gr(0, j) += g(i, j);
        }
        break;
      }
      case Op::kMatmul: {
        const Matrix& A = nodes_[n.p0].val;
        const Matrix& B = nodes_[n.p1].val;
        if (wants_grad(n.p0)) {
          matmul_nt_into(n.aux2, g, B);  // g B^T
          add_into(touch_grad(n.p0), n.aux2);
        }
        if (wants_grad(n.p1)) {
          matmul_tn_into(n.aux2, A, g);  // A^T g
          add_into(touch_grad(n.p1), n.aux2);
        }
        break;
      }
      case Op::kMatmulNT: {  // C = A B^T
        const Matrix& A = nodes_[n.p0].val;
        const Matrix& B = nodes_[n.p1].val;
        if (wants_grad(n.p0)) {
          matmul_into(n.aux2, g, B);  // g B
          add_into(touch_grad(n.p0), n.aux2);
        }
        if (wants_grad(n.p1)) {
          matmul_tn_into(n.aux2, g, A);  // g^T A
          add_into(touch_grad(n.p1), n.aux2);
        }
        break;
      }
      case Op::kRelu: {
        if (!wants_grad(n.p0)) break;
        Matrix& gx = touch_grad(n.p0);
        const Matrix& x = nodes_[n.p0].val;
        for (int i = 0; i < x.size(); ++i)
          if (x.a[i] > 0.0) gx.a[i] += g.a[i];
        break;
      }
      case Op::kRowSoftmax: {
        if (!wants_grad(n.p0)) break;
        Matrix& gx = touch_grad(n.p0);
        const Matrix& p = n.val;
        for (int i = 0; i < p.rows; ++i) {
          const double* pi = p.row(i);
          const double* gi = g.row(i);
          double dot = 0.0;
          for (int j = 0; j < p.cols; ++j) dot += pi[j] * gi[j];
          double* oi = gx.row(i);
          for (int j = 0; j < p.cols; ++j) oi[j] += pi[j] * (gi[j] - dot);
        }
        break;
      }
      case Op::kRowLogSoftmax: {
        if (!wants_grad(n.p0)) break;
        Matrix& gx = touch_grad(n.p0);
        for (int i = 0; i < n.val.rows; ++i) {
          const double* li = n.val.row(i);
          const double* gi = g.row(i);
          double gsum = 0.0;
          for (int j = 0; j < n.val.cols; ++j) gsum += gi[j];
          double* oi = gx.row(i);
          for (int j = 0; j < n.val.cols; ++j) oi[j] += gi[j] - std::exp(li[j]) * gsum;
        }
        break;
      }
      case Op::kRowProjectLp: {
        if (!wants_grad(n.p0)) break;
        Matrix& gx = touch_grad(n.p0);
        const Matrix& x = nodes_[n.p0].val;
        const double p = n.s0;
        for (int i = 0; i < x.rows; ++i) {
          const double nrm = n.aux(i, 0);
          const double* xi = x.row(i);
          const double* gi = g.row(i);
          double* oi = gx.row(i);
          if (nrm <= 1.0 + kProjGuard) {
            for (int j = 0; j < x.cols; ++j) oi[j] += gi[j];
            continue;
          }
          // y = x / s with s = ||x||_p: dy_k/dx_j = delta/s - x_k u_j / s^2,
          // u_j = d||x||_p/dx_j.
          double gdotx = 0.0;
          for (int j = 0; j < x.cols; ++j) gdotx += gi[j] * xi[j];
          const double c = gdotx / (nrm * nrm);
          for (int j = 0; j < x.cols; ++j) {
            double u;
            if (p == 2.0) {
              u = xi[j] / nrm;
            } else if (p == 1.0) {
              u = xi[j] > 0.0 ? 1.0 : (xi[j] < 0.0 ? -1.0 : 0.0);
            } else if (p == kInf) {
              u = 0.0;  // handled below
            } else {
              u = (xi[j] == 0.0 ? 0.0
                                : std::copysign(std::pow(std::fabs(xi[j]) / nrm, p - 1.0), xi[j]));
            }
            oi[j] += gi[j] / nrm - c * u;
          }
          if (p == kInf) {  // subgradient: all mass on the first argmax coordinate
            int am = 0;
            double best = -1.0;
            for (int j = 0; j < x.cols; ++j)
              if (std::fabs(xi[j]) > best) {
                best = std::fabs(xi[j]);
                am = j;
              }
            oi[am] -= c * (xi[am] > 0.0 ? 1.0 : -1.0);
          }
        }
        break;
      }
      case Op::kClipScalar: {
        if (!wants_grad(n.p0)) break;
        const double x = nodes_[n.p0].val(0, 0);
        if (std::fabs(x) <= n.s0) touch_grad(n.p0)(0, 0) += g(0, 0);
        break;
      }
      case Op::kRff: {
        const Matrix& x = nodes_[n.p0].val;
        const Matrix& am = nodes_[n.p1].val;
        const Matrix& bm = nodes_[n.p2].val;
        const int m = n.i0;
        const int d = x.cols;
        const Matrix& H = n.aux;  // post-relu activations N x (d m)
        // gH (masked) shared by the x and b paths.
        n.aux2.resize(H.rows, H.cols);
        for (int i = 0; i < x.rows; ++i) {
          const double* gi = g.row(i);
          const double* hi = H.row(i);
          double* ghi = n.aux2.row(i);
          for (int k = 0; k < d; ++k) {
            const double gk = gi[k];
            const double* ak = am.row(0) + k * m;
            for (int j = 0; j < m; ++j) {
              const int c = k * m + j;
              ghi[c] = hi[c] > 0.0 ? gk * ak[j] : 0.0;
            }
          }
        }
        if (wants_grad(n.p1)) {
          Matrix& ga = touch_grad(n.p1);
          for (int i = 0; i < x.rows; ++i) {
            const double* gi = g.row(i);
            const double* hi = H.row(i);
            for (int k = 0; k < d; ++k) {
              const double gk = gi[k];
              if (gk == 0.0) continue;
              double* gak = ga.row(0) + k * m;
              const double* hk = hi + k * m;
              for (int j = 0; j < m; ++j) gak[j] += gk * hk[j];
            }
          }
        }
        if (wants_grad(n.p0)) {
          Matrix& gx = touch_grad(n.p0);
          for (int i = 0; i < x.rows; ++i) {
            const double* ghi = n.aux2.row(i);
            double* gxi = gx.row(i);
            for (int c = 0; c < bm.cols; ++c) {
              const double v = ghi[c];
              if (v == 0.0) continue;
              for (int r = 0; r < d; ++r) gxi[r] += v * bm(r, c);
            }
          }
        }
        if (wants_grad(n.p2)) {
          Matrix& gb = touch_grad(n.p2);
          for (int i = 0; i < x.rows; ++i) {
            const double* ghi = n.aux2.row(i);
            const double* xi = x.row(i);
            for (int r = 0; r < d; ++r) {
              const double xv = xi[r];
              if (xv == 0.0) continue;
              double* gbr = gb.row(r);
              for (int c = 0; c < bm.cols; ++c) gbr[c] += xv * ghi[c];
            }
          }
        }
        break;
      }
      case Op::kTakeCols: {
        if (!wants_grad(n.p0)) break;
        Matrix& gx = touch_grad(n.p0);
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) gx(i, n.i0 + j) += g(i, j);
        break;
      }
      case Op::kSqFrobenius: {
        if (!wants_grad(n.p0)) break;
        Matrix& gx = touch_grad(n.p0);
        const Matrix& x = nodes_[n.p0].val;
        const double go = g(0, 0);
        for (int i = 0; i < x.size(); ++i) gx.a[i] += 2.0 * go * x.a[i];
        break;
      }
      case Op::kPick: {
        if (!wants_grad(n.p0)) break;
        touch_grad(n.p0)(n.i0, n.i1) += g(0, 0);
        break;
      }
    }
  }

  void accumulate(NodeId id, const Matrix& g, double c) {
    Matrix& dst = touch_grad(id);
    if (c == 1.0) {
      for (int i = 0; i < g.size(); ++i) dst.a[i] += g.a[i];
    } else {
      for (int i = 0; i < g.size(); ++i) dst.a[i] += c * g.a[i];
    }
  }

  static void add_into(Matrix& dst, const Matrix& src) {
    for (int i = 0; i < src.size(); ++i) dst.a[i] += src.a[i];
  }
};

}  // namespace setrl
