#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "binembed/errors.hpp"
#include "binembed/matrix.hpp"

namespace binembed {
namespace ag {

// Reverse-mode autodiff over Mat. Each op allocates a Node holding the
// forward value plus a closure that scatters the node's gradient into its
// parents. Graphs are built per training step and dropped afterwards;
// parameters are long-lived leaf nodes whose grads the optimizer consumes.

struct Node {
  Mat value;
  Mat grad;  // lazily allocated to value's shape
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.empty()) grad = Mat(value.rows, value.cols);
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  bool defined() const { return n_ != nullptr; }
  const Mat& value() const { return n_->value; }
  Mat& value() { return n_->value; }
  Mat& grad() {
    n_->ensure_grad();
    return n_->grad;
  }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  void set_requires_grad(bool b) { n_->requires_grad = b; }
  void clear_grad() { n_->grad = Mat(); }
  int rows() const { return n_->value.rows; }
  int cols() const { return n_->value.cols; }
  std::shared_ptr<Node> node() const { return n_; }

 private:
  std::shared_ptr<Node> n_;
};

// Scoped switch that disables graph recording (evaluation-mode forward).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(enabled_ref()) { enabled_ref() = false; }
  ~NoGradGuard() { enabled_ref() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool grad_enabled() { return enabled_ref(); }

 private:
  static bool& enabled_ref() {
    thread_local bool enabled = true;
    return enabled;
  }
  bool prev_;
};

inline Var constant(Mat m) {
  auto n = std::make_shared<Node>();
  n->value = std::move(m);
  n->requires_grad = false;
  return Var(n);
}

inline Var parameter(Mat m) {
  auto n = std::make_shared<Node>();
  n->value = std::move(m);
  n->requires_grad = true;
  return Var(n);
}

inline Var make_op(Mat value, std::vector<Var> parents,
                   std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool rg = false;
  if (NoGradGuard::grad_enabled()) {
    for (const Var& p : parents) rg = rg || p.requires_grad();
  }
  n->requires_grad = rg;
  if (rg) {
    n->parents.reserve(parents.size());
    for (const Var& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(backprop);
  }
  return Var(n);
}

// Runs backprop from a 1x1 root. Accumulates into parameter grads.
inline void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1)
    throw ContractError("backward: root must be a 1x1 scalar");
  if (!root.requires_grad()) return;

  // Post-order DFS, then reverse sweep.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad.at(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// ---------------------------------------------------------------------------
// elementwise and shape ops

inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw ContractError(std::string(op) + ": shape mismatch");
}

inline Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Mat out = a.value();
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += b.value().a[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    for (int k = 0; k < 2; ++k) {
      Node* p = n.parents[static_cast<size_t>(k)].get();
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (size_t i = 0; i < n.grad.a.size(); ++i) p->grad.a[i] += n.grad.a[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Mat out = a.value();
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] -= b.value().a[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < n.grad.a.size(); ++i) pa->grad.a[i] += n.grad.a[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < n.grad.a.size(); ++i) pb->grad.a[i] -= n.grad.a[i];
    }
  });
}

inline Var mul(const Var& a, const Var& b) {  // Hadamard
  check_same_shape(a, b, "mul");
  Mat out = a.value();
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] *= b.value().a[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < n.grad.a.size(); ++i)
        pa->grad.a[i] += n.grad.a[i] * pb->value.a[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < n.grad.a.size(); ++i)
        pb->grad.a[i] += n.grad.a[i] * pa->value.a[i];
    }
  });
}

// X (n x d) scaled per row by lam (n x 1), broadcast across columns.
inline Var mul_bcast_col(const Var& x, const Var& lam) {
  if (lam.cols() != 1 || lam.rows() != x.rows())
    throw ContractError("mul_bcast_col: lambda must be n x 1");
  Mat out = x.value();
  for (int i = 0; i < out.rows; ++i) {
    const double l = lam.value().at(i, 0);
    double* r = out.row_ptr(i);
    for (int j = 0; j < out.cols; ++j) r[j] *= l;
  }
  return make_op(std::move(out), {x, lam}, [](Node& n) {
    Node* px = n.parents[0].get();
    Node* pl = n.parents[1].get();
    const int rows = n.value.rows, cols = n.value.cols;
    if (px->requires_grad) {
      px->ensure_grad();
      for (int i = 0; i < rows; ++i) {
        const double l = pl->value.at(i, 0);
        const double* g = n.grad.row_ptr(i);
        double* d = px->grad.row_ptr(i);
        for (int j = 0; j < cols; ++j) d[j] += g[j] * l;
      }
    }
    if (pl->requires_grad) {
      pl->ensure_grad();
      for (int i = 0; i < rows; ++i) {
        const double* g = n.grad.row_ptr(i);
        const double* xv = px->value.row_ptr(i);
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += g[j] * xv[j];
        pl->grad.at(i, 0) += s;
      }
    }
  });
}

inline Var scale(const Var& a, double s) {
  Mat out = a.value();
  for (double& v : out.a) v *= s;
  return make_op(std::move(out), {a}, [s](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (size_t i = 0; i < n.grad.a.size(); ++i) p->grad.a[i] += s * n.grad.a[i];
  });
}

inline Var add_scalar(const Var& a, double c) {
  Mat out = a.value();
  for (double& v : out.a) v += c;
  return make_op(std::move(out), {a}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (size_t i = 0; i < n.grad.a.size(); ++i) p->grad.a[i] += n.grad.a[i];
  });
}

inline Var one_minus(const Var& a) {
  Mat out = a.value();
  for (double& v : out.a) v = 1.0 - v;
  return make_op(std::move(out), {a}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (size_t i = 0; i < n.grad.a.size(); ++i) p->grad.a[i] -= n.grad.a[i];
  });
}

// Multiply every entry of X by a 1x1 Var.
inline Var mul_scalar_var(const Var& x, const Var& s) {
  if (s.rows() != 1 || s.cols() != 1)
    throw ContractError("mul_scalar_var: scalar must be 1x1");
  const double sv = s.value().at(0, 0);
  Mat out = x.value();
  for (double& v : out.a) v *= sv;
  return make_op(std::move(out), {x, s}, [](Node& n) {
    Node* px = n.parents[0].get();
    Node* ps = n.parents[1].get();
    const double sv = ps->value.at(0, 0);
    if (px->requires_grad) {
      px->ensure_grad();
      for (size_t i = 0; i < n.grad.a.size(); ++i)
        px->grad.a[i] += n.grad.a[i] * sv;
    }
    if (ps->requires_grad) {
      ps->ensure_grad();
      double acc = 0.0;
      for (size_t i = 0; i < n.grad.a.size(); ++i)
        acc += n.grad.a[i] * px->value.a[i];
      ps->grad.at(0, 0) += acc;
    }
  });
}

inline Var exp_op(const Var& a) {
  Mat out = a.value();
  for (double& v : out.a) v = std::exp(v);
  return make_op(std::move(out), {a}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (size_t i = 0; i < n.grad.a.size(); ++i)
      p->grad.a[i] += n.grad.a[i] * n.value.a[i];
  });
}

inline Var sigmoid(const Var& a) {
  Mat out = a.value();
  for (double& v : out.a) v = 1.0 / (1.0 + std::exp(-v));
  return make_op(std::move(out), {a}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (size_t i = 0; i < n.grad.a.size(); ++i) {
      const double y = n.value.a[i];
      p->grad.a[i] += n.grad.a[i] * y * (1.0 - y);
    }
  });
}

inline double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

inline double gelu_grad_scalar(double x) {
  const double phi = std::exp(-0.5 * x * x) * 0.3989422804014326779;  // pdf
  const double Phi = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
  return Phi + x * phi;
}

inline Var gelu(const Var& a) {
  Mat out = a.value();
  for (double& v : out.a) v = gelu_scalar(v);
  return make_op(std::move(out), {a}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (size_t i = 0; i < n.grad.a.size(); ++i)
      p->grad.a[i] += n.grad.a[i] * gelu_grad_scalar(p->value.a[i]);
  });
}

// ---------------------------------------------------------------------------
// matrix ops

inline Var matmul(const Var& a, const Var& b) {
  Mat out = binembed::matmul(a.value(), b.value());
  return make_op(std::move(out), {a, b}, [](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    if (pa->requires_grad) {
      pa->ensure_grad();
      matmul_nt_acc(n.grad, pb->value, pa->grad);  // dA = G B^T
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      matmul_tn_acc(pa->value, n.grad, pb->grad);  // dB = A^T G
    }
  });
}

// a @ b^T without materializing the transpose.
inline Var matmul_nt(const Var& a, const Var& b) {
  Mat out = binembed::matmul_nt(a.value(), b.value());
  return make_op(std::move(out), {a, b}, [](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    if (pa->requires_grad) {
      pa->ensure_grad();
      matmul_acc(n.grad, pb->value, pa->grad);  // dA = G B
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      matmul_tn_acc(n.grad, pa->value, pb->grad);  // dB = G^T A
    }
  });
}

inline Var transpose(const Var& a) {
  Mat out = binembed::transpose(a.value());
  return make_op(std::move(out), {a}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (int i = 0; i < n.grad.rows; ++i)
      for (int j = 0; j < n.grad.cols; ++j) p->grad.at(j, i) += n.grad.at(i, j);
  });
}

// X (n x d) + b (1 x d), broadcast over rows.
inline Var add_rowvec(const Var& x, const Var& b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    throw ContractError("add_rowvec: bias must be 1 x cols");
  Mat out = x.value();
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row_ptr(i);
    const double* bv = b.value().row_ptr(0);
    for (int j = 0; j < out.cols; ++j) r[j] += bv[j];
  }
  return make_op(std::move(out), {x, b}, [](Node& n) {
    Node* px = n.parents[0].get();
    Node* pb = n.parents[1].get();
    if (px->requires_grad) {
      px->ensure_grad();
      for (size_t i = 0; i < n.grad.a.size(); ++i) px->grad.a[i] += n.grad.a[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (int i = 0; i < n.grad.rows; ++i) {
        const double* g = n.grad.row_ptr(i);
        double* d = pb->grad.row_ptr(0);
        for (int j = 0; j < n.grad.cols; ++j) d[j] += g[j];
      }
    }
  });
}

inline Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw ContractError("concat_cols: row mismatch");
  Mat out(a.rows(), a.cols() + b.cols());
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row_ptr(i);
    const double* ra = a.value().row_ptr(i);
    const double* rb = b.value().row_ptr(i);
    for (int j = 0; j < a.cols(); ++j) r[j] = ra[j];
    for (int j = 0; j < b.cols(); ++j) r[a.cols() + j] = rb[j];
  }
  const int ca = a.cols();
  return make_op(std::move(out), {a, b}, [ca](Node& n) {
    Node* pa = n.parents[0].get();
    Node* pb = n.parents[1].get();
    const int cb = n.value.cols - ca;
    for (int i = 0; i < n.grad.rows; ++i) {
      const double* g = n.grad.row_ptr(i);
      if (pa->requires_grad) {
        pa->ensure_grad();
        double* da = pa->grad.row_ptr(i);
        for (int j = 0; j < ca; ++j) da[j] += g[j];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        double* db = pb->grad.row_ptr(i);
        for (int j = 0; j < cb; ++j) db[j] += g[ca + j];
      }
    }
  });
}

// Vertically stack inputs with equal column counts.
inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: empty input");
  const int cols = parts[0].cols();
  int rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ContractError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  int r = 0;
  for (const Var& p : parts) {
    for (int i = 0; i < p.rows(); ++i, ++r)
      for (int j = 0; j < cols; ++j) out.at(r, j) = p.value().at(i, j);
  }
  return make_op(std::move(out), parts, [](Node& n) {
    int r = 0;
    for (auto& parent : n.parents) {
      Node* p = parent.get();
      if (p->requires_grad) {
        p->ensure_grad();
        for (int i = 0; i < p->value.rows; ++i)
          for (int j = 0; j < p->value.cols; ++j)
            p->grad.at(i, j) += n.grad.at(r + i, j);
      }
      r += p->value.rows;
    }
  });
}

inline Var col_slice(const Var& x, int c0, int c1) {
  if (c0 < 0 || c1 > x.cols() || c0 >= c1)
    throw ContractError("col_slice: bad range");
  Mat out(x.rows(), c1 - c0);
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out.at(i, j) = x.value().at(i, c0 + j);
  return make_op(std::move(out), {x}, [c0](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (int i = 0; i < n.grad.rows; ++i)
      for (int j = 0; j < n.grad.cols; ++j)
        p->grad.at(i, c0 + j) += n.grad.at(i, j);
  });
}

// Gather rows of a table (embedding lookup). Backward scatter-adds.
inline Var row_gather(const Var& table, const std::vector<int>& ids) {
  Mat out(static_cast<int>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows())
      throw RangeError("row_gather: id out of range");
    const double* src = table.value().row_ptr(ids[i]);
    double* dst = out.row_ptr(static_cast<int>(i));
    for (int j = 0; j < out.cols; ++j) dst[j] = src[j];
  }
  return make_op(std::move(out), {table}, [ids](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i) {
      const double* g = n.grad.row_ptr(static_cast<int>(i));
      double* d = p->grad.row_ptr(ids[i]);
      for (int j = 0; j < n.grad.cols; ++j) d[j] += g[j];
    }
  });
}

// ---------------------------------------------------------------------------
// reductions and row-wise normalizations

inline Var mean_rows(const Var& x) {  // n x d -> 1 x d
  Mat out(1, x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out.at(0, j) += x.value().at(i, j);
  const double inv = 1.0 / x.rows();
  for (double& v : out.a) v *= inv;
  return make_op(std::move(out), {x}, [inv](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (int i = 0; i < p->grad.rows; ++i)
      for (int j = 0; j < p->grad.cols; ++j)
        p->grad.at(i, j) += inv * n.grad.at(0, j);
  });
}

inline Var sum_all(const Var& x) {  // -> 1 x 1
  double s = 0.0;
  for (double v : x.value().a) s += v;
  Mat out(1, 1);
  out.at(0, 0) = s;
  return make_op(std::move(out), {x}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    const double g = n.grad.at(0, 0);
    for (double& v : p->grad.a) v += g;
  });
}

inline Var mean_all(const Var& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x.value().size()));
}

inline Var softmax_rows(const Var& x) {
  Mat out = x.value();
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row_ptr(i);
    double mx = r[0];
    for (int j = 1; j < out.cols; ++j) mx = std::max(mx, r[j]);
    double s = 0.0;
    for (int j = 0; j < out.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      s += r[j];
    }
    const double inv = 1.0 / s;
    for (int j = 0; j < out.cols; ++j) r[j] *= inv;
  }
  return make_op(std::move(out), {x}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (int i = 0; i < n.grad.rows; ++i) {
      const double* y = n.value.row_ptr(i);
      const double* g = n.grad.row_ptr(i);
      double gy = 0.0;
      for (int j = 0; j < n.grad.cols; ++j) gy += g[j] * y[j];
      double* d = p->grad.row_ptr(i);
      for (int j = 0; j < n.grad.cols; ++j) d[j] += y[j] * (g[j] - gy);
    }
  });
}

inline Var log_softmax_rows(const Var& x) {
  Mat out = x.value();
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row_ptr(i);
    double mx = r[0];
    for (int j = 1; j < out.cols; ++j) mx = std::max(mx, r[j]);
    double s = 0.0;
    for (int j = 0; j < out.cols; ++j) s += std::exp(r[j] - mx);
    const double lse = mx + std::log(s);
    for (int j = 0; j < out.cols; ++j) r[j] -= lse;
  }
  return make_op(std::move(out), {x}, [](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    for (int i = 0; i < n.grad.rows; ++i) {
      const double* y = n.value.row_ptr(i);  // log-probs
      const double* g = n.grad.row_ptr(i);
      double gs = 0.0;
      for (int j = 0; j < n.grad.cols; ++j) gs += g[j];
      double* d = p->grad.row_ptr(i);
      for (int j = 0; j < n.grad.cols; ++j) d[j] += g[j] - std::exp(y[j]) * gs;
    }
  });
}

inline Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta,
                           double eps = 1e-5) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 ||
      beta.cols() != x.cols())
    throw ContractError("layer_norm_rows: gamma/beta must be 1 x cols");
  const int rows = x.rows(), cols = x.cols();
  Mat out(rows, cols);
  Mat xhat(rows, cols);
  Mat inv_std(rows, 1);
  for (int i = 0; i < rows; ++i) {
    const double* r = x.value().row_ptr(i);
    double mu = 0.0;
    for (int j = 0; j < cols; ++j) mu += r[j];
    mu /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double d = r[j] - mu;
      var += d * d;
    }
    var /= cols;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std.at(i, 0) = is;
    for (int j = 0; j < cols; ++j) {
      const double h = (r[j] - mu) * is;
      xhat.at(i, j) = h;
      out.at(i, j) = h * gamma.value().at(0, j) + beta.value().at(0, j);
    }
  }
  auto xhat_p = std::make_shared<Mat>(std::move(xhat));
  auto istd_p = std::make_shared<Mat>(std::move(inv_std));
  return make_op(std::move(out), {x, gamma, beta}, [xhat_p, istd_p](Node& n) {
    Node* px = n.parents[0].get();
    Node* pg = n.parents[1].get();
    Node* pb = n.parents[2].get();
    const int rows = n.value.rows, cols = n.value.cols;
    if (pg->requires_grad) pg->ensure_grad();
    if (pb->requires_grad) pb->ensure_grad();
    if (px->requires_grad) px->ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const double* g = n.grad.row_ptr(i);
      const double* h = xhat_p->row_ptr(i);
      if (pg->requires_grad)
        for (int j = 0; j < cols; ++j) pg->grad.at(0, j) += g[j] * h[j];
      if (pb->requires_grad)
        for (int j = 0; j < cols; ++j) pb->grad.at(0, j) += g[j];
      if (px->requires_grad) {
        // dxhat = g * gamma; dx = istd * (dxhat - mean(dxhat) - h*mean(dxhat*h))
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < cols; ++j) {
          const double dh = g[j] * pg->value.at(0, j);
          m1 += dh;
          m2 += dh * h[j];
        }
        m1 /= cols;
        m2 /= cols;
        const double is = istd_p->at(i, 0);
        double* d = px->grad.row_ptr(i);
        for (int j = 0; j < cols; ++j) {
          const double dh = g[j] * pg->value.at(0, j);
          d[j] += is * (dh - m1 - h[j] * m2);
        }
      }
    }
  });
}

// Row-wise y = x / sqrt(sum(x^2) + eps). With eps at 1e-12 the row norms of
// nondegenerate inputs come out at 1 to well under 1e-9.
inline Var l2_normalize_rows(const Var& x, double eps = 1e-12) {
  const int rows = x.rows(), cols = x.cols();
  Mat out(rows, cols);
  Mat inv_norm(rows, 1);
  for (int i = 0; i < rows; ++i) {
    const double* r = x.value().row_ptr(i);
    double s = eps;
    for (int j = 0; j < cols; ++j) s += r[j] * r[j];
    const double in = 1.0 / std::sqrt(s);
    inv_norm.at(i, 0) = in;
    for (int j = 0; j < cols; ++j) out.at(i, j) = r[j] * in;
  }
  auto inorm_p = std::make_shared<Mat>(std::move(inv_norm));
  return make_op(std::move(out), {x}, [inorm_p](Node& n) {
    Node* p = n.parents[0].get();
    p->ensure_grad();
    const int rows = n.value.rows, cols = n.value.cols;
    for (int i = 0; i < rows; ++i) {
      const double* y = n.value.row_ptr(i);
      const double* g = n.grad.row_ptr(i);
      double gy = 0.0;
      for (int j = 0; j < cols; ++j) gy += g[j] * y[j];
      const double in = inorm_p->at(i, 0);
      double* d = p->grad.row_ptr(i);
      for (int j = 0; j < cols; ++j) d[j] += in * (g[j] - y[j] * gy);
    }
  });
}

}  // namespace ag
}  // namespace binembed
