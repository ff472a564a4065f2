#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every forward op together with a pullback closure. Tensors
// are lightweight handles (tape pointer + node index). Nodes that do not
// depend on a trainable parameter keep no pullback, so constant subgraphs
// cost nothing on the backward sweep.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "parameters.hpp"

namespace matchlab {

class Tape;

class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Pullback = std::function<void(Tape&, const Matrix&)>;

  // With record=false every node is treated as a constant: no pullbacks are
  // kept and backward() is unavailable. Used for frozen-parameter scoring.
  explicit Tape(const ParameterStore* store = nullptr, bool record = true) : store_(store), record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value) { return push("constant", std::move(value), {}, nullptr, false); }

  Tensor param(const std::string& name) {
    if (store_ == nullptr) throw UsageError("tape has no parameter store; cannot bind '" + name + "'");
    auto it = param_ids_.find(name);
    if (it != param_ids_.end()) return Tensor(this, it->second);
    Tensor t = push("param", store_->get(name), {}, nullptr, record_);
    nodes_[t.id()].param_name = name;
    param_ids_.emplace(name, t.id());
    return t;
  }

  const ParameterStore* store() const { return store_; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Gradient accumulator for node `id`, allocated on first use.
  Matrix& grad(int id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
      n.grad = Matrix(n.value.rows(), n.value.cols());
      n.has_grad = true;
    }
    return n.grad;
  }

  Tensor push(const char* op, Matrix value, const std::vector<int>& inputs, Pullback pullback,
              bool leaf_requires_grad = false) {
    if (!value.all_finite()) {
      throw NumericError(std::string("non-finite value produced by op '") + op + "' " + value.shape_string());
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = leaf_requires_grad;
    for (int in : inputs) n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
    n.requires_grad = n.requires_grad && record_;
    if (n.requires_grad) n.pullback = std::move(pullback);
    nodes_.push_back(std::move(n));
    return Tensor(this, static_cast<int>(nodes_.size()) - 1);
  }

  // Gradients of a 1x1 output with respect to every parameter in the bound
  // store. Parameters that never entered the tape get zero gradients.
  GradientMap backward(const Tensor& output) {
    if (output.tape() != this || output.id() < 0 || output.id() >= static_cast<int>(nodes_.size())) {
      throw UsageError("backward: output tensor is not recorded on this tape");
    }
    if (!record_) throw UsageError("backward: tape was created with recording disabled");
    const Matrix& out = nodes_[output.id()].value;
    if (out.rows() != 1 || out.cols() != 1) {
      throw DimensionError("backward: output must be 1x1, got " + out.shape_string());
    }
    for (auto& n : nodes_) {
      n.has_grad = false;
      n.grad = Matrix();
    }
    grad(output.id())(0, 0) = 1.0;
    for (int id = output.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.has_grad || !n.pullback) continue;
      const Matrix g = n.grad;
      n.pullback(*this, g);
    }
    GradientMap grads;
    if (store_ != nullptr) {
      for (const auto& name : store_->names()) {
        const Matrix& w = store_->get(name);
        auto it = param_ids_.find(name);
        if (it != param_ids_.end() && nodes_[it->second].has_grad) {
          grads[name] = nodes_[it->second].grad;
        } else {
          grads[name] = Matrix(w.rows(), w.cols());
        }
      }
    }
    return grads;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Pullback pullback;
    std::string param_name;
  };

  const ParameterStore* store_;
  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_ids_;
};

inline const Matrix& Tensor::value() const { return tape_->value(id_); }
inline bool Tensor::requires_grad() const { return tape_->requires_grad(id_); }

namespace detail {

inline Tape& same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.tape() != b.tape()) throw UsageError(std::string(op) + ": operands live on different tapes");
  return *a.tape();
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
}

}  // namespace detail

// ---- linear algebra ---------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& t = detail::same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: shape mismatch " + a.value().shape_string() + " vs " + b.value().shape_string());
  }
  const int ia = a.id(), ib = b.id();
  return t.push("matmul", matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) accumulate_matmul_bt(tp.grad(ia), g, tp.value(ib));
    if (tp.requires_grad(ib)) accumulate_matmul_at(tp.grad(ib), tp.value(ia), g);
  });
}

inline Tensor transpose(const Tensor& a) {
  const int ia = a.id();
  return a.tape()->push("transpose", a.value().transposed(), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
  });
}

// ---- elementwise ------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  Tape& t = detail::same_tape(a, b, "add");
  detail::check_same_shape(a, b, "add");
  Matrix y = a.value();
  y += b.value();
  const int ia = a.id(), ib = b.id();
  return t.push("add", std::move(y), {ia, ib}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g;
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  Tape& t = detail::same_tape(a, b, "sub");
  detail::check_same_shape(a, b, "sub");
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  return t.push("sub", std::move(y), {ia, ib}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) {
      Matrix& gb = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  Tape& t = detail::same_tape(a, b, "mul");
  detail::check_same_shape(a, b, "mul");
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  return t.push("mul", std::move(y), {ia, ib}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) {
      Matrix& ga = tp.grad(ia);
      const Matrix& bv = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(ib)) {
      Matrix& gb = tp.grad(ib);
      const Matrix& av = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

// a (r x c) + row (1 x c), broadcast over rows.
inline Tensor add_row(const Tensor& a, const Tensor& row) {
  Tape& t = detail::same_tape(a, row, "add_row");
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: shape mismatch " + a.value().shape_string() + " vs " + row.value().shape_string());
  }
  Matrix y = a.value();
  const Matrix& rv = row.value();
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += rv(0, j);
  const int ia = a.id(), ir = row.id();
  return t.push("add_row", std::move(y), {ia, ir}, [ia, ir](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ir)) {
      Matrix& gr = tp.grad(ir);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
    }
  });
}

inline Tensor scale(const Tensor& a, double s) {
  Matrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= s;
  const int ia = a.id();
  return a.tape()->push("scale", std::move(y), {ia}, [ia, s](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

inline Tensor add_scalar(const Tensor& a, double s) {
  Matrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s;
  const int ia = a.id();
  return a.tape()->push("add_scalar", std::move(y), {ia}, [ia](Tape& tp, const Matrix& g) { tp.grad(ia) += g; });
}

inline Tensor relu(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  const int ia = a.id();
  return a.tape()->push("relu", std::move(y), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    const Matrix& x = tp.value(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

inline Tensor sigmoid(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-x[i])) : std::exp(x[i]) / (1.0 + std::exp(x[i]));
  }
  const int ia = a.id();
  Matrix yc = y;
  return a.tape()->push("sigmoid", std::move(y), {ia}, [ia, yc = std::move(yc)](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * yc[i] * (1.0 - yc[i]);
  });
}

inline Tensor tanh(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  const int ia = a.id();
  Matrix yc = y;
  return a.tape()->push("tanh", std::move(y), {ia}, [ia, yc = std::move(yc)](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - yc[i] * yc[i]);
  });
}

inline Tensor exp(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(x[i]);
  const int ia = a.id();
  Matrix yc = y;
  return a.tape()->push("exp", std::move(y), {ia}, [ia, yc = std::move(yc)](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * yc[i];
  });
}

inline Tensor log(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::log(x[i]);
  const int ia = a.id();
  return a.tape()->push("log", std::move(y), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    const Matrix& x = tp.value(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

// ---- row-wise normalizations ---------------------------------------------------

inline Tensor softmax_rows(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      y(i, j) = std::exp(x(i, j) - mx);
      s += y(i, j);
    }
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) /= s;
  }
  const int ia = a.id();
  Matrix yc = y;
  return a.tape()->push("softmax_rows", std::move(y), {ia}, [ia, yc = std::move(yc)](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * yc(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += yc(i, j) * (g(i, j) - dot);
    }
  });
}

// x - logsumexp(x) per row.
inline Tensor log_softmax_rows(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  Matrix soft(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += std::exp(x(i, j) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      y(i, j) = x(i, j) - lse;
      soft(i, j) = std::exp(y(i, j));
    }
  }
  const int ia = a.id();
  return a.tape()->push("log_softmax_rows", std::move(y), {ia},
                        [ia, soft = std::move(soft)](Tape& tp, const Matrix& g) {
                          Matrix& ga = tp.grad(ia);
                          for (std::size_t i = 0; i < g.rows(); ++i) {
                            double gs = 0.0;
                            for (std::size_t j = 0; j < g.cols(); ++j) gs += g(i, j);
                            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) - soft(i, j) * gs;
                          }
                        });
}

// ---- reductions ---------------------------------------------------------------

// (r x c) -> (r x 1)
inline Tensor row_sum(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, 0) += x(i, j);
  const int ia = a.id();
  return a.tape()->push("row_sum", std::move(y), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(i, 0);
  });
}

// (r x c) -> (1 x c)
inline Tensor col_sum(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix y(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(0, j) += x(i, j);
  const int ia = a.id();
  return a.tape()->push("col_sum", std::move(y), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j);
  });
}

inline Tensor sum(const Tensor& a) {
  const Matrix& x = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
  const int ia = a.id();
  return a.tape()->push("sum", Matrix(1, 1, s), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g(0, 0);
  });
}

// ---- structural ---------------------------------------------------------------

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.tape() != &t) throw UsageError("concat_cols: operands live on different tapes");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: shape mismatch " + parts.front().value().shape_string() + " vs " +
                           p.value().shape_string());
    }
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Matrix y(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix& x = parts[k].value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) y(i, offsets[k] + j) = x(i, j);
  }
  return t.push("concat_cols", std::move(y), ids, [ids, offsets](Tape& tp, const Matrix& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Matrix& gk = tp.grad(ids[k]);
      for (std::size_t i = 0; i < gk.rows(); ++i)
        for (std::size_t j = 0; j < gk.cols(); ++j) gk(i, j) += g(i, offsets[k] + j);
    }
  });
}

inline Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  if (start + count > a.cols()) {
    throw DimensionError("slice_cols: range exceeds " + a.value().shape_string());
  }
  const Matrix& x = a.value();
  Matrix y(x.rows(), count);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) y(i, j) = x(i, start + j);
  const int ia = a.id();
  return a.tape()->push("slice_cols", std::move(y), {ia}, [ia, start](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, start + j) += g(i, j);
  });
}

// out[i] = a[index[i]]
inline Tensor gather_rows(const Tensor& a, const std::vector<int>& index) {
  const Matrix& x = a.value();
  Matrix y(index.size(), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= x.rows()) {
      throw DimensionError("gather_rows: index out of range for " + x.shape_string());
    }
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(index[i], j);
  }
  const int ia = a.id();
  return a.tape()->push("gather_rows", std::move(y), {ia}, [ia, index](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < index.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(index[i], j) += g(i, j);
  });
}

// out (n_out x c), out[index[i]] += a[i], accumulated in increasing i.
inline Tensor scatter_add_rows(const Tensor& a, const std::vector<int>& index, std::size_t n_out) {
  const Matrix& x = a.value();
  if (index.size() != x.rows()) throw DimensionError("scatter_add_rows: index length does not match rows");
  Matrix y(n_out, x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= n_out) {
      throw DimensionError("scatter_add_rows: index out of range");
    }
    for (std::size_t j = 0; j < x.cols(); ++j) y(index[i], j) += x(i, j);
  }
  const int ia = a.id();
  return a.tape()->push("scatter_add_rows", std::move(y), {ia}, [ia, index](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < index.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(index[i], j);
  });
}

// Appends zero rows so the result has `rows` rows.
inline Tensor pad_rows(const Tensor& a, std::size_t rows) {
  const Matrix& x = a.value();
  if (rows < x.rows()) throw DimensionError("pad_rows: target smaller than " + x.shape_string());
  if (rows == x.rows()) return a;
  Matrix y(rows, x.cols());
  std::copy(x.values().begin(), x.values().end(), y.values().begin());
  const int ia = a.id();
  return a.tape()->push("pad_rows", std::move(y), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
  });
}

// Entries where mask is nonzero are replaced by `fill` and receive no gradient.
inline Tensor masked_fill(const Tensor& a, const Matrix& mask, double fill) {
  const Matrix& x = a.value();
  if (!mask.same_shape(x)) {
    throw DimensionError("masked_fill: shape mismatch " + x.shape_string() + " vs " + mask.shape_string());
  }
  Matrix y = x;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (mask[i] != 0.0) y[i] = fill;
  const int ia = a.id();
  return a.tape()->push("masked_fill", std::move(y), {ia}, [ia, mask](Tape& tp, const Matrix& g) {
    Matrix& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (mask[i] == 0.0) ga[i] += g[i];
  });
}

// S[u, v] = -sum_i [a[u, i] - b[v, i]]_+
inline Tensor hinge_cross(const Tensor& a, const Tensor& b) {
  Tape& t = detail::same_tape(a, b, "hinge_cross");
  if (a.cols() != b.cols()) {
    throw DimensionError("hinge_cross: width mismatch " + a.value().shape_string() + " vs " + b.value().shape_string());
  }
  const Matrix& x = a.value();
  const Matrix& z = b.value();
  const std::size_t d = x.cols();
  Matrix y(x.rows(), z.rows());
  for (std::size_t u = 0; u < x.rows(); ++u)
    for (std::size_t v = 0; v < z.rows(); ++v) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = x(u, i) - z(v, i);
        if (diff > 0.0) s += diff;
      }
      y(u, v) = -s;
    }
  const int ia = a.id(), ib = b.id();
  return t.push("hinge_cross", std::move(y), {ia, ib}, [ia, ib](Tape& tp, const Matrix& g) {
    const Matrix& x = tp.value(ia);
    const Matrix& z = tp.value(ib);
    const bool need_a = tp.requires_grad(ia), need_b = tp.requires_grad(ib);
    Matrix* ga = need_a ? &tp.grad(ia) : nullptr;
    Matrix* gb = need_b ? &tp.grad(ib) : nullptr;
    for (std::size_t u = 0; u < x.rows(); ++u)
      for (std::size_t v = 0; v < z.rows(); ++v) {
        const double guv = g(u, v);
        if (guv == 0.0) continue;
        for (std::size_t i = 0; i < x.cols(); ++i) {
          if (x(u, i) - z(v, i) > 0.0) {
            if (ga) (*ga)(u, i) -= guv;
            if (gb) (*gb)(v, i) += guv;
          }
        }
      }
  });
}

// ---- conveniences -------------------------------------------------------------

inline Tensor one_minus(const Tensor& a) { return add_scalar(scale(a, -1.0), 1.0); }

// x W + b, with W (in x out) and b (1 x out).
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add_row(matmul(x, w), b); }

}  // namespace matchlab
