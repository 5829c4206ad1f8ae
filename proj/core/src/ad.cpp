#include "langgrid/ad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "langgrid/error.hpp"

namespace langgrid::ad {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw PreconditionError("tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void check_rank(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw PreconditionError("tensor: rank must be 1..3, got " + shape_string(shape));
  }
}

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, const Tensor& b) {
  throw PreconditionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                          " vs " + shape_string(b.shape()));
}


}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  check_rank(shape_);
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_rank(shape_);
  if (data_.size() != product(shape_)) {
    throw PreconditionError("tensor: " + std::to_string(data_.size()) +
                            " values for shape " + shape_string(shape_));
  }
}

int Tensor::rows() const {
  int r = 1;
  for (std::size_t i = 0; i + 1 < shape_.size(); ++i) r *= shape_[i];
  return r;
}

int Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

double Tensor::item() const {
  if (data_.size() != 1) throw PreconditionError("tensor: item() on " + shape_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  Tensor t = *this;
  check_rank(shape);
  if (product(shape) != data_.size()) {
    throw PreconditionError("reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
  }
  t.shape_ = std::move(shape);
  return t;
}

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

// ---- tape plumbing ----

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad,
                        requires_grad ? std::move(backward) : nullptr});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw PreconditionError("tape: invalid variable");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw PreconditionError("tape: invalid variable");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = node(v);
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) {
  return push(std::move(value), true, [](Tape&) {});
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() != n.value.size()) {
    const_cast<Node&>(n).grad = Tensor(n.value.shape(), 0.0);
  }
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::backward(Var out) {
  if (node(out).value.size() != 1) throw PreconditionError("backward: output is not a scalar");
  for (Node& n : nodes_) n.grad = Tensor{};
  grad_buffer(out)[0] = 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && n.grad.size() == n.value.size()) n.backward(*this);
  }
}

// ---- operations ----
// Each backward rule reads the gradient of its own node (`self`) and
// accumulates into parents that require gradients.

namespace {
bool any_of_grad(const Tape& t, std::initializer_list<Var> vs) {
  return std::any_of(vs.begin(), vs.end(), [&](Var v) { return t.requires_grad(v); });
}
}  // namespace

Var Tape::add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.shape() != y.shape()) shape_error("add", x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_of_grad(*this, {a, b}), [a, b, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    for (Var p : {a, b}) {
      if (!t.requires_grad(p)) continue;
      Tensor& gp = t.grad_buffer(p);
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.shape() != y.shape()) shape_error("sub", x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_of_grad(*this, {a, b}), [a, b, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.shape() != y.shape()) shape_error("mul", x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_of_grad(*this, {a, b}), [a, b, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    const Tensor x = t.value(a);
    const Tensor y = t.value(b);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var Tape::scale(Var a, double k) {
  Tensor out = value(a);
  for (double& v : out.data()) v *= k;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, k, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
  });
}

Var Tape::one_minus(Var a) {
  Tensor out = value(a);
  for (double& v : out.data()) v = 1.0 - v;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.cols() != y.rows()) shape_error("matmul", x, y);
  const int n = x.rows(), k = x.cols(), m = y.cols();
  Tensor out({n, m}, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += x.at(i, p) * y.at(p, j);
      out.at(i, j) = acc;
    }
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_of_grad(*this, {a, b}), [a, b, self, n, k, m](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    if (t.requires_grad(a)) {
      const Tensor y = t.value(b);
      Tensor& ga = t.grad_buffer(a);
      for (int i = 0; i < n; ++i) {
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          for (int j = 0; j < m; ++j) acc += g.at(i, j) * y.at(p, j);
          ga.at(i, p) += acc;
        }
      }
    }
    if (t.requires_grad(b)) {
      const Tensor x = t.value(a);
      Tensor& gb = t.grad_buffer(b);
      for (int p = 0; p < k; ++p) {
        for (int j = 0; j < m; ++j) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += x.at(i, p) * g.at(i, j);
          gb.at(p, j) += acc;
        }
      }
    }
  });
}

Var Tape::add_row(Var mv, Var rv) {
  const Tensor& x = value(mv);
  const Tensor& r = value(rv);
  if (r.rows() != 1 || r.cols() != x.cols()) shape_error("add_row", x, r);
  Tensor out = x;
  const int rows = x.rows(), cols = x.cols();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out.at(i, j) += r.at(0, j);
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_of_grad(*this, {mv, rv}), [mv, rv, self, rows, cols](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    if (t.requires_grad(mv)) {
      Tensor& gm = t.grad_buffer(mv);
      for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
    }
    if (t.requires_grad(rv)) {
      Tensor& gr = t.grad_buffer(rv);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) gr.at(0, j) += g.at(i, j);
      }
    }
  });
}

Var Tape::mul_rows(Var mv, Var cv) {
  const Tensor& x = value(mv);
  const Tensor& c = value(cv);
  if (c.cols() != 1 || c.rows() != x.rows()) shape_error("mul_rows", x, c);
  Tensor out = x;
  const int rows = x.rows(), cols = x.cols();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out.at(i, j) *= c.at(i, 0);
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_of_grad(*this, {mv, cv}), [mv, cv, self, rows, cols](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    const Tensor x = t.value(mv);
    const Tensor c = t.value(cv);
    if (t.requires_grad(mv)) {
      Tensor& gm = t.grad_buffer(mv);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) gm.at(i, j) += g.at(i, j) * c.at(i, 0);
      }
    }
    if (t.requires_grad(cv)) {
      Tensor& gc = t.grad_buffer(cv);
      for (int i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += g.at(i, j) * x.at(i, j);
        gc.at(i, 0) += acc;
      }
    }
  });
}

#define LANGGRID_UNARY(NAME, FORWARD, DERIV)                                          \
  Var Tape::NAME(Var a) {                                                             \
    Tensor out = value(a);                                                            \
    for (double& v : out.data()) {                                                    \
      const double x = v;                                                             \
      v = (FORWARD);                                                                  \
    }                                                                                 \
    const int self = static_cast<int>(nodes_.size());                                 \
    return push(std::move(out), requires_grad(a), [a, self](Tape& t) {                \
      const Tensor g = t.grad_buffer(Var{self});                                      \
      const Tensor xs = t.value(a);                                                   \
      const Tensor ys = t.value(Var{self});                                           \
      Tensor& ga = t.grad_buffer(a);                                                  \
      for (std::size_t i = 0; i < g.size(); ++i) {                                    \
        const double x = xs[i];                                                       \
        const double y = ys[i];                                                       \
        (void)x;                                                                      \
        (void)y;                                                                      \
        ga[i] += g[i] * (DERIV);                                                      \
      }                                                                               \
    });                                                                               \
  }

LANGGRID_UNARY(tanh, std::tanh(x), 1.0 - y * y)
LANGGRID_UNARY(sigmoid, 1.0 / (1.0 + std::exp(-x)), y * (1.0 - y))
LANGGRID_UNARY(log, std::log(x), 1.0 / x)
LANGGRID_UNARY(exp, std::exp(x), y)
LANGGRID_UNARY(abs, std::fabs(x), (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0)))

#undef LANGGRID_UNARY

Var Tape::sum(Var a) {
  double acc = 0.0;
  for (double v : value(a).data()) acc += v;
  const int self = static_cast<int>(nodes_.size());
  return push(Tensor::scalar(acc), requires_grad(a), [a, self](Tape& t) {
    const double g = t.grad_buffer(Var{self})[0];
    Tensor& ga = t.grad_buffer(a);
    for (double& v : ga.data()) v += g;
  });
}

Var Tape::softmax_rows(Var a) {
  const Tensor& x = value(a);
  Tensor out = x;
  const int rows = x.rows(), cols = x.cols();
  for (int i = 0; i < rows; ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x.at(i, j));
    double z = 0.0;
    for (int j = 0; j < cols; ++j) z += (out.at(i, j) = std::exp(x.at(i, j) - mx));
    for (int j = 0; j < cols; ++j) out.at(i, j) /= z;
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, self, rows, cols](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    const Tensor y = t.value(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (int i = 0; i < rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < cols; ++j) dot += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < cols; ++j) ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  });
}

Var Tape::log_softmax_rows(Var a) {
  const Tensor& x = value(a);
  Tensor out = x;
  const int rows = x.rows(), cols = x.cols();
  for (int i = 0; i < rows; ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < cols; ++j) mx = std::max(mx, x.at(i, j));
    double z = 0.0;
    for (int j = 0; j < cols; ++j) z += std::exp(x.at(i, j) - mx);
    const double lse = mx + std::log(z);
    for (int j = 0; j < cols; ++j) out.at(i, j) = x.at(i, j) - lse;
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, self, rows, cols](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    const Tensor y = t.value(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (int i = 0; i < rows; ++i) {
      double gs = 0.0;
      for (int j = 0; j < cols; ++j) gs += g.at(i, j);
      for (int j = 0; j < cols; ++j) ga.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * gs;
    }
  });
}

Var Tape::max_rows(Var a) {
  const Tensor& x = value(a);
  const int rows = x.rows(), cols = x.cols();
  if (rows == 0) throw PreconditionError("max_rows: no rows");
  Tensor out({1, cols}, 0.0);
  std::vector<int> arg(static_cast<std::size_t>(cols), 0);
  for (int j = 0; j < cols; ++j) {
    double best = x.at(0, j);
    for (int i = 1; i < rows; ++i) {
      if (x.at(i, j) > best) {
        best = x.at(i, j);
        arg[static_cast<std::size_t>(j)] = i;
      }
    }
    out.at(0, j) = best;
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, self, arg, cols](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (int j = 0; j < cols; ++j) ga.at(arg[static_cast<std::size_t>(j)], j) += g.at(0, j);
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.rows() != y.rows()) shape_error("concat_cols", x, y);
  const int rows = x.rows(), ca = x.cols(), cb = y.cols();
  Tensor out({rows, ca + cb}, 0.0);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = x.at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = y.at(i, j);
  }
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), any_of_grad(*this, {a, b}), [a, b, self, rows, ca, cb](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
      }
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cb; ++j) gb.at(i, j) += g.at(i, ca + j);
      }
    }
  });
}

Var Tape::gather_rows(Var a, std::span<const int> rows) {
  const Tensor& x = value(a);
  const int cols = x.cols();
  Tensor out({static_cast<int>(rows.size()), cols}, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) {
      throw PreconditionError("gather_rows: row " + std::to_string(rows[i]) + " out of range");
    }
    for (int j = 0; j < cols; ++j) out.at(static_cast<int>(i), j) = x.at(rows[i], j);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, self, idx, cols](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (int j = 0; j < cols; ++j) ga.at(idx[i], j) += g.at(static_cast<int>(i), j);
    }
  });
}

Var Tape::column(Var a, int c) {
  const Tensor& x = value(a);
  if (c < 0 || c >= x.cols()) throw PreconditionError("column: index out of range");
  const int rows = x.rows();
  Tensor out({rows, 1}, 0.0);
  for (int i = 0; i < rows; ++i) out.at(i, 0) = x.at(i, c);
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, self, rows, c](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (int i = 0; i < rows; ++i) ga.at(i, c) += g.at(i, 0);
  });
}

Var Tape::reshape(Var a, std::vector<int> shape) {
  Tensor out = value(a).reshaped(std::move(shape));
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::stop_gradient(Var a) { return constant(value(a)); }

Var Tape::straight_through(Var soft, const Tensor& hard) {
  if (hard.shape() != value(soft).shape()) shape_error("straight_through", value(soft), hard);
  const int self = static_cast<int>(nodes_.size());
  return push(hard, requires_grad(soft), [soft, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    Tensor& gs = t.grad_buffer(soft);
    for (std::size_t i = 0; i < g.size(); ++i) gs[i] += g[i];
  });
}

Var Tape::bernoulli_kl(Var a, double p) {
  if (!(p > 0.0 && p < 1.0)) throw PreconditionError("bernoulli_kl: target outside (0,1)");
  const Tensor& x = value(a);
  double acc = 0.0;
  for (double r : x.data()) {
    if (!(r > 0.0 && r < 1.0)) throw PreconditionError("bernoulli_kl: probability outside (0,1)");
    acc += r * std::log(r / p) + (1.0 - r) * std::log((1.0 - r) / (1.0 - p));
  }
  const int self = static_cast<int>(nodes_.size());
  return push(Tensor::scalar(acc), requires_grad(a), [a, p, self](Tape& t) {
    const double g = t.grad_buffer(Var{self})[0];
    const Tensor x = t.value(a);
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i];
      ga[i] += g * (std::log(r / p) - std::log((1.0 - r) / (1.0 - p)));
    }
  });
}

Var Tape::log_floor(Var a, double floor, bool* floored) {
  Tensor out = value(a);
  bool hit = false;
  for (double& v : out.data()) {
    if (v < floor) {
      v = floor;
      hit = true;
    }
    v = std::log(v);
  }
  if (floored) *floored = hit;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(a), [a, floor, self](Tape& t) {
    const Tensor g = t.grad_buffer(Var{self});
    const Tensor x = t.value(a);
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] >= floor) ga[i] += g[i] / x[i];
    }
  });
}

}  // namespace langgrid::ad
