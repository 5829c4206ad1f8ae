#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace langgrid::ad {

/// Dense row-major tensor of rank 1 to 3. Matrix operations view a tensor as
/// rows() x cols(), where cols() is the last dimension.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor matrix(int rows, int cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  int rows() const;
  int cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r * cols() + c)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double item() const;

  Tensor reshaped(std::vector<int> shape) const;
  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<int>& shape);

struct Var {
  int id = -1;
};

/// Reverse-mode tape. Every operation records its value and a backward rule;
/// backward() replays the rules in reverse creation order. Shapes are checked on
/// every operation (ShapeError is a PreconditionError).
class Tape {
 public:
  Var constant(Tensor value);
  Var variable(Tensor value);

  const Tensor& value(Var v) const;
  /// Gradient accumulated by the last backward(); zeros if none reached `v`.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;
  /// Seeds d(out)/d(out) = 1 for a single-element `out`.
  void backward(Var out);
  std::size_t size() const { return nodes_.size(); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double k);
  Var one_minus(Var a);
  Var matmul(Var a, Var b);
  /// Adds a 1 x c row to every row of an r x c matrix.
  Var add_row(Var m, Var row);
  /// Multiplies row r of an r x c matrix by element r of an r x 1 column.
  Var mul_rows(Var m, Var col);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var log(Var a);
  Var exp(Var a);
  Var abs(Var a);
  Var sum(Var a);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  /// Column-wise maximum over rows (spatial max-pooling): r x c -> 1 x c.
  Var max_rows(Var a);
  Var concat_cols(Var a, Var b);
  Var gather_rows(Var a, std::span<const int> rows);
  Var column(Var a, int c);
  Var reshape(Var a, std::vector<int> shape);
  Var stop_gradient(Var a);
  /// Forward value is exactly `hard`; the gradient flows to `soft` unchanged.
  Var straight_through(Var soft, const Tensor& hard);
  /// Elementwise KL(Bernoulli(a) || Bernoulli(p)) summed to a scalar. a in (0, 1).
  Var bernoulli_kl(Var a, double p);
  /// Elementwise log(max(a, floor)); sets *floored when any element hit the floor.
  Var log_floor(Var a, double floor, bool* floored);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
  };
  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> backward);
  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& grad_buffer(Var v);

  std::vector<Node> nodes_;
};

}  // namespace langgrid::ad
