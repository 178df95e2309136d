#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace jace {

class Rng;

// Dense row-major matrix of doubles. Everything in the toolkit is at most
// rank 2; vectors are represented as 1xN.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A named value array paired with a same-shaped gradient accumulator; the
// unit of optimization and of checkpointing.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::size_t rows, std::size_t cols, bool trainable = true)
      : name(std::move(name)), value(rows, cols), grad(rows, cols), trainable(trainable) {}

  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
  // Uniform(-limit, +limit) init with limit = sqrt(1 / fan_in).
  void init_uniform_fan_in(std::size_t fan_in, Rng& rng);
};

// value <- value - lr * grad for trainable parameters; all grads zeroed.
// A non-finite gradient entry raises NumericError naming the parameter.
void sgd_step(const std::vector<Parameter*>& params, double lr);

// Rescale gradients so their global L2 norm is at most max_norm (no-op when
// max_norm <= 0 or the norm is already below it).
void clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace jace
