#pragma once

#include <string>
#include <vector>

#include "jace/rng.hpp"
#include "jace/tensor.hpp"

namespace jace {

// Affine map y = x W^T + b applied row-wise to a T x in matrix.
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim, Rng& rng);

  Tensor forward(const Tensor& input) const;
  // Accumulates into W.grad / b.grad; returns d(loss)/d(input).
  Tensor backward(const Tensor& input, const Tensor& d_output);

  std::size_t in_dim() const { return weight.value.cols(); }
  std::size_t out_dim() const { return weight.value.rows(); }
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }

  Parameter weight;  // out x in
  Parameter bias;    // 1 x out
};

// Elementwise max(x, 0); the subgradient at 0 is taken as 0.
Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& d_output);

// Inverted dropout: keeps entries with probability (1 - rate) scaled by
// 1/(1 - rate). Returns the mask used so the backward pass can reuse it.
Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);
Tensor apply_mask(const Tensor& input, const Tensor& mask);

}  // namespace jace
