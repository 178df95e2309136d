#pragma once

#include <string>
#include <vector>

#include "jace/rng.hpp"
#include "jace/tensor.hpp"

namespace jace {

// One LSTM direction. Standard gates (input/forget/output sigmoid, candidate
// tanh), no peepholes. The packed gate axis is [i | f | g | o], each block of
// size hidden. Forget-gate bias starts at 1.
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  struct Cache {
    Tensor input;   // T x d
    Tensor hidden;  // (T+1) x h, row 0 is the zero initial state
    Tensor cell;    // (T+1) x h
    Tensor gates;   // T x 4h, post-activation
  };

  // Left-to-right pass over the rows of `input`; returns T x h.
  Tensor forward(const Tensor& input, Cache* cache) const;
  // Exact backward through time; accumulates parameter grads, returns dX.
  Tensor backward(const Cache& cache, const Tensor& d_hidden);

  std::size_t input_dim() const { return wx.value.cols(); }
  std::size_t hidden_dim() const { return wh.value.cols(); }
  std::vector<Parameter*> parameters() { return {&wx, &wh, &b}; }

  Parameter wx;  // 4h x d
  Parameter wh;  // 4h x h
  Parameter b;   // 1 x 4h
};

// Independent left-to-right and right-to-left cells; the output row t is
// [forward_h_t | backward_h_t], dimensionality 2 * hidden.
class BiLstmEncoder {
 public:
  BiLstmEncoder() = default;
  BiLstmEncoder(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  struct Cache {
    LstmCell::Cache fwd;
    LstmCell::Cache bwd;  // computed over the reversed input
  };

  Tensor forward(const Tensor& input, Cache* cache) const;
  Tensor backward(const Cache& cache, const Tensor& d_output);

  std::size_t input_dim() const { return fwd_.input_dim(); }
  std::size_t hidden_dim() const { return fwd_.hidden_dim(); }
  std::size_t output_dim() const { return 2 * fwd_.hidden_dim(); }
  std::vector<Parameter*> parameters();

 private:
  LstmCell fwd_;
  LstmCell bwd_;
};

}  // namespace jace
