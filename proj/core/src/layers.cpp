#include "jace/layers.hpp"

#include "jace/errors.hpp"

namespace jace {

LinearLayer::LinearLayer(const std::string& name, std::size_t in_dim, std::size_t out_dim,
                         Rng& rng)
    : weight(name + ".W", out_dim, in_dim), bias(name + ".b", 1, out_dim) {
  weight.init_uniform_fan_in(in_dim, rng);
}

Tensor LinearLayer::forward(const Tensor& input) const {
  if (input.cols() != weight.value.cols()) {
    throw UserError("linear '" + weight.name + "': input dim " + std::to_string(input.cols()) +
                    " != " + std::to_string(weight.value.cols()));
  }
  const std::size_t T = input.rows();
  const std::size_t out = weight.value.rows();
  const std::size_t in = weight.value.cols();
  Tensor y(T, out);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = input.row(t);
    double* yt = y.row(t);
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = weight.value.row(o);
      double acc = bias.value(0, o);
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
      yt[o] = acc;
    }
  }
  return y;
}

Tensor LinearLayer::backward(const Tensor& input, const Tensor& d_output) {
  if (d_output.rows() != input.rows() || d_output.cols() != weight.value.rows()) {
    throw UserError("linear '" + weight.name + "': gradient shape mismatch");
  }
  const std::size_t T = input.rows();
  const std::size_t out = weight.value.rows();
  const std::size_t in = weight.value.cols();
  Tensor dx(T, in);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = input.row(t);
    const double* dy = d_output.row(t);
    double* dxt = dx.row(t);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      double* dw = weight.grad.row(o);
      const double* w = weight.value.row(o);
      for (std::size_t i = 0; i < in; ++i) {
        dw[i] += g * x[i];
        dxt[i] += g * w[i];
      }
      bias.grad(0, o) += g;
    }
  }
  return dx;
}

Tensor relu_forward(const Tensor& input) {
  Tensor y = input;
  for (double& v : y.values()) {
    if (v < 0.0) v = 0.0;
  }
  return y;
}

Tensor relu_backward(const Tensor& input, const Tensor& d_output) {
  Tensor dx = d_output;
  const double* x = input.data();
  double* g = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (x[i] <= 0.0) g[i] = 0.0;
  }
  return dx;
}

Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Tensor mask(rows, cols, 1.0);
  if (rate <= 0.0) return mask;
  if (rate >= 1.0) throw UserError("dropout rate must be < 1");
  const double keep = 1.0 - rate;
  for (double& m : mask.values()) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return mask;
}

Tensor apply_mask(const Tensor& input, const Tensor& mask) {
  Tensor y = input;
  const double* m = mask.data();
  double* v = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) v[i] *= m[i];
  return y;
}

}  // namespace jace
