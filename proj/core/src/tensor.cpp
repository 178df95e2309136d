#include "jace/tensor.hpp"

#include <cmath>

#include "jace/errors.hpp"
#include "jace/rng.hpp"

namespace jace {

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Parameter::init_uniform_fan_in(std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(1.0 / static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (double& v : value.values()) v = rng.uniform(-limit, limit);
}

void sgd_step(const std::vector<Parameter*>& params, double lr) {
  for (Parameter* p : params) {
    if (p->trainable) {
      if (!p->grad.all_finite()) {
        throw NumericError("non-finite gradient in parameter '" + p->name + "'");
      }
      double* v = p->value.data();
      const double* g = p->grad.data();
      for (std::size_t i = 0; i < p->value.size(); ++i) v[i] -= lr * g[i];
    }
    p->zero_grad();
  }
}

void clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const Parameter* p : params) {
    if (!p->trainable) continue;
    for (double g : p->grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    for (double& g : p->grad.values()) g *= scale;
  }
}

}  // namespace jace
