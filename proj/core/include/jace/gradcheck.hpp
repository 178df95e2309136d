#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jace/tensor.hpp"

namespace jace {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_parameter;
  double max_rel_error = 0.0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
  std::string to_string() const;
};

// Central-difference audit of analytic gradients. `loss_fn` computes the
// scalar loss and accumulates gradients into the given parameters; it must be
// deterministic across calls (freeze any noise before invoking this). The
// error metric is |a - n| / max(|a|, |n|, 1e-6); the floor keeps
// finite-difference roundoff from dominating near-zero entries.
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<Parameter*>& params, double epsilon = 1e-5,
                           double tolerance = 1e-4);

}  // namespace jace
