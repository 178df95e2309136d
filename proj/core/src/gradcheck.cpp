#include "jace/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jace {

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  for (const GradCheckEntry& e : per_parameter) {
    os << e.name << ": max_rel_err=" << e.max_rel_error << " at [" << e.worst_index
       << "] analytic=" << e.analytic << " numeric=" << e.numeric << "\n";
  }
  os << "overall max_rel_err=" << max_rel_error << "\n";
  return os.str();
}

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<Parameter*>& params, double epsilon,
                           double /*tolerance*/) {
  for (Parameter* p : params) p->zero_grad();
  loss_fn();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter* p = params[pi];
    GradCheckEntry entry;
    entry.name = p->name;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.values()[i];
      p->value.values()[i] = orig + epsilon;
      for (Parameter* q : params) q->zero_grad();
      const double plus = loss_fn();
      p->value.values()[i] = orig - epsilon;
      for (Parameter* q : params) q->zero_grad();
      const double minus = loss_fn();
      p->value.values()[i] = orig;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[pi].values()[i];
      // The denominator floor absorbs central-difference roundoff, which is
      // about |loss| * machine-eps / epsilon (~1e-11 absolute) and would
      // otherwise dominate entries whose true gradient is below ~1e-7.
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.per_parameter.push_back(std::move(entry));
  }
  for (Parameter* p : params) p->zero_grad();
  return report;
}

}  // namespace jace
