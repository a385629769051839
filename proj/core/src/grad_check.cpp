#include "gbdnet/grad_check.hpp"

#include <cmath>

#include "gbdnet/error.hpp"

namespace gbd {

GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& inputs,
                           double eps) {
  for (const auto& [name, t] : inputs) t.node()->grad.assign(t.node()->grad.size(), 0.0);

  Tensor loss = f();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& [name, t] : inputs) analytic.push_back(t.node()->grad);

  GradCheckReport report;
  for (size_t k = 0; k < inputs.size(); ++k) {
    Tensor t = inputs[k].second;
    std::vector<double>& v = t.values();
    for (size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + eps;
      const double up = f().item();
      v[i] = saved - eps;
      const double down = f().item();
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      double rel = 0.0;
      if (std::abs(a) >= 1e-7 || std::abs(numeric) >= 1e-7)
        rel = std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = inputs[k].first + "[" + std::to_string(i) + "]";
      }
    }
  }

  for (const auto& [name, t] : inputs) t.node()->grad.assign(t.node()->grad.size(), 0.0);
  return report;
}

}  // namespace gbd
