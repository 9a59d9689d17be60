#pragma once

#include <map>
#include <random>

#include "sidnet/tensor.hpp"

namespace sidnet {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::map<std::string, double> per_parameter_errors;
  bool passed = false;
  std::string failure_note;
};

// Compare the analytic gradient of a scalar loss against central finite
// differences, parameter element by parameter element. The forward closure
// must rebuild the graph from the shared parameter tensors on every call and
// be deterministic. Relative error: |a-n| / max(|a|,|n|,1e-8).
// analytic_fault is a verification hook: it is added to the first analytic
// gradient entry so harnesses can confirm that failures are reported.
template <typename S>
GradCheckReport grad_check(const std::vector<std::pair<std::string, Tensor<S>>>& params,
                           const std::function<Tensor<S>()>& make_loss, double tolerance,
                           S fd_step = S(1e-4), S analytic_fault = S(0)) {
  GradCheckReport report;

  for (auto& [name, p] : params) const_cast<Tensor<S>&>(p).zero_grad();
  {
    Tensor<S> loss = make_loss();
    backward(loss);
  }

  std::vector<std::vector<S>> analytic;
  analytic.reserve(params.size());
  for (auto& [name, p] : params) {
    analytic.push_back(p.grad());
    if (analytic.size() == 1 && analytic_fault != S(0) && !analytic.back().empty())
      analytic.back()[0] += analytic_fault;
    if (!all_finite(p.grad())) {
      report.passed = false;
      report.max_relative_error = std::numeric_limits<double>::infinity();
      report.failure_note = "non-finite analytic gradient in " + name;
      report.per_parameter_errors[name] = std::numeric_limits<double>::infinity();
      return report;
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& [name, p_const] = params[k];
    auto& p = const_cast<Tensor<S>&>(p_const);
    double worst = 0.0;
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const S saved = p[i];
      p[i] = saved + fd_step;
      S f_plus = make_loss()[0];
      p[i] = saved - fd_step;
      S f_minus = make_loss()[0];
      p[i] = saved;
      const double numeric = (static_cast<double>(f_plus) - static_cast<double>(f_minus)) /
                             (2.0 * static_cast<double>(fd_step));
      const double a = static_cast<double>(analytic[k][static_cast<std::size_t>(i)]);
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        report.failure_note = "non-finite gradient in " + name;
        worst = std::numeric_limits<double>::infinity();
        break;
      }
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
    report.per_parameter_errors[name] = worst;
    report.max_relative_error = std::max(report.max_relative_error, worst);
  }

  report.passed = std::isfinite(report.max_relative_error) &&
                  report.max_relative_error < tolerance;
  return report;
}

}  // namespace sidnet
