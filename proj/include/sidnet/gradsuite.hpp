#pragma once

#include <string>
#include <vector>

#include "sidnet/gradcheck.hpp"

namespace sidnet {

struct GradSuiteOptions {
  double tolerance = 1e-5;
  int trials = 20;           // random instantiations per operator
  double analytic_fault = 0; // verification hook, forwarded to grad_check
};

struct GradSuiteResult {
  std::string name;
  double max_relative_error = 0;
  int instantiations = 0;
  bool passed = true;
  std::string note;
};

// Finite-difference suites over every differentiable kernel and the composed
// paths (LSTM, both streams at toy widths, conditional fusion). Scopes:
// core, lstm, streams, fusion, all. Throws InputError on an unknown scope.
std::vector<GradSuiteResult> run_grad_suites(const std::string& scope,
                                             const GradSuiteOptions& options);

}  // namespace sidnet
