#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "homnet/autograd.hpp"
#include "homnet/params.hpp"

namespace homnet {

/// Builds a scalar-valued graph. Must bind every tensor of `params` it uses
/// through Graph::param under the tensor's own name.
using ScalarGraphFn = std::function<ad::Var(ad::Graph<double>&, const ParamStore<double>&)>;

struct GradCheckFailure {
  std::string tensor;
  std::size_t index;
  double analytic;
  double numeric;
  double rel_error;
};

struct GradCheckReport {
  std::size_t checked = 0;
  /// Elements whose +-h probe changes the side of a non-smooth point (relu at 0, clamps).
  std::size_t skipped = 0;
  double max_rel_error = 0.0;
  std::vector<GradCheckFailure> failures;
  bool passed() const { return failures.empty(); }
};

/// Compares reverse-mode gradients with central differences for every element
/// of every tensor in `params`. Error per element is
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
/// `params` is perturbed in place and restored before returning.
GradCheckReport grad_check(const ScalarGraphFn& f, ParamStore<double>& params, double h = 1e-5,
                           double tol = 1e-4);

}  // namespace homnet
