#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sdil/autodiff.hpp"

namespace sdil {

// A reconstructible scalar loss: called with a tape to build the analytic
// graph, and with nullptr for plain re-evaluation during differencing.
// Must read current parameter values on every call.
using LossFn = std::function<TensorPtr(Tape*)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::vector<GradCheckEntry> per_param;
};

// |analytic - numeric| / max(1, |analytic|, |numeric|).
double gradcheck_rel_err(double analytic, double numeric);

// Central differences against the tape gradients. Checks up to
// samples_per_param coordinates of each parameter (all of them when the
// parameter is small), selection drawn from `rng`.
GradCheckReport grad_check(const LossFn& loss, const std::vector<std::pair<std::string, TensorPtr>>& params,
                           int samples_per_param, double h, Rng& rng);

}  // namespace sdil
