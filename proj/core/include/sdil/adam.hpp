#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdil/tensor.hpp"

namespace sdil {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by position in the
// parameter list given at construction; the same list (same order, same
// tensors) must be passed to every step.
class Adam {
 public:
  Adam(AdamConfig cfg, const std::vector<TensorPtr>& params);

  // Applies one update from the accumulated gradients, then clears them.
  // Every tracked parameter must have its grad buffer allocated.
  void step(const std::vector<TensorPtr>& params);

  std::int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::vector<Moments> slots_;
  std::int64_t t_ = 0;
};

}  // namespace sdil
