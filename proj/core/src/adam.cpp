#include "sdil/adam.hpp"

#include <cmath>

namespace sdil {

Adam::Adam(AdamConfig cfg, const std::vector<TensorPtr>& params) : cfg_(cfg) {
  slots_.reserve(params.size());
  for (const auto& p : params) {
    if (!p || !p->requires_grad)
      throw UsageError("Adam: every tracked tensor must require a gradient");
    slots_.push_back({std::vector<double>(p->size(), 0.0),
                      std::vector<double>(p->size(), 0.0)});
  }
}

void Adam::step(const std::vector<TensorPtr>& params) {
  if (params.size() != slots_.size())
    throw UsageError("Adam: parameter list does not match construction");
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    if (!p.has_grad())
      throw UsageError("Adam: missing gradient buffer on tracked parameter");
    auto& m = slots_[k].m;
    auto& v = slots_[k].v;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double g = p.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p.zero_grad();
  }
}

}  // namespace sdil
