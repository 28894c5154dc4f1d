#include "sdil/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace sdil {

double gradcheck_rel_err(double analytic, double numeric) {
  double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const LossFn& loss,
                           const std::vector<std::pair<std::string, TensorPtr>>& params,
                           int samples_per_param, double h, Rng& rng) {
  if (h <= 0.0) throw DomainError("grad_check: step must be positive");

  for (auto& [name, p] : params) p->zero_grad();
  Tape tape;
  auto root = loss(&tape);
  tape.backward(root);

  // Copy analytic gradients before differencing mutates anything.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& [name, p] : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& name = params[k].first;
    Tensor& p = *params[k].second;

    std::vector<std::size_t> coords;
    if (int(p.size()) <= samples_per_param) {
      coords.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) coords[i] = i;
    } else {
      std::unordered_set<std::size_t> seen;
      while (int(seen.size()) < samples_per_param)
        seen.insert(rng.below(p.size()));
      coords.assign(seen.begin(), seen.end());
      std::sort(coords.begin(), coords.end());
    }

    GradCheckEntry entry;
    entry.name = name;
    for (std::size_t i : coords) {
      double saved = p.data[i];
      p.data[i] = saved + h;
      double fp = loss(nullptr)->data[0];
      p.data[i] = saved - h;
      double fm = loss(nullptr)->data[0];
      p.data[i] = saved;
      double numeric = (fp - fm) / (2.0 * h);
      double err = gradcheck_rel_err(analytic[k][i], numeric);
      entry.max_rel_err = std::max(entry.max_rel_err, err);
      ++entry.coords_checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

}  // namespace sdil
