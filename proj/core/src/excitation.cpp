#include "sdil/excitation.hpp"

#include <cmath>

#include "sdil/error.hpp"

namespace sdil {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kSecondsPerDay = 86400.0;
}  // namespace

double softplus_value(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (y <= 0.0) throw DomainError("softplus_inverse requires a positive value");
  if (y > 20.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

double gaussian_pdf(double x, double mu, double sigma) {
  if (sigma <= 0.0) throw DomainError("gaussian_pdf requires sigma > 0");
  const double z = (x - mu) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

double elapsed_days(std::int64_t t_context, std::int64_t t_now) {
  if (t_context > t_now)
    throw DomainError("context event after decision time (negative gap)");
  return static_cast<double>(t_now - t_context) / kSecondsPerDay;
}

KernelParams make_kernel_params(int n_items, const KernelInit& init) {
  if (n_items <= 0) throw ShapeError("kernel tables need at least one item");
  KernelParams k;
  k.rho1 = param({n_items + 1, 1}, softplus_inverse(init.sigma1));
  k.rho2 = param({n_items + 1, 1}, softplus_inverse(init.sigma2));
  k.rho3 = param({n_items + 1, 1}, softplus_inverse(init.sigma3));
  k.m2 = param({n_items + 1, 1}, softplus_inverse(init.mu2));
  return k;
}

namespace {

void check_tables(const KernelParams& k, int item) {
  if (!k.rho1 || !k.rho2 || !k.rho3 || !k.m2)
    throw UsageError("kernel parameters not initialized");
  if (item < 1 || item >= k.rho1->rows())
    throw IndexError("candidate item out of kernel table range");
}

// Related context slots for one candidate, with gaps already in days.
struct RelatedSlots {
  std::vector<int> comp_items;
  std::vector<double> comp_dt;
  std::vector<int> sub_items;
  std::vector<double> sub_dt;
};

RelatedSlots gather_related(const RelationGraph& g, const std::vector<int>& ctx_items,
                            const std::vector<std::int64_t>& ctx_ts, int candidate,
                            std::int64_t t_now) {
  if (ctx_items.size() != ctx_ts.size())
    throw ShapeError("context items and timestamps differ in length");
  RelatedSlots out;
  for (std::size_t i = 0; i < ctx_items.size(); ++i) {
    const int v = ctx_items[i];
    if (v == 0) continue;
    const double dt = elapsed_days(ctx_ts[i], t_now);
    if (g.complementary(v, candidate)) {
      out.comp_items.push_back(v);
      out.comp_dt.push_back(dt);
    }
    if (g.substitute(v, candidate)) {
      out.sub_items.push_back(v);
      out.sub_dt.push_back(dt);
    }
  }
  return out;
}

// sum_i N(dt_i | mu_i, sigma_i) with sigma = softplus(rho[id_i]) and
// mu = softplus(mu_table[id_i]) when a center table is given, else 0.
TensorPtr kernel_sum(const TensorPtr& rho, const TensorPtr& mu_table,
                     const std::vector<int>& ids, const std::vector<double>& dts,
                     Tape* tape) {
  const int k = static_cast<int>(ids.size());
  auto dt = tensor({k, 1}, dts);
  auto inv_norm = tensor({k, 1}, kInvSqrt2Pi);
  auto sigma = softplus(gather_rows(rho, ids, tape), tape);
  TensorPtr diff = dt;
  if (mu_table) diff = sub(dt, softplus(gather_rows(mu_table, ids, tape), tape), tape);
  auto num = scale(mul(diff, diff, tape), -1.0, tape);
  auto denom = scale(mul(sigma, sigma, tape), 2.0, tape);
  auto density = mul(exp_op(divide(num, denom, tape), tape),
                     divide(inv_norm, sigma, tape), tape);
  return sum_all(density, tape);
}

}  // namespace

double positive_excitation(const KernelParams& k, const RelationGraph& g,
                           const std::vector<int>& ctx_items,
                           const std::vector<std::int64_t>& ctx_ts,
                           int candidate, std::int64_t t_now) {
  check_tables(k, candidate);
  const RelatedSlots rel = gather_related(g, ctx_items, ctx_ts, candidate, t_now);
  double total = 0.0;
  for (std::size_t i = 0; i < rel.comp_items.size(); ++i) {
    const int v = rel.comp_items[i];
    if (v >= k.rho1->rows())
      throw IndexError("context item out of kernel table range");
    total += gaussian_pdf(rel.comp_dt[i], 0.0, softplus_value(k.rho1->at(v, 0)));
  }
  for (std::size_t i = 0; i < rel.sub_items.size(); ++i) {
    const int v = rel.sub_items[i];
    if (v >= k.rho2->rows())
      throw IndexError("context item out of kernel table range");
    total += gaussian_pdf(rel.sub_dt[i], softplus_value(k.m2->at(v, 0)),
                          softplus_value(k.rho2->at(v, 0)));
  }
  return total;
}

double negative_excitation(const KernelParams& k, const RelationGraph& g,
                           const std::vector<int>& ctx_items,
                           const std::vector<std::int64_t>& ctx_ts,
                           int candidate, std::int64_t t_now) {
  check_tables(k, candidate);
  const RelatedSlots rel = gather_related(g, ctx_items, ctx_ts, candidate, t_now);
  double total = 0.0;
  for (std::size_t i = 0; i < rel.sub_items.size(); ++i) {
    const int v = rel.sub_items[i];
    if (v >= k.rho3->rows())
      throw IndexError("context item out of kernel table range");
    total += gaussian_pdf(rel.sub_dt[i], 0.0, softplus_value(k.rho3->at(v, 0)));
  }
  return total;
}

double total_intensity(double lambda0, double pos, double neg, IntensityMode mode) {
  if (pos < 0.0 || neg < 0.0)
    throw DomainError("excitation magnitudes must be non-negative");
  switch (mode) {
    case IntensityMode::TPNE:
      return lambda0 + pos - neg;
    case IntensityMode::TPE:
      return lambda0 + pos;
    case IntensityMode::NONE:
      return lambda0;
  }
  throw UsageError("unknown intensity mode");
}

ExcitationTerms excitation_terms(const KernelParams& k, const RelationGraph& g,
                                 const std::vector<int>& ctx_items,
                                 const std::vector<std::int64_t>& ctx_ts,
                                 int candidate, std::int64_t t_now, Tape* tape) {
  check_tables(k, candidate);
  const RelatedSlots rel = gather_related(g, ctx_items, ctx_ts, candidate, t_now);
  ExcitationTerms terms;
  if (rel.comp_items.empty() && rel.sub_items.empty()) return terms;

  TensorPtr pos;
  if (!rel.comp_items.empty())
    pos = kernel_sum(k.rho1, nullptr, rel.comp_items, rel.comp_dt, tape);
  if (!rel.sub_items.empty()) {
    auto delayed = kernel_sum(k.rho2, k.m2, rel.sub_items, rel.sub_dt, tape);
    pos = pos ? add(pos, delayed, tape) : delayed;
    terms.neg = kernel_sum(k.rho3, nullptr, rel.sub_items, rel.sub_dt, tape);
  }
  terms.pos = pos;
  return terms;
}

void collect_kernel_params(const KernelParams& k,
                           std::vector<std::pair<std::string, TensorPtr>>& out) {
  out.emplace_back("kernel.rho1", k.rho1);
  out.emplace_back("kernel.rho2", k.rho2);
  out.emplace_back("kernel.rho3", k.rho3);
  out.emplace_back("kernel.m2", k.m2);
}

}  // namespace sdil
