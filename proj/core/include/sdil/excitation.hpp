#pragma once

#include <cstdint>
#include <vector>

#include "sdil/autodiff.hpp"
#include "sdil/data.hpp"

namespace sdil {

// Temporal excitation kernels. Each historical item carries its own kernel
// parameters, stored unconstrained and realized through softplus so the
// widths stay positive under arbitrary updates:
//   sigma1 = softplus(rho1)   complement kernel width (recent boost)
//   sigma2 = softplus(rho2)   delayed substitute kernel width
//   mu2    = softplus(m2)     delayed substitute kernel center
//   sigma3 = softplus(rho3)   substitute suppression width
struct KernelParams {
  TensorPtr rho1, rho2, rho3, m2;  // (n_items+1) x 1, row 0 unused
};

// Initial realized values in days. Suppression starts narrow: just-bought
// effects fade within a couple of days, and a narrow kernel keeps the dip
// concentrated where recent-purchase gaps actually fall.
struct KernelInit {
  double sigma1 = 7.0;
  double sigma2 = 30.0;
  double sigma3 = 2.0;
  double mu2 = 90.0;
};

KernelParams make_kernel_params(int n_items, const KernelInit& init);

double softplus_value(double x);
double softplus_inverse(double y);  // y > 0

// Normal density. sigma must be positive.
double gaussian_pdf(double x, double mu, double sigma);

enum class IntensityMode { TPNE, TPE, NONE };

// Elapsed time in days between a context event and the decision time.
// Negative gaps are a domain error.
double elapsed_days(std::int64_t t_context, std::int64_t t_now);

// Plain (gradient-free) excitation sums for one candidate item. Only
// valid context slots contribute; a slot contributes the complement
// kernel when it is complementary-related to the candidate and the
// substitute kernels when substitute-related.
double positive_excitation(const KernelParams& k, const RelationGraph& g,
                           const std::vector<int>& ctx_items,
                           const std::vector<std::int64_t>& ctx_ts,
                           int candidate, std::int64_t t_now);
double negative_excitation(const KernelParams& k, const RelationGraph& g,
                           const std::vector<int>& ctx_items,
                           const std::vector<std::int64_t>& ctx_ts,
                           int candidate, std::int64_t t_now);

// lambda = lambda0 + pos - neg (TPNE) / lambda0 + pos (TPE) / lambda0.
double total_intensity(double lambda0, double pos, double neg, IntensityMode mode);

// Differentiable excitation terms for one candidate. Returns null tensors
// when no context slot is related to the candidate (the contribution is
// structurally zero and nothing enters the tape).
struct ExcitationTerms {
  TensorPtr pos;  // {1,1} or null
  TensorPtr neg;  // {1,1} or null
};
ExcitationTerms excitation_terms(const KernelParams& k, const RelationGraph& g,
                                 const std::vector<int>& ctx_items,
                                 const std::vector<std::int64_t>& ctx_ts,
                                 int candidate, std::int64_t t_now, Tape* tape);

void collect_kernel_params(const KernelParams& k,
                           std::vector<std::pair<std::string, TensorPtr>>& out);

}  // namespace sdil
