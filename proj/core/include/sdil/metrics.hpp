#pragma once

#include <vector>

namespace sdil {

// Rank of the candidate at target_index among all scores, 1-based.
// Ties are pessimistic: every other candidate with a score >= the
// target's counts as ranked above it.
int rank_candidates(const std::vector<double>& scores, int target_index);

double hr_at_k(const std::vector<int>& ranks, int k);
double ndcg_at_k(const std::vector<int>& ranks, int k);
double mrr(const std::vector<int>& ranks);

// Leave-one-out ranking summary at the standard cutoffs.
struct RankingReport {
  double hr5 = 0, hr10 = 0, hr20 = 0;
  double ndcg5 = 0, ndcg10 = 0, ndcg20 = 0;
  double mrr = 0;
  std::vector<int> ranks;  // per-instance, kept for audits
};

RankingReport compute_metrics(const std::vector<int>& ranks);

}  // namespace sdil
