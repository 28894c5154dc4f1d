#include "sdil/metrics.hpp"

#include <cmath>

#include "sdil/error.hpp"

namespace sdil {

int rank_candidates(const std::vector<double>& scores, int target_index) {
  if (scores.empty()) throw UsageError("rank_candidates: no scores");
  if (target_index < 0 || target_index >= int(scores.size()))
    throw IndexError("rank_candidates: target index out of range");
  const double target = scores[target_index];
  int rank = 1;
  for (int i = 0; i < int(scores.size()); ++i) {
    if (i == target_index) continue;
    if (scores[i] >= target) ++rank;
  }
  return rank;
}

namespace {
void require_ranks(const std::vector<int>& ranks) {
  if (ranks.empty()) throw UsageError("metrics need at least one rank");
  for (int r : ranks)
    if (r < 1) throw DomainError("ranks are 1-based");
}
}  // namespace

double hr_at_k(const std::vector<int>& ranks, int k) {
  require_ranks(ranks);
  double hits = 0;
  for (int r : ranks) hits += r <= k ? 1.0 : 0.0;
  return hits / double(ranks.size());
}

double ndcg_at_k(const std::vector<int>& ranks, int k) {
  require_ranks(ranks);
  double total = 0;
  for (int r : ranks)
    if (r <= k) total += 1.0 / std::log2(double(r) + 1.0);
  return total / double(ranks.size());
}

double mrr(const std::vector<int>& ranks) {
  require_ranks(ranks);
  double total = 0;
  for (int r : ranks) total += 1.0 / double(r);
  return total / double(ranks.size());
}

RankingReport compute_metrics(const std::vector<int>& ranks) {
  require_ranks(ranks);
  RankingReport rep;
  rep.hr5 = hr_at_k(ranks, 5);
  rep.hr10 = hr_at_k(ranks, 10);
  rep.hr20 = hr_at_k(ranks, 20);
  rep.ndcg5 = ndcg_at_k(ranks, 5);
  rep.ndcg10 = ndcg_at_k(ranks, 10);
  rep.ndcg20 = ndcg_at_k(ranks, 20);
  rep.mrr = mrr(ranks);
  rep.ranks = ranks;
  return rep;
}

}  // namespace sdil
