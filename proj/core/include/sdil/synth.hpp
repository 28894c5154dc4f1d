#pragma once

#include <cstdint>
#include <string>

namespace sdil {

// Synthetic catalog + interaction generator. Users follow a reactive
// intensity: a static per-item base rate, boosted toward complements of
// recently bought items, boosted with a long delay toward substitutes,
// and suppressed toward substitutes of recent purchases. All constants
// land in synth_manifest.json next to the emitted TSVs.
struct SynthConfig {
  int n_users = 2000;
  int n_items = 300;
  std::uint64_t seed = 1;

  int n_categories = 10;
  int brand_divisor = 10;  // n_brands = max(1, n_items / brand_divisor)
  double price_min = 1.0, price_max = 100.0;

  // Each user concentrates on a few favored categories; items outside them
  // keep a small residual appeal. This narrows the credible candidate set
  // per user, so ranking is decided among near-tied same-category items,
  // the regime where timing effects are visible at all.
  int favored_categories = 1;
  double off_category_weight = 0.05;

  // Kernel shapes of the generating process (days).
  double sigma1_days = 3.0;   // complement boost around purchase time
  double sigma2_days = 10.0;  // delayed substitute boost width
  double mu2_days = 180.0;    // delayed substitute boost center
  double sigma3_days = 5.0;   // substitute suppression width

  // Excitation weights on top of base rates drawn from U[base_min, base_max].
  // w_sup is large on purpose: 30 * npdf(dt, 0, 5) stays above the base
  // rate out to ~9 days, so substitutes of a recent purchase are effectively
  // locked out for about one inter-event gap. Set 0 to disable suppression.
  // The base band is kept narrow: favored items should be near-ties on
  // static appeal, leaving purchase timing as the deciding signal.
  double w_comp = 6.0;
  double w_delay = 2.0;
  double w_sup = 30.0;
  double base_min = 0.4, base_max = 0.6;

  double mean_gap_days = 7.0;  // exponential inter-event gaps
  int min_events = 10, max_events = 24;

  // Substitutes are whole product lines: each category splits into
  // lines_per_category cliques with line-banded prices. A purchase then
  // suppresses its own line while the rest of the category stays live,
  // which is what makes the suppression visible in ranking order.
  int r1_per_item = 2;  // planted also_buy partners, anywhere in the catalog
  int lines_per_category = 2;
};

struct SynthStats {
  long long interactions = 0;
  int users = 0;
  int items = 0;
  long long r1_edges = 0;
  long long r2_edges = 0;
  // Ordered same-user pairs within 30 days whose items are substitutes
  // under the generator's ground truth, and the total inspected.
  long long close_substitute_pairs = 0;
  long long close_pairs = 0;
};

// Writes interactions.tsv, items.tsv, relations.tsv, synth_manifest.json.
SynthStats generate_synthetic(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace sdil
