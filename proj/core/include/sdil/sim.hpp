#pragma once

#include <vector>

#include "sdil/data.hpp"
#include "sdil/encoder.hpp"

namespace sdil {

// Static-interest encoder over item attributes. No position information
// anywhere: the pooled vector is invariant to reordering the context.
struct SimConfig {
  int d = 64;
  int heads = 4;
  int layers = 2;
  double dropout = 0.1;
};

struct SimParams {
  TensorPtr cat_emb;    // (n_categories+1) x d, row 0 pinned to zero
  TensorPtr brand_emb;  // (n_brands+1) x d
  TensorPtr price_emb;  // (price_bins+2) x d: pad, bins, unknown
  std::vector<EncoderLayerParams> blocks;
};

SimParams make_sim_params(int n_categories, int n_brands, int price_bins,
                          const SimConfig& cfg, Rng& rng);

// Row index into price_emb for an item: 0 pad, 1..bins real, bins+1 unknown.
int price_row(const ItemMeta& m, int price_bins);

// Summed attribute embeddings per slot; padded slots are zero rows.
TensorPtr fuse_features(const SimParams& p, const Dataset& data,
                        const std::vector<int>& ctx_items, Tape* tape);

// Pooled static interest vector {1, d}.
TensorPtr sim_encode(const SimParams& p, const SimConfig& cfg, const Dataset& data,
                     const std::vector<int>& ctx_items, CounterRng* rng,
                     bool training, Tape* tape);

void collect_sim_params(const SimParams& p,
                        std::vector<std::pair<std::string, TensorPtr>>& out);

}  // namespace sdil
