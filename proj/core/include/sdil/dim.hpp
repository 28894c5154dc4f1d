#pragma once

#include <vector>

#include "sdil/encoder.hpp"

namespace sdil {

// Dynamic-interest encoder: item-id + absolute-position embeddings through
// stacked self-attention blocks, masked mean pooled into one vector.
struct DimConfig {
  int d = 64;
  int max_len = 20;
  int heads = 1;
  int layers = 2;
  double dropout = 0.1;
};

struct DimParams {
  TensorPtr item_emb;   // (n_items+1) x d, row 0 pinned to zero
  TensorPtr pos_emb;    // max_len x d
  TensorPtr user_bias;  // n_users x 1
  TensorPtr item_bias;  // (n_items+1) x 1, row 0 pinned to zero
  std::vector<EncoderLayerParams> blocks;
};

DimParams make_dim_params(int n_users, int n_items, const DimConfig& cfg, Rng& rng);

// E[id] + POS[slot] per slot; padded slots come out as exact zero rows.
TensorPtr embed_context(const DimParams& p, const std::vector<int>& ctx_items,
                        Tape* tape);

// Full pass to the pooled dynamic interest vector {1, d}. Context must
// have at least one valid slot.
TensorPtr dim_encode(const DimParams& p, const DimConfig& cfg,
                     const std::vector<int>& ctx_items, CounterRng* rng,
                     bool training, Tape* tape);

// lambda_0 = e_h . E[item] + user_bias[user] + item_bias[item], {1,1}.
// A null e_h (empty context) drops the affinity term, leaving the biases.
TensorPtr base_intensity(const DimParams& p, const TensorPtr& e_h, int user,
                         int item, Tape* tape);

void collect_dim_params(const DimParams& p,
                        std::vector<std::pair<std::string, TensorPtr>>& out);

}  // namespace sdil
