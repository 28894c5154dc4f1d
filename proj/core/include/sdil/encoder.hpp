#pragma once

#include <vector>

#include "sdil/autodiff.hpp"

namespace sdil {

// One self-attention block. Projections are full d x d; heads are taken as
// column slices (scores scaled by 1/sqrt(d/heads)). `wo` and the second
// norm pair are optional:
//   wo == null:   out = LN1(x + Dropout(FFN(attention(x))))
//   wo != null:   y = LN1(x + MHA(x)); out = LN2(y + Dropout(FFN(y)))
struct EncoderLayerParams {
  TensorPtr wq, wk, wv;
  TensorPtr wo;  // optional output projection
  TensorPtr w1, b1, w2, b2;
  TensorPtr ln1_g, ln1_b;
  TensorPtr ln2_g, ln2_b;  // present iff wo is
};

// Masked multi-head self-attention. key_valid marks real slots; padded
// keys get a -1e9 additive bias before the row softmax, which underflows
// to an exactly-zero attention weight.
TensorPtr self_attention(const TensorPtr& x, const EncoderLayerParams& p,
                         const std::vector<double>& key_valid, int heads,
                         Tape* tape);

TensorPtr encoder_layer(const TensorPtr& x, const EncoderLayerParams& p,
                        const std::vector<double>& key_valid, int heads,
                        double dropout_p, CounterRng* rng, bool training,
                        Tape* tape);

// Mean over rows with mask[i] == 1. At least one row must be valid.
TensorPtr masked_mean_rows(const TensorPtr& x, const std::vector<double>& mask,
                           Tape* tape);

// Per-slot validity for a padded context (pad item id 0 -> 0.0).
std::vector<double> context_mask(const std::vector<int>& ctx_items);

// Parameter construction: Xavier projections, identity-ish norms.
EncoderLayerParams make_encoder_layer(int d, bool with_output_proj, Rng& rng);

void collect_encoder_params(const EncoderLayerParams& p, const std::string& prefix,
                            std::vector<std::pair<std::string, TensorPtr>>& out);

}  // namespace sdil
