#include "sdil/dim.hpp"

namespace sdil {

DimParams make_dim_params(int n_users, int n_items, const DimConfig& cfg, Rng& rng) {
  if (cfg.d < 1 || cfg.max_len < 1) throw ConfigError("dim: bad dimensions");
  if (cfg.heads < 1 || cfg.d % cfg.heads != 0)
    throw ConfigError("dim: heads must divide d");
  DimParams p;
  p.item_emb = param_normal({n_items + 1, cfg.d}, 0.05, rng);
  p.pos_emb = param_normal({cfg.max_len, cfg.d}, 0.05, rng);
  p.user_bias = param({n_users, 1});
  p.item_bias = param({n_items + 1, 1});
  for (int j = 0; j < cfg.d; ++j) p.item_emb->data[j] = 0.0;  // padding row
  for (int l = 0; l < cfg.layers; ++l)
    p.blocks.push_back(make_encoder_layer(cfg.d, /*with_output_proj=*/false, rng));
  return p;
}

TensorPtr embed_context(const DimParams& p, const std::vector<int>& ctx_items,
                        Tape* tape) {
  if (int(ctx_items.size()) != p.pos_emb->rows())
    throw ShapeError("embed_context: context width must match position table");
  auto ids = gather_rows(p.item_emb, ctx_items, tape);
  auto summed = add(ids, p.pos_emb, tape);
  return scale_rows(summed, context_mask(ctx_items), tape);
}

TensorPtr dim_encode(const DimParams& p, const DimConfig& cfg,
                     const std::vector<int>& ctx_items, CounterRng* rng,
                     bool training, Tape* tape) {
  auto mask = context_mask(ctx_items);
  auto x = embed_context(p, ctx_items, tape);
  for (const auto& block : p.blocks)
    x = encoder_layer(x, block, mask, cfg.heads, cfg.dropout, rng, training, tape);
  return masked_mean_rows(x, mask, tape);
}

TensorPtr base_intensity(const DimParams& p, const TensorPtr& e_h, int user,
                         int item, Tape* tape) {
  if (item < 1 || item >= p.item_emb->rows())
    throw IndexError("base_intensity: item out of range");
  auto ub = gather_rows(p.user_bias, {user}, tape);
  auto ib = gather_rows(p.item_bias, {item}, tape);
  auto out = add(ub, ib, tape);
  if (e_h) {
    auto ev = gather_rows(p.item_emb, {item}, tape);
    out = add(dot(e_h, ev, tape), out, tape);
  }
  return out;
}

void collect_dim_params(const DimParams& p,
                        std::vector<std::pair<std::string, TensorPtr>>& out) {
  out.emplace_back("dim.item_emb", p.item_emb);
  out.emplace_back("dim.pos_emb", p.pos_emb);
  out.emplace_back("dim.user_bias", p.user_bias);
  out.emplace_back("dim.item_bias", p.item_bias);
  for (std::size_t l = 0; l < p.blocks.size(); ++l)
    collect_encoder_params(p.blocks[l], "dim.block" + std::to_string(l), out);
}

}  // namespace sdil
