#include "sdil/sim.hpp"

namespace sdil {

SimParams make_sim_params(int n_categories, int n_brands, int price_bins,
                          const SimConfig& cfg, Rng& rng) {
  if (cfg.heads < 1 || cfg.d % cfg.heads != 0)
    throw ConfigError("sim: heads must divide d");
  SimParams p;
  p.cat_emb = param_normal({n_categories + 1, cfg.d}, 0.05, rng);
  p.brand_emb = param_normal({n_brands + 1, cfg.d}, 0.05, rng);
  p.price_emb = param_normal({price_bins + 2, cfg.d}, 0.05, rng);
  for (int j = 0; j < cfg.d; ++j) {
    p.cat_emb->data[j] = 0.0;
    p.brand_emb->data[j] = 0.0;
    p.price_emb->data[j] = 0.0;
  }
  for (int l = 0; l < cfg.layers; ++l)
    p.blocks.push_back(make_encoder_layer(cfg.d, /*with_output_proj=*/true, rng));
  return p;
}

int price_row(const ItemMeta& m, int price_bins) {
  return m.price_bin >= 0 ? m.price_bin + 1 : price_bins + 1;
}

TensorPtr fuse_features(const SimParams& p, const Dataset& data,
                        const std::vector<int>& ctx_items, Tape* tape) {
  std::vector<int> cat_ids(ctx_items.size()), brand_ids(ctx_items.size()),
      price_ids(ctx_items.size());
  for (std::size_t i = 0; i < ctx_items.size(); ++i) {
    int v = ctx_items[i];
    if (v == 0) {
      cat_ids[i] = brand_ids[i] = price_ids[i] = 0;
      continue;
    }
    if (v < 1 || v > data.n_items) throw IndexError("fuse_features: item out of range");
    cat_ids[i] = data.items[v].category;
    brand_ids[i] = data.items[v].brand;
    price_ids[i] = price_row(data.items[v], data.price_bins);
  }
  auto c = gather_rows(p.cat_emb, cat_ids, tape);
  auto b = gather_rows(p.brand_emb, brand_ids, tape);
  auto pr = gather_rows(p.price_emb, price_ids, tape);
  auto fused = add(add(c, b, tape), pr, tape);
  return scale_rows(fused, context_mask(ctx_items), tape);
}

TensorPtr sim_encode(const SimParams& p, const SimConfig& cfg, const Dataset& data,
                     const std::vector<int>& ctx_items, CounterRng* rng,
                     bool training, Tape* tape) {
  auto mask = context_mask(ctx_items);
  auto x = fuse_features(p, data, ctx_items, tape);
  for (const auto& block : p.blocks)
    x = encoder_layer(x, block, mask, cfg.heads, cfg.dropout, rng, training, tape);
  return masked_mean_rows(x, mask, tape);
}

void collect_sim_params(const SimParams& p,
                        std::vector<std::pair<std::string, TensorPtr>>& out) {
  out.emplace_back("sim.cat_emb", p.cat_emb);
  out.emplace_back("sim.brand_emb", p.brand_emb);
  out.emplace_back("sim.price_emb", p.price_emb);
  for (std::size_t l = 0; l < p.blocks.size(); ++l)
    collect_encoder_params(p.blocks[l], "sim.block" + std::to_string(l), out);
}

}  // namespace sdil
