#include "sdil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdil/data.hpp"
#include "sdil/error.hpp"
#include "sdil/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace sdil {

namespace {

constexpr double kSecondsPerDay = 86400.0;

double npdf(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * 2.5066282746310005024157652848110);
}

}  // namespace

SynthStats generate_synthetic(const SynthConfig& cfg, const std::string& out_dir) {
  if (cfg.n_items < 50)
    throw UsageError("generate_synthetic: need at least 50 items");
  if (cfg.n_users < 1) throw UsageError("generate_synthetic: need users");
  if (cfg.min_events < 5 || cfg.max_events < cfg.min_events)
    throw UsageError("generate_synthetic: event range must allow >= 5 per user");

  Rng rng(derive_seed(cfg.seed, "synth"));
  int M = cfg.n_items;
  int n_brands = std::max(1, M / cfg.brand_divisor);
  int n_lines = std::max(1, cfg.lines_per_category);

  // Catalog. Prices sit in per-line bands so that same-category items with
  // similar prices really are line mates.
  std::vector<int> category(M + 1), brand(M + 1), line(M + 1);
  std::vector<double> price(M + 1), base(M + 1);
  for (int v = 1; v <= M; ++v) {
    category[v] = int(rng.below(std::uint64_t(cfg.n_categories)));
    brand[v] = int(rng.below(std::uint64_t(n_brands)));
    base[v] = cfg.base_min + rng.next_double() * (cfg.base_max - cfg.base_min);
  }
  std::vector<std::vector<int>> cat_members(cfg.n_categories);
  for (int v = 1; v <= M; ++v) cat_members[category[v]].push_back(v);
  double band = (cfg.price_max - cfg.price_min) / n_lines;
  for (int c = 0; c < cfg.n_categories; ++c) {
    const auto& members = cat_members[c];
    for (std::size_t i = 0; i < members.size(); ++i) {
      int v = members[i];
      line[v] = int(i % std::size_t(n_lines));
      price[v] = cfg.price_min + band * (line[v] + rng.next_double());
    }
  }

  // Planted also_buy pairs: random partners anywhere in the catalog.
  std::set<std::pair<int, int>> r1, r2;
  for (int v = 1; v <= M; ++v) {
    for (int k = 0; k < cfg.r1_per_item; ++k) {
      int w = int(rng.below(std::uint64_t(M))) + 1;
      if (w == v) continue;
      r1.insert({std::min(v, w), std::max(v, w)});
    }
  }
  // Planted also_view pairs: every product line is a substitute clique.
  for (int c = 0; c < cfg.n_categories; ++c)
    for (int v : cat_members[c])
      for (int w : cat_members[c])
        if (v < w && line[v] == line[w]) r2.insert({v, w});

  // Ground-truth relation classes drive the simulation: complements are
  // planted pairs plus shared brand, substitutes are planted alternatives
  // plus same category and price decile. This matches what downstream
  // preparation derives from the emitted files.
  std::vector<int> decile;
  {
    std::vector<double> catalog_prices(price.begin() + 1, price.end());
    decile = bin_prices(catalog_prices, 10);
  }
  std::vector<std::unordered_set<int>> comp_adj(M + 1), sub_adj(M + 1);
  auto link = [](std::vector<std::unordered_set<int>>& adj, int a, int b) {
    adj[a].insert(b);
    adj[b].insert(a);
  };
  for (auto [a, b] : r1) link(comp_adj, a, b);
  for (auto [a, b] : r2) link(sub_adj, a, b);
  for (int v = 1; v <= M; ++v)
    for (int w = v + 1; w <= M; ++w) {
      if (brand[v] == brand[w]) link(comp_adj, v, w);
      if (category[v] == category[w] && decile[v - 1] == decile[w - 1])
        link(sub_adj, v, w);
    }

  // Simulate.
  struct Event {
    int user;
    int item;
    std::int64_t ts;
  };
  std::vector<Event> events;
  std::vector<double> weight(M + 1);
  SynthStats stats;
  stats.users = cfg.n_users;
  stats.items = M;
  stats.r1_edges = (long long)r1.size();
  stats.r2_edges = (long long)r2.size();

  const std::int64_t epoch0 = 1500000000;  // arbitrary fixed origin
  int n_fav = std::min(cfg.favored_categories, cfg.n_categories);
  for (int u = 1; u <= cfg.n_users; ++u) {
    std::vector<double> cat_affinity(cfg.n_categories, cfg.off_category_weight);
    for (int f = 0; f < n_fav;) {
      int c = int(rng.below(std::uint64_t(cfg.n_categories)));
      if (cat_affinity[c] == 1.0) continue;
      cat_affinity[c] = 1.0;
      ++f;
    }
    int len = cfg.min_events + int(rng.below(std::uint64_t(cfg.max_events - cfg.min_events + 1)));
    std::int64_t t = epoch0 + std::int64_t(rng.below(30 * 86400));
    std::vector<std::pair<int, std::int64_t>> hist;
    for (int k = 0; k < len; ++k) {
      t += std::max<std::int64_t>(
          1, std::int64_t(std::llround(rng.exponential(cfg.mean_gap_days) * kSecondsPerDay)));
      for (int v = 1; v <= M; ++v) weight[v] = base[v] * cat_affinity[category[v]];
      for (const auto& [p, tp] : hist) {
        double dt = double(t - tp) / kSecondsPerDay;
        double comp_boost = cfg.w_comp * npdf(dt, 0.0, cfg.sigma1_days);
        double sub_boost = cfg.w_delay * npdf(dt, cfg.mu2_days, cfg.sigma2_days);
        double sub_cut = cfg.w_sup * npdf(dt, 0.0, cfg.sigma3_days);
        for (int q : comp_adj[p]) weight[q] += comp_boost;
        for (int q : sub_adj[p]) weight[q] += sub_boost - sub_cut;
      }
      double total = 0.0;
      for (int v = 1; v <= M; ++v) {
        if (weight[v] < 0.0) weight[v] = 0.0;
        total += weight[v];
      }
      double pick = rng.next_double() * total;
      int chosen = M;
      double acc = 0.0;
      for (int v = 1; v <= M; ++v) {
        acc += weight[v];
        if (pick < acc) {
          chosen = v;
          break;
        }
      }
      hist.emplace_back(chosen, t);
      events.push_back({u, chosen, t});
    }
    // Close-pair substitution census for the suppression check.
    for (std::size_t i = 0; i < hist.size(); ++i)
      for (std::size_t j = i + 1; j < hist.size(); ++j) {
        if (double(hist[j].second - hist[i].second) > 30.0 * kSecondsPerDay) continue;
        ++stats.close_pairs;
        if (sub_adj[hist[i].first].count(hist[j].first)) ++stats.close_substitute_pairs;
      }
  }
  stats.interactions = (long long)events.size();

  // Emit.
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "interactions.tsv");
    out << "user_id\titem_id\ttimestamp\n";
    for (const auto& e : events)
      out << e.user << '\t' << e.item << '\t' << e.ts << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "items.tsv");
    out << "item_id\tcategory\tbrand\tprice\n";
    char buf[32];
    for (int v = 1; v <= M; ++v) {
      snprintf(buf, sizeof buf, "%.2f", price[v]);
      out << v << "\tcat" << category[v] << "\tbrand" << brand[v] << '\t' << buf << '\n';
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "relations.tsv");
    out << "item_a\titem_b\trelation\n";
    for (auto [a, b] : r1) out << a << '\t' << b << "\talso_buy\n";
    for (auto [a, b] : r2) out << a << '\t' << b << "\talso_view\n";
  }
  {
    json j;
    j["seed"] = cfg.seed;
    j["n_users"] = cfg.n_users;
    j["n_items"] = cfg.n_items;
    j["n_categories"] = cfg.n_categories;
    j["n_brands"] = n_brands;
    j["sigma1_days"] = cfg.sigma1_days;
    j["sigma2_days"] = cfg.sigma2_days;
    j["mu2_days"] = cfg.mu2_days;
    j["sigma3_days"] = cfg.sigma3_days;
    j["w_comp"] = cfg.w_comp;
    j["w_delay"] = cfg.w_delay;
    j["w_sup"] = cfg.w_sup;
    j["base_min"] = cfg.base_min;
    j["base_max"] = cfg.base_max;
    j["mean_gap_days"] = cfg.mean_gap_days;
    j["min_events"] = cfg.min_events;
    j["max_events"] = cfg.max_events;
    j["r1_per_item"] = cfg.r1_per_item;
    j["lines_per_category"] = cfg.lines_per_category;
    j["favored_categories"] = cfg.favored_categories;
    j["off_category_weight"] = cfg.off_category_weight;
    j["price_range"] = {cfg.price_min, cfg.price_max};
    j["interactions"] = stats.interactions;
    std::ofstream(fs::path(out_dir) / "synth_manifest.json") << j.dump(2) << '\n';
  }
  return stats;
}

}  // namespace sdil
