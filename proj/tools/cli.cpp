#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdil/checkpoint.hpp"
#include "sdil/data.hpp"
#include "sdil/error.hpp"
#include "sdil/gradcheck.hpp"
#include "sdil/metrics.hpp"
#include "sdil/model.hpp"
#include "sdil/synth.hpp"
#include "sdil/trainer.hpp"

namespace sdil::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// ---------------------------------------------------------------- helpers

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw UsageError("cannot write " + path);
  f << content;
  if (!f) throw UsageError("write failed: " + path);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string tok = s.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": bad list entry '" + tok + "'");
    }
    pos = comma + 1;
  }
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

ordered_json metrics_to_json(const RankingReport& rep, const std::vector<int>& ks,
                             const std::string& variant, std::uint64_t seed) {
  ordered_json j;
  for (int k : ks) j["HR@" + std::to_string(k)] = hr_at_k(rep.ranks, k);
  for (int k : ks) j["NDCG@" + std::to_string(k)] = ndcg_at_k(rep.ranks, k);
  j["MRR"] = rep.mrr;
  j["variant"] = variant;
  j["seed"] = seed;
  return j;
}

void print_metric_table(const ordered_json& j, std::ostream& out) {
  std::size_t width = 0;
  for (const auto& [k, v] : j.items()) width = std::max(width, k.size());
  for (const auto& [k, v] : j.items()) {
    out << k << std::string(width - k.size() + 2, ' ');
    if (v.is_number_float())
      out << fmt("%.6f", v.get<double>());
    else if (v.is_string())
      out << v.get<std::string>();
    else
      out << v.dump();
    out << '\n';
  }
}

// ------------------------------------------------------------ config file

struct FileConfig {
  TrainConfig train;
  std::string data;
  std::string out;
};

FileConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("config file not found: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    throw ConfigError("config: invalid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  FileConfig fc;
  auto get_int = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer())
      throw ConfigError("config: '" + key + "' must be an integer");
    return v.get<int>();
  };
  auto get_num = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return v.get<double>();
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const nlohmann::json& v = it.value();
    if (k == "d") fc.train.d = get_int(v, k);
    else if (k == "batch") fc.train.batch = get_int(v, k);
    else if (k == "epochs") fc.train.epochs = get_int(v, k);
    else if (k == "patience") fc.train.patience = get_int(v, k);
    else if (k == "lr") fc.train.lr = get_num(v, k);
    else if (k == "pretrain_lr") fc.train.pretrain_lr = get_num(v, k);
    else if (k == "dropout") fc.train.dropout = get_num(v, k);
    else if (k == "pretrain_epochs") fc.train.pretrain_epochs = get_int(v, k);
    else if (k == "sim_heads") fc.train.sim_heads = get_int(v, k);
    else if (k == "dim_heads") fc.train.dim_heads = get_int(v, k);
    else if (k == "layers") fc.train.layers = get_int(v, k);
    else if (k == "max_len") fc.train.max_len = get_int(v, k);
    else if (k == "seed") {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ConfigError("config: 'seed' must be a non-negative integer");
      fc.train.seed = v.get<std::uint64_t>();
    } else if (k == "variant") {
      if (!v.is_string()) throw ConfigError("config: 'variant' must be a string");
      fc.train.variant = parse_variant(v.get<std::string>());
    } else if (k == "data") {
      if (!v.is_string()) throw ConfigError("config: 'data' must be a string");
      fc.data = v.get<std::string>();
    } else if (k == "out") {
      if (!v.is_string()) throw ConfigError("config: 'out' must be a string");
      fc.out = v.get<std::string>();
    } else {
      throw ConfigError("config: unknown key '" + k + "'");
    }
  }
  return fc;
}

ordered_json config_to_json(const TrainConfig& cfg) {
  ordered_json j;
  j["d"] = cfg.d;
  j["batch"] = cfg.batch;
  j["epochs"] = cfg.epochs;
  j["patience"] = cfg.patience;
  j["lr"] = cfg.lr;
  j["pretrain_lr"] = cfg.pretrain_lr;
  j["dropout"] = cfg.dropout;
  j["pretrain_epochs"] = cfg.pretrain_epochs;
  j["sim_heads"] = cfg.sim_heads;
  j["dim_heads"] = cfg.dim_heads;
  j["layers"] = cfg.layers;
  j["max_len"] = cfg.max_len;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.d = j.at("d").get<int>();
  cfg.batch = j.at("batch").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.lr = j.at("lr").get<double>();
  cfg.pretrain_lr = j.at("pretrain_lr").get<double>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.pretrain_epochs = j.at("pretrain_epochs").get<int>();
  cfg.sim_heads = j.at("sim_heads").get<int>();
  cfg.dim_heads = j.at("dim_heads").get<int>();
  cfg.layers = j.at("layers").get<int>();
  cfg.max_len = j.at("max_len").get<int>();
  return cfg;
}

ordered_json vocab_json(const Dataset& data) {
  ordered_json j;
  j["n_users"] = data.n_users;
  j["n_items"] = data.n_items;
  j["n_categories"] = data.n_categories;
  j["n_brands"] = data.n_brands;
  j["price_bins"] = data.price_bins;
  j["max_len"] = data.max_len;
  return j;
}

void check_vocab(const nlohmann::json& meta_vocab, const Dataset& data) {
  const ordered_json want = vocab_json(data);
  for (const auto& [k, v] : want.items()) {
    const long long have = meta_vocab.at(k).get<long long>();
    if (have != v.get<long long>())
      throw CheckpointError("checkpoint " + k + "=" + std::to_string(have) +
                            " does not match dataset " + k + "=" + v.dump() +
                            " (vocabulary mismatch)");
  }
}

// --------------------------------------------------------------- commands

int cmd_prepare(const std::string& interactions, const std::string& items,
                const std::string& relations, const std::string& out, int min_core,
                int max_len, int price_bins) {
  for (const std::string& p : {interactions, items, relations})
    if (!fs::exists(p)) throw UsageError("input file not found: " + p);

  long long dup = 0;
  auto rows = load_interactions(interactions, &dup);
  auto meta = load_item_file(items);
  auto rels = load_relation_file(relations);

  PrepareOptions opts;
  opts.min_core = min_core;
  opts.max_len = max_len;
  opts.price_bins = price_bins;
  PrepareReport rep;
  rep.duplicate_rows_dropped = dup;
  Dataset data = prepare_dataset(rows, meta, rels, opts, &rep);

  fs::create_directories(out);
  save_dataset(data, out);

  ordered_json j;
  j["interactions_before"] = rep.interactions_before;
  j["interactions_after"] = rep.interactions_after;
  j["users_before"] = rep.users_before;
  j["users_after"] = rep.users_after;
  j["items_before"] = rep.items_before;
  j["items_after"] = rep.items_after;
  j["duplicate_rows_dropped"] = rep.duplicate_rows_dropped;
  j["relation_rows_skipped"] = rep.relation_rows_skipped;
  ordered_json edges;
  for (int r = 0; r < 4; ++r)
    edges[relation_name(Relation(r))] = rep.edges[r];
  j["edges"] = edges;
  j["avg_seq_length"] =
      double(rep.interactions_after) / double(std::max(1, rep.users_after));
  ordered_json options;
  options["min_core"] = min_core;
  options["max_len"] = max_len;
  options["price_bins"] = price_bins;
  j["options"] = options;
  write_file(out + "/prepare_report.json", j.dump(2) + "\n");

  std::cout << "prepared " << data.n_users << " users, " << data.n_items
            << " items, " << rep.interactions_after << " interactions -> " << out
            << "\n";
  return 0;
}

int cmd_train(const std::string& data_flag, const std::string& config_path,
              const std::string& out_flag, const std::string& variant_flag,
              std::optional<std::uint64_t> seed_flag) {
  FileConfig fc;
  if (!config_path.empty()) fc = load_config_file(config_path);
  const std::string data_dir = !data_flag.empty() ? data_flag : fc.data;
  const std::string out_dir = !out_flag.empty() ? out_flag : fc.out;
  if (data_dir.empty()) throw UsageError("train: --data (or config \"data\") is required");
  if (out_dir.empty()) throw UsageError("train: --out (or config \"out\") is required");

  TrainConfig cfg = fc.train;
  if (!variant_flag.empty()) cfg.variant = parse_variant(variant_flag);
  if (seed_flag) cfg.seed = *seed_flag;
  cfg.validate();

  Dataset data = load_dataset(data_dir);
  if (cfg.max_len != data.max_len)
    throw ConfigError("train: max_len " + std::to_string(cfg.max_len) +
                      " does not match the prepared dataset (max_len " +
                      std::to_string(data.max_len) + ")");

  SdilModel m = make_model(data, cfg.model_config(), cfg.variant, cfg.seed);
  TrainResult res = train_model(m, data, cfg);

  fs::create_directories(out_dir);
  std::string log;
  for (const EpochRecord& r : res.log) {
    ordered_json line;
    line["epoch"] = r.epoch;
    line["loss"] = r.loss;
    line["val_ndcg5"] = r.val_ndcg5;
    line["elapsed_sec"] = r.elapsed_sec;
    log += line.dump() + "\n";
  }
  write_file(out_dir + "/train_log.jsonl", log);

  const std::vector<int> ks = {5, 10, 20};
  RankingReport val = evaluate_model(m, data, Split::Val, cfg.seed);
  write_file(out_dir + "/val_metrics.json",
             metrics_to_json(val, ks, variant_name(cfg.variant), cfg.seed).dump(2) +
                 "\n");

  ordered_json meta;
  meta["config"] = config_to_json(cfg);
  meta["variant"] = variant_name(cfg.variant);
  meta["seed"] = cfg.seed;
  meta["vocab"] = vocab_json(data);
  meta["best_epoch"] = res.best_epoch;
  meta["best_val_ndcg5"] = res.best_val_ndcg5;
  meta["epochs_run"] = res.epochs_run;
  meta["stopped_early"] = res.stopped_early;
  save_checkpoint(out_dir + "/model.sdil", m.named_params(), meta.dump());

  std::cout << "trained " << variant_name(cfg.variant) << " for " << res.epochs_run
            << " epochs (best epoch " << res.best_epoch << ", val NDCG@5 "
            << fmt("%.6f", res.best_val_ndcg5) << ") -> " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& model_path,
             const std::string& split_name, const std::string& ks_str,
             int negatives, std::optional<std::uint64_t> seed_flag,
             const std::string& out_path) {
  if (negatives < 1) throw UsageError("eval: --negatives must be positive");
  const std::vector<int> ks = parse_int_list(ks_str, "eval: --k");
  Split split;
  if (split_name == "test") split = Split::Test;
  else if (split_name == "val") split = Split::Val;
  else throw UsageError("eval: --split must be test or val");

  Dataset data = load_dataset(data_dir);
  Checkpoint ckpt = load_checkpoint(model_path);

  TrainConfig cfg;
  std::string variant_str;
  std::uint64_t train_seed = 0;
  try {
    const nlohmann::json meta = nlohmann::json::parse(ckpt.meta_json);
    check_vocab(meta.at("vocab"), data);
    cfg = config_from_json(meta.at("config"));
    variant_str = meta.at("variant").get<std::string>();
    train_seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("model metadata malformed: " + std::string(e.what()));
  }
  cfg.variant = parse_variant(variant_str);
  cfg.seed = train_seed;

  SdilModel m = make_model(data, cfg.model_config(), cfg.variant, cfg.seed);
  restore_params(m.named_params(), ckpt);

  const std::uint64_t eval_seed = seed_flag ? *seed_flag : train_seed;
  RankingReport rep = evaluate_model(m, data, split, eval_seed, negatives);
  const ordered_json j = metrics_to_json(rep, ks, variant_str, eval_seed);
  print_metric_table(j, std::cout);
  write_file(out_path, j.dump(2) + "\n");
  return 0;
}

int cmd_synth(const std::string& out, int users, int items, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_users = users;
  cfg.n_items = items;
  cfg.seed = seed;
  SynthStats stats = generate_synthetic(cfg, out);
  std::cout << "synthesized " << stats.interactions << " interactions for "
            << stats.users << " users over " << stats.items << " items -> " << out
            << "\n";
  return 0;
}

// Toy fixture for the gradient gate: every relation class, padding,
// unknown attributes and all parameter groups participate in the loss.
Dataset gradcheck_fixture() {
  Dataset d;
  d.n_users = 3;
  d.n_items = 12;
  d.max_len = 6;
  d.price_bins = 10;
  d.n_categories = 3;
  d.n_brands = 2;
  d.items.resize(d.n_items + 1);
  for (int v = 1; v <= d.n_items; ++v) {
    ItemMeta& m = d.items[v];
    m.category = 1 + (v % 3);
    m.brand = 1 + (v % 2);
    m.price = 10.0 + v;
    m.has_price = v != 11;       // one item with an unknown price
    m.price_bin = v != 11 ? v % 10 : -1;
  }
  d.relations.add_edge(1, 7, Relation::AlsoBuy);
  d.relations.add_edge(2, 8, Relation::AlsoBuy);
  d.relations.add_edge(3, 7, Relation::AlsoView);
  d.relations.add_edge(4, 8, Relation::AlsoView);
  d.relations.add_edge(5, 7, Relation::ShareBrand);
  d.relations.add_edge(6, 8, Relation::SimilarItem);

  const std::int64_t day = 86400;
  const std::int64_t base = 1500000000;
  auto inst = [&](int user, int target, std::vector<int> ctx,
                  std::vector<std::int64_t> ts, std::int64_t target_ts) {
    SplitInstance s;
    s.user = user;
    s.target = target;
    s.target_ts = target_ts;
    s.ctx_items = std::move(ctx);
    s.ctx_ts = std::move(ts);
    for (int id : s.ctx_items) s.valid += id != 0 ? 1 : 0;
    return s;
  };
  d.train.push_back(inst(0, 7, {1, 2, 3, 4, 5, 6},
                         {base, base + 2 * day, base + 4 * day, base + 6 * day,
                          base + 8 * day, base + 10 * day},
                         base + 12 * day));
  d.train.push_back(inst(1, 8, {0, 0, 2, 4, 6, 1},
                         {base, base, base, base + 3 * day, base + 6 * day,
                          base + 9 * day},
                         base + 11 * day));
  d.train.push_back(inst(2, 7, {0, 0, 0, 9, 10, 3},
                         {base, base, base, base, base + 1 * day, base + 4 * day},
                         base + 5 * day));
  d.history = {{1, 2, 3, 4, 5, 6, 7}, {1, 2, 4, 6, 8}, {3, 7, 9, 10}};
  return d;
}

std::string param_group(const std::string& name) {
  if (name == "dim.item_emb") return "item_embedding";
  if (name == "dim.pos_emb") return "position";
  if (name == "dim.user_bias" || name == "dim.item_bias") return "biases";
  if (name.rfind("kernel.", 0) == 0) return "kernels";
  if (name.rfind("gate.", 0) == 0) return "gate";
  if (name == "sim.cat_emb" || name == "sim.brand_emb" || name == "sim.price_emb")
    return "attributes";
  const std::string leaf = name.substr(name.rfind('.') + 1);
  if (leaf == "wq" || leaf == "wk" || leaf == "wv" || leaf == "wo")
    return "attention";
  if (leaf == "w1" || leaf == "b1" || leaf == "w2" || leaf == "b2") return "ffn";
  if (leaf.rfind("ln", 0) == 0) return "layernorm";
  throw UsageError("unmapped parameter '" + name + "'");
}

int cmd_gradcheck(std::uint64_t seed, bool corrupt) {
  constexpr double kTol = 1e-4;
  Dataset data = gradcheck_fixture();

  TrainConfig tc;
  tc.d = 8;
  tc.max_len = 6;
  tc.sim_heads = 4;
  tc.dim_heads = 1;
  tc.layers = 2;
  tc.dropout = 0.0;
  SdilModel m = make_model(data, tc.model_config(), Variant::SDIL, seed);

  const std::vector<int> negatives = {11, 12, 9};
  LossFn loss = [&](Tape* tape) -> TensorPtr {
    TensorPtr total;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      auto l = pair_loss(m, data, data.train[i], negatives[i], nullptr, false, tape);
      total = total ? add(total, l, tape) : l;
    }
    total = scale(total, 1.0 / double(data.train.size()), tape);
    if (corrupt) {
      // Forward-only dependence the tape never sees: the analytic
      // gradient of every gate bias coordinate goes stale.
      double s = 0;
      for (double v : m.gate.b->data) s += v;
      total = add(total, scalar(0.01 * s), tape);
    }
    return total;
  };

  Rng rng(derive_seed(seed, "gradcheck"));
  GradCheckReport rep = grad_check(loss, m.named_params(), 4, 1e-5, rng);

  struct Group {
    double max_rel_err = 0;
    int coords = 0;
  };
  std::vector<std::pair<std::string, Group>> groups;
  auto group_slot = [&](const std::string& g) -> Group& {
    for (auto& [name, grp] : groups)
      if (name == g) return grp;
    groups.emplace_back(g, Group{});
    return groups.back().second;
  };
  for (const GradCheckEntry& e : rep.per_param) {
    Group& g = group_slot(param_group(e.name));
    g.max_rel_err = std::max(g.max_rel_err, e.max_rel_err);
    g.coords += e.coords_checked;
  }

  bool ok = true;
  int coords_total = 0;
  for (const auto& [name, g] : groups) {
    const bool pass = g.max_rel_err < kTol;
    ok = ok && pass;
    coords_total += g.coords;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << name
              << std::string(name.size() < 16 ? 16 - name.size() : 1, ' ')
              << "max_rel_err " << fmt("%.3e", g.max_rel_err) << "  (" << g.coords
              << " coords)\n";
  }
  std::cout << (ok ? "OK" : "FAILED") << ": " << groups.size() << " groups, "
            << coords_total << " coordinates, tolerance " << fmt("%.0e", kTol)
            << "\n";
  if (!ok) std::cerr << "gradient check failed\n";
  return ok ? 0 : 7;
}

int cmd_ablate(const std::string& data_flag, const std::string& config_path,
               const std::string& out_flag, const std::string& seeds_str) {
  FileConfig fc;
  if (!config_path.empty()) fc = load_config_file(config_path);
  const std::string data_dir = !data_flag.empty() ? data_flag : fc.data;
  const std::string out_dir = !out_flag.empty() ? out_flag : fc.out;
  if (data_dir.empty()) throw UsageError("ablate: --data (or config \"data\") is required");
  if (out_dir.empty()) throw UsageError("ablate: --out (or config \"out\") is required");

  std::vector<std::uint64_t> seeds;
  if (!seeds_str.empty())
    for (int s : parse_int_list(seeds_str, "ablate: --seeds"))
      seeds.push_back(std::uint64_t(s));
  else
    seeds.push_back(fc.train.seed);

  Dataset data = load_dataset(data_dir);

  // per variant, per metric, one value per seed
  const std::vector<std::string> metric_names = {"HR@5",    "HR@10",  "HR@20",
                                                 "NDCG@5",  "NDCG@10", "NDCG@20",
                                                 "MRR"};
  auto metric_values = [](const RankingReport& r) {
    return std::vector<double>{r.hr5, r.hr10, r.hr20, r.ndcg5, r.ndcg10, r.ndcg20,
                               r.mrr};
  };
  std::vector<std::vector<std::vector<double>>> values(
      all_variants().size(),
      std::vector<std::vector<double>>(metric_names.size()));

  for (std::uint64_t seed : seeds) {
    TrainConfig cfg = fc.train;
    cfg.seed = seed;
    cfg.validate();
    std::cerr << "ablation seed " << seed << "\n";
    std::vector<AblationRow> rows = run_ablation(data, cfg);
    for (std::size_t v = 0; v < rows.size(); ++v) {
      const auto vals = metric_values(rows[v].test);
      for (std::size_t k = 0; k < vals.size(); ++k) values[v][k].push_back(vals[k]);
    }
  }

  auto mean_of = [](const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return s / double(xs.size());
  };
  auto stddev_of = [&](const std::vector<double>& xs) {
    const double m = mean_of(xs);
    double s = 0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / double(xs.size()));
  };

  ordered_json j;
  j["seeds"] = seeds;
  ordered_json variants = ordered_json::array();
  std::string table = "variant  ";
  for (const auto& name : metric_names)
    table += name + std::string(18 - name.size(), ' ');
  table += "\n";
  for (std::size_t v = 0; v < all_variants().size(); ++v) {
    const std::string vname = variant_name(all_variants()[v]);
    ordered_json row;
    row["variant"] = vname;
    ordered_json mean, stddev;
    table += vname + std::string(9 - vname.size(), ' ');
    for (std::size_t k = 0; k < metric_names.size(); ++k) {
      const double m = mean_of(values[v][k]);
      const double s = stddev_of(values[v][k]);
      mean[metric_names[k]] = m;
      stddev[metric_names[k]] = s;
      const std::string cell = fmt("%.4f", m) + "+-" + fmt("%.4f", s);
      table += cell + std::string(18 - cell.size(), ' ');
    }
    row["mean"] = mean;
    row["stddev"] = stddev;
    ordered_json per_seed = ordered_json::array();
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      ordered_json one;
      one["seed"] = seeds[si];
      for (std::size_t k = 0; k < metric_names.size(); ++k)
        one[metric_names[k]] = values[v][k][si];
      per_seed.push_back(one);
    }
    row["per_seed"] = per_seed;
    variants.push_back(row);
    table += "\n";
  }
  j["variants"] = variants;

  fs::create_directories(out_dir);
  write_file(out_dir + "/ablation.json", j.dump(2) + "\n");
  write_file(out_dir + "/ablation.txt", table);
  std::cout << table;
  return 0;
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"SDIL sequential recommender"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Filter, remap and split raw data");
  std::string p_interactions, p_items, p_relations, p_out;
  int p_min_core = 5, p_max_len = 20, p_price_bins = 10;
  prepare->add_option("--interactions", p_interactions)->required();
  prepare->add_option("--items", p_items)->required();
  prepare->add_option("--relations", p_relations)->required();
  prepare->add_option("--out", p_out)->required();
  prepare->add_option("--min-core", p_min_core);
  prepare->add_option("--max-len", p_max_len);
  prepare->add_option("--price-bins", p_price_bins);

  // train
  auto* train = app.add_subcommand("train", "Pretrain and train one variant");
  std::string t_data, t_config, t_out, t_variant;
  std::uint64_t t_seed = 0;
  train->add_option("--data", t_data);
  train->add_option("--config", t_config);
  train->add_option("--out", t_out);
  train->add_option("--variant", t_variant)
      ->check(CLI::IsMember({"sdil", "sdil-1", "sdil-2", "sdil-3", "sdil-tpe"}));
  auto* t_seed_opt = train->add_option("--seed", t_seed);

  // eval
  auto* eval = app.add_subcommand("eval", "Rank held-out targets and report metrics");
  std::string e_data, e_model, e_split = "test", e_ks = "5,10,20",
              e_out = "metrics.json";
  int e_negatives = 99;
  std::uint64_t e_seed = 0;
  eval->add_option("--data", e_data)->required();
  eval->add_option("--model", e_model)->required();
  eval->add_option("--split", e_split)->check(CLI::IsMember({"test", "val"}));
  eval->add_option("--k", e_ks);
  eval->add_option("--negatives", e_negatives);
  auto* e_seed_opt = eval->add_option("--seed", e_seed);
  eval->add_option("--out", e_out);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic raw dataset");
  std::string s_out;
  int s_users = 2000, s_items = 300;
  std::uint64_t s_seed = 1;
  synth->add_option("--out", s_out)->required();
  synth->add_option("--users", s_users);
  synth->add_option("--items", s_items);
  synth->add_option("--seed", s_seed);

  // gradcheck
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of every parameter group");
  std::uint64_t g_seed = 42;
  bool g_corrupt = false;
  gradcheck->add_option("--seed", g_seed);
  gradcheck
      ->add_flag("--self-test-corrupt", g_corrupt,
                 "Deliberately break one gradient to prove the gate can fail")
      ->group("");  // hidden

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Train and compare all variants");
  std::string a_data, a_config, a_out, a_seeds;
  ablate->add_option("--data", a_data);
  ablate->add_option("--config", a_config);
  ablate->add_option("--out", a_out);
  ablate->add_option("--seeds", a_seeds);

  std::vector<const char*> argv;
  argv.push_back("sdil");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (prepare->parsed())
      return cmd_prepare(p_interactions, p_items, p_relations, p_out, p_min_core,
                         p_max_len, p_price_bins);
    if (train->parsed())
      return cmd_train(t_data, t_config, t_out, t_variant,
                       t_seed_opt->count() ? std::optional<std::uint64_t>(t_seed)
                                           : std::nullopt);
    if (eval->parsed())
      return cmd_eval(e_data, e_model, e_split, e_ks, e_negatives,
                      e_seed_opt->count() ? std::optional<std::uint64_t>(e_seed)
                                          : std::nullopt,
                      e_out);
    if (synth->parsed()) return cmd_synth(s_out, s_users, s_items, s_seed);
    if (gradcheck->parsed()) return cmd_gradcheck(g_seed, g_corrupt);
    if (ablate->parsed()) return cmd_ablate(a_data, a_config, a_out, a_seeds);
    throw UsageError("no command given");
  } catch (const EmptyAfterFilterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const SamplingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sdil::cli
