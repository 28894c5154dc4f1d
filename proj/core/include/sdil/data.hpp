#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdil/error.hpp"

namespace sdil {

// Raw rows as parsed from the input TSVs (original ids, not yet dense).
struct Interaction {
  long long user = 0;
  long long item = 0;
  std::int64_t ts = 0;
};

struct RawItemMeta {
  long long item = 0;
  std::string category;  // empty = unknown
  std::string brand;     // empty = unknown
  double price = 0.0;
  bool has_price = false;
};

// Edge classes. AlsoBuy/ShareBrand drive complementary excitation,
// AlsoView/SimilarItem drive substitute excitation.
enum class Relation : int { AlsoBuy = 0, AlsoView = 1, ShareBrand = 2, SimilarItem = 3 };

const char* relation_name(Relation r);

struct RawRelation {
  long long a = 0;
  long long b = 0;
  Relation rel = Relation::AlsoBuy;
};

// Undirected item-item graph over dense ids. Edges are stored once under
// a canonical key; queries are symmetric and self-loops are dropped at
// insertion.
class RelationGraph {
 public:
  void add_edge(int a, int b, Relation r);
  bool has(int a, int b, Relation r) const;
  std::uint8_t pair_mask(int a, int b) const;  // bit i = Relation(i)
  bool complementary(int a, int b) const;
  bool substitute(int a, int b) const;
  std::size_t count(Relation r) const { return edges_[int(r)].size(); }
  std::size_t total_edges() const;
  bool empty() const { return mask_.empty(); }
  const std::vector<std::pair<int, int>>& edges(Relation r) const {
    return edges_[int(r)];
  }

  static bool complementary_mask(std::uint8_t m) {
    return m & ((1u << int(Relation::AlsoBuy)) | (1u << int(Relation::ShareBrand)));
  }
  static bool substitute_mask(std::uint8_t m) {
    return m & ((1u << int(Relation::AlsoView)) | (1u << int(Relation::SimilarItem)));
  }

 private:
  std::unordered_map<std::uint64_t, std::uint8_t> mask_;
  std::array<std::vector<std::pair<int, int>>, 4> edges_;
};

// Dense per-item attributes. Attribute id 0 is the padding row of the
// embedding tables; real ids start at 1 and the last id of each vocab is
// the unknown token.
struct ItemMeta {
  int category = 0;
  int brand = 0;
  double price = 0.0;
  bool has_price = false;
  int price_bin = -1;  // -1 = unknown
};

// One scoring instance: fixed-width left-padded context (pad item id 0),
// pad timestamps clamp to the earliest real context timestamp.
struct SplitInstance {
  int user = 0;
  int target = 0;
  std::int64_t target_ts = 0;
  std::vector<int> ctx_items;       // length max_len
  std::vector<std::int64_t> ctx_ts; // length max_len
  int valid = 0;                    // count of real slots (suffix)
};

struct Dataset {
  int n_users = 0;
  int n_items = 0;  // dense item ids 1..n_items, 0 = padding
  int max_len = 20;
  int price_bins = 10;
  int n_categories = 0;  // dense 1..n_categories, last = unknown token
  int n_brands = 0;

  std::vector<ItemMeta> items;  // indexed by dense id, [0] unused
  RelationGraph relations;
  std::vector<SplitInstance> train, val, test;
  std::vector<std::vector<int>> history;  // per user, sorted unique item ids

  std::vector<long long> user_ids;  // dense -> raw
  std::vector<long long> item_ids;  // dense -> raw, [0] = 0
  std::vector<std::string> category_names;  // [0] = "", last = "<unknown>"
  std::vector<std::string> brand_names;

  bool user_interacted(int user, int item) const;
};

struct PrepareOptions {
  int min_core = 5;
  int max_len = 20;
  int price_bins = 10;
};

struct PrepareReport {
  long long interactions_before = 0, interactions_after = 0;
  int users_before = 0, users_after = 0;
  int items_before = 0, items_after = 0;
  std::size_t edges[4] = {0, 0, 0, 0};
  long long relation_rows_skipped = 0;  // endpoints outside the catalog
  long long duplicate_rows_dropped = 0;
};

// --- loading -------------------------------------------------------------

std::vector<Interaction> load_interactions(const std::string& path,
                                           long long* duplicates_dropped = nullptr);
std::vector<RawItemMeta> load_item_file(const std::string& path);
std::vector<RawRelation> load_relation_file(const std::string& path);

// --- preparation steps ----------------------------------------------------

// Iteratively drops users and items with fewer than min_count interactions
// until both constraints hold. Returns the maximal such subset.
std::vector<Interaction> five_core_filter(std::vector<Interaction> rows,
                                          int min_count);

// Decile (or n_bins-quantile) assignment by the strictly-less empirical
// CDF: bin = min(n_bins-1, floor(n_bins * #smaller / n)). Equal prices
// always share a bin.
std::vector<int> bin_prices(const std::vector<double>& prices, int n_bins);

// Full pipeline: filter, remap, attach attributes, derive the relation
// graph, cut leave-one-out splits.
Dataset prepare_dataset(const std::vector<Interaction>& interactions,
                        const std::vector<RawItemMeta>& item_meta,
                        const std::vector<RawRelation>& relations,
                        const PrepareOptions& opts, PrepareReport* report = nullptr);

// --- negative sampling -----------------------------------------------------

// n distinct items the user never interacted with, uniform without
// replacement. Deterministic in (seed, user, split tag).
std::vector<int> sample_negatives(const Dataset& data, int user, int n,
                                  std::uint64_t seed, const std::string& split_tag);

// --- persistence -----------------------------------------------------------

void save_dataset(const Dataset& data, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace sdil
