#include "sdil/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sdil/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace sdil {

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::AlsoBuy: return "also_buy";
    case Relation::AlsoView: return "also_view";
    case Relation::ShareBrand: return "share_brand";
    case Relation::SimilarItem: return "similar_item";
  }
  return "?";
}

// --- RelationGraph ---------------------------------------------------------

static std::uint64_t pair_key(int a, int b) {
  int lo = std::min(a, b), hi = std::max(a, b);
  return (std::uint64_t(std::uint32_t(lo)) << 32) | std::uint32_t(hi);
}

void RelationGraph::add_edge(int a, int b, Relation r) {
  if (a == b) return;
  auto& m = mask_[pair_key(a, b)];
  std::uint8_t bit = std::uint8_t(1u << int(r));
  if (m & bit) return;
  m |= bit;
  edges_[int(r)].emplace_back(std::min(a, b), std::max(a, b));
}

std::uint8_t RelationGraph::pair_mask(int a, int b) const {
  if (a == b) return 0;
  auto it = mask_.find(pair_key(a, b));
  return it == mask_.end() ? 0 : it->second;
}

bool RelationGraph::has(int a, int b, Relation r) const {
  return pair_mask(a, b) & (1u << int(r));
}

bool RelationGraph::complementary(int a, int b) const {
  return complementary_mask(pair_mask(a, b));
}

bool RelationGraph::substitute(int a, int b) const {
  return substitute_mask(pair_mask(a, b));
}

std::size_t RelationGraph::total_edges() const {
  std::size_t n = 0;
  for (const auto& e : edges_) n += e.size();
  return n;
}

// --- TSV parsing -----------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

template <typename T>
T parse_int_field(const std::string& s, const std::string& path, long long line,
                  const char* field) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(path + ":" + std::to_string(line) + ": bad " + field + " '" + s + "'");
  return value;
}

double parse_price_field(const std::string& s, const std::string& path,
                         long long line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line) + ": bad price '" + s + "'");
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

void expect_header(const std::string& got, const char* want, const std::string& path) {
  std::string g = got;
  if (!g.empty() && g.back() == '\r') g.pop_back();
  if (g != want)
    throw ParseError(path + ":1: expected header '" + want + "', got '" + g + "'");
}

}  // namespace

std::vector<Interaction> load_interactions(const std::string& path,
                                           long long* duplicates_dropped) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  expect_header(line, "user_id\titem_id\ttimestamp", path);

  std::vector<Interaction> rows;
  std::set<std::tuple<long long, long long, std::int64_t>> seen;
  long long dupes = 0;
  long long ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 3)
      throw ParseError(path + ":" + std::to_string(ln) + ": expected 3 fields");
    Interaction r;
    r.user = parse_int_field<long long>(f[0], path, ln, "user_id");
    r.item = parse_int_field<long long>(f[1], path, ln, "item_id");
    r.ts = parse_int_field<std::int64_t>(f[2], path, ln, "timestamp");
    if (r.user <= 0 || r.item <= 0)
      throw ParseError(path + ":" + std::to_string(ln) + ": ids must be positive");
    if (!seen.insert({r.user, r.item, r.ts}).second) {
      ++dupes;
      continue;
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError(path + ": no interaction rows");
  if (duplicates_dropped) *duplicates_dropped = dupes;
  return rows;
}

std::vector<RawItemMeta> load_item_file(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  expect_header(line, "item_id\tcategory\tbrand\tprice", path);

  std::vector<RawItemMeta> rows;
  long long ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 4)
      throw ParseError(path + ":" + std::to_string(ln) + ": expected 4 fields");
    RawItemMeta r;
    r.item = parse_int_field<long long>(f[0], path, ln, "item_id");
    r.category = f[1];
    r.brand = f[2];
    if (!f[3].empty()) {
      r.price = parse_price_field(f[3], path, ln);
      r.has_price = true;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RawRelation> load_relation_file(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  expect_header(line, "item_a\titem_b\trelation", path);

  std::vector<RawRelation> rows;
  long long ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 3)
      throw ParseError(path + ":" + std::to_string(ln) + ": expected 3 fields");
    RawRelation r;
    r.a = parse_int_field<long long>(f[0], path, ln, "item_a");
    r.b = parse_int_field<long long>(f[1], path, ln, "item_b");
    if (f[2] == "also_buy")
      r.rel = Relation::AlsoBuy;
    else if (f[2] == "also_view")
      r.rel = Relation::AlsoView;
    else
      throw ParseError(path + ":" + std::to_string(ln) + ": unknown relation '" + f[2] + "'");
    rows.push_back(r);
  }
  return rows;
}

// --- filtering / binning ----------------------------------------------------

std::vector<Interaction> five_core_filter(std::vector<Interaction> rows,
                                          int min_count) {
  if (min_count < 1) throw DomainError("five_core_filter: min_count must be >= 1");
  for (;;) {
    std::unordered_map<long long, int> ucount, icount;
    for (const auto& r : rows) {
      ++ucount[r.user];
      ++icount[r.item];
    }
    std::vector<Interaction> kept;
    kept.reserve(rows.size());
    for (const auto& r : rows)
      if (ucount[r.user] >= min_count && icount[r.item] >= min_count)
        kept.push_back(r);
    if (kept.size() == rows.size()) return rows;
    rows = std::move(kept);
  }
}

std::vector<int> bin_prices(const std::vector<double>& prices, int n_bins) {
  if (n_bins < 1) throw DomainError("bin_prices: n_bins must be >= 1");
  std::vector<double> sorted(prices);
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> bins(prices.size());
  std::size_t n = sorted.size();
  for (std::size_t i = 0; i < prices.size(); ++i) {
    std::size_t smaller =
        std::lower_bound(sorted.begin(), sorted.end(), prices[i]) - sorted.begin();
    int b = n == 0 ? 0 : int(std::size_t(n_bins) * smaller / n);
    bins[i] = std::min(b, n_bins - 1);
  }
  return bins;
}

// --- prepare ----------------------------------------------------------------

namespace {

// Dense attribute vocabulary: names sorted, ids 1..K, unknown token last.
struct AttrVocab {
  std::vector<std::string> names;  // [0] = "", back() = "<unknown>"
  std::unordered_map<std::string, int> index;
  int unknown_id = 0;

  void build(const std::set<std::string>& distinct) {
    names.push_back("");
    for (const auto& s : distinct) {
      index[s] = int(names.size());
      names.push_back(s);
    }
    unknown_id = int(names.size());
    names.push_back("<unknown>");
  }
  int id_of(const std::string& s) const {
    if (s.empty()) return unknown_id;
    auto it = index.find(s);
    return it == index.end() ? unknown_id : it->second;
  }
  int count() const { return int(names.size()) - 1; }  // excludes pad slot
};

}  // namespace

Dataset prepare_dataset(const std::vector<Interaction>& interactions,
                        const std::vector<RawItemMeta>& item_meta,
                        const std::vector<RawRelation>& relations,
                        const PrepareOptions& opts, PrepareReport* report) {
  if (opts.max_len < 1) throw ConfigError("max_len must be >= 1");

  PrepareReport rep;
  rep.interactions_before = (long long)interactions.size();
  {
    std::set<long long> us, is;
    for (const auto& r : interactions) {
      us.insert(r.user);
      is.insert(r.item);
    }
    rep.users_before = int(us.size());
    rep.items_before = int(is.size());
  }

  auto rows = five_core_filter(interactions, opts.min_core);
  if (rows.empty())
    throw EmptyAfterFilterError("no interactions survive the core filter");
  rep.interactions_after = (long long)rows.size();

  Dataset data;
  data.max_len = opts.max_len;
  data.price_bins = opts.price_bins;

  // Dense remap in raw-id order: reproducible, independent of row order.
  std::set<long long> uset, iset;
  for (const auto& r : rows) {
    uset.insert(r.user);
    iset.insert(r.item);
  }
  std::unordered_map<long long, int> umap, imap;
  for (long long u : uset) {
    umap[u] = int(data.user_ids.size());
    data.user_ids.push_back(u);
  }
  data.item_ids.push_back(0);  // padding slot
  for (long long i : iset) {
    imap[i] = int(data.item_ids.size());
    data.item_ids.push_back(i);
  }
  data.n_users = int(data.user_ids.size());
  data.n_items = int(data.item_ids.size()) - 1;
  rep.users_after = data.n_users;
  rep.items_after = data.n_items;

  // Per-user chronological sequences; stable sort keeps file order on ties.
  std::vector<std::vector<std::pair<std::int64_t, int>>> seq(data.n_users);
  for (const auto& r : rows)
    seq[umap[r.user]].emplace_back(r.ts, imap[r.item]);
  for (auto& s : seq)
    std::stable_sort(s.begin(), s.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

  // Splits need one held-out validation and test target per user.
  for (int u = 0; u < data.n_users; ++u)
    if (seq[u].size() < 3)
      throw DataError("user " + std::to_string(data.user_ids[u]) +
                      " has fewer than 3 interactions after filtering; "
                      "raise the core threshold");

  // Attributes.
  std::unordered_map<long long, const RawItemMeta*> meta_by_raw;
  for (const auto& m : item_meta) meta_by_raw[m.item] = &m;

  std::set<std::string> cat_names, brand_names;
  for (int v = 1; v <= data.n_items; ++v) {
    auto it = meta_by_raw.find(data.item_ids[v]);
    if (it == meta_by_raw.end()) continue;
    if (!it->second->category.empty()) cat_names.insert(it->second->category);
    if (!it->second->brand.empty()) brand_names.insert(it->second->brand);
  }
  AttrVocab cats, brands;
  cats.build(cat_names);
  brands.build(brand_names);
  data.n_categories = cats.count();
  data.n_brands = brands.count();
  data.category_names = cats.names;
  data.brand_names = brands.names;

  data.items.assign(data.n_items + 1, ItemMeta{});
  std::vector<double> prices;
  std::vector<int> priced_items;
  for (int v = 1; v <= data.n_items; ++v) {
    ItemMeta m;
    auto it = meta_by_raw.find(data.item_ids[v]);
    if (it != meta_by_raw.end()) {
      m.category = cats.id_of(it->second->category);
      m.brand = brands.id_of(it->second->brand);
      if (it->second->has_price) {
        m.price = it->second->price;
        m.has_price = true;
        prices.push_back(m.price);
        priced_items.push_back(v);
      }
    } else {
      m.category = cats.unknown_id;
      m.brand = brands.unknown_id;
    }
    data.items[v] = m;
  }
  if (!prices.empty()) {
    auto bins = bin_prices(prices, opts.price_bins);
    for (std::size_t k = 0; k < priced_items.size(); ++k)
      data.items[priced_items[k]].price_bin = bins[k];
  }

  // Ingested relations; rows touching items outside the catalog are skipped.
  for (const auto& r : relations) {
    auto a = imap.find(r.a);
    auto b = imap.find(r.b);
    if (a == imap.end() || b == imap.end()) {
      ++rep.relation_rows_skipped;
      continue;
    }
    data.relations.add_edge(a->second, b->second, r.rel);
  }

  // Derived relations. Unknown attribute values never create edges.
  {
    std::map<int, std::vector<int>> by_brand;
    for (int v = 1; v <= data.n_items; ++v) {
      int b = data.items[v].brand;
      if (b != brands.unknown_id) by_brand[b].push_back(v);
    }
    for (const auto& [b, members] : by_brand)
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
          data.relations.add_edge(members[i], members[j], Relation::ShareBrand);

    std::map<std::pair<int, int>, std::vector<int>> by_cat_bin;
    for (int v = 1; v <= data.n_items; ++v) {
      const auto& m = data.items[v];
      if (m.category == cats.unknown_id || m.price_bin < 0) continue;
      by_cat_bin[{m.category, m.price_bin}].push_back(v);
    }
    for (const auto& [key, members] : by_cat_bin)
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
          data.relations.add_edge(members[i], members[j], Relation::SimilarItem);
  }
  for (int r = 0; r < 4; ++r) rep.edges[r] = data.relations.count(Relation(r));

  // Leave-one-out splits; training targets are everything but the last two.
  auto make_instance = [&](int u, int k) {
    const auto& s = seq[u];
    SplitInstance inst;
    inst.user = u;
    inst.target = s[k].second;
    inst.target_ts = s[k].first;
    inst.ctx_items.assign(opts.max_len, 0);
    inst.ctx_ts.assign(opts.max_len, 0);
    int start = std::max(0, k - opts.max_len);
    inst.valid = k - start;
    std::int64_t earliest = inst.valid > 0 ? s[start].first : s[k].first;
    for (int j = 0; j < opts.max_len; ++j) inst.ctx_ts[j] = earliest;
    for (int j = 0; j < inst.valid; ++j) {
      int slot = opts.max_len - inst.valid + j;
      inst.ctx_items[slot] = s[start + j].second;
      inst.ctx_ts[slot] = s[start + j].first;
    }
    return inst;
  };

  data.history.assign(data.n_users, {});
  for (int u = 0; u < data.n_users; ++u) {
    int n = int(seq[u].size());
    for (int k = 0; k < n - 2; ++k) data.train.push_back(make_instance(u, k));
    data.val.push_back(make_instance(u, n - 2));
    data.test.push_back(make_instance(u, n - 1));
    auto& h = data.history[u];
    for (const auto& [ts, v] : seq[u]) h.push_back(v);
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
  }

  if (report) *report = rep;
  return data;
}

bool Dataset::user_interacted(int user, int item) const {
  const auto& h = history[user];
  return std::binary_search(h.begin(), h.end(), item);
}

// --- negative sampling -------------------------------------------------------

std::vector<int> sample_negatives(const Dataset& data, int user, int n,
                                  std::uint64_t seed, const std::string& split_tag) {
  if (user < 0 || user >= data.n_users) throw IndexError("sample_negatives: bad user");
  long long pool = (long long)data.n_items - (long long)data.history[user].size();
  if (pool < n)
    throw SamplingError("sample_negatives: catalog too small to draw " +
                        std::to_string(n) + " negatives (only " +
                        std::to_string(pool) + " unseen items)");

  Rng rng(derive_seed(seed, "negatives", std::uint64_t(user),
                      derive_seed(0, split_tag)));
  std::vector<int> out;
  out.reserve(n);
  std::unordered_set<int> picked;
  while (int(out.size()) < n) {
    int v = int(rng.below(std::uint64_t(data.n_items))) + 1;
    if (data.user_interacted(user, v)) continue;
    if (!picked.insert(v).second) continue;
    out.push_back(v);
  }
  return out;
}

// --- persistence ---------------------------------------------------------------

namespace {

const char* kDatasetJson = "dataset.json";
const char* kSplitsTsv = "splits.tsv";
const char* kItemMetaTsv = "item_meta.tsv";
const char* kRelationsTsv = "relation_edges.tsv";

void write_splits(std::ofstream& out, const char* tag,
                  const std::vector<SplitInstance>& split) {
  for (const auto& inst : split) {
    out << tag << '\t' << inst.user << '\t' << inst.target << '\t'
        << inst.target_ts << '\t' << inst.valid << '\t';
    for (std::size_t j = 0; j < inst.ctx_items.size(); ++j) {
      if (j) out << ',';
      out << inst.ctx_items[j];
    }
    out << '\t';
    for (std::size_t j = 0; j < inst.ctx_ts.size(); ++j) {
      if (j) out << ',';
      out << inst.ctx_ts[j];
    }
    out << '\n';
  }
}

std::vector<long long> parse_csv_longs(const std::string& s, const std::string& where) {
  std::vector<long long> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t pos = s.find(',', start);
    std::string tok = pos == std::string::npos ? s.substr(start)
                                               : s.substr(start, pos - start);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError(where + ": bad list entry '" + tok + "'");
    out.push_back(v);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& dir) {
  fs::create_directories(dir);

  json j;
  j["n_users"] = data.n_users;
  j["n_items"] = data.n_items;
  j["max_len"] = data.max_len;
  j["price_bins"] = data.price_bins;
  j["n_categories"] = data.n_categories;
  j["n_brands"] = data.n_brands;
  j["user_ids"] = data.user_ids;
  j["item_ids"] = data.item_ids;
  j["category_names"] = data.category_names;
  j["brand_names"] = data.brand_names;
  std::ofstream(fs::path(dir) / kDatasetJson) << j.dump(2) << '\n';

  {
    std::ofstream out(fs::path(dir) / kItemMetaTsv);
    out << "item\tcategory\tbrand\thas_price\tprice\tprice_bin\n";
    for (int v = 1; v <= data.n_items; ++v) {
      const auto& m = data.items[v];
      out << v << '\t' << m.category << '\t' << m.brand << '\t'
          << (m.has_price ? 1 : 0) << '\t';
      char buf[32];
      snprintf(buf, sizeof buf, "%.6g", m.price);
      out << buf << '\t' << m.price_bin << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / kRelationsTsv);
    out << "item_a\titem_b\trelation\n";
    for (int r = 0; r < 4; ++r)
      for (const auto& [a, b] : data.relations.edges(Relation(r)))
        out << a << '\t' << b << '\t' << relation_name(Relation(r)) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / kSplitsTsv);
    out << "split\tuser\ttarget\ttarget_ts\tvalid\tctx_items\tctx_ts\n";
    write_splits(out, "train", data.train);
    write_splits(out, "val", data.val);
    write_splits(out, "test", data.test);
  }
}

Dataset load_dataset(const std::string& dir) {
  auto jpath = fs::path(dir) / kDatasetJson;
  std::ifstream jin(jpath);
  if (!jin) throw DataError("cannot open " + jpath.string());
  json j = json::parse(jin, nullptr, true);

  Dataset data;
  data.n_users = j.at("n_users").get<int>();
  data.n_items = j.at("n_items").get<int>();
  data.max_len = j.at("max_len").get<int>();
  data.price_bins = j.at("price_bins").get<int>();
  data.n_categories = j.at("n_categories").get<int>();
  data.n_brands = j.at("n_brands").get<int>();
  data.user_ids = j.at("user_ids").get<std::vector<long long>>();
  data.item_ids = j.at("item_ids").get<std::vector<long long>>();
  data.category_names = j.at("category_names").get<std::vector<std::string>>();
  data.brand_names = j.at("brand_names").get<std::vector<std::string>>();

  data.items.assign(data.n_items + 1, ItemMeta{});
  {
    auto path = (fs::path(dir) / kItemMetaTsv).string();
    auto in = open_or_throw(path);
    std::string line;
    std::getline(in, line);
    long long ln = 1;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 6)
        throw ParseError(path + ":" + std::to_string(ln) + ": expected 6 fields");
      int v = parse_int_field<int>(f[0], path, ln, "item");
      if (v < 1 || v > data.n_items)
        throw ParseError(path + ":" + std::to_string(ln) + ": item out of range");
      ItemMeta m;
      m.category = parse_int_field<int>(f[1], path, ln, "category");
      m.brand = parse_int_field<int>(f[2], path, ln, "brand");
      m.has_price = parse_int_field<int>(f[3], path, ln, "has_price") != 0;
      m.price = parse_price_field(f[4], path, ln);
      m.price_bin = parse_int_field<int>(f[5], path, ln, "price_bin");
      data.items[v] = m;
    }
  }
  {
    auto path = (fs::path(dir) / kRelationsTsv).string();
    auto in = open_or_throw(path);
    std::string line;
    std::getline(in, line);
    long long ln = 1;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 3)
        throw ParseError(path + ":" + std::to_string(ln) + ": expected 3 fields");
      int a = parse_int_field<int>(f[0], path, ln, "item_a");
      int b = parse_int_field<int>(f[1], path, ln, "item_b");
      Relation r;
      if (f[2] == "also_buy") r = Relation::AlsoBuy;
      else if (f[2] == "also_view") r = Relation::AlsoView;
      else if (f[2] == "share_brand") r = Relation::ShareBrand;
      else if (f[2] == "similar_item") r = Relation::SimilarItem;
      else throw ParseError(path + ":" + std::to_string(ln) + ": unknown relation");
      data.relations.add_edge(a, b, r);
    }
  }
  {
    auto path = (fs::path(dir) / kSplitsTsv).string();
    auto in = open_or_throw(path);
    std::string line;
    std::getline(in, line);
    long long ln = 1;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 7)
        throw ParseError(path + ":" + std::to_string(ln) + ": expected 7 fields");
      SplitInstance inst;
      inst.user = parse_int_field<int>(f[1], path, ln, "user");
      inst.target = parse_int_field<int>(f[2], path, ln, "target");
      inst.target_ts = parse_int_field<std::int64_t>(f[3], path, ln, "target_ts");
      inst.valid = parse_int_field<int>(f[4], path, ln, "valid");
      auto items = parse_csv_longs(f[5], path + ":" + std::to_string(ln));
      auto ts = parse_csv_longs(f[6], path + ":" + std::to_string(ln));
      if (int(items.size()) != data.max_len || int(ts.size()) != data.max_len)
        throw ParseError(path + ":" + std::to_string(ln) + ": context width mismatch");
      inst.ctx_items.assign(items.begin(), items.end());
      inst.ctx_ts.assign(ts.begin(), ts.end());
      if (f[0] == "train") data.train.push_back(std::move(inst));
      else if (f[0] == "val") data.val.push_back(std::move(inst));
      else if (f[0] == "test") data.test.push_back(std::move(inst));
      else throw ParseError(path + ":" + std::to_string(ln) + ": unknown split");
    }
  }

  // Histories: every post-filter interaction is the target of exactly one
  // instance, so the union of targets reconstructs the interacted set.
  data.history.assign(data.n_users, {});
  auto absorb = [&](const std::vector<SplitInstance>& split) {
    for (const auto& inst : split) data.history[inst.user].push_back(inst.target);
  };
  absorb(data.train);
  absorb(data.val);
  absorb(data.test);
  for (auto& h : data.history) {
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
  }
  return data;
}

}  // namespace sdil
