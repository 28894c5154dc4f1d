#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "sdil/error.hpp"
#include "sdil/gradcheck.hpp"
#include "sdil/model.hpp"

using namespace sdil;

namespace {

constexpr std::int64_t kDay = 86400;

double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double ref_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double ref_pdf(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
}

// Catalog of 8 items over 2 categories/brands with 3 price bins, plus a
// small relation graph mixing complement and substitute edges.
Dataset model_fixture(bool with_relations) {
  Dataset d;
  d.n_users = 3;
  d.n_items = 8;
  d.n_categories = 2;
  d.n_brands = 2;
  d.price_bins = 3;
  d.max_len = 5;
  d.items.resize(9);
  for (int v = 1; v <= 8; ++v) {
    d.items[v].category = 1 + (v % 2);
    d.items[v].brand = 1 + ((v / 2) % 2);
    d.items[v].price_bin = v % 3;
    d.items[v].has_price = true;
  }
  if (with_relations) {
    d.relations.add_edge(1, 2, Relation::AlsoBuy);
    d.relations.add_edge(2, 3, Relation::AlsoView);
    d.relations.add_edge(3, 4, Relation::ShareBrand);
    d.relations.add_edge(4, 5, Relation::SimilarItem);
    d.relations.add_edge(1, 5, Relation::AlsoView);
    d.relations.add_edge(6, 7, Relation::AlsoBuy);
    d.relations.add_edge(2, 7, Relation::SimilarItem);
  }
  return d;
}

SplitInstance instance_of(int user, std::vector<int> ctx, int target) {
  SplitInstance inst;
  inst.user = user;
  inst.target = target;
  inst.target_ts = 400 * kDay;
  inst.ctx_items = std::move(ctx);
  inst.valid = 0;
  for (int v : inst.ctx_items) inst.valid += v != 0 ? 1 : 0;
  inst.ctx_ts.assign(inst.ctx_items.size(), inst.target_ts);
  std::int64_t t = inst.target_ts;
  for (int i = int(inst.ctx_items.size()) - 1; i >= 0; --i) {
    t -= (3 + i) * kDay / 2;
    if (inst.ctx_items[i] != 0) inst.ctx_ts[i] = t;
  }
  for (std::size_t i = 0; i < inst.ctx_items.size(); ++i)
    if (inst.ctx_items[i] == 0) inst.ctx_ts[i] = inst.ctx_ts.back();
  return inst;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d = 4;
  cfg.max_len = 5;
  cfg.dim_heads = 1;
  cfg.sim_heads = 2;
  cfg.layers = 1;
  cfg.dropout = 0.0;
  return cfg;
}

std::vector<double> vec_of(const TensorPtr& t) {
  return t ? t->data : std::vector<double>{};
}

// Scalar-loop score reference over already-encoded interest vectors.
double ref_score(const SdilModel& m, const Dataset& data, const InstanceState& st,
                 const SplitInstance& inst, int candidate) {
  auto dot_item = [&](const TensorPtr& vec) {
    if (!vec) return 0.0;
    double acc = 0.0;
    for (int j = 0; j < m.cfg.d; ++j) acc += vec->at(0, j) * m.dim.item_emb->at(candidate, j);
    return acc;
  };
  double ub = m.dim.user_bias->at(inst.user, 0);
  double ib = m.dim.item_bias->at(candidate, 0);
  if (m.variant == Variant::SDIL_1) return dot_item(st.e_s) + ub + ib;

  // Gate recomputed with plain loops rather than trusting st.e_f.
  TensorPtr fused;
  if (st.e_h) {
    fused = tensor({1, m.cfg.d});
    for (int j = 0; j < m.cfg.d; ++j) {
      double pre = m.gate.b->at(0, j);
      for (int i = 0; i < m.cfg.d; ++i)
        pre += st.e_s->at(0, i) * m.gate.w1->at(i, j) +
               st.e_h->at(0, i) * m.gate.w2->at(i, j);
      double g = ref_sigmoid(pre);
      fused->at(0, j) = g * st.e_s->at(0, j) + (1.0 - g) * st.e_h->at(0, j);
    }
  }
  double affinity = m.variant == Variant::SDIL_2 ? dot_item(st.e_h) : dot_item(fused);
  double lambda0 = dot_item(st.e_h) + ub + ib;

  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < inst.ctx_items.size(); ++i) {
    int v = inst.ctx_items[i];
    if (v == 0) continue;
    double dt = double(inst.target_ts - inst.ctx_ts[i]) / kDay;
    if (data.relations.complementary(v, candidate))
      pos += ref_pdf(dt, 0.0, ref_softplus(m.kernels.rho1->at(v, 0)));
    if (data.relations.substitute(v, candidate)) {
      pos += ref_pdf(dt, ref_softplus(m.kernels.m2->at(v, 0)),
                     ref_softplus(m.kernels.rho2->at(v, 0)));
      neg += ref_pdf(dt, 0.0, ref_softplus(m.kernels.rho3->at(v, 0)));
    }
  }
  switch (m.variant) {
    case Variant::SDIL: return affinity + lambda0 + pos - neg;
    case Variant::SDIL_TPE: return affinity + lambda0 + pos;
    case Variant::SDIL_3: return affinity + lambda0;
    case Variant::SDIL_2: return affinity + lambda0 + pos - neg;
    default: throw UsageError("unreachable");
  }
}

}  // namespace

TEST_CASE("variant names and modes") {
  CHECK(all_variants().size() == 5);
  for (Variant v : all_variants()) CHECK(parse_variant(variant_name(v)) == v);
  CHECK(variant_name(Variant::SDIL) == "sdil");
  CHECK(variant_name(Variant::SDIL_TPE) == "sdil-tpe");
  CHECK(variant_mode(Variant::SDIL) == IntensityMode::TPNE);
  CHECK(variant_mode(Variant::SDIL_2) == IntensityMode::TPNE);
  CHECK(variant_mode(Variant::SDIL_TPE) == IntensityMode::TPE);
  CHECK(variant_mode(Variant::SDIL_1) == IntensityMode::NONE);
  CHECK(variant_mode(Variant::SDIL_3) == IntensityMode::NONE);
  CHECK_THROWS_AS(parse_variant("sdil-4"), UsageError);
}

TEST_CASE("gate fusion") {
  Rng rng(3);

  SUBCASE("zero parameters average the two interests") {
    GateParams g;
    g.w1 = param({3, 3});
    g.w2 = param({3, 3});
    g.b = param({1, 3});
    auto e_s = tensor({1, 3}, std::vector<double>{1.0, -2.0, 0.5});
    auto e_h = tensor({1, 3}, std::vector<double>{3.0, 4.0, -1.5});
    auto e_f = gate_fuse(g, e_s, e_h, nullptr);
    for (int j = 0; j < 3; ++j)
      CHECK(e_f->at(0, j) == (e_s->at(0, j) + e_h->at(0, j)) / 2.0);
  }
  SUBCASE("a saturated gate passes the static interest through") {
    GateParams g;
    g.w1 = param({2, 2});
    g.w2 = param({2, 2});
    g.b = param({1, 2}, 50.0);
    auto e_s = tensor({1, 2}, std::vector<double>{0.7, -0.4});
    auto e_h = tensor({1, 2}, std::vector<double>{-5.0, 9.0});
    auto e_f = gate_fuse(g, e_s, e_h, nullptr);
    for (int j = 0; j < 2; ++j)
      CHECK(e_f->at(0, j) == doctest::Approx(e_s->at(0, j)).epsilon(1e-10));
  }
  SUBCASE("random gates match the scalar loop and stay convex") {
    for (int rep = 0; rep < 150; ++rep) {
      int d = 1 + int(rng.below(8));
      auto g = make_gate_params(d, rng);
      for (double& v : g.b->data) v = rng.normal(0, 1);
      auto e_s = tensor({1, d});
      auto e_h = tensor({1, d});
      for (int j = 0; j < d; ++j) {
        e_s->at(0, j) = rng.normal(0, 2);
        e_h->at(0, j) = rng.normal(0, 2);
      }
      auto e_f = gate_fuse(g, e_s, e_h, nullptr);
      for (int j = 0; j < d; ++j) {
        double pre = g.b->at(0, j);
        for (int i = 0; i < d; ++i)
          pre += e_s->at(0, i) * g.w1->at(i, j) + e_h->at(0, i) * g.w2->at(i, j);
        double gate = ref_sigmoid(pre);
        double want = gate * e_s->at(0, j) + (1 - gate) * e_h->at(0, j);
        CHECK(e_f->at(0, j) == doctest::Approx(want).epsilon(1e-12));
        double lo = std::min(e_s->at(0, j), e_h->at(0, j));
        double hi = std::max(e_s->at(0, j), e_h->at(0, j));
        CHECK(e_f->at(0, j) >= lo - 1e-12);
        CHECK(e_f->at(0, j) <= hi + 1e-12);
      }
    }
  }
  SUBCASE("shape mismatches are rejected") {
    auto g = make_gate_params(2, rng);
    CHECK_THROWS_AS(gate_fuse(g, tensor({1, 2}), tensor({1, 3}), nullptr), ShapeError);
    CHECK_THROWS_AS(gate_fuse(g, nullptr, tensor({1, 2}), nullptr), UsageError);
  }
}

TEST_CASE("pairwise ranking loss") {
  SUBCASE("closed forms") {
    CHECK(bpr_loss(1.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bpr_loss(10.0, 0.0) == doctest::Approx(4.539889921686465e-05).epsilon(1e-10));
    CHECK(bpr_loss(0.0, 10.0) == doctest::Approx(10.000045398899218).epsilon(1e-12));
  }
  SUBCASE("strictly decreasing in the margin, always positive") {
    Rng rng(7);
    for (int rep = 0; rep < 100; ++rep) {
      double m1 = rng.normal(0, 5), gap = 0.01 + rng.next_double();
      double lo = bpr_loss(m1 + gap, 0.0), hi = bpr_loss(m1, 0.0);
      CHECK(lo < hi);
      CHECK(lo > 0.0);
    }
  }
  SUBCASE("graph form matches and differentiates") {
    auto p = param({1, 1}, 0.8);
    auto n = param({1, 1}, 0.3);
    Tape tape;
    auto loss = bpr_loss_graph(p, n, &tape);
    CHECK(loss->at(0, 0) == doctest::Approx(bpr_loss(0.8, 0.3)).epsilon(1e-15));
    tape.backward(loss);
    // d/dm softplus(-m) = -sigmoid(-m) for the margin m = pos - neg.
    double want = ref_sigmoid(-(0.8 - 0.3));
    CHECK(p->grad[0] == doctest::Approx(-want).epsilon(1e-12));
    CHECK(n->grad[0] == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("non-finite scores are rejected") {
    CHECK_THROWS_AS(bpr_loss(std::nan(""), 0.0), NumericError);
    CHECK_THROWS_AS(bpr_loss(0.0, std::numeric_limits<double>::infinity()),
                    NumericError);
  }
}

TEST_CASE("model construction") {
  Dataset data = model_fixture(true);
  ModelConfig cfg = small_config();

  SUBCASE("same seed reproduces every table; variants share initialization") {
    auto a = make_model(data, cfg, Variant::SDIL, 42);
    auto b = make_model(data, cfg, Variant::SDIL, 42);
    auto c = make_model(data, cfg, Variant::SDIL_1, 42);
    auto pa = a.named_params(), pb = b.named_params(), pc = c.named_params();
    REQUIRE(pa.size() == pb.size());
    REQUIRE(pa.size() == pc.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].first == pb[i].first);
      CHECK(pa[i].second->data == pb[i].second->data);
      CHECK(pa[i].second->data == pc[i].second->data);
    }
    auto other = make_model(data, cfg, Variant::SDIL, 43);
    CHECK(other.dim.item_emb->data != a.dim.item_emb->data);
  }
  SUBCASE("parameter listing covers every group once") {
    auto m = make_model(data, cfg, Variant::SDIL, 1);
    auto named = m.named_params();
    std::set<std::string> names;
    for (auto& [n, t] : named) CHECK(names.insert(n).second);
    for (const char* want :
         {"dim.item_emb", "dim.pos_emb", "dim.user_bias", "dim.item_bias",
          "dim.block0.wq", "sim.cat_emb", "sim.brand_emb", "sim.price_emb",
          "sim.block0.wo", "kernel.rho1", "kernel.rho2", "kernel.rho3",
          "kernel.m2", "gate.w1", "gate.w2", "gate.b"})
      CHECK(names.count(want));
  }
  SUBCASE("padding rows re-pin to zero") {
    auto m = make_model(data, cfg, Variant::SDIL, 1);
    for (const TensorPtr& t : {m.dim.item_emb, m.dim.item_bias, m.sim.cat_emb,
                               m.sim.brand_emb, m.sim.price_emb})
      for (int j = 0; j < t->cols(); ++j) {
        CHECK(t->at(0, j) == 0.0);
        t->at(0, j) = 9.9;
      }
    m.zero_padding_rows();
    for (const TensorPtr& t : {m.dim.item_emb, m.dim.item_bias, m.sim.cat_emb,
                               m.sim.brand_emb, m.sim.price_emb})
      for (int j = 0; j < t->cols(); ++j) CHECK(t->at(0, j) == 0.0);
  }
  SUBCASE("config must match the prepared data") {
    ModelConfig bad = cfg;
    bad.max_len = 7;
    CHECK_THROWS_AS(make_model(data, bad, Variant::SDIL, 1), ConfigError);
    Dataset empty;
    CHECK_THROWS_AS(make_model(empty, cfg, Variant::SDIL, 1), ConfigError);
  }
}

TEST_CASE("scores compose the module oracles") {
  Dataset data = model_fixture(true);
  ModelConfig cfg = small_config();
  std::vector<SplitInstance> insts = {
      instance_of(0, {0, 0, 1, 4, 2}, 5),
      instance_of(1, {0, 0, 0, 0, 3}, 2),
      instance_of(2, {6, 7, 1, 2, 3}, 4),
      instance_of(0, {0, 0, 0, 0, 0}, 1),  // empty context
  };
  for (Variant v : all_variants()) {
    auto m = make_model(data, cfg, v, 11);
    // Give the biases and kernels non-default values so every term counts.
    Rng rng(13);
    for (double& x : m.dim.user_bias->data) x = rng.normal(0, 0.3);
    for (double& x : m.dim.item_bias->data) x = rng.normal(0, 0.3);
    m.dim.item_bias->data[0] = 0.0;
    for (auto& t : {m.kernels.rho1, m.kernels.rho2, m.kernels.rho3, m.kernels.m2})
      for (double& x : t->data) x += rng.normal(0, 0.5);

    for (const auto& inst : insts) {
      auto st = encode_instance(m, data, inst.ctx_items, nullptr, false, nullptr);
      CHECK(st.empty() == (inst.valid == 0));
      for (int cand = 1; cand <= data.n_items; ++cand) {
        double got = score_value(m, data, st, inst, cand);
        double want = ref_score(m, data, st, inst, cand);
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
        auto node = score_graph(m, data, st, inst, cand, nullptr);
        CHECK(node->at(0, 0) == doctest::Approx(got).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("an empty context degenerates to the bias terms") {
  Dataset data = model_fixture(true);
  auto m = make_model(data, small_config(), Variant::SDIL, 19);
  Rng rng(23);
  for (double& x : m.dim.user_bias->data) x = rng.normal(0, 0.5);
  for (double& x : m.dim.item_bias->data) x = rng.normal(0, 0.5);
  m.dim.item_bias->data[0] = 0.0;
  auto inst = instance_of(1, {0, 0, 0, 0, 0}, 3);
  auto st = encode_instance(m, data, inst.ctx_items, nullptr, false, nullptr);
  REQUIRE(st.empty());
  for (int cand = 1; cand <= data.n_items; ++cand) {
    double want = m.dim.user_bias->at(1, 0) + m.dim.item_bias->at(cand, 0);
    CHECK(score_value(m, data, st, inst, cand) == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("all-zero parameters score zero") {
  Dataset data = model_fixture(false);
  auto m = make_model(data, small_config(), Variant::SDIL, 29);
  for (auto& [name, t] : m.named_params())
    for (double& v : t->data) v = 0.0;
  auto inst = instance_of(0, {0, 0, 1, 4, 2}, 5);
  auto st = encode_instance(m, data, inst.ctx_items, nullptr, false, nullptr);
  for (int cand = 1; cand <= data.n_items; ++cand)
    CHECK(score_value(m, data, st, inst, cand) == 0.0);
}

TEST_CASE("without relations the excitation variants coincide bit for bit") {
  Dataset data = model_fixture(false);
  ModelConfig cfg = small_config();
  auto sdil = make_model(data, cfg, Variant::SDIL, 31);
  auto tpe = make_model(data, cfg, Variant::SDIL_TPE, 31);
  auto none = make_model(data, cfg, Variant::SDIL_3, 31);

  std::vector<SplitInstance> insts = {
      instance_of(0, {0, 0, 1, 4, 2}, 5),
      instance_of(1, {0, 3, 6, 7, 8}, 2),
      instance_of(2, {0, 0, 0, 0, 5}, 1),
  };
  for (const auto& inst : insts) {
    auto st = encode_instance(sdil, data, inst.ctx_items, nullptr, false, nullptr);
    auto st2 = encode_instance(tpe, data, inst.ctx_items, nullptr, false, nullptr);
    auto st3 = encode_instance(none, data, inst.ctx_items, nullptr, false, nullptr);
    CHECK(vec_of(st.e_f) == vec_of(st2.e_f));
    CHECK(vec_of(st.e_f) == vec_of(st3.e_f));
    for (int cand = 1; cand <= data.n_items; ++cand) {
      double a = score_value(sdil, data, st, inst, cand);
      double b = score_value(tpe, data, st2, inst, cand);
      double c = score_value(none, data, st3, inst, cand);
      CHECK(a == b);
      CHECK(a == c);
    }
  }
}

TEST_CASE("emptying the relation graph turns the full model into its ablation") {
  Dataset with = model_fixture(true);
  Dataset without = with;
  without.relations = RelationGraph{};

  ModelConfig cfg = small_config();
  auto sdil = make_model(without, cfg, Variant::SDIL, 37);
  auto none = make_model(with, cfg, Variant::SDIL_3, 37);

  auto inst = instance_of(2, {6, 7, 1, 2, 3}, 4);
  auto st_a = encode_instance(sdil, without, inst.ctx_items, nullptr, false, nullptr);
  auto st_b = encode_instance(none, with, inst.ctx_items, nullptr, false, nullptr);
  for (int cand = 1; cand <= with.n_items; ++cand)
    CHECK(score_value(sdil, without, st_a, inst, cand) ==
          score_value(none, with, st_b, inst, cand));

  // Sanity: on the intact graph the full model actually differs.
  auto sdil_rel = make_model(with, cfg, Variant::SDIL, 37);
  auto st_c = encode_instance(sdil_rel, with, inst.ctx_items, nullptr, false, nullptr);
  bool any_diff = false;
  for (int cand = 1; cand <= with.n_items; ++cand)
    any_diff = any_diff || score_value(sdil_rel, with, st_c, inst, cand) !=
                               score_value(none, with, st_b, inst, cand);
  CHECK(any_diff);
}

TEST_CASE("loss gradients survive finite differences end to end") {
  Dataset data = model_fixture(true);
  auto m = make_model(data, small_config(), Variant::SDIL, 41);
  // Context 4 is substitute-related to target 5 and the negative sits on a
  // complement edge, so both kernel families reach the loss.
  auto inst = instance_of(1, {0, 0, 1, 4, 2}, 5);
  LossFn loss = [&](Tape* tape) {
    return pair_loss(m, data, inst, 7, nullptr, false, tape);
  };
  Rng pick(43);
  auto report = grad_check(loss, m.named_params(), 3, 1e-5, pick);
  CHECK(report.max_rel_err < 1e-4);
  // The kernel groups must actually have been exercised.
  bool kernel_seen = false;
  for (const auto& e : report.per_param)
    kernel_seen = kernel_seen || (e.name.rfind("kernel.", 0) == 0 && e.coords_checked > 0);
  CHECK(kernel_seen);
}

TEST_CASE("pair loss equals the loss of the two scores") {
  Dataset data = model_fixture(true);
  for (Variant v : all_variants()) {
    auto m = make_model(data, small_config(), v, 47);
    auto inst = instance_of(0, {0, 6, 7, 1, 2}, 3);
    auto node = pair_loss(m, data, inst, 8, nullptr, false, nullptr);
    auto st = encode_instance(m, data, inst.ctx_items, nullptr, false, nullptr);
    double want = bpr_loss(score_value(m, data, st, inst, inst.target),
                           score_value(m, data, st, inst, 8));
    CHECK(node->at(0, 0) == doctest::Approx(want).epsilon(1e-12));
  }
}
