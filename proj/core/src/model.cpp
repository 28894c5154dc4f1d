#include "sdil/model.hpp"

#include <cmath>

#include "sdil/error.hpp"

namespace sdil {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::SDIL: return "sdil";
    case Variant::SDIL_1: return "sdil-1";
    case Variant::SDIL_2: return "sdil-2";
    case Variant::SDIL_3: return "sdil-3";
    case Variant::SDIL_TPE: return "sdil-tpe";
  }
  throw UsageError("unknown variant");
}

Variant parse_variant(const std::string& name) {
  for (Variant v : all_variants())
    if (variant_name(v) == name) return v;
  throw UsageError("unknown variant '" + name +
                   "' (expected sdil, sdil-1, sdil-2, sdil-3 or sdil-tpe)");
}

IntensityMode variant_mode(Variant v) {
  switch (v) {
    case Variant::SDIL:
    case Variant::SDIL_2:
      return IntensityMode::TPNE;
    case Variant::SDIL_TPE:
      return IntensityMode::TPE;
    case Variant::SDIL_1:
    case Variant::SDIL_3:
      return IntensityMode::NONE;
  }
  throw UsageError("unknown variant");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> order = {Variant::SDIL, Variant::SDIL_1,
                                             Variant::SDIL_2, Variant::SDIL_3,
                                             Variant::SDIL_TPE};
  return order;
}

GateParams make_gate_params(int d, Rng& rng) {
  GateParams g;
  g.w1 = param_xavier({d, d}, rng);
  g.w2 = param_xavier({d, d}, rng);
  g.b = param({1, d});
  return g;
}

TensorPtr gate_fuse(const GateParams& gp, const TensorPtr& e_s, const TensorPtr& e_h,
                    Tape* tape) {
  if (!e_s || !e_h) throw UsageError("gate_fuse needs both interest vectors");
  require_same_shape(*e_s, *e_h, "gate_fuse");
  auto pre = add(add(matmul(e_s, gp.w1, tape), matmul(e_h, gp.w2, tape), tape),
                 gp.b, tape);
  auto g = sigmoid(pre, tape);
  auto ones = tensor({e_s->rows(), e_s->cols()}, 1.0);
  return add(mul(g, e_s, tape), mul(sub(ones, g, tape), e_h, tape), tape);
}

void collect_gate_params(const GateParams& g,
                         std::vector<std::pair<std::string, TensorPtr>>& out) {
  out.emplace_back("gate.w1", g.w1);
  out.emplace_back("gate.w2", g.w2);
  out.emplace_back("gate.b", g.b);
}

double bpr_loss(double pos_score, double neg_score) {
  if (!std::isfinite(pos_score) || !std::isfinite(neg_score))
    throw NumericError("bpr_loss: non-finite score");
  return softplus_value(neg_score - pos_score);
}

TensorPtr bpr_loss_graph(const TensorPtr& pos_score, const TensorPtr& neg_score,
                         Tape* tape) {
  return softplus(sub(neg_score, pos_score, tape), tape);
}

DimConfig SdilModel::dim_config() const {
  return DimConfig{cfg.d, cfg.max_len, cfg.dim_heads, cfg.layers, cfg.dropout};
}

SimConfig SdilModel::sim_config() const {
  return SimConfig{cfg.d, cfg.sim_heads, cfg.layers, cfg.dropout};
}

std::vector<std::pair<std::string, TensorPtr>> SdilModel::named_params() const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  collect_dim_params(dim, out);
  collect_sim_params(sim, out);
  collect_kernel_params(kernels, out);
  collect_gate_params(gate, out);
  return out;
}

void SdilModel::zero_padding_rows() {
  for (const TensorPtr& t :
       {dim.item_emb, dim.item_bias, sim.cat_emb, sim.brand_emb, sim.price_emb})
    for (int j = 0; j < t->cols(); ++j) t->at(0, j) = 0.0;
}

SdilModel make_model(const Dataset& data, const ModelConfig& cfg, Variant variant,
                     std::uint64_t seed) {
  if (data.n_users < 1 || data.n_items < 1)
    throw ConfigError("make_model: dataset has no users or items");
  if (cfg.max_len != data.max_len)
    throw ConfigError("make_model: config max_len differs from prepared data");
  SdilModel m;
  m.cfg = cfg;
  m.variant = variant;
  m.n_users = data.n_users;
  m.n_items = data.n_items;
  // One stream, fixed allocation order: every variant consumes identical
  // randomness, so ablations start from the same tables.
  Rng rng(derive_seed(seed, "init"));
  m.dim = make_dim_params(data.n_users, data.n_items, m.dim_config(), rng);
  m.sim = make_sim_params(data.n_categories, data.n_brands, data.price_bins,
                          m.sim_config(), rng);
  m.kernels = make_kernel_params(data.n_items, cfg.kernels);
  m.gate = make_gate_params(cfg.d, rng);
  return m;
}

InstanceState encode_instance(const SdilModel& m, const Dataset& data,
                              const std::vector<int>& ctx_items, CounterRng* rng,
                              bool training, Tape* tape) {
  InstanceState st;
  bool any_valid = false;
  for (int id : ctx_items) any_valid = any_valid || id != 0;
  if (!any_valid) return st;
  st.e_h = dim_encode(m.dim, m.dim_config(), ctx_items, rng, training, tape);
  st.e_s = sim_encode(m.sim, m.sim_config(), data, ctx_items, rng, training, tape);
  st.e_f = gate_fuse(m.gate, st.e_s, st.e_h, tape);
  return st;
}

TensorPtr score_graph(const SdilModel& m, const Dataset& data,
                      const InstanceState& st, const SplitInstance& inst,
                      int candidate, Tape* tape) {
  if (m.variant == Variant::SDIL_1)
    return base_intensity(m.dim, st.e_s, inst.user, candidate, tape);

  auto s = base_intensity(m.dim, st.e_h, inst.user, candidate, tape);
  const TensorPtr& interest = m.variant == Variant::SDIL_2 ? st.e_h : st.e_f;
  if (interest) {
    auto ev = gather_rows(m.dim.item_emb, {candidate}, tape);
    s = add(dot(interest, ev, tape), s, tape);
  }
  const IntensityMode mode = variant_mode(m.variant);
  if (mode != IntensityMode::NONE) {
    auto terms = excitation_terms(m.kernels, data.relations, inst.ctx_items,
                                  inst.ctx_ts, candidate, inst.target_ts, tape);
    if (terms.pos) s = add(s, terms.pos, tape);
    if (mode == IntensityMode::TPNE && terms.neg) s = sub(s, terms.neg, tape);
  }
  return s;
}

namespace {

double dot_row(const TensorPtr& vec, const Tensor& table, int row) {
  const int d = vec->cols();
  const double* a = vec->data.data();
  const double* b = table.data.data() + std::size_t(row) * table.cols();
  double acc = 0.0;
  for (int j = 0; j < d; ++j) acc += a[j] * b[j];
  return acc;
}

}  // namespace

double score_value(const SdilModel& m, const Dataset& data, const InstanceState& st,
                   const SplitInstance& inst, int candidate) {
  if (candidate < 1 || candidate >= m.dim.item_emb->rows())
    throw IndexError("score_value: candidate out of range");
  if (inst.user < 0 || inst.user >= m.dim.user_bias->rows())
    throw IndexError("score_value: user out of range");
  const double ub = m.dim.user_bias->at(inst.user, 0);
  const double ib = m.dim.item_bias->at(candidate, 0);

  if (m.variant == Variant::SDIL_1)
    return (st.e_s ? dot_row(st.e_s, *m.dim.item_emb, candidate) : 0.0) + ub + ib;

  const double lambda0 =
      (st.e_h ? dot_row(st.e_h, *m.dim.item_emb, candidate) : 0.0) + ub + ib;
  const TensorPtr& interest = m.variant == Variant::SDIL_2 ? st.e_h : st.e_f;
  const double affinity =
      interest ? dot_row(interest, *m.dim.item_emb, candidate) : 0.0;

  const IntensityMode mode = variant_mode(m.variant);
  double pos = 0.0, neg = 0.0;
  if (mode != IntensityMode::NONE)
    pos = positive_excitation(m.kernels, data.relations, inst.ctx_items,
                              inst.ctx_ts, candidate, inst.target_ts);
  if (mode == IntensityMode::TPNE)
    neg = negative_excitation(m.kernels, data.relations, inst.ctx_items,
                              inst.ctx_ts, candidate, inst.target_ts);
  return affinity + total_intensity(lambda0, pos, neg, mode);
}

double score(const SdilModel& m, const Dataset& data, const SplitInstance& inst,
             int candidate) {
  auto st = encode_instance(m, data, inst.ctx_items, nullptr, false, nullptr);
  return score_value(m, data, st, inst, candidate);
}

TensorPtr pair_loss(const SdilModel& m, const Dataset& data,
                    const SplitInstance& inst, int neg_item, CounterRng* rng,
                    bool training, Tape* tape) {
  auto st = encode_instance(m, data, inst.ctx_items, rng, training, tape);
  auto pos = score_graph(m, data, st, inst, inst.target, tape);
  auto neg = score_graph(m, data, st, inst, neg_item, tape);
  return bpr_loss_graph(pos, neg, tape);
}

}  // namespace sdil
