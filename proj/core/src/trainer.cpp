#include "sdil/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "sdil/adam.hpp"
#include "sdil/autodiff.hpp"
#include "sdil/encoder.hpp"
#include "sdil/error.hpp"

namespace sdil {

void TrainConfig::validate() const {
  if (d < 1 || batch < 1 || epochs < 0 || patience < 1 || max_len < 1 ||
      layers < 1 || sim_heads < 1 || dim_heads < 1 || pretrain_epochs < 0)
    throw ConfigError("train config: counts must be positive");
  if (lr <= 0 || pretrain_lr <= 0) throw ConfigError("train config: bad learning rate");
  if (dropout < 0 || dropout >= 1)
    throw ConfigError("train config: dropout must be in [0, 1)");
  if (d % sim_heads != 0) throw ConfigError("train config: sim_heads must divide d");
  if (d % dim_heads != 0) throw ConfigError("train config: dim_heads must divide d");
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig mc;
  mc.d = d;
  mc.max_len = max_len;
  mc.dim_heads = dim_heads;
  mc.sim_heads = sim_heads;
  mc.layers = layers;
  mc.dropout = dropout;
  mc.kernels = kernels;
  return mc;
}

EarlyStopper::EarlyStopper(int patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("patience must be at least 1");
}

bool EarlyStopper::offer(double metric) {
  if (!seen_ || metric > best_) {
    seen_ = true;
    best_ = metric;
    streak_ = 0;
    return true;
  }
  ++streak_;
  return false;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Uniform negative for a training pair: any item the user never touched.
int draw_train_negative(const Dataset& data, int user, Rng& rng) {
  const auto& hist = data.history[user];
  if (int(hist.size()) >= data.n_items)
    throw SamplingError("user interacted with every item; no negative exists");
  for (;;) {
    int item = int(rng.below(std::uint64_t(data.n_items))) + 1;
    if (!data.user_interacted(user, item)) return item;
  }
}

std::vector<TensorPtr> tensors_of(
    const std::vector<std::pair<std::string, TensorPtr>>& named) {
  std::vector<TensorPtr> out;
  out.reserve(named.size());
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

std::vector<std::vector<double>> snapshot(const std::vector<TensorPtr>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p->data);
  return out;
}

void restore(const std::vector<TensorPtr>& params,
             const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = snap[i];
}

const std::vector<SplitInstance>& split_of(const Dataset& data, Split split) {
  switch (split) {
    case Split::Train: return data.train;
    case Split::Val: return data.val;
    case Split::Test: return data.test;
  }
  throw UsageError("unknown split");
}

const char* split_tag(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw UsageError("unknown split");
}

// Shared ranking loop; `encode` yields a per-candidate scorer per instance.
template <typename MakeScorer>
RankingReport evaluate_impl(const Dataset& data, Split split, std::uint64_t seed,
                            int n_negatives, MakeScorer&& make_scorer) {
  if (n_negatives < 1) throw UsageError("need at least one negative to rank");
  const auto& insts = split_of(data, split);
  if (insts.empty()) throw UsageError("split has no instances to evaluate");
  std::vector<int> ranks;
  ranks.reserve(insts.size());
  for (const auto& inst : insts) {
    auto negatives =
        sample_negatives(data, inst.user, n_negatives, seed, split_tag(split));
    auto score_candidate = make_scorer(inst);
    std::vector<double> scores;
    scores.reserve(negatives.size() + 1);
    scores.push_back(score_candidate(inst.target));
    for (int item : negatives) scores.push_back(score_candidate(item));
    ranks.push_back(rank_candidates(scores, 0));
  }
  return compute_metrics(ranks);
}

}  // namespace

void pretrain_item_embeddings(SdilModel& m, const Dataset& data,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.pretrain_epochs == 0 || data.train.empty()) return;
  const std::vector<TensorPtr> params = {m.dim.item_emb, m.dim.user_bias,
                                         m.dim.item_bias};
  Adam adam(AdamConfig{cfg.pretrain_lr}, params);

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  Tape tape;
  for (int epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "pre_shuffle", std::uint64_t(epoch)));
    shuffle_rng.shuffle(order);
    Rng neg_rng(derive_seed(cfg.seed, "pre_neg", std::uint64_t(epoch)));

    std::size_t start = 0;
    int batch_index = 0;
    while (start < order.size()) {
      const int bsz = int(std::min<std::size_t>(cfg.batch, order.size() - start));
      for (int b = 0; b < bsz; ++b) {
        const SplitInstance& inst = data.train[order[start + b]];
        const int neg = draw_train_negative(data, inst.user, neg_rng);
        tape.clear();

        TensorPtr e_h;  // masked mean of raw embedding rows, no attention
        const auto mask = context_mask(inst.ctx_items);
        if (inst.valid > 0) {
          auto rows = gather_rows(m.dim.item_emb, inst.ctx_items, &tape);
          e_h = masked_mean_rows(rows, mask, &tape);
        }
        auto pos_s = base_intensity(m.dim, e_h, inst.user, inst.target, &tape);
        auto neg_s = base_intensity(m.dim, e_h, inst.user, neg, &tape);
        auto loss = bpr_loss_graph(pos_s, neg_s, &tape);
        if (!std::isfinite(loss->data[0]))
          throw DivergenceError(epoch, batch_index,
                                "pretrain loss diverged (non-finite)");
        tape.backward(loss, 1.0 / bsz);
      }
      adam.step(params);
      m.zero_padding_rows();
      start += std::size_t(bsz);
      ++batch_index;
    }
  }
}

TrainResult train_model(SdilModel& m, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty()) throw DataError("no training instances");
  if (data.val.empty()) throw DataError("no validation instances");

  pretrain_item_embeddings(m, data, cfg);

  const auto named = m.named_params();
  const auto params = tensors_of(named);
  Adam adam(AdamConfig{cfg.lr}, params);
  EarlyStopper stopper(cfg.patience);

  TrainResult res;
  std::vector<std::vector<double>> best;

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  Tape tape;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", std::uint64_t(epoch)));
    shuffle_rng.shuffle(order);
    Rng neg_rng(derive_seed(cfg.seed, "trainneg", std::uint64_t(epoch)));

    double loss_sum = 0;
    std::size_t start = 0;
    int batch_index = 0;
    while (start < order.size()) {
      const int bsz = int(std::min<std::size_t>(cfg.batch, order.size() - start));
      for (int b = 0; b < bsz; ++b) {
        const int inst_id = order[start + b];
        const SplitInstance& inst = data.train[inst_id];
        const int neg = draw_train_negative(data, inst.user, neg_rng);
        CounterRng drop{derive_seed(cfg.seed, "dropout", std::uint64_t(epoch),
                                    std::uint64_t(inst_id))};
        tape.clear();
        auto loss = pair_loss(m, data, inst, neg, &drop, true, &tape);
        if (!std::isfinite(loss->data[0]))
          throw DivergenceError(epoch, batch_index,
                                "loss diverged (non-finite) at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index));
        loss_sum += loss->data[0];
        tape.backward(loss, 1.0 / bsz);
      }
      adam.step(params);
      m.zero_padding_rows();
      start += std::size_t(bsz);
      ++batch_index;
    }

    const double val = evaluate_model(m, data, Split::Val, cfg.seed).ndcg5;
    res.epochs_run = epoch;
    if (stopper.offer(val)) {
      res.best_epoch = epoch;
      res.best_val_ndcg5 = val;
      best = snapshot(params);
    }
    res.log.push_back({epoch, loss_sum / double(data.train.size()), val,
                       seconds_since(t0)});
    if (stopper.should_stop()) {
      res.stopped_early = true;
      break;
    }
  }

  if (res.best_epoch > 0) restore(params, best);
  return res;
}

RankingReport evaluate_model(const SdilModel& m, const Dataset& data, Split split,
                             std::uint64_t seed, int n_negatives) {
  return evaluate_impl(data, split, seed, n_negatives, [&](const SplitInstance& inst) {
    auto st = encode_instance(m, data, inst.ctx_items, nullptr, false, nullptr);
    return [&m, &data, st, &inst](int candidate) {
      return score_value(m, data, st, inst, candidate);
    };
  });
}

RankingReport evaluate_with_scorer(const Dataset& data, Split split,
                                   std::uint64_t seed, const ScoreFn& scorer,
                                   int n_negatives) {
  return evaluate_impl(data, split, seed, n_negatives, [&](const SplitInstance& inst) {
    return [&scorer, &inst](int candidate) { return scorer(inst, candidate); };
  });
}

std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& cfg) {
  std::vector<AblationRow> rows;
  for (Variant v : all_variants()) {
    TrainConfig c = cfg;
    c.variant = v;
    SdilModel m = make_model(data, c.model_config(), v, c.seed);
    TrainResult r = train_model(m, data, c);
    AblationRow row;
    row.variant = v;
    row.test = evaluate_model(m, data, Split::Test, c.seed);
    row.best_val_ndcg5 = r.best_val_ndcg5;
    row.epochs_run = r.epochs_run;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sdil
