#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sdil/data.hpp"
#include "sdil/metrics.hpp"
#include "sdil/model.hpp"

namespace sdil {

struct TrainConfig {
  int d = 64;
  int batch = 64;
  int epochs = 150;
  int patience = 10;
  double lr = 1e-4;
  double pretrain_lr = 5e-4;
  double dropout = 0.1;
  int pretrain_epochs = 10;
  int sim_heads = 4;
  int dim_heads = 1;
  int layers = 2;
  int max_len = 20;
  std::uint64_t seed = 42;
  Variant variant = Variant::SDIL;
  KernelInit kernels;

  void validate() const;
  ModelConfig model_config() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double loss = 0;
  double val_ndcg5 = 0;
  double elapsed_sec = 0;  // wall time, excluded from determinism contracts
};

// Stops after `patience` consecutive epochs without a strict improvement
// over the best validation metric seen so far.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);

  bool offer(double metric);  // true when metric improves on the best
  bool should_stop() const { return streak_ >= patience_; }
  double best() const { return best_; }
  int streak() const { return streak_; }

 private:
  int patience_;
  int streak_ = 0;
  bool seen_ = false;
  double best_ = 0;
};

enum class Split { Train, Val, Test };

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_val_ndcg5 = 0;
  int epochs_run = 0;
  bool stopped_early = false;
};

// Warms E, user bias and item bias with BPR on the attention-free base
// intensity (interest = masked mean of raw item embeddings).
void pretrain_item_embeddings(SdilModel& m, const Dataset& data,
                              const TrainConfig& cfg);

// Full loop: optional pretrain, shuffled BPR epochs with Adam, per-epoch
// validation NDCG@5, early stopping, best-epoch parameter restore. The
// model is left holding the best parameters.
TrainResult train_model(SdilModel& m, const Dataset& data, const TrainConfig& cfg);

// Leave-one-out protocol: per instance, the target plus n_negatives
// sampled negatives are scored and ranked; negatives depend only on
// (seed, user, split), so fixed seeds compare models on identical
// candidate lists.
RankingReport evaluate_model(const SdilModel& m, const Dataset& data, Split split,
                             std::uint64_t seed, int n_negatives = 99);

// Same protocol with an arbitrary scorer; lets tests drive the plumbing
// with oracles.
using ScoreFn = std::function<double(const SplitInstance&, int)>;
RankingReport evaluate_with_scorer(const Dataset& data, Split split,
                                   std::uint64_t seed, const ScoreFn& scorer,
                                   int n_negatives = 99);

struct AblationRow {
  Variant variant = Variant::SDIL;
  RankingReport test;
  double best_val_ndcg5 = 0;
  int epochs_run = 0;
};

// Trains every variant under the same seed and config, evaluates on test.
std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& cfg);

}  // namespace sdil
