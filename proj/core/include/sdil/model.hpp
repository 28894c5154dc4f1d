#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdil/data.hpp"
#include "sdil/dim.hpp"
#include "sdil/excitation.hpp"
#include "sdil/sim.hpp"

namespace sdil {

// Full model plus its ablations. The ablations keep every parameter table
// allocated (identical init RNG consumption) and differ only in which
// terms enter the score.
enum class Variant { SDIL, SDIL_1, SDIL_2, SDIL_3, SDIL_TPE };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
IntensityMode variant_mode(Variant v);
const std::vector<Variant>& all_variants();

// g = sigmoid(e_s W1 + e_h W2 + b); e_f = g (.) e_s + (1-g) (.) e_h.
struct GateParams {
  TensorPtr w1, w2;  // d x d
  TensorPtr b;       // {1, d}
};

GateParams make_gate_params(int d, Rng& rng);
TensorPtr gate_fuse(const GateParams& g, const TensorPtr& e_s, const TensorPtr& e_h,
                    Tape* tape);
void collect_gate_params(const GateParams& g,
                         std::vector<std::pair<std::string, TensorPtr>>& out);

// Pairwise ranking loss, stabilized: -log sigmoid(m) == softplus(-m).
double bpr_loss(double pos_score, double neg_score);
TensorPtr bpr_loss_graph(const TensorPtr& pos_score, const TensorPtr& neg_score,
                         Tape* tape);

struct ModelConfig {
  int d = 64;
  int max_len = 20;
  int dim_heads = 1;
  int sim_heads = 4;
  int layers = 2;
  double dropout = 0.1;
  KernelInit kernels;
};

struct SdilModel {
  ModelConfig cfg;
  Variant variant = Variant::SDIL;
  int n_users = 0;
  int n_items = 0;
  DimParams dim;
  SimParams sim;
  KernelParams kernels;
  GateParams gate;

  DimConfig dim_config() const;
  SimConfig sim_config() const;

  // Stable name -> tensor listing; the order defines optimizer slot and
  // checkpoint layout.
  std::vector<std::pair<std::string, TensorPtr>> named_params() const;

  // Re-pins the padding rows (item/attribute id 0) to zero. Their
  // gradients are structurally zero, so this is an invariant guard, not
  // a correction.
  void zero_padding_rows();
};

SdilModel make_model(const Dataset& data, const ModelConfig& cfg, Variant variant,
                     std::uint64_t seed);

// Pooled interest vectors for one context. All three are null when the
// context has no valid slot (first leave-one-out training target); the
// score then degenerates to the bias terms.
struct InstanceState {
  TensorPtr e_h;  // dynamic interest {1, d}
  TensorPtr e_s;  // static interest {1, d}
  TensorPtr e_f;  // gate-fused {1, d}

  bool empty() const { return e_h == nullptr; }
};

InstanceState encode_instance(const SdilModel& m, const Dataset& data,
                              const std::vector<int>& ctx_items, CounterRng* rng,
                              bool training, Tape* tape);

// Variant-dependent preference score as a {1,1} graph node.
TensorPtr score_graph(const SdilModel& m, const Dataset& data,
                      const InstanceState& st, const SplitInstance& inst,
                      int candidate, Tape* tape);

// Same score as a plain double over an already-encoded state; no tape
// traffic, used by the ranking loop.
double score_value(const SdilModel& m, const Dataset& data, const InstanceState& st,
                   const SplitInstance& inst, int candidate);

// Convenience: encode (dropout off) and score in one call.
double score(const SdilModel& m, const Dataset& data, const SplitInstance& inst,
             int candidate);

// BPR loss graph for one (positive, sampled negative) pair.
TensorPtr pair_loss(const SdilModel& m, const Dataset& data,
                    const SplitInstance& inst, int neg_item, CounterRng* rng,
                    bool training, Tape* tape);

}  // namespace sdil
