#pragma once

#include <functional>
#include <vector>

#include "sdil/rng.hpp"
#include "sdil/tensor.hpp"

namespace sdil {

// Reverse-mode tape. Forward helpers append one adjoint closure per
// primitive in execution order, so reverse iteration is a topological
// replay. Gradients accumulate additively across fan-out; backward()
// does not zero anything, callers own grad lifecycle.
class Tape {
 public:
  void record(std::function<void()> adjoint) { ops_.push_back(std::move(adjoint)); }

  // Seeds root->grad with `seed` (1.0 = plain derivative) and replays
  // adjoints in reverse. Root must be scalar.
  void backward(const TensorPtr& root, double seed = 1.0);

  std::size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }

 private:
  std::vector<std::function<void()>> ops_;
};

// All ops compute eagerly. When `tape` is null (or no input requires a
// gradient) nothing is recorded and the output does not require one:
// that is the evaluation path.

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b, Tape* tape);
// a * b^T without materializing the transpose.
TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b, Tape* tape);

// Elementwise. Binary ops take exact-shape operands or a {1,1} scalar on
// either side; anything else is a shape error.
TensorPtr add(const TensorPtr& a, const TensorPtr& b, Tape* tape);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b, Tape* tape);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b, Tape* tape);
TensorPtr divide(const TensorPtr& a, const TensorPtr& b, Tape* tape);
TensorPtr scale(const TensorPtr& a, double c, Tape* tape);
TensorPtr relu(const TensorPtr& a, Tape* tape);
TensorPtr sigmoid(const TensorPtr& a, Tape* tape);
TensorPtr exp_op(const TensorPtr& a, Tape* tape);
TensorPtr softplus(const TensorPtr& a, Tape* tape);

// Inverted-scale dropout over a counter-based stream; identity when not
// training or p == 0. p must be in [0, 1).
TensorPtr dropout(const TensorPtr& a, double p, CounterRng* rng, bool training,
                  Tape* tape);

// Row-wise softmax with max-subtraction. Non-finite inputs are rejected.
TensorPtr softmax_rows(const TensorPtr& a, Tape* tape);

// Row-wise layer normalization: gain/bias are {1, d}. Population variance,
// epsilon inside the square root.
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                     const TensorPtr& bias, Tape* tape, double eps = 1e-5);

// Row gather/scatter against an embedding table. Backward scatter-adds.
TensorPtr gather_rows(const TensorPtr& table, const std::vector<int>& ids,
                      Tape* tape);

// Multiplies row i by the constant factors[i].
TensorPtr scale_rows(const TensorPtr& x, const std::vector<double>& factors,
                     Tape* tape);

// x {m,n} plus a {1,n} row vector broadcast over rows.
TensorPtr add_row_broadcast(const TensorPtr& x, const TensorPtr& row, Tape* tape);

TensorPtr slice_cols(const TensorPtr& x, int c0, int c1, Tape* tape);
TensorPtr concat_cols(const std::vector<TensorPtr>& xs, Tape* tape);

TensorPtr sum_all(const TensorPtr& x, Tape* tape);   // {1,1}
TensorPtr sum_rows(const TensorPtr& x, Tape* tape);  // column sums, {1,n}

// sum(a .* b) for same-shape tensors, {1,1}.
TensorPtr dot(const TensorPtr& a, const TensorPtr& b, Tape* tape);

}  // namespace sdil
