#include "sdil/encoder.hpp"

#include <cmath>
#include <string>

namespace sdil {

namespace {
constexpr double kMaskBias = -1e9;
}

TensorPtr self_attention(const TensorPtr& x, const EncoderLayerParams& p,
                         const std::vector<double>& key_valid, int heads,
                         Tape* tape) {
  int L = x->rows(), d = x->cols();
  if (int(key_valid.size()) != L)
    throw ShapeError("self_attention: mask length must match rows");
  if (heads < 1 || d % heads != 0)
    throw ConfigError("self_attention: heads must divide the model width");
  int dh = d / heads;

  auto q = matmul(x, p.wq, tape);
  auto k = matmul(x, p.wk, tape);
  auto v = matmul(x, p.wv, tape);

  // Additive key bias, constant w.r.t. the graph.
  auto bias = tensor({1, L});
  for (int j = 0; j < L; ++j) bias->data[j] = key_valid[j] > 0.0 ? 0.0 : kMaskBias;

  std::vector<TensorPtr> head_outs;
  head_outs.reserve(heads);
  double inv_scale = 1.0 / std::sqrt(double(dh));
  for (int h = 0; h < heads; ++h) {
    auto qh = heads == 1 ? q : slice_cols(q, h * dh, (h + 1) * dh, tape);
    auto kh = heads == 1 ? k : slice_cols(k, h * dh, (h + 1) * dh, tape);
    auto vh = heads == 1 ? v : slice_cols(v, h * dh, (h + 1) * dh, tape);
    auto scores = scale(matmul_nt(qh, kh, tape), inv_scale, tape);
    auto masked = add_row_broadcast(scores, bias, tape);
    auto attn = softmax_rows(masked, tape);
    head_outs.push_back(matmul(attn, vh, tape));
  }
  auto out = heads == 1 ? head_outs[0] : concat_cols(head_outs, tape);
  if (p.wo) out = matmul(out, p.wo, tape);
  return out;
}

namespace {

TensorPtr ffn(const TensorPtr& x, const EncoderLayerParams& p, Tape* tape) {
  auto h = relu(add_row_broadcast(matmul(x, p.w1, tape), p.b1, tape), tape);
  return add_row_broadcast(matmul(h, p.w2, tape), p.b2, tape);
}

}  // namespace

TensorPtr encoder_layer(const TensorPtr& x, const EncoderLayerParams& p,
                        const std::vector<double>& key_valid, int heads,
                        double dropout_p, CounterRng* rng, bool training,
                        Tape* tape) {
  auto att = self_attention(x, p, key_valid, heads, tape);
  if (!p.wo) {
    auto f = dropout(ffn(att, p, tape), dropout_p, rng, training, tape);
    return layer_norm(add(x, f, tape), p.ln1_g, p.ln1_b, tape);
  }
  auto y = layer_norm(add(x, att, tape), p.ln1_g, p.ln1_b, tape);
  auto f = dropout(ffn(y, p, tape), dropout_p, rng, training, tape);
  return layer_norm(add(y, f, tape), p.ln2_g, p.ln2_b, tape);
}

TensorPtr masked_mean_rows(const TensorPtr& x, const std::vector<double>& mask,
                           Tape* tape) {
  if (int(mask.size()) != x->rows())
    throw ShapeError("masked_mean_rows: mask length must match rows");
  double count = 0.0;
  for (double m : mask) count += m > 0.0 ? 1.0 : 0.0;
  if (count == 0.0)
    throw UsageError("masked_mean_rows: no valid rows to pool");
  std::vector<double> f(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    f[i] = mask[i] > 0.0 ? 1.0 / count : 0.0;
  return sum_rows(scale_rows(x, f, tape), tape);
}

std::vector<double> context_mask(const std::vector<int>& ctx_items) {
  std::vector<double> mask(ctx_items.size());
  for (std::size_t i = 0; i < ctx_items.size(); ++i)
    mask[i] = ctx_items[i] != 0 ? 1.0 : 0.0;
  return mask;
}

EncoderLayerParams make_encoder_layer(int d, bool with_output_proj, Rng& rng) {
  EncoderLayerParams p;
  p.wq = param_xavier({d, d}, rng);
  p.wk = param_xavier({d, d}, rng);
  p.wv = param_xavier({d, d}, rng);
  if (with_output_proj) p.wo = param_xavier({d, d}, rng);
  p.w1 = param_xavier({d, d}, rng);
  p.b1 = param({1, d});
  p.w2 = param_xavier({d, d}, rng);
  p.b2 = param({1, d});
  p.ln1_g = param({1, d}, 1.0);
  p.ln1_b = param({1, d});
  if (with_output_proj) {
    p.ln2_g = param({1, d}, 1.0);
    p.ln2_b = param({1, d});
  }
  return p;
}

void collect_encoder_params(const EncoderLayerParams& p, const std::string& prefix,
                            std::vector<std::pair<std::string, TensorPtr>>& out) {
  out.emplace_back(prefix + ".wq", p.wq);
  out.emplace_back(prefix + ".wk", p.wk);
  out.emplace_back(prefix + ".wv", p.wv);
  if (p.wo) out.emplace_back(prefix + ".wo", p.wo);
  out.emplace_back(prefix + ".w1", p.w1);
  out.emplace_back(prefix + ".b1", p.b1);
  out.emplace_back(prefix + ".w2", p.w2);
  out.emplace_back(prefix + ".b2", p.b2);
  out.emplace_back(prefix + ".ln1_g", p.ln1_g);
  out.emplace_back(prefix + ".ln1_b", p.ln1_b);
  if (p.ln2_g) {
    out.emplace_back(prefix + ".ln2_g", p.ln2_g);
    out.emplace_back(prefix + ".ln2_b", p.ln2_b);
  }
}

}  // namespace sdil
