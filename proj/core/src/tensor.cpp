#include "sdil/tensor.hpp"

#include <cmath>
#include <numeric>

namespace sdil {

static std::size_t shape_product(const std::vector<int>& s, const char* where) {
  if (s.empty()) throw ShapeError(std::string(where) + ": empty shape");
  std::size_t n = 1;
  for (int e : s) {
    if (e <= 0) throw ShapeError(std::string(where) + ": non-positive extent");
    n *= std::size_t(e);
  }
  return n;
}

Tensor::Tensor(std::vector<int> s, double fill)
    : shape(std::move(s)), data(shape_product(shape, "Tensor"), fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (shape_product(shape, "Tensor") != data.size())
    throw ShapeError("Tensor: extent product does not match element count");
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (has_grad())
    std::fill(grad.begin(), grad.end(), 0.0);
  else
    ensure_grad();
}

TensorPtr tensor(std::vector<int> shape, double fill) {
  return std::make_shared<Tensor>(std::move(shape), fill);
}

TensorPtr tensor(std::vector<int> shape, std::vector<double> values) {
  return std::make_shared<Tensor>(std::move(shape), std::move(values));
}

TensorPtr scalar(double v) { return tensor({1, 1}, std::vector<double>{v}); }

TensorPtr param(std::vector<int> shape, double fill) {
  auto t = tensor(std::move(shape), fill);
  t->requires_grad = true;
  t->ensure_grad();
  return t;
}

TensorPtr param_normal(std::vector<int> shape, double stddev, Rng& rng) {
  auto t = param(std::move(shape));
  for (auto& v : t->data) v = rng.normal(0.0, stddev);
  return t;
}

TensorPtr param_xavier(std::vector<int> shape, Rng& rng) {
  auto t = param(std::move(shape));
  double fan_in = t->rows(), fan_out = t->cols();
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t->data) v = (2.0 * rng.next_double() - 1.0) * bound;
  return t;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!same_shape(a, b))
    throw ShapeError(std::string(where) + ": shape mismatch");
}

void require_matrix(const Tensor& t, const char* where) {
  if (t.shape.size() != 2)
    throw ShapeError(std::string(where) + ": expected rank-2 tensor");
}

}  // namespace sdil
