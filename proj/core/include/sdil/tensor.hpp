#pragma once

#include <memory>
#include <vector>

#include "sdil/error.hpp"
#include "sdil/rng.hpp"

namespace sdil {

// Dense row-major 64-bit tensor. The model only ever builds rank-2 values
// (scalars are {1,1}, row vectors {1,n}); the shape stays a general extent
// list so containers of mixed tensors are uniform.
class Tensor {
 public:
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // allocated lazily, same length as data

  Tensor() = default;
  Tensor(std::vector<int> s, double fill = 0.0);
  Tensor(std::vector<int> s, std::vector<double> values);

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }

  double& at(int r, int c) { return data[std::size_t(r) * cols() + c]; }
  double at(int r, int c) const { return data[std::size_t(r) * cols() + c]; }
  double& gat(int r, int c) { return grad[std::size_t(r) * cols() + c]; }

  bool has_grad() const { return grad.size() == data.size(); }
  void ensure_grad();
  void zero_grad();
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr tensor(std::vector<int> shape, double fill = 0.0);
TensorPtr tensor(std::vector<int> shape, std::vector<double> values);
TensorPtr scalar(double v);

// Trainable parameter: requires_grad with the grad buffer pre-allocated,
// so optimizers can rely on its presence.
TensorPtr param(std::vector<int> shape, double fill = 0.0);
TensorPtr param_normal(std::vector<int> shape, double stddev, Rng& rng);
TensorPtr param_xavier(std::vector<int> shape, Rng& rng);

bool same_shape(const Tensor& a, const Tensor& b);
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);
void require_matrix(const Tensor& t, const char* where);

}  // namespace sdil
