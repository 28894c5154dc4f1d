#include "sdil/autodiff.hpp"

#include <cmath>
#include <initializer_list>

namespace sdil {

void Tape::backward(const TensorPtr& root, double seed) {
  if (!root || !root->is_scalar())
    throw UsageError("backward: root must be a scalar tensor");
  if (!root->requires_grad)
    throw UsageError("backward: root does not require a gradient");
  root->ensure_grad();
  root->grad[0] += seed;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

namespace {

bool wants_grad(Tape* tape, std::initializer_list<const TensorPtr*> ins) {
  if (!tape) return false;
  for (auto* p : ins)
    if (*p && (*p)->requires_grad) return true;
  return false;
}

// Allocates the op output; when tracked, pre-allocates grads on the output
// and every differentiable input so adjoint closures can accumulate blindly.
TensorPtr make_out(std::vector<int> shape, bool tracked,
                   std::initializer_list<const TensorPtr*> ins) {
  auto out = tensor(std::move(shape));
  if (tracked) {
    out->requires_grad = true;
    out->ensure_grad();
    for (auto* p : ins)
      if (*p && (*p)->requires_grad) (*p)->ensure_grad();
  }
  return out;
}

void require_finite(const Tensor& t, const char* where) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw NumericError(std::string(where) + ": non-finite input");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b, Tape* tape) {
  require_matrix(*a, "matmul");
  require_matrix(*b, "matmul");
  int m = a->rows(), k = a->cols(), n = b->cols();
  if (b->rows() != k) throw ShapeError("matmul: inner extents differ");

  bool tracked = wants_grad(tape, {&a, &b});
  auto c = make_out({m, n}, tracked, {&a, &b});
  for (int i = 0; i < m; ++i) {
    const double* arow = &a->data[std::size_t(i) * k];
    double* crow = &c->data[std::size_t(i) * n];
    for (int p = 0; p < k; ++p) {
      double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = &b->data[std::size_t(p) * n];
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  if (tracked) {
    tape->record([a, b, c, m, k, n] {
      if (a->requires_grad) {
        for (int i = 0; i < m; ++i) {
          const double* gc = &c->grad[std::size_t(i) * n];
          double* ga = &a->grad[std::size_t(i) * k];
          for (int p = 0; p < k; ++p) {
            const double* brow = &b->data[std::size_t(p) * n];
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += gc[j] * brow[j];
            ga[p] += acc;
          }
        }
      }
      if (b->requires_grad) {
        for (int i = 0; i < m; ++i) {
          const double* arow = &a->data[std::size_t(i) * k];
          const double* gc = &c->grad[std::size_t(i) * n];
          for (int p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            double* gb = &b->grad[std::size_t(p) * n];
            for (int j = 0; j < n; ++j) gb[j] += av * gc[j];
          }
        }
      }
    });
  }
  return c;
}

TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b, Tape* tape) {
  require_matrix(*a, "matmul_nt");
  require_matrix(*b, "matmul_nt");
  int m = a->rows(), k = a->cols(), n = b->rows();
  if (b->cols() != k) throw ShapeError("matmul_nt: inner extents differ");

  bool tracked = wants_grad(tape, {&a, &b});
  auto c = make_out({m, n}, tracked, {&a, &b});
  for (int i = 0; i < m; ++i) {
    const double* arow = &a->data[std::size_t(i) * k];
    double* crow = &c->data[std::size_t(i) * n];
    for (int j = 0; j < n; ++j) {
      const double* brow = &b->data[std::size_t(j) * k];
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
  if (tracked) {
    tape->record([a, b, c, m, k, n] {
      for (int i = 0; i < m; ++i) {
        const double* gc = &c->grad[std::size_t(i) * n];
        for (int j = 0; j < n; ++j) {
          double g = gc[j];
          if (g == 0.0) continue;
          if (a->requires_grad) {
            double* ga = &a->grad[std::size_t(i) * k];
            const double* brow = &b->data[std::size_t(j) * k];
            for (int p = 0; p < k; ++p) ga[p] += g * brow[p];
          }
          if (b->requires_grad) {
            double* gb = &b->grad[std::size_t(j) * k];
            const double* arow = &a->data[std::size_t(i) * k];
            for (int p = 0; p < k; ++p) gb[p] += g * arow[p];
          }
        }
      }
    });
  }
  return c;
}

namespace {

enum class BinOp { Add, Sub, Mul, Div };

// Shared binary-elementwise driver: exact shape match, or a {1,1} scalar
// broadcast on either side.
TensorPtr binary_op(const TensorPtr& a, const TensorPtr& b, Tape* tape, BinOp op,
                    const char* name) {
  bool as = a->is_scalar(), bs = b->is_scalar();
  if (!as && !bs && !same_shape(*a, *b))
    throw ShapeError(std::string(name) + ": shapes differ and neither is scalar");

  const Tensor& big = (!as || bs) ? *a : *b;
  bool tracked = wants_grad(tape, {&a, &b});
  auto c = make_out(big.shape, tracked, {&a, &b});
  std::size_t n = c->size();
  for (std::size_t i = 0; i < n; ++i) {
    double av = a->data[as ? 0 : i];
    double bv = b->data[bs ? 0 : i];
    switch (op) {
      case BinOp::Add: c->data[i] = av + bv; break;
      case BinOp::Sub: c->data[i] = av - bv; break;
      case BinOp::Mul: c->data[i] = av * bv; break;
      case BinOp::Div:
        if (bv == 0.0) throw NumericError("divide: zero divisor");
        c->data[i] = av / bv;
        break;
    }
  }
  if (tracked) {
    tape->record([a, b, c, as, bs, n, op] {
      for (std::size_t i = 0; i < n; ++i) {
        double g = c->grad[i];
        if (g == 0.0) continue;
        double av = a->data[as ? 0 : i];
        double bv = b->data[bs ? 0 : i];
        double da = 0.0, db = 0.0;
        switch (op) {
          case BinOp::Add: da = g; db = g; break;
          case BinOp::Sub: da = g; db = -g; break;
          case BinOp::Mul: da = g * bv; db = g * av; break;
          case BinOp::Div: da = g / bv; db = -g * av / (bv * bv); break;
        }
        if (a->requires_grad) a->grad[as ? 0 : i] += da;
        if (b->requires_grad) b->grad[bs ? 0 : i] += db;
      }
    });
  }
  return c;
}

// Unary elementwise with a value/derivative pair computed from the input.
template <typename Fwd, typename Bwd>
TensorPtr unary_op(const TensorPtr& a, Tape* tape, Fwd fwd, Bwd dfn) {
  bool tracked = wants_grad(tape, {&a});
  auto c = make_out(a->shape, tracked, {&a});
  std::size_t n = c->size();
  for (std::size_t i = 0; i < n; ++i) c->data[i] = fwd(a->data[i]);
  if (tracked) {
    tape->record([a, c, n, dfn] {
      for (std::size_t i = 0; i < n; ++i) {
        double g = c->grad[i];
        if (g != 0.0) a->grad[i] += g * dfn(a->data[i], c->data[i]);
      }
    });
  }
  return c;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b, Tape* tape) {
  return binary_op(a, b, tape, BinOp::Add, "add");
}
TensorPtr sub(const TensorPtr& a, const TensorPtr& b, Tape* tape) {
  return binary_op(a, b, tape, BinOp::Sub, "sub");
}
TensorPtr mul(const TensorPtr& a, const TensorPtr& b, Tape* tape) {
  return binary_op(a, b, tape, BinOp::Mul, "mul");
}
TensorPtr divide(const TensorPtr& a, const TensorPtr& b, Tape* tape) {
  return binary_op(a, b, tape, BinOp::Div, "divide");
}

TensorPtr scale(const TensorPtr& a, double c, Tape* tape) {
  return unary_op(
      a, tape, [c](double x) { return c * x; },
      [c](double, double) { return c; });
}

TensorPtr relu(const TensorPtr& a, Tape* tape) {
  return unary_op(
      a, tape, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

TensorPtr sigmoid(const TensorPtr& a, Tape* tape) {
  return unary_op(
      a, tape, [](double x) { return stable_sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

TensorPtr exp_op(const TensorPtr& a, Tape* tape) {
  return unary_op(
      a, tape, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

TensorPtr softplus(const TensorPtr& a, Tape* tape) {
  return unary_op(
      a, tape, [](double x) { return stable_softplus(x); },
      [](double x, double) { return stable_sigmoid(x); });
}

TensorPtr dropout(const TensorPtr& a, double p, CounterRng* rng, bool training,
                  Tape* tape) {
  if (p < 0.0 || p >= 1.0) throw DomainError("dropout: p must be in [0, 1)");
  if (!training || p == 0.0) return a;
  if (!rng) throw UsageError("dropout: training mode needs a stream");

  std::uint64_t op = rng->next_op();
  std::size_t n = a->size();
  std::vector<double> mask(n);
  double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < n; ++i)
    mask[i] = rng->uniform_at(op, i) < p ? 0.0 : keep_scale;

  bool tracked = wants_grad(tape, {&a});
  auto c = make_out(a->shape, tracked, {&a});
  for (std::size_t i = 0; i < n; ++i) c->data[i] = a->data[i] * mask[i];
  if (tracked) {
    tape->record([a, c, n, mask = std::move(mask)] {
      for (std::size_t i = 0; i < n; ++i) a->grad[i] += c->grad[i] * mask[i];
    });
  }
  return c;
}

TensorPtr softmax_rows(const TensorPtr& a, Tape* tape) {
  require_matrix(*a, "softmax_rows");
  require_finite(*a, "softmax_rows");
  int m = a->rows(), n = a->cols();

  bool tracked = wants_grad(tape, {&a});
  auto c = make_out(a->shape, tracked, {&a});
  for (int i = 0; i < m; ++i) {
    const double* x = &a->data[std::size_t(i) * n];
    double* y = &c->data[std::size_t(i) * n];
    double mx = x[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      y[j] = std::exp(x[j] - mx);
      s += y[j];
    }
    for (int j = 0; j < n; ++j) y[j] /= s;
  }
  if (tracked) {
    tape->record([a, c, m, n] {
      for (int i = 0; i < m; ++i) {
        const double* p = &c->data[std::size_t(i) * n];
        const double* gy = &c->grad[std::size_t(i) * n];
        double* gx = &a->grad[std::size_t(i) * n];
        double inner = 0.0;
        for (int j = 0; j < n; ++j) inner += gy[j] * p[j];
        for (int j = 0; j < n; ++j) gx[j] += p[j] * (gy[j] - inner);
      }
    });
  }
  return c;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                     const TensorPtr& bias, Tape* tape, double eps) {
  require_matrix(*x, "layer_norm");
  int m = x->rows(), d = x->cols();
  if (gain->size() != std::size_t(d) || bias->size() != std::size_t(d))
    throw ShapeError("layer_norm: gain/bias must have one entry per column");

  bool tracked = wants_grad(tape, {&x, &gain, &bias});
  auto y = make_out(x->shape, tracked, {&x, &gain, &bias});
  // xhat and the per-row inverse stddev are needed by the adjoint.
  auto xhat = std::make_shared<std::vector<double>>(x->size());
  auto inv_s = std::make_shared<std::vector<double>>(m);
  for (int i = 0; i < m; ++i) {
    const double* xi = &x->data[std::size_t(i) * d];
    double* hi = &(*xhat)[std::size_t(i) * d];
    double* yi = &y->data[std::size_t(i) * d];
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xi[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      double dv = xi[j] - mu;
      var += dv * dv;
    }
    var /= d;
    double is = 1.0 / std::sqrt(var + eps);
    (*inv_s)[i] = is;
    for (int j = 0; j < d; ++j) {
      hi[j] = (xi[j] - mu) * is;
      yi[j] = gain->data[j] * hi[j] + bias->data[j];
    }
  }
  if (tracked) {
    tape->record([x, gain, bias, y, xhat, inv_s, m, d] {
      for (int i = 0; i < m; ++i) {
        const double* gy = &y->grad[std::size_t(i) * d];
        const double* hi = &(*xhat)[std::size_t(i) * d];
        double is = (*inv_s)[i];
        if (gain->requires_grad || bias->requires_grad) {
          for (int j = 0; j < d; ++j) {
            if (gain->requires_grad) gain->grad[j] += gy[j] * hi[j];
            if (bias->requires_grad) bias->grad[j] += gy[j];
          }
        }
        if (x->requires_grad) {
          double sq = 0.0, sqx = 0.0;
          for (int j = 0; j < d; ++j) {
            double q = gy[j] * gain->data[j];
            sq += q;
            sqx += q * hi[j];
          }
          double* gx = &x->grad[std::size_t(i) * d];
          for (int j = 0; j < d; ++j) {
            double q = gy[j] * gain->data[j];
            gx[j] += is * (q - sq / d - hi[j] * sqx / d);
          }
        }
      }
    });
  }
  return y;
}

TensorPtr gather_rows(const TensorPtr& table, const std::vector<int>& ids,
                      Tape* tape) {
  require_matrix(*table, "gather_rows");
  int rows = table->rows(), d = table->cols();
  for (int id : ids)
    if (id < 0 || id >= rows) throw IndexError("gather_rows: id out of range");
  if (ids.empty()) throw ShapeError("gather_rows: empty id list");

  bool tracked = wants_grad(tape, {&table});
  auto out = make_out({int(ids.size()), d}, tracked, {&table});
  for (std::size_t k = 0; k < ids.size(); ++k)
    for (int j = 0; j < d; ++j)
      out->data[k * d + j] = table->data[std::size_t(ids[k]) * d + j];
  if (tracked) {
    tape->record([table, out, ids, d] {
      for (std::size_t k = 0; k < ids.size(); ++k) {
        double* gt = &table->grad[std::size_t(ids[k]) * d];
        const double* go = &out->grad[k * d];
        for (int j = 0; j < d; ++j) gt[j] += go[j];
      }
    });
  }
  return out;
}

TensorPtr scale_rows(const TensorPtr& x, const std::vector<double>& factors,
                     Tape* tape) {
  require_matrix(*x, "scale_rows");
  int m = x->rows(), n = x->cols();
  if (int(factors.size()) != m)
    throw ShapeError("scale_rows: one factor per row required");

  bool tracked = wants_grad(tape, {&x});
  auto c = make_out(x->shape, tracked, {&x});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      c->data[std::size_t(i) * n + j] = x->data[std::size_t(i) * n + j] * factors[i];
  if (tracked) {
    tape->record([x, c, factors, m, n] {
      for (int i = 0; i < m; ++i) {
        double f = factors[i];
        if (f == 0.0) continue;
        for (int j = 0; j < n; ++j)
          x->grad[std::size_t(i) * n + j] += f * c->grad[std::size_t(i) * n + j];
      }
    });
  }
  return c;
}

TensorPtr add_row_broadcast(const TensorPtr& x, const TensorPtr& row, Tape* tape) {
  require_matrix(*x, "add_row_broadcast");
  int m = x->rows(), n = x->cols();
  if (row->size() != std::size_t(n))
    throw ShapeError("add_row_broadcast: row length must match columns");

  bool tracked = wants_grad(tape, {&x, &row});
  auto c = make_out(x->shape, tracked, {&x, &row});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      c->data[std::size_t(i) * n + j] = x->data[std::size_t(i) * n + j] + row->data[j];
  if (tracked) {
    tape->record([x, row, c, m, n] {
      for (int i = 0; i < m; ++i) {
        const double* gc = &c->grad[std::size_t(i) * n];
        if (x->requires_grad) {
          double* gx = &x->grad[std::size_t(i) * n];
          for (int j = 0; j < n; ++j) gx[j] += gc[j];
        }
        if (row->requires_grad)
          for (int j = 0; j < n; ++j) row->grad[j] += gc[j];
      }
    });
  }
  return c;
}

TensorPtr slice_cols(const TensorPtr& x, int c0, int c1, Tape* tape) {
  require_matrix(*x, "slice_cols");
  int m = x->rows(), n = x->cols();
  if (c0 < 0 || c1 <= c0 || c1 > n) throw ShapeError("slice_cols: bad range");
  int w = c1 - c0;

  bool tracked = wants_grad(tape, {&x});
  auto c = make_out({m, w}, tracked, {&x});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j)
      c->data[std::size_t(i) * w + j] = x->data[std::size_t(i) * n + c0 + j];
  if (tracked) {
    tape->record([x, c, m, n, w, c0] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          x->grad[std::size_t(i) * n + c0 + j] += c->grad[std::size_t(i) * w + j];
    });
  }
  return c;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& xs, Tape* tape) {
  if (xs.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  int m = xs[0]->rows(), total = 0;
  for (const auto& x : xs) {
    require_matrix(*x, "concat_cols");
    if (x->rows() != m) throw ShapeError("concat_cols: row counts differ");
    total += x->cols();
  }

  bool tracked = false;
  for (const auto& x : xs) tracked = tracked || (tape && x->requires_grad);
  auto c = tensor({m, total});
  if (tracked) {
    c->requires_grad = true;
    c->ensure_grad();
    for (const auto& x : xs)
      if (x->requires_grad) x->ensure_grad();
  }
  int off = 0;
  for (const auto& x : xs) {
    int w = x->cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j)
        c->data[std::size_t(i) * total + off + j] = x->data[std::size_t(i) * w + j];
    off += w;
  }
  if (tracked) {
    tape->record([xs, c, m, total] {
      int off = 0;
      for (const auto& x : xs) {
        int w = x->cols();
        if (x->requires_grad)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j)
              x->grad[std::size_t(i) * w + j] += c->grad[std::size_t(i) * total + off + j];
        off += w;
      }
    });
  }
  return c;
}

TensorPtr sum_all(const TensorPtr& x, Tape* tape) {
  bool tracked = wants_grad(tape, {&x});
  auto c = make_out({1, 1}, tracked, {&x});
  double s = 0.0;
  for (double v : x->data) s += v;
  c->data[0] = s;
  if (tracked) {
    tape->record([x, c] {
      double g = c->grad[0];
      if (g == 0.0) return;
      for (auto& gv : x->grad) gv += g;
    });
  }
  return c;
}

TensorPtr sum_rows(const TensorPtr& x, Tape* tape) {
  require_matrix(*x, "sum_rows");
  int m = x->rows(), n = x->cols();
  bool tracked = wants_grad(tape, {&x});
  auto c = make_out({1, n}, tracked, {&x});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c->data[j] += x->data[std::size_t(i) * n + j];
  if (tracked) {
    tape->record([x, c, m, n] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          x->grad[std::size_t(i) * n + j] += c->grad[j];
    });
  }
  return c;
}

TensorPtr dot(const TensorPtr& a, const TensorPtr& b, Tape* tape) {
  require_same_shape(*a, *b, "dot");
  return sum_all(mul(a, b, tape), tape);
}

}  // namespace sdil
