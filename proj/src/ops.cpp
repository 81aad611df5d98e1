#include "causal/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace causal {

namespace {

using detail::Node;

Vector* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

const Vector& value_of(const Node& self, std::size_t i) { return self.parents[i]->value; }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

ConstMatrixMap cmap(const Vector& v, std::size_t offset, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(v.data() + offset, static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

MatrixMap mmap(Vector& v, std::size_t offset, std::size_t rows, std::size_t cols) {
  return MatrixMap(v.data() + offset, static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  auto mismatch = [&] {
    return ShapeError("matmul: incompatible shapes " + to_string(sa) + " and " + to_string(sb));
  };
  if (sa.size() < 2 || sb.size() < 2) throw mismatch();
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa.back();
  if (sb[sb.size() - 2] != k) throw mismatch();
  const std::size_t n = sb.back();

  Shape out_shape(sa.begin(), sa.end() - 1);
  out_shape.push_back(n);

  if (sb.size() == 2) {
    // Fold all leading dimensions of a into the row count.
    const std::size_t rows = numel(sa) / k;
    Vector out(static_cast<Eigen::Index>(rows * n));
    mmap(out, 0, rows, n).noalias() = cmap(a.values(), 0, rows, k) * cmap(b.values(), 0, k, n);
    return Tensor::make_result(std::move(out_shape), std::move(out), {a, b},
                               [rows, k, n](Node& self) {
                                 auto dc = cmap(self.grad, 0, rows, n);
                                 if (auto* ga = grad_of(self, 0)) {
                                   mmap(*ga, 0, rows, k).noalias() +=
                                       dc * cmap(value_of(self, 1), 0, k, n).transpose();
                                 }
                                 if (auto* gb = grad_of(self, 1)) {
                                   mmap(*gb, 0, k, n).noalias() +=
                                       cmap(value_of(self, 0), 0, rows, k).transpose() * dc;
                                 }
                               });
  }

  if (sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin())) {
    throw mismatch();
  }
  const std::size_t batch = numel(sa) / (m * k);
  Vector out(static_cast<Eigen::Index>(batch * m * n));
  for (std::size_t i = 0; i < batch; ++i) {
    mmap(out, i * m * n, m, n).noalias() =
        cmap(a.values(), i * m * k, m, k) * cmap(b.values(), i * k * n, k, n);
  }
  return Tensor::make_result(
      std::move(out_shape), std::move(out), {a, b}, [batch, m, k, n](Node& self) {
        auto* ga = grad_of(self, 0);
        auto* gb = grad_of(self, 1);
        for (std::size_t i = 0; i < batch; ++i) {
          auto dc = cmap(self.grad, i * m * n, m, n);
          if (ga) {
            mmap(*ga, i * m * k, m, k).noalias() +=
                dc * cmap(value_of(self, 1), i * k * n, k, n).transpose();
          }
          if (gb) {
            mmap(*gb, i * k * n, k, n).noalias() +=
                cmap(value_of(self, 0), i * m * k, m, k).transpose() * dc;
          }
        }
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  return Tensor::make_result(a.shape(), a.values() + b.values(), {a, b}, [](Node& self) {
    if (auto* ga = grad_of(self, 0)) *ga += self.grad;
    if (auto* gb = grad_of(self, 1)) *gb += self.grad;
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Vector out = a.values().cwiseProduct(b.values());
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto* ga = grad_of(self, 0)) *ga += self.grad.cwiseProduct(value_of(self, 1));
    if (auto* gb = grad_of(self, 1)) *gb += self.grad.cwiseProduct(value_of(self, 0));
  });
}

Tensor scale(const Tensor& x, Scalar factor) {
  return Tensor::make_result(x.shape(), x.values() * factor, {x}, [factor](Node& self) {
    if (auto* g = grad_of(self, 0)) *g += self.grad * factor;
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() == 0 || bias.rank() != 1 || bias.dim(0) != x.shape().back()) {
    throw ShapeError("add_bias: bias " + to_string(bias.shape()) + " does not match " +
                     to_string(x.shape()));
  }
  const std::size_t d = bias.dim(0);
  const std::size_t rows = x.size() / d;
  Vector out = x.values();
  mmap(out, 0, rows, d).rowwise() += bias.values().transpose();
  return Tensor::make_result(x.shape(), std::move(out), {x, bias}, [rows, d](Node& self) {
    if (auto* gx = grad_of(self, 0)) *gx += self.grad;
    if (auto* gb = grad_of(self, 1)) {
      *gb += cmap(self.grad, 0, rows, d).colwise().sum().transpose();
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto s = split_at(x.shape(), axis);
  const Vector& in = x.values();
  if (in.hasNaN()) throw std::domain_error("softmax: NaN in input");
  Vector out(in.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      Scalar mx = in[base];
      for (std::size_t j = 1; j < s.n; ++j) mx = std::max(mx, in[base + j * s.inner]);
      Scalar total = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const Scalar e = std::exp(in[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= total;
    }
  }
  Tensor result = Tensor::make_result(x.shape(), std::move(out), {x}, {});
  if (!result.requires_grad()) return result;
  // The rule needs the output values; read them from the node itself.
  result.node().backward = [s](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const Vector& y = self.value;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.n * s.inner + i;
        Scalar dot = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t at = base + j * s.inner;
          dot += self.grad[at] * y[at];
        }
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t at = base + j * s.inner;
          (*g)[at] += y[at] * (self.grad[at] - dot);
        }
      }
    }
  };
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: gamma " + to_string(gamma.shape()) + " / beta " +
                     to_string(beta.shape()) + " do not match last dim of " +
                     to_string(x.shape()));
  }
  const std::size_t rows = x.size() / d;
  auto in = cmap(x.values(), 0, rows, d);
  RowMatrix xhat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  Vector inv_std(static_cast<Eigen::Index>(rows));
  for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
    const Scalar mu = in.row(r).mean();
    const Scalar var = (in.row(r).array() - mu).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mu) * inv_std[r];
  }
  Vector out(x.values().size());
  mmap(out, 0, rows, d) = (xhat.array().rowwise() * gamma.values().transpose().array())
                              .rowwise() +
                          beta.values().transpose().array();
  return Tensor::make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), rows, d](Node& self) {
        auto dy = cmap(self.grad, 0, rows, d);
        if (auto* gg = grad_of(self, 1)) {
          *gg += dy.cwiseProduct(xhat).colwise().sum().transpose();
        }
        if (auto* gb = grad_of(self, 2)) *gb += dy.colwise().sum().transpose();
        if (auto* gx = grad_of(self, 0)) {
          const Vector& gamma_v = value_of(self, 1);
          auto dx = mmap(*gx, 0, rows, d);
          for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
            Eigen::Matrix<Scalar, 1, Eigen::Dynamic> dxhat =
                dy.row(r).cwiseProduct(gamma_v.transpose());
            const Scalar m1 = dxhat.mean();
            const Scalar m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
            dx.row(r).array() +=
                inv_std[r] * (dxhat.array() - m1 - xhat.row(r).array() * m2);
          }
        }
      });
}

Tensor gelu(const Tensor& x) {
  constexpr Scalar kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr Scalar kA = 0.044715;
  const Vector& in = x.values();
  Vector out(in.size());
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const Scalar v = in[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
  }
  return Tensor::make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const Vector& in = value_of(self, 0);
    for (Eigen::Index i = 0; i < in.size(); ++i) {
      const Scalar v = in[i];
      const Scalar t = std::tanh(kC * (v + kA * v * v * v));
      const Scalar dt = (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
      (*g)[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  });
}

Tensor embedding(const Tensor& table, std::span<const std::int64_t> ids) {
  if (table.rank() != 2) throw ShapeError("embedding: table must be 2-d, got " +
                                          to_string(table.shape()));
  const std::size_t n = table.dim(0);
  const std::size_t d = table.dim(1);
  std::vector<std::int64_t> rows(ids.begin(), ids.end());
  Vector out(static_cast<Eigen::Index>(rows.size() * d));
  auto src = cmap(table.values(), 0, n, d);
  auto dst = mmap(out, 0, rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= n) {
      throw std::out_of_range("embedding: id " + std::to_string(rows[i]) +
                              " outside table of " + std::to_string(n) + " rows");
    }
    dst.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  }
  const std::size_t count = rows.size();
  return Tensor::make_result(Shape{count, d}, std::move(out), {table},
                             [rows = std::move(rows), n, d](Node& self) {
                               auto* g = grad_of(self, 0);
                               if (!g) return;
                               auto dt = mmap(*g, 0, n, d);
                               auto dy = cmap(self.grad, 0, rows.size(), d);
                               for (std::size_t i = 0; i < rows.size(); ++i) {
                                 dt.row(rows[i]) += dy.row(static_cast<Eigen::Index>(i));
                               }
                             });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  return Tensor::make_result(std::move(shape), x.values(), {x}, [](Node& self) {
    if (auto* g = grad_of(self, 0)) *g += self.grad;
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm) {
  const Shape& in_shape = x.shape();
  const std::size_t r = in_shape.size();
  if (perm.size() != r) throw ShapeError("permute: rank mismatch for " + to_string(in_shape));
  std::vector<bool> used(r, false);
  for (auto p : perm) {
    if (p >= r || used[p]) throw ShapeError("permute: invalid axis permutation");
    used[p] = true;
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in_shape[i];
  Shape out_shape(r);
  std::vector<std::size_t> step(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = in_shape[perm[i]];
    step[i] = in_stride[perm[i]];
  }
  const std::size_t total = x.size();
  std::vector<std::size_t> source(total);
  std::vector<std::size_t> idx(r, 0);
  std::size_t offset = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    source[flat] = offset;
    for (std::size_t a = r; a-- > 0;) {
      if (++idx[a] < out_shape[a]) {
        offset += step[a];
        break;
      }
      offset -= step[a] * (out_shape[a] - 1);
      idx[a] = 0;
    }
  }
  Vector out(static_cast<Eigen::Index>(total));
  const Vector& in = x.values();
  for (std::size_t i = 0; i < total; ++i) out[i] = in[source[i]];
  return Tensor::make_result(std::move(out_shape), std::move(out), {x},
                             [source = std::move(source)](Node& self) {
                               auto* g = grad_of(self, 0);
                               if (!g) return;
                               for (std::size_t i = 0; i < source.size(); ++i) {
                                 (*g)[source[i]] += self.grad[i];
                               }
                             });
}

Tensor transpose(const Tensor& x, std::size_t axis_a, std::size_t axis_b) {
  std::vector<std::size_t> perm(x.rank());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  if (axis_a >= perm.size() || axis_b >= perm.size()) {
    throw ShapeError("transpose: axis out of range for " + to_string(x.shape()));
  }
  std::swap(perm[axis_a], perm[axis_b]);
  return permute(x, perm);
}

Tensor sum(const Tensor& x) {
  return Tensor::make_result(Shape{}, Vector::Constant(1, x.values().sum()), {x},
                             [](Node& self) {
                               if (auto* g = grad_of(self, 0)) g->array() += self.grad[0];
                             });
}

Tensor sum(const Tensor& x, std::size_t axis) {
  const auto s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Vector out = Vector::Zero(static_cast<Eigen::Index>(s.outer * s.inner));
  const Vector& in = x.values();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.n; ++j) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        out[o * s.inner + i] += in[(o * s.n + j) * s.inner + i];
      }
    }
  }
  return Tensor::make_result(std::move(out_shape), std::move(out), {x}, [s](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t j = 0; j < s.n; ++j) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          (*g)[(o * s.n + j) * s.inner + i] += self.grad[o * s.inner + i];
        }
      }
    }
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<Scalar>(x.size()));
}

Tensor log(const Tensor& x) {
  return Tensor::make_result(x.shape(), x.values().array().log().matrix(), {x}, [](Node& self) {
    if (auto* g = grad_of(self, 0)) {
      *g += self.grad.cwiseQuotient(value_of(self, 0));
    }
  });
}

Tensor clamp(const Tensor& x, Scalar lo, Scalar hi) {
  Vector out = x.values().cwiseMax(lo).cwiseMin(hi);
  return Tensor::make_result(x.shape(), std::move(out), {x}, [lo, hi](Node& self) {
    auto* g = grad_of(self, 0);
    if (!g) return;
    const Vector& in = value_of(self, 0);
    for (Eigen::Index i = 0; i < in.size(); ++i) {
      if (in[i] >= lo && in[i] <= hi) (*g)[i] += self.grad[i];
    }
  });
}

Tensor masked_fill(const Tensor& x, std::span<const std::uint8_t> mask, Scalar value) {
  if (mask.size() != x.size()) {
    throw ShapeError("masked_fill: mask of " + std::to_string(mask.size()) +
                     " entries for tensor " + to_string(x.shape()));
  }
  Vector out = x.values();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) out[static_cast<Eigen::Index>(i)] = value;
  }
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [keep = std::move(keep)](Node& self) {
                               auto* g = grad_of(self, 0);
                               if (!g) return;
                               for (std::size_t i = 0; i < keep.size(); ++i) {
                                 if (keep[i]) (*g)[i] += self.grad[i];
                               }
                             });
}

}  // namespace causal
