#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "causal/tensor.hpp"

// Differentiable operations over Tensor. Every function records its gradient
// rule when any input requires gradients.
namespace causal {

/// Matrix product. Supports [m x k] * [k x n], batched [..., m, k] * [..., k, n]
/// with identical leading dimensions, and batched [..., m, k] * [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Scalar factor);

/// x + bias broadcast over every leading index; bias shape = [last dim of x].
Tensor add_bias(const Tensor& x, const Tensor& bias);

/// Exp-normalization along `axis` with max subtraction. Throws on NaN input.
Tensor softmax(const Tensor& x, std::size_t axis);

/// Normalizes each row of the last dimension, then applies gamma/beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps);

/// GELU, tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor gelu(const Tensor& x);

/// Row gather: table [n x d], ids -> [ids.size() x d].
Tensor embedding(const Tensor& table, std::span<const std::int64_t> ids);

Tensor reshape(const Tensor& x, Shape shape);

/// General axis permutation; out.shape[i] = x.shape[perm[i]].
Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm);
/// Swaps two axes.
Tensor transpose(const Tensor& x, std::size_t axis_a, std::size_t axis_b);

/// Sum of all entries -> scalar.
Tensor sum(const Tensor& x);
/// Sum along one axis (axis removed from the shape).
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);

Tensor log(const Tensor& x);
/// Clamps into [lo, hi]; gradient is zero where clamping is active.
Tensor clamp(const Tensor& x, Scalar lo, Scalar hi);

/// Replaces entries where mask == 0 with `value`; those entries get zero gradient.
/// `mask` has one entry per element of x.
Tensor masked_fill(const Tensor& x, std::span<const std::uint8_t> mask, Scalar value);

}  // namespace causal
