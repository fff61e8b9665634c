#pragma once

// Pure Tensor-level building blocks. The autodiff graph (autograd.hpp) calls
// these for its forward values; they are also usable on their own.

#include <cstddef>
#include <utility>
#include <vector>

#include "homnet/tensor.hpp"

namespace homnet::num {

enum class Activation { Relu, Sigmoid };

/// Row normalization applied to alignment scores.
enum class AttnNorm {
  Softmax,  // exp-normalized
  RawEps,   // s / sum(s), |sum| floored at raw_floor
};

inline constexpr double kRawFloor = 1e-6;

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// x[n x p] * W[p x q] (+ bias[q]).
template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias = nullptr);

template <typename T>
Tensor<T> act(const Tensor<T>& x, Activation kind);

template <typename T>
T sigmoid(T x);

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> normalize_rows_raw(const Tensor<T>& x, double floor = kRawFloor);

template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

/// Treats x[(B*n) x q] as B stacked n x q blocks and transposes each: [(B*q) x n].
template <typename T>
Tensor<T> block_transpose(const Tensor<T>& x, std::size_t blocks);

template <typename T>
Tensor<T> concat_cols(const std::vector<const Tensor<T>*>& parts);

template <typename T>
Tensor<T> concat_rows(const std::vector<const Tensor<T>*>& parts);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

template <typename T>
T sum(const Tensor<T>& x);

struct Stride {
  std::size_t h;
  std::size_t w;
};

/// Strided, unpadded cross-correlation.
/// input: [C_in, H, W] or [N, C_in, H, W]; kernels: [C_out, C_in, kh, kw].
/// Output keeps the input's rank: [C_out, H', W'] or [N, C_out, H', W'].
/// Each output accumulates channel-major, then kh, then kw, starting from 0.
template <typename T>
Tensor<T> conv2d_strided(const Tensor<T>& input, const Tensor<T>& kernels, Stride stride);

/// Lowers input windows to columns: rows indexed by (c, kh, kw), columns by
/// (n, y, x). Shape [C_in*kh*kw, N*H'*W'].
template <typename T>
Tensor<T> im2col(const Tensor<T>& input4d, std::size_t kh, std::size_t kw, Stride stride);

/// Scatter-adds columns back into a [N, C_in, H, W] gradient buffer.
template <typename T>
void col2im_add(const Tensor<T>& cols, std::size_t kh, std::size_t kw, Stride stride, Tensor<T>& grad4d);

/// Alignment weights for block cross-attention.
/// qkv: [(B*n) x 3*H*da] with column blocks [Q_0..Q_{H-1} | K_0.. | V_0..].
/// Block p draws keys from block partner[p]. Returns [B, H, n, n].
template <typename T>
Tensor<T> alignment_weights(const Tensor<T>& qkv, std::size_t blocks, std::size_t heads,
                            const std::vector<std::size_t>& partner, AttnNorm norm);

}  // namespace homnet::num
