#include "homnet/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "homnet/kernels.hpp"

namespace homnet::num {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

void require_matrix(const Shape& s, const char* who) {
  require(s.size() == 2, std::string(who) + ": expected a matrix, got " + shape_string(s));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a.shape, "matmul");
  require_matrix(b.shape, "matmul");
  require(a.shape[1] == b.shape[0], "matmul: " + shape_string(a.shape) + " x " + shape_string(b.shape));
  Tensor<T> out({a.shape[0], b.shape[1]});
  kernels::gemm(a.shape[0], a.shape[1], b.shape[1], a.data.data(), b.data.data(), out.data.data(), false);
  return out;
}

template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias) {
  Tensor<T> out = matmul(x, w);
  if (bias) {
    const std::size_t q = out.shape[1];
    require(bias->size() == q, "affine: bias length " + std::to_string(bias->size()) + " != " + std::to_string(q));
    for (std::size_t r = 0; r < out.shape[0]; ++r)
      kernels::add(q, out.data.data() + r * q, bias->data.data(), out.data.data() + r * q);
  }
  return out;
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
Tensor<T> act(const Tensor<T>& x, Activation kind) {
  Tensor<T> out(x.shape);
  if (kind == Activation::Relu) {
    kernels::relu(x.size(), x.data.data(), out.data.data());
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = sigmoid(x.data[i]);
  }
  return out;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  require_matrix(x.shape, "softmax_rows");
  Tensor<T> out(x.shape);
  const std::size_t n = x.shape[1];
  for (std::size_t r = 0; r < x.shape[0]; ++r) {
    const T* in = x.data.data() + r * n;
    T* o = out.data.data() + r * n;
    const T mx = *std::max_element(in, in + n);
    T total{0};
    for (std::size_t c = 0; c < n; ++c) {
      o[c] = std::exp(in[c] - mx);
      total += o[c];
    }
    for (std::size_t c = 0; c < n; ++c) o[c] /= total;
  }
  return out;
}

template <typename T>
Tensor<T> normalize_rows_raw(const Tensor<T>& x, double floor) {
  require_matrix(x.shape, "normalize_rows_raw");
  Tensor<T> out(x.shape);
  const std::size_t n = x.shape[1];
  for (std::size_t r = 0; r < x.shape[0]; ++r) {
    const T* in = x.data.data() + r * n;
    T total{0};
    for (std::size_t c = 0; c < n; ++c) total += in[c];
    if (std::abs(total) < static_cast<T>(floor)) total = std::copysign(static_cast<T>(floor), total);
    for (std::size_t c = 0; c < n; ++c) out.data[r * n + c] = in[c] / total;
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_matrix(x.shape, "transpose");
  const std::size_t R = x.shape[0], C = x.shape[1];
  Tensor<T> out({C, R});
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out.data[c * R + r] = x.data[r * C + c];
  return out;
}

template <typename T>
Tensor<T> block_transpose(const Tensor<T>& x, std::size_t blocks) {
  require_matrix(x.shape, "block_transpose");
  require(blocks > 0 && x.shape[0] % blocks == 0, "block_transpose: rows not divisible by blocks");
  const std::size_t n = x.shape[0] / blocks, q = x.shape[1];
  Tensor<T> out({blocks * q, n});
  for (std::size_t b = 0; b < blocks; ++b) {
    const T* in = x.data.data() + b * n * q;
    T* o = out.data.data() + b * q * n;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < q; ++c) o[c * n + r] = in[r * q + c];
  }
  return out;
}

template <typename T>
Tensor<T> concat_cols(const std::vector<const Tensor<T>*>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts.front()->shape.at(0);
  std::size_t cols = 0;
  for (const auto* p : parts) {
    require_matrix(p->shape, "concat_cols");
    require(p->shape[0] == rows, "concat_cols: row count mismatch");
    cols += p->shape[1];
  }
  Tensor<T> out({rows, cols});
  std::size_t offset = 0;
  for (const auto* p : parts) {
    const std::size_t pc = p->shape[1];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(p->data.data() + r * pc, pc, out.data.data() + r * cols + offset);
    offset += pc;
  }
  return out;
}

template <typename T>
Tensor<T> concat_rows(const std::vector<const Tensor<T>*>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = parts.front()->shape.at(1);
  std::size_t rows = 0;
  for (const auto* p : parts) {
    require_matrix(p->shape, "concat_rows");
    require(p->shape[1] == cols, "concat_rows: column count mismatch");
    rows += p->shape[0];
  }
  Tensor<T> out({rows, cols});
  auto it = out.data.begin();
  for (const auto* p : parts) it = std::copy(p->data.begin(), p->data.end(), it);
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  Tensor<T> out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] * factor;
  return out;
}

template <typename T>
T sum(const Tensor<T>& x) {
  T total{0};
  for (const T v : x.data) total += v;
  return total;
}

template <typename T>
Tensor<T> im2col(const Tensor<T>& in, std::size_t kh, std::size_t kw, Stride stride) {
  const std::size_t N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
  const std::size_t Ho = (H - kh) / stride.h + 1, Wo = (W - kw) / stride.w + 1;
  const std::size_t P = Ho * Wo;
  Tensor<T> cols({C * kh * kw, N * P});
  const std::size_t ld = N * P;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < kh; ++i)
      for (std::size_t j = 0; j < kw; ++j) {
        T* row = cols.data.data() + ((c * kh + i) * kw + j) * ld;
        for (std::size_t n = 0; n < N; ++n) {
          const T* plane = in.data.data() + (n * C + c) * H * W;
          for (std::size_t y = 0; y < Ho; ++y)
            for (std::size_t x = 0; x < Wo; ++x)
              row[n * P + y * Wo + x] = plane[(y * stride.h + i) * W + x * stride.w + j];
        }
      }
  return cols;
}

template <typename T>
void col2im_add(const Tensor<T>& cols, std::size_t kh, std::size_t kw, Stride stride, Tensor<T>& g) {
  const std::size_t N = g.shape[0], C = g.shape[1], H = g.shape[2], W = g.shape[3];
  const std::size_t Ho = (H - kh) / stride.h + 1, Wo = (W - kw) / stride.w + 1;
  const std::size_t P = Ho * Wo, ld = N * P;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < kh; ++i)
      for (std::size_t j = 0; j < kw; ++j) {
        const T* row = cols.data.data() + ((c * kh + i) * kw + j) * ld;
        for (std::size_t n = 0; n < N; ++n) {
          T* plane = g.data.data() + (n * C + c) * H * W;
          for (std::size_t y = 0; y < Ho; ++y)
            for (std::size_t x = 0; x < Wo; ++x) plane[(y * stride.h + i) * W + x * stride.w + j] += row[n * P + y * Wo + x];
        }
      }
}

template <typename T>
Tensor<T> conv2d_strided(const Tensor<T>& input, const Tensor<T>& kernels, Stride stride) {
  require(input.rank() == 3 || input.rank() == 4, "conv2d: input must be [C,H,W] or [N,C,H,W]");
  require(kernels.rank() == 4, "conv2d: kernels must be [C_out,C_in,kh,kw]");
  const bool batched = input.rank() == 4;
  const Shape s4 = batched ? input.shape : Shape{1, input.shape[0], input.shape[1], input.shape[2]};
  const std::size_t N = s4[0], C = s4[1], H = s4[2], W = s4[3];
  const std::size_t Co = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
  require(kernels.shape[1] == C, "conv2d: channel mismatch " + shape_string(input.shape) + " vs " +
                                     shape_string(kernels.shape));
  require(stride.h > 0 && stride.w > 0 && H >= kh && W >= kw, "conv2d: kernel larger than input");
  require((H - kh) % stride.h == 0 && (W - kw) % stride.w == 0,
          "conv2d: output extent not integral for " + shape_string(input.shape));
  const std::size_t Ho = (H - kh) / stride.h + 1, Wo = (W - kw) / stride.w + 1, P = Ho * Wo;

  Tensor<T> in4(s4, input.data);
  const Tensor<T> cols = im2col(in4, kh, kw, stride);
  Tensor<T> flat({Co, N * P});
  kernels::gemm(Co, C * kh * kw, N * P, kernels.data.data(), cols.data.data(), flat.data.data(), false);

  Tensor<T> out(batched ? Shape{N, Co, Ho, Wo} : Shape{Co, Ho, Wo});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < Co; ++o)
      std::copy_n(flat.data.data() + o * N * P + n * P, P, out.data.data() + (n * Co + o) * P);
  return out;
}

template <typename T>
Tensor<T> alignment_weights(const Tensor<T>& qkv, std::size_t blocks, std::size_t heads,
                            const std::vector<std::size_t>& partner, AttnNorm norm) {
  require_matrix(qkv.shape, "alignment_weights");
  require(blocks > 0 && qkv.shape[0] % blocks == 0, "alignment_weights: rows not divisible by blocks");
  require(heads > 0 && qkv.shape[1] % (3 * heads) == 0, "alignment_weights: bad column count");
  require(partner.size() == blocks, "alignment_weights: partner map size");
  const std::size_t n = qkv.shape[0] / blocks, width = qkv.shape[1], da = width / (3 * heads);
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(da));
  Tensor<T> out({blocks, heads, n, n});
  Tensor<T> scores({n, n});
  std::vector<T> qh(n * da), kt(da * n);
  for (std::size_t p = 0; p < blocks; ++p) {
    const std::size_t q = partner[p];
    for (std::size_t h = 0; h < heads; ++h) {
      // Gather Q of block p and K^T of its partner so one GEMM yields every dot product.
      for (std::size_t e = 0; e < n; ++e) {
        const T* qe = qkv.data.data() + (p * n + e) * width + h * da;
        const T* ke = qkv.data.data() + (q * n + e) * width + (heads + h) * da;
        std::copy(qe, qe + da, qh.begin() + e * da);
        for (std::size_t c = 0; c < da; ++c) kt[c * n + e] = ke[c];
      }
      kernels::gemm(n, da, n, qh.data(), kt.data(), scores.data.data(), false);
      for (T& v : scores.data) v = v * inv_sqrt;
      const Tensor<T> w = norm == AttnNorm::Softmax ? softmax_rows(scores) : normalize_rows_raw(scores);
      std::copy(w.data.begin(), w.data.end(), out.data.begin() + (p * heads + h) * n * n);
    }
  }
  return out;
}

#define HOMNET_INSTANTIATE(T)                                                                         \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> affine(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);                    \
  template Tensor<T> act(const Tensor<T>&, Activation);                                               \
  template T sigmoid(T);                                                                              \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                                  \
  template Tensor<T> normalize_rows_raw(const Tensor<T>&, double);                                    \
  template Tensor<T> transpose(const Tensor<T>&);                                                     \
  template Tensor<T> block_transpose(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> concat_cols(const std::vector<const Tensor<T>*>&);                               \
  template Tensor<T> concat_rows(const std::vector<const Tensor<T>*>&);                               \
  template Tensor<T> scale(const Tensor<T>&, T);                                                      \
  template T sum(const Tensor<T>&);                                                                   \
  template Tensor<T> im2col(const Tensor<T>&, std::size_t, std::size_t, Stride);                      \
  template void col2im_add(const Tensor<T>&, std::size_t, std::size_t, Stride, Tensor<T>&);           \
  template Tensor<T> conv2d_strided(const Tensor<T>&, const Tensor<T>&, Stride);                      \
  template Tensor<T> alignment_weights(const Tensor<T>&, std::size_t, std::size_t,                    \
                                       const std::vector<std::size_t>&, AttnNorm);

HOMNET_INSTANTIATE(float)
HOMNET_INSTANTIATE(double)

}  // namespace homnet::num
