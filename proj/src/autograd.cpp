#include "homnet/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "homnet/kernels.hpp"

namespace homnet::ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  kernels::add(dst.size(), dst.data.data(), src.data.data(), dst.data.data());
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph

template <typename T>
Var Graph<T>::input(Tensor<T> value) {
  if (!value.all_finite()) throw Error(ErrorCode::NonFinite, "input tensor contains NaN/Inf");
  Node node;
  node.owned = std::move(value);
  node.op = "input";
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var Graph<T>::param(std::string name, const Tensor<T>& value) {
  if (!value.all_finite()) throw Error(ErrorCode::NonFinite, "parameter " + name + " contains NaN/Inf");
  Node node;
  node.borrowed = &value;
  node.requires_grad = true;
  node.op = "param";
  nodes_.push_back(std::move(node));
  const Var v{static_cast<std::uint32_t>(nodes_.size() - 1)};
  params_.emplace_back(std::move(name), v);
  return v;
}

template <typename T>
Var Graph<T>::emit(Tensor<T> value, std::vector<Var> parents, BackwardFn fn, const char* op) {
  if (!value.all_finite()) throw Error(ErrorCode::NonFinite, std::string("op ") + op + " produced NaN/Inf");
  Node node;
  node.owned = std::move(value);
  node.op = op;
  node.parents.reserve(parents.size());
  for (const Var p : parents) {
    node.parents.push_back(p.id);
    node.requires_grad = node.requires_grad || nodes_.at(p.id).requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Graph<T>::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.borrowed ? *n.borrowed : n.owned;
}

template <typename T>
Tensor<T>& Graph<T>::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.data.empty()) n.grad = Tensor<T>((n.borrowed ? *n.borrowed : n.owned).shape);
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var root, T seed) {
  if (value(root).size() != 1) {
    throw Error(ErrorCode::NonScalarRoot, "backward root has shape " + shape_string(value(root).shape));
  }
  grad(root).data[0] += seed;
  for (std::uint32_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward && !n.grad.data.empty()) n.backward(*this, id);
  }
}

template <typename T>
void Graph<T>::note_kink(bool side, bool exactly_at_kink) {
  kink_hash_ = (kink_hash_ ^ static_cast<std::uint64_t>(side ? 2 : 1)) * 1099511628211ull;
  if (exactly_at_kink) ++kinks_hit_;
}

// ---------------------------------------------------------------------------
// Ops

template <typename T>
Var matmul(Graph<T>& g, Var a, Var b) {
  Tensor<T> out = num::matmul(g.value(a), g.value(b));
  return g.emit(std::move(out), {a, b}, [a, b](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const Tensor<T>& av = g.value(a);
    const Tensor<T>& bv = g.value(b);
    const std::size_t M = av.shape[0], K = av.shape[1], N = bv.shape[1];
    if (g.requires_grad(a)) {
      const Tensor<T> bt = num::transpose(bv);
      kernels::gemm(M, N, K, go.data.data(), bt.data.data(), g.grad(a).data.data(), true);
    }
    if (g.requires_grad(b)) {
      const Tensor<T> at = num::transpose(av);
      kernels::gemm(K, M, N, at.data.data(), go.data.data(), g.grad(b).data.data(), true);
    }
  }, "matmul");
}

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  const Tensor<T>& av = g.value(a);
  const Tensor<T>& bv = g.value(b);
  require(av.shape == bv.shape, "add: " + shape_string(av.shape) + " vs " + shape_string(bv.shape));
  Tensor<T> out(av.shape);
  kernels::add(out.size(), av.data.data(), bv.data.data(), out.data.data());
  return g.emit(std::move(out), {a, b}, [a, b](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    if (g.requires_grad(a)) accumulate(g.grad(a), go);
    if (g.requires_grad(b)) accumulate(g.grad(b), go);
  }, "add");
}

template <typename T>
Var add_bias(Graph<T>& g, Var x, Var bias) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& bv = g.value(bias);
  require(xv.rank() == 2 && bv.size() == xv.shape[1],
          "add_bias: " + shape_string(xv.shape) + " + " + shape_string(bv.shape));
  const std::size_t R = xv.shape[0], Q = xv.shape[1];
  Tensor<T> out(xv.shape);
  for (std::size_t r = 0; r < R; ++r)
    kernels::add(Q, xv.data.data() + r * Q, bv.data.data(), out.data.data() + r * Q);
  return g.emit(std::move(out), {x, bias}, [x, bias, R, Q](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    if (g.requires_grad(x)) accumulate(g.grad(x), go);
    if (g.requires_grad(bias)) {
      T* gb = g.grad(bias).data.data();
      for (std::size_t r = 0; r < R; ++r) kernels::add(Q, gb, go.data.data() + r * Q, gb);
    }
  }, "add_bias");
}

template <typename T>
Var affine(Graph<T>& g, Var x, Var w, Var bias) {
  return add_bias(g, matmul(g, x, w), bias);
}

template <typename T>
Var scale(Graph<T>& g, Var x, T factor) {
  Tensor<T> out = num::scale(g.value(x), factor);
  return g.emit(std::move(out), {x}, [x, factor](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    kernels::axpy(go.size(), factor, go.data.data(), g.grad(x).data.data());
  }, "scale");
}

template <typename T>
Var relu(Graph<T>& g, Var x) {
  const Tensor<T>& xv = g.value(x);
  if (g.tracking_kinks()) {
    for (const T v : xv.data) g.note_kink(v > T{0}, v == T{0});
  }
  Tensor<T> out = num::act(xv, num::Activation::Relu);
  return g.emit(std::move(out), {x}, [x](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const Tensor<T>& xv = g.value(x);
    kernels::relu_backward(xv.size(), xv.data.data(), go.data.data(), g.grad(x).data.data());
  }, "relu");
}

template <typename T>
Var sigmoid(Graph<T>& g, Var x) {
  Tensor<T> out = num::act(g.value(x), num::Activation::Sigmoid);
  return g.emit(std::move(out), {x}, [x](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const Tensor<T>& y = g.value(Var{self});
    Tensor<T>& gx = g.grad(x);
    for (std::size_t i = 0; i < y.size(); ++i) gx.data[i] += go.data[i] * (y.data[i] * (T{1} - y.data[i]));
  }, "sigmoid");
}

template <typename T>
Var softmax_rows(Graph<T>& g, Var x) {
  Tensor<T> out = num::softmax_rows(g.value(x));
  return g.emit(std::move(out), {x}, [x](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const Tensor<T>& w = g.value(Var{self});
    Tensor<T>& gx = g.grad(x);
    const std::size_t R = w.shape[0], C = w.shape[1];
    for (std::size_t r = 0; r < R; ++r) {
      T dot{0};
      for (std::size_t c = 0; c < C; ++c) dot += w(r, c) * go(r, c);
      for (std::size_t c = 0; c < C; ++c) gx(r, c) += w(r, c) * (go(r, c) - dot);
    }
  }, "softmax_rows");
}

template <typename T>
Var normalize_rows_raw(Graph<T>& g, Var x, double floor) {
  const Tensor<T>& xv = g.value(x);
  require(xv.rank() == 2, "normalize_rows_raw: expected a matrix");
  const std::size_t R = xv.shape[0], C = xv.shape[1];
  auto denom = std::make_shared<std::vector<T>>(R);
  auto floored = std::make_shared<std::vector<bool>>(R);
  for (std::size_t r = 0; r < R; ++r) {
    T total{0};
    for (std::size_t c = 0; c < C; ++c) total += xv(r, c);
    (*floored)[r] = std::abs(total) < static_cast<T>(floor);
    (*denom)[r] = (*floored)[r] ? std::copysign(static_cast<T>(floor), total) : total;
    if (g.tracking_kinks()) g.note_kink((*floored)[r], false);
  }
  Tensor<T> out(xv.shape);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out(r, c) = xv(r, c) / (*denom)[r];
  return g.emit(std::move(out), {x}, [x, denom, floored, R, C](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const Tensor<T>& xv = g.value(x);
    Tensor<T>& gx = g.grad(x);
    for (std::size_t r = 0; r < R; ++r) {
      const T d = (*denom)[r];
      T cross{0};
      if (!(*floored)[r]) {
        for (std::size_t c = 0; c < C; ++c) cross += go(r, c) * xv(r, c);
        cross /= d * d;
      }
      for (std::size_t c = 0; c < C; ++c) gx(r, c) += go(r, c) / d - cross;
    }
  }, "normalize_rows_raw");
}

template <typename T>
Var transpose(Graph<T>& g, Var x) {
  Tensor<T> out = num::transpose(g.value(x));
  return g.emit(std::move(out), {x}, [x](Graph<T>& g, std::uint32_t self) {
    accumulate(g.grad(x), num::transpose(g.grad(Var{self})));
  }, "transpose");
}

template <typename T>
Var block_transpose(Graph<T>& g, Var x, std::size_t blocks) {
  Tensor<T> out = num::block_transpose(g.value(x), blocks);
  return g.emit(std::move(out), {x}, [x, blocks](Graph<T>& g, std::uint32_t self) {
    accumulate(g.grad(x), num::block_transpose(g.grad(Var{self}), blocks));
  }, "block_transpose");
}

template <typename T>
Var reshape(Graph<T>& g, Var x, Shape shape) {
  const Tensor<T>& xv = g.value(x);
  require(shape_size(shape) == xv.size(), "reshape: " + shape_string(xv.shape) + " -> " + shape_string(shape));
  Tensor<T> out(std::move(shape), xv.data);
  return g.emit(std::move(out), {x}, [x](Graph<T>& g, std::uint32_t self) {
    accumulate(g.grad(x), g.grad(Var{self}));
  }, "reshape");
}

template <typename T>
Var concat_cols(Graph<T>& g, const std::vector<Var>& parts) {
  std::vector<const Tensor<T>*> values;
  for (const Var p : parts) values.push_back(&g.value(p));
  Tensor<T> out = num::concat_cols(values);
  return g.emit(std::move(out), parts, [parts](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const std::size_t rows = go.shape[0], cols = go.shape[1];
    std::size_t offset = 0;
    for (const Var p : parts) {
      const std::size_t pc = g.shape(p)[1];
      if (g.requires_grad(p)) {
        Tensor<T>& gp = g.grad(p);
        for (std::size_t r = 0; r < rows; ++r)
          kernels::add(pc, gp.data.data() + r * pc, go.data.data() + r * cols + offset, gp.data.data() + r * pc);
      }
      offset += pc;
    }
  }, "concat_cols");
}

template <typename T>
Var concat_rows(Graph<T>& g, const std::vector<Var>& parts) {
  std::vector<const Tensor<T>*> values;
  for (const Var p : parts) values.push_back(&g.value(p));
  Tensor<T> out = num::concat_rows(values);
  return g.emit(std::move(out), parts, [parts](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    std::size_t offset = 0;
    for (const Var p : parts) {
      const std::size_t n = g.value(p).size();
      if (g.requires_grad(p)) {
        Tensor<T>& gp = g.grad(p);
        kernels::add(n, gp.data.data(), go.data.data() + offset, gp.data.data());
      }
      offset += n;
    }
  }, "concat_rows");
}

template <typename T>
Var slice_rows(Graph<T>& g, Var x, std::size_t begin, std::size_t end) {
  const Tensor<T>& xv = g.value(x);
  require(xv.rank() == 2 && begin < end && end <= xv.shape[0], "slice_rows: range out of bounds");
  const std::size_t C = xv.shape[1];
  Tensor<T> out({end - begin, C},
                std::vector<T>(xv.data.begin() + begin * C, xv.data.begin() + end * C));
  return g.emit(std::move(out), {x}, [x, begin, C](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    T* dst = g.grad(x).data.data() + begin * C;
    kernels::add(go.size(), dst, go.data.data(), dst);
  }, "slice_rows");
}

template <typename T>
Var sum(Graph<T>& g, Var x) {
  Tensor<T> out({1}, std::vector<T>{num::sum(g.value(x))});
  return g.emit(std::move(out), {x}, [x](Graph<T>& g, std::uint32_t self) {
    const T go = g.grad(Var{self}).data[0];
    for (T& v : g.grad(x).data) v += go;
  }, "sum");
}

template <typename T>
Var conv2d_strided(Graph<T>& g, Var input, Var kernels_var, num::Stride stride) {
  const Tensor<T>& in = g.value(input);
  const Tensor<T>& kv = g.value(kernels_var);
  Tensor<T> out = num::conv2d_strided(in, kv, stride);
  const Shape s4 = in.rank() == 4 ? in.shape : Shape{1, in.shape[0], in.shape[1], in.shape[2]};
  const std::size_t kh = kv.shape[2], kw = kv.shape[3], Co = kv.shape[0];
  auto cols = std::make_shared<Tensor<T>>(num::im2col(Tensor<T>(s4, in.data), kh, kw, stride));
  return g.emit(std::move(out), {input, kernels_var},
                [input, kernels_var, stride, s4, kh, kw, Co, cols](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const std::size_t N = s4[0];
    const std::size_t CKK = cols->shape[0], NP = cols->shape[1], P = NP / N;
    Tensor<T> gflat({Co, NP});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t o = 0; o < Co; ++o)
        std::copy_n(go.data.data() + (n * Co + o) * P, P, gflat.data.data() + o * NP + n * P);
    if (g.requires_grad(kernels_var)) {
      const Tensor<T> colsT = num::transpose(*cols);
      kernels::gemm(Co, NP, CKK, gflat.data.data(), colsT.data.data(), g.grad(kernels_var).data.data(), true);
    }
    if (g.requires_grad(input)) {
      Tensor<T> kmat({Co, CKK}, g.value(kernels_var).data);
      const Tensor<T> kT = num::transpose(kmat);
      Tensor<T> gcols({CKK, NP});
      kernels::gemm(CKK, Co, NP, kT.data.data(), gflat.data.data(), gcols.data.data(), false);
      Tensor<T> gin(s4);
      num::col2im_add(gcols, kh, kw, stride, gin);
      accumulate(g.grad(input), gin);
    }
  }, "conv2d_strided");
}

template <typename T>
Var block_attention(Graph<T>& g, Var qkv, std::size_t blocks, std::size_t heads,
                    std::vector<std::size_t> partner, num::AttnNorm norm) {
  const Tensor<T>& x = g.value(qkv);
  auto weights = std::make_shared<Tensor<T>>(num::alignment_weights(x, blocks, heads, partner, norm));
  const std::size_t n = x.shape[0] / blocks, width = x.shape[1], da = width / (3 * heads);
  const std::size_t out_w = heads * da;

  // Raw normalization floors the row sum; remember which rows hit the floor
  // so backward treats their denominator as constant.
  auto floored = std::make_shared<std::vector<T>>();
  if (norm == num::AttnNorm::RawEps) {
    floored->resize(blocks * heads * n);
    const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(da));
    for (std::size_t p = 0; p < blocks; ++p)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t e = 0; e < n; ++e) {
          T total{0};
          const T* qe = x.data.data() + (p * n + e) * width + h * da;
          for (std::size_t z = 0; z < n; ++z) {
            const T* kz = x.data.data() + (partner[p] * n + z) * width + (heads + h) * da;
            T dot{0};
            for (std::size_t c = 0; c < da; ++c) dot += qe[c] * kz[c];
            total += dot * inv_sqrt;
          }
          const bool hit = std::abs(total) < static_cast<T>(num::kRawFloor);
          (*floored)[(p * heads + h) * n + e] = hit ? T{1} : T{0};
          if (g.tracking_kinks()) g.note_kink(hit, false);
        }
  }

  // Per block and head, O = W V as one GEMM over gathered V rows.
  Tensor<T> out({blocks * n, out_w});
  std::vector<T> vh(n * da), oh(n * da);
  for (std::size_t p = 0; p < blocks; ++p)
    for (std::size_t h = 0; h < heads; ++h) {
      const T* w = weights->data.data() + (p * heads + h) * n * n;
      for (std::size_t z = 0; z < n; ++z) {
        const T* vz = x.data.data() + (partner[p] * n + z) * width + (2 * heads + h) * da;
        std::copy(vz, vz + da, vh.begin() + z * da);
      }
      kernels::gemm(n, n, da, w, vh.data(), oh.data(), false);
      for (std::size_t e = 0; e < n; ++e)
        std::copy(oh.begin() + e * da, oh.begin() + (e + 1) * da, out.data.begin() + (p * n + e) * out_w + h * da);
    }

  return g.emit(std::move(out), {qkv},
                [qkv, blocks, heads, partner, norm, weights, floored, n, width, da, out_w](Graph<T>& g,
                                                                                          std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const Tensor<T>& x = g.value(qkv);
    Tensor<T>& gx = g.grad(qkv);
    const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(da));
    std::vector<T> gw(n * n), gs(n * n);
    for (std::size_t p = 0; p < blocks; ++p) {
      const std::size_t q = partner[p];
      for (std::size_t h = 0; h < heads; ++h) {
        const T* w = weights->data.data() + (p * heads + h) * n * n;
        // dW = dO V^T ; dV += W^T dO
        for (std::size_t e = 0; e < n; ++e) {
          const T* goe = go.data.data() + (p * n + e) * out_w + h * da;
          for (std::size_t z = 0; z < n; ++z) {
            const T* vz = x.data.data() + (q * n + z) * width + (2 * heads + h) * da;
            T dot{0};
            for (std::size_t c = 0; c < da; ++c) dot += goe[c] * vz[c];
            gw[e * n + z] = dot;
            T* gvz = gx.data.data() + (q * n + z) * width + (2 * heads + h) * da;
            kernels::axpy(da, w[e * n + z], goe, gvz);
          }
        }
        // Back through the row normalization to the raw scores.
        for (std::size_t e = 0; e < n; ++e) {
          if (norm == num::AttnNorm::Softmax) {
            T dot{0};
            for (std::size_t z = 0; z < n; ++z) dot += w[e * n + z] * gw[e * n + z];
            for (std::size_t z = 0; z < n; ++z) gs[e * n + z] = w[e * n + z] * (gw[e * n + z] - dot);
          } else {
            // Weights alone do not determine the denominator; recompute the scores.
            const T* qe = x.data.data() + (p * n + e) * width + h * da;
            std::vector<T> s(n);
            T total{0};
            for (std::size_t z = 0; z < n; ++z) {
              const T* kz = x.data.data() + (q * n + z) * width + (heads + h) * da;
              T dot{0};
              for (std::size_t c = 0; c < da; ++c) dot += qe[c] * kz[c];
              s[z] = dot * inv_sqrt;
              total += s[z];
            }
            const bool hit = (*floored)[(p * heads + h) * n + e] != T{0};
            const T d = hit ? std::copysign(static_cast<T>(num::kRawFloor), total) : total;
            T cross{0};
            if (!hit) {
              for (std::size_t z = 0; z < n; ++z) cross += gw[e * n + z] * s[z];
              cross /= d * d;
            }
            for (std::size_t z = 0; z < n; ++z) gs[e * n + z] = gw[e * n + z] / d - cross;
          }
        }
        // s = q k^T / sqrt(da): dQ += dS K / sqrt(da); dK += dS^T Q / sqrt(da)
        for (std::size_t e = 0; e < n; ++e) {
          const T* qe = x.data.data() + (p * n + e) * width + h * da;
          T* gqe = gx.data.data() + (p * n + e) * width + h * da;
          for (std::size_t z = 0; z < n; ++z) {
            const T coeff = gs[e * n + z] * inv_sqrt;
            const T* kz = x.data.data() + (q * n + z) * width + (heads + h) * da;
            T* gkz = gx.data.data() + (q * n + z) * width + (heads + h) * da;
            kernels::axpy(da, coeff, kz, gqe);
            kernels::axpy(da, coeff, qe, gkz);
          }
        }
      }
    }
  }, "block_attention");
}

template <typename T>
Var block_mix(Graph<T>& g, Var x, Var mix, std::size_t blocks, std::vector<std::size_t> partner) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& mv = g.value(mix);
  require(xv.rank() == 2 && blocks > 0 && xv.shape[0] % blocks == 0, "block_mix: bad input shape");
  const std::size_t n = xv.shape[0] / blocks, C = xv.shape[1];
  require(mv.shape == Shape{n, n}, "block_mix: mix must be " + shape_string({n, n}));
  require(partner.size() == blocks, "block_mix: partner map size");
  Tensor<T> out({blocks * n, C});
  for (std::size_t p = 0; p < blocks; ++p)
    kernels::gemm(n, n, C, mv.data.data(), xv.data.data() + partner[p] * n * C, out.data.data() + p * n * C, false);
  return g.emit(std::move(out), {x, mix}, [x, mix, blocks, partner, n, C](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    const Tensor<T>& xv = g.value(x);
    if (g.requires_grad(x)) {
      const Tensor<T> mT = num::transpose(g.value(mix));
      Tensor<T>& gx = g.grad(x);
      for (std::size_t p = 0; p < blocks; ++p)
        kernels::gemm(n, n, C, mT.data.data(), go.data.data() + p * n * C, gx.data.data() + partner[p] * n * C, true);
    }
    if (g.requires_grad(mix)) {
      Tensor<T>& gm = g.grad(mix);
      for (std::size_t p = 0; p < blocks; ++p) {
        const Tensor<T> xb({n, C}, std::vector<T>(xv.data.begin() + partner[p] * n * C,
                                                   xv.data.begin() + (partner[p] + 1) * n * C));
        const Tensor<T> xbT = num::transpose(xb);
        kernels::gemm(n, C, n, go.data.data() + p * n * C, xbT.data.data(), gm.data.data(), true);
      }
    }
  }, "block_mix");
}

template <typename T>
Var banded(Graph<T>& g, Var taps, std::size_t n) {
  const Tensor<T>& tv = g.value(taps);
  require(tv.size() % 2 == 1, "banded: tap count must be odd");
  const std::size_t w = tv.size() / 2;
  Tensor<T> out({n, n});
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t t = 0; t < tv.size(); ++t) {
      const std::ptrdiff_t z = static_cast<std::ptrdiff_t>(e + t) - static_cast<std::ptrdiff_t>(w);
      if (z >= 0 && z < static_cast<std::ptrdiff_t>(n)) out(e, static_cast<std::size_t>(z)) = tv.data[t];
    }
  return g.emit(std::move(out), {taps}, [taps, n, w](Graph<T>& g, std::uint32_t self) {
    const Tensor<T>& go = g.grad(Var{self});
    Tensor<T>& gt = g.grad(taps);
    for (std::size_t e = 0; e < n; ++e)
      for (std::size_t t = 0; t < gt.size(); ++t) {
        const std::ptrdiff_t z = static_cast<std::ptrdiff_t>(e + t) - static_cast<std::ptrdiff_t>(w);
        if (z >= 0 && z < static_cast<std::ptrdiff_t>(n)) gt.data[t] += go(e, static_cast<std::size_t>(z));
      }
  }, "banded");
}

template <typename T>
Var bce(Graph<T>& g, Var y_hat, T label) {
  const Tensor<T>& yv = g.value(y_hat);
  require(yv.size() == 1, "bce: prediction must hold one element");
  const T lo = static_cast<T>(kBceClamp), hi = T{1} - static_cast<T>(kBceClamp);
  const T raw = yv.data[0];
  const T p = std::clamp(raw, lo, hi);
  if (g.tracking_kinks()) g.note_kink(p == raw, p != raw);
  const T loss = -(label * std::log(p) + (T{1} - label) * std::log(T{1} - p));
  return g.emit(Tensor<T>({1}, std::vector<T>{loss}), {y_hat}, [y_hat, label, p](Graph<T>& g, std::uint32_t self) {
    const T go = g.grad(Var{self}).data[0];
    g.grad(y_hat).data[0] += go * (-label / p + (T{1} - label) / (T{1} - p));
  }, "bce");
}

#define HOMNET_INSTANTIATE(T)                                                                          \
  template class Graph<T>;                                                                             \
  template Var matmul(Graph<T>&, Var, Var);                                                            \
  template Var add(Graph<T>&, Var, Var);                                                               \
  template Var add_bias(Graph<T>&, Var, Var);                                                          \
  template Var affine(Graph<T>&, Var, Var, Var);                                                       \
  template Var scale(Graph<T>&, Var, T);                                                               \
  template Var relu(Graph<T>&, Var);                                                                   \
  template Var sigmoid(Graph<T>&, Var);                                                                \
  template Var softmax_rows(Graph<T>&, Var);                                                           \
  template Var normalize_rows_raw(Graph<T>&, Var, double);                                             \
  template Var transpose(Graph<T>&, Var);                                                              \
  template Var block_transpose(Graph<T>&, Var, std::size_t);                                           \
  template Var reshape(Graph<T>&, Var, Shape);                                                         \
  template Var concat_cols(Graph<T>&, const std::vector<Var>&);                                        \
  template Var concat_rows(Graph<T>&, const std::vector<Var>&);                                        \
  template Var slice_rows(Graph<T>&, Var, std::size_t, std::size_t);                                   \
  template Var sum(Graph<T>&, Var);                                                                    \
  template Var conv2d_strided(Graph<T>&, Var, Var, num::Stride);                                       \
  template Var block_attention(Graph<T>&, Var, std::size_t, std::size_t, std::vector<std::size_t>,     \
                               num::AttnNorm);                                                         \
  template Var block_mix(Graph<T>&, Var, Var, std::size_t, std::vector<std::size_t>);                  \
  template Var banded(Graph<T>&, Var, std::size_t);                                                    \
  template Var bce(Graph<T>&, Var, T);

HOMNET_INSTANTIATE(float)
HOMNET_INSTANTIATE(double)

}  // namespace homnet::ad
