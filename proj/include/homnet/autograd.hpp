#pragma once

// Tape-based reverse-mode differentiation over Tensor-valued nodes.
//
// Nodes are appended in evaluation order, so reverse creation order is a
// valid topological order for backward(). Gradients accumulate into parents
// in a fixed order, which keeps repeated runs bit-identical.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "homnet/numerics.hpp"
#include "homnet/tensor.hpp"

namespace homnet::ad {

struct Var {
  std::uint32_t id = UINT32_MAX;
};

template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::uint32_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant leaf; no gradient flows into it.
  Var input(Tensor<T> value);
  /// Trainable leaf that borrows `value`; the caller keeps it alive for the graph's lifetime.
  Var param(std::string name, const Tensor<T>& value);
  /// Appends an op node. Rejects non-finite values.
  Var emit(Tensor<T> value, std::vector<Var> parents, BackwardFn fn, const char* op);

  const Tensor<T>& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient buffer of v; zero-initialized on first access.
  Tensor<T>& grad(Var v);

  /// Seeds d(root)/d(root) = seed and propagates. Root must hold one element.
  void backward(Var root, T seed = T{1});

  const std::vector<std::pair<std::string, Var>>& params() const { return params_; }
  std::size_t size() const { return nodes_.size(); }

  /// When enabled, non-smooth ops fold which side of their kink each element
  /// is on into kink_signature(), and count elements sitting exactly on one.
  void set_track_kinks(bool on) { track_kinks_ = on; }
  bool tracking_kinks() const { return track_kinks_; }
  void note_kink(bool side, bool exactly_at_kink);
  std::uint64_t kink_signature() const { return kink_hash_; }
  std::size_t kinks_hit() const { return kinks_hit_; }

 private:
  struct Node {
    const Tensor<T>* borrowed = nullptr;
    Tensor<T> owned;
    Tensor<T> grad;
    std::vector<std::uint32_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    const char* op = "";
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, Var>> params_;
  bool track_kinks_ = false;
  std::uint64_t kink_hash_ = 1469598103934665603ull;
  std::size_t kinks_hit_ = 0;
};

// Differentiable ops. Shapes follow the Tensor-level functions in numerics.hpp.

template <typename T> Var matmul(Graph<T>& g, Var a, Var b);
template <typename T> Var add(Graph<T>& g, Var a, Var b);
/// x[n x q] + bias[q] broadcast over rows.
template <typename T> Var add_bias(Graph<T>& g, Var x, Var bias);
template <typename T> Var affine(Graph<T>& g, Var x, Var w, Var bias);
template <typename T> Var scale(Graph<T>& g, Var x, T factor);
template <typename T> Var relu(Graph<T>& g, Var x);
template <typename T> Var sigmoid(Graph<T>& g, Var x);
template <typename T> Var softmax_rows(Graph<T>& g, Var x);
template <typename T> Var normalize_rows_raw(Graph<T>& g, Var x, double floor = num::kRawFloor);
template <typename T> Var transpose(Graph<T>& g, Var x);
template <typename T> Var block_transpose(Graph<T>& g, Var x, std::size_t blocks);
template <typename T> Var reshape(Graph<T>& g, Var x, Shape shape);
template <typename T> Var concat_cols(Graph<T>& g, const std::vector<Var>& parts);
template <typename T> Var concat_rows(Graph<T>& g, const std::vector<Var>& parts);
template <typename T> Var slice_rows(Graph<T>& g, Var x, std::size_t begin, std::size_t end);
template <typename T> Var sum(Graph<T>& g, Var x);
template <typename T> Var conv2d_strided(Graph<T>& g, Var input, Var kernels, num::Stride stride);

/// Multi-head cross attention over stacked blocks (see num::alignment_weights
/// for the qkv layout). Output block p, head h = weights(p,h) * V_h[partner[p]];
/// shape [(B*n) x H*da].
template <typename T>
Var block_attention(Graph<T>& g, Var qkv, std::size_t blocks, std::size_t heads,
                    std::vector<std::size_t> partner, num::AttnNorm norm);

/// Content-independent mixing: output block p = mix[n x n] * x[partner[p]].
template <typename T>
Var block_mix(Graph<T>& g, Var x, Var mix, std::size_t blocks, std::vector<std::size_t> partner);

/// n x n banded matrix with A[e][z] = taps[z - e + w] for |z - e| <= w, taps of length 2w+1.
template <typename T> Var banded(Graph<T>& g, Var taps, std::size_t n);

/// Binary cross-entropy of a one-element probability, clamped to [1e-7, 1 - 1e-7].
/// The clamp is transparent to the gradient.
template <typename T> Var bce(Graph<T>& g, Var y_hat, T label);

inline constexpr double kBceClamp = 1e-7;

}  // namespace homnet::ad
