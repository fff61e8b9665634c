#pragma once

// The network: per-chromosome region encoder (CMS block), homologous
// cross-alignment (Hom block), attention-weighted bag pooling, and the loss.
//
// A batch of bags is stacked chromosome by chromosome in the order
// a0, b0, a1, b1, ... so the homolog of block p is block p ^ 1.

#include <cstdint>
#include <string>
#include <vector>

#include "homnet/autograd.hpp"
#include "homnet/karyotype.hpp"
#include "homnet/numerics.hpp"
#include "homnet/params.hpp"
#include "json.hpp"

namespace homnet {

enum class AlignMode {
  Attention,  // content-based cross attention (default)
  Mlp,        // learned position-to-position mixing matrix
  Cnn,        // learned 3-tap local band
};

std::string to_string(AlignMode mode);
AlignMode parse_align_mode(const std::string& s);
std::string to_string(num::AttnNorm norm);
num::AttnNorm parse_attn_norm(const std::string& s);

struct ModelConfig {
  std::size_t d = kDefaultLength;
  std::size_t k_mg = 32;
  std::size_t l_r = 64;
  std::size_t n_h = 4;
  std::size_t hom_layers = 2;
  std::size_t l_h = 128;
  std::size_t m = 5;
  num::AttnNorm attn_norm = num::AttnNorm::Softmax;
  AlignMode align = AlignMode::Attention;

  std::size_t n_r() const { return d / k_mg; }
  std::size_t d_a() const { return l_r / n_h; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws InvariantViolation for illegal extents.
void validate(const ModelConfig& cfg);
nlohmann::ordered_json to_json(const ModelConfig& cfg);
/// Missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

/// Xavier-uniform weights drawn in parameter order from mt19937_64(seed); biases zero.
ParamStore<double> init_params(const ModelConfig& cfg, std::uint64_t seed);

struct ParamSpec {
  std::string name;
  Shape shape;
  bool bias = false;
};

/// Canonical parameter names and shapes for cfg, in initialization order.
std::vector<ParamSpec> param_layout(const ModelConfig& cfg);

/// Throws ShapeMismatch unless params match param_layout(cfg) exactly.
template <typename T>
void check_params(const ParamStore<T>& params, const ModelConfig& cfg);

struct Prediction {
  double y_hat = 0.0;
  std::vector<double> alphas;
};

/// Stacked network input for a batch of bags.
template <typename T>
struct BatchInput {
  Tensor<T> sequences;  // [2P, 1, 2, d], chromosomes a0, b0, a1, b1, ...
  Tensor<T> condition;  // [2P, 28] type and band one-hot per chromosome
  std::vector<std::size_t> bag_sizes;
};

/// swap (optional) holds one flag per pair across the batch; set flags exchange a and b.
template <typename T>
BatchInput<T> make_batch(const std::vector<const BagRecord*>& bags, const ModelConfig& cfg,
                         const std::vector<bool>* swap = nullptr);

namespace model {

/// Resolves parameter names to graph leaves once per graph.
template <typename T>
class Bound {
 public:
  Bound(ad::Graph<T>& g, const ParamStore<T>& params) : g_(g), params_(params) {}
  ad::Var operator[](const std::string& name);
  ad::Graph<T>& graph() { return g_; }

 private:
  ad::Graph<T>& g_;
  const ParamStore<T>& params_;
  std::vector<std::pair<std::string, ad::Var>> cache_;
};

/// [N,1,2,d] sequences + [N,28] conditions -> [N*n_r, l_r] region features.
template <typename T>
ad::Var cms(Bound<T>& p, const ModelConfig& cfg, ad::Var sequences, ad::Var condition);

/// [2P*n_r, l_r] interleaved region features -> [P, l_h] pair differences.
template <typename T>
ad::Var hom(Bound<T>& p, const ModelConfig& cfg, ad::Var regions);

struct BagOutputs {
  std::vector<ad::Var> y_hat;  // one [1,1] per bag
  std::vector<ad::Var> alpha;  // one [m,1] per bag
};

/// [P, l_h] pair differences grouped by bag_sizes -> predictions.
template <typename T>
BagOutputs bag(Bound<T>& p, ad::Var diffs, const std::vector<std::size_t>& bag_sizes);

template <typename T>
BagOutputs forward(Bound<T>& p, const ModelConfig& cfg, const BatchInput<T>& batch);

/// Mean BCE over the batch.
template <typename T>
ad::Var batch_loss(ad::Graph<T>& g, const BagOutputs& out, const std::vector<int>& labels);

}  // namespace model

/// Single-chromosome encoder: 2 x d sequence -> n_r x l_r.
template <typename T>
Tensor<T> cms_forward(const ChromosomeSequence& seq, const ConditionEncoding& cond, const ParamStore<T>& params,
                      const ModelConfig& cfg);

/// Pair difference H' (length l_h) from two n_r x l_r encodings.
template <typename T>
Tensor<T> hom_align(const Tensor<T>& ra, const Tensor<T>& rb, const ParamStore<T>& params, const ModelConfig& cfg);

/// Throws EmptyBag for an empty list.
template <typename T>
Prediction bag_forward(const std::vector<Tensor<T>>& diffs, const ParamStore<T>& params);

template <typename T>
Prediction predict_bag(const BagRecord& record, const ParamStore<T>& params, const ModelConfig& cfg);

/// One forward pass over many bags.
template <typename T>
std::vector<Prediction> predict_bags(const std::vector<const BagRecord*>& records, const ParamStore<T>& params,
                                     const ModelConfig& cfg);

/// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1-1e-7].
double bce_loss(double y_hat, int label);

}  // namespace homnet
