#include "homnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "homnet/error.hpp"

namespace homnet {

namespace {

std::string layer_prefix(std::size_t layer) { return "hom.layer" + std::to_string(layer) + ".attn."; }

// Homolog of chromosome p in the interleaved stack.
std::vector<std::size_t> partner_map(std::size_t blocks) {
  std::vector<std::size_t> partner(blocks);
  for (std::size_t p = 0; p < blocks; ++p) partner[p] = p ^ 1u;
  return partner;
}

// A saturated sigmoid rounds to exactly 0 or 1; keep reported probabilities strictly inside (0,1).
double open_unit(double p) {
  return std::clamp(p, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

template <typename T>
Prediction to_prediction(const ad::Graph<T>& g, ad::Var y, ad::Var alpha) {
  Prediction out;
  out.y_hat = open_unit(static_cast<double>(g.value(y).data.at(0)));
  for (const T a : g.value(alpha).data) out.alphas.push_back(open_unit(static_cast<double>(a)));
  return out;
}

}  // namespace

std::string to_string(AlignMode mode) {
  switch (mode) {
    case AlignMode::Attention: return "attention";
    case AlignMode::Mlp: return "mlp";
    case AlignMode::Cnn: return "cnn";
  }
  return "?";
}

AlignMode parse_align_mode(const std::string& s) {
  if (s == "attention") return AlignMode::Attention;
  if (s == "mlp") return AlignMode::Mlp;
  if (s == "cnn") return AlignMode::Cnn;
  throw Error(ErrorCode::InvariantViolation, "align mode must be attention, mlp or cnn, got '" + s + "'");
}

std::string to_string(num::AttnNorm norm) { return norm == num::AttnNorm::Softmax ? "softmax" : "raw_eps"; }

num::AttnNorm parse_attn_norm(const std::string& s) {
  if (s == "softmax") return num::AttnNorm::Softmax;
  if (s == "raw_eps") return num::AttnNorm::RawEps;
  throw Error(ErrorCode::InvariantViolation, "attn_norm must be softmax or raw_eps, got '" + s + "'");
}

void validate(const ModelConfig& cfg) {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::InvariantViolation, "model config: " + why); };
  if (cfg.d == 0 || cfg.k_mg == 0 || cfg.l_r == 0 || cfg.n_h == 0 || cfg.hom_layers == 0 || cfg.m == 0) {
    fail("all extents must be >= 1");
  }
  if (cfg.d % cfg.k_mg != 0) fail("d=" + std::to_string(cfg.d) + " not divisible by k_mg=" + std::to_string(cfg.k_mg));
  if (cfg.l_r % cfg.n_h != 0) fail("l_r=" + std::to_string(cfg.l_r) + " not divisible by n_h=" + std::to_string(cfg.n_h));
  if (cfg.l_h < 2) fail("l_h must be >= 2 for the bag MLP");
}

nlohmann::ordered_json to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["d"] = cfg.d;
  j["k_mg"] = cfg.k_mg;
  j["l_r"] = cfg.l_r;
  j["n_h"] = cfg.n_h;
  j["hom_layers"] = cfg.hom_layers;
  j["l_h"] = cfg.l_h;
  j["m"] = cfg.m;
  j["attn_norm"] = to_string(cfg.attn_norm);
  j["align"] = to_string(cfg.align);
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig cfg) {
  try {
    const auto size = [&](const char* key, std::size_t& field) {
      if (j.contains(key)) field = j.at(key).get<std::size_t>();
    };
    size("d", cfg.d);
    size("k_mg", cfg.k_mg);
    size("l_r", cfg.l_r);
    size("n_h", cfg.n_h);
    size("hom_layers", cfg.hom_layers);
    size("l_h", cfg.l_h);
    size("m", cfg.m);
    if (j.contains("attn_norm")) cfg.attn_norm = parse_attn_norm(j.at("attn_norm").get<std::string>());
    if (j.contains("align")) cfg.align = parse_align_mode(j.at("align").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::vector<ParamSpec> param_layout(const ModelConfig& cfg) {
  validate(cfg);
  const std::size_t n_r = cfg.n_r(), l_r = cfg.l_r, d_a = cfg.d_a();
  std::vector<ParamSpec> out;
  const auto weight = [&](std::string name, Shape shape) { out.push_back({std::move(name), std::move(shape), false}); };
  const auto bias = [&](std::string name, std::size_t n) { out.push_back({std::move(name), Shape{n}, true}); };

  weight("cms.merge_kernels", {l_r, 1, 2, cfg.k_mg});
  weight("cms.W_info", {kConditionWidth, n_r * l_r});
  weight("cms.W_R1", {l_r, l_r});
  bias("cms.b_R1", l_r);
  weight("cms.W_R2", {l_r, l_r});
  bias("cms.b_R2", l_r);
  weight("cms.W_R3", {n_r, n_r});
  bias("cms.b_R3", n_r);
  weight("cms.W_R4", {n_r, n_r});
  bias("cms.b_R4", n_r);

  for (std::size_t layer = 0; layer < cfg.hom_layers; ++layer) {
    const std::string pre = layer_prefix(layer);
    switch (cfg.align) {
      case AlignMode::Attention:
        for (std::size_t h = 0; h < cfg.n_h; ++h) {
          const std::string head = pre + "head" + std::to_string(h) + ".";
          weight(head + "W_q", {l_r, d_a});
          weight(head + "W_k", {l_r, d_a});
          weight(head + "W_v", {l_r, d_a});
        }
        break;
      case AlignMode::Mlp:
        weight(pre + "W_v", {l_r, cfg.n_h * d_a});
        weight(pre + "W_align", {n_r, n_r});
        break;
      case AlignMode::Cnn:
        weight(pre + "W_v", {l_r, cfg.n_h * d_a});
        weight(pre + "align_taps", {3});
        break;
    }
    weight(pre + "W_head", {cfg.n_h * d_a, l_r});
    weight(pre + "W_diff", {l_r, l_r});
  }

  weight("hom.W_hom", {2 * n_r * l_r, cfg.l_h});
  bias("hom.b_hom", cfg.l_h);
  weight("bag.mlp.W1", {cfg.l_h, cfg.l_h / 2});
  bias("bag.mlp.b1", cfg.l_h / 2);
  weight("bag.mlp.W2", {cfg.l_h / 2, 1});
  bias("bag.mlp.b2", 1);
  weight("bag.W_bag", {cfg.l_h, 1});
  bias("bag.b_bag", 1);
  return out;
}

ParamStore<double> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore<double> params;
  for (const auto& spec : param_layout(cfg)) {
    Tensor<double> t(spec.shape);
    if (!spec.bias) {
      double fan_in = 0, fan_out = 0;
      if (spec.shape.size() == 4) {
        const double field = static_cast<double>(spec.shape[2] * spec.shape[3]);
        fan_in = static_cast<double>(spec.shape[1]) * field;
        fan_out = static_cast<double>(spec.shape[0]) * field;
      } else if (spec.shape.size() == 2) {
        fan_in = static_cast<double>(spec.shape[0]);
        fan_out = static_cast<double>(spec.shape[1]);
      } else {
        fan_in = fan_out = static_cast<double>(spec.shape[0]);
      }
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : t.data) v = dist(rng);
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

template <typename T>
void check_params(const ParamStore<T>& params, const ModelConfig& cfg) {
  const auto layout = param_layout(cfg);
  if (params.size() != layout.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(layout.size()) + " tensors, found " +
                                              std::to_string(params.size()));
  }
  for (const auto& spec : layout) {
    if (!params.contains(spec.name)) throw Error(ErrorCode::ShapeMismatch, "missing tensor " + spec.name);
    const Shape& got = params.at(spec.name).shape;
    if (got != spec.shape) {
      throw Error(ErrorCode::ShapeMismatch,
                  spec.name + " has shape " + shape_string(got) + ", expected " + shape_string(spec.shape));
    }
  }
}

template <typename T>
BatchInput<T> make_batch(const std::vector<const BagRecord*>& bags, const ModelConfig& cfg,
                         const std::vector<bool>* swap) {
  std::size_t pairs = 0;
  for (const BagRecord* r : bags) {
    if (r->pairs.empty()) throw Error(ErrorCode::EmptyBag, "record " + r->record_id + " has no pairs");
    pairs += r->pairs.size();
  }
  if (swap && swap->size() != pairs) throw Error(ErrorCode::ShapeMismatch, "swap mask must hold one flag per pair");
  const std::size_t d = cfg.d;
  BatchInput<T> batch;
  batch.sequences = Tensor<T>({2 * pairs, 1, 2, d});
  batch.condition = Tensor<T>({2 * pairs, kConditionWidth});
  std::size_t row = 0;
  for (const BagRecord* r : bags) {
    const ConditionEncoding enc = encode_condition(r->chrom_type, r->band_level);
    for (const auto& pair : r->pairs) {
      const bool flip = swap && (*swap)[row / 2];
      for (const ChromosomeSequence* s : {flip ? &pair.b : &pair.a, flip ? &pair.a : &pair.b}) {
        if (s->d != d) {
          throw Error(ErrorCode::ShapeMismatch, "record " + r->record_id + " has d=" + std::to_string(s->d) +
                                                    ", model expects d=" + std::to_string(d));
        }
        std::transform(s->values.begin(), s->values.end(), batch.sequences.data.begin() + row * 2 * d,
                       [](float v) { return static_cast<T>(v); });
        T* c = batch.condition.data.data() + row * kConditionWidth;
        for (std::size_t i = 0; i < kChromTypes; ++i) c[i] = static_cast<T>(enc.c_onehot[i]);
        for (std::size_t i = 0; i < enc.b_onehot.size(); ++i) c[kChromTypes + i] = static_cast<T>(enc.b_onehot[i]);
        ++row;
      }
    }
    batch.bag_sizes.push_back(r->pairs.size());
  }
  return batch;
}

namespace model {

template <typename T>
ad::Var Bound<T>::operator[](const std::string& name) {
  for (const auto& [n, v] : cache_) {
    if (n == name) return v;
  }
  const ad::Var v = g_.param(name, params_.at(name));
  cache_.emplace_back(name, v);
  return v;
}

template <typename T>
ad::Var cms(Bound<T>& p, const ModelConfig& cfg, ad::Var sequences, ad::Var condition) {
  auto& g = p.graph();
  const std::size_t N = g.shape(sequences).at(0), n_r = cfg.n_r(), l_r = cfg.l_r;
  // Merge and region split in one strided convolution: [N, l_r, 1, n_r].
  ad::Var merged = ad::conv2d_strided(g, sequences, p["cms.merge_kernels"], num::Stride{2, cfg.k_mg});
  merged = ad::block_transpose(g, ad::reshape(g, merged, {N * l_r, n_r}), N);
  ad::Var info = ad::reshape(g, ad::matmul(g, condition, p["cms.W_info"]), {N * n_r, l_r});
  ad::Var r = ad::add(g, merged, info);

  // Per-region residual MLP, shared across regions.
  ad::Var local = ad::relu(g, ad::affine(g, r, p["cms.W_R1"], p["cms.b_R1"]));
  r = ad::add(g, ad::affine(g, local, p["cms.W_R2"], p["cms.b_R2"]), r);

  // Cross-region residual MLP on the per-chromosome transpose.
  ad::Var rt = ad::block_transpose(g, r, N);
  ad::Var global = ad::relu(g, ad::affine(g, rt, p["cms.W_R3"], p["cms.b_R3"]));
  global = ad::affine(g, global, p["cms.W_R4"], p["cms.b_R4"]);
  return ad::add(g, ad::block_transpose(g, global, N), r);
}

template <typename T>
ad::Var hom(Bound<T>& p, const ModelConfig& cfg, ad::Var regions) {
  auto& g = p.graph();
  const std::size_t n_r = cfg.n_r(), l_r = cfg.l_r;
  const std::size_t blocks = g.shape(regions).at(0) / n_r;
  if (blocks % 2 != 0) throw Error(ErrorCode::ShapeMismatch, "hom: chromosome count must be even");
  const std::vector<std::size_t> partner = partner_map(blocks);

  ad::Var x = regions;
  for (std::size_t layer = 0; layer < cfg.hom_layers; ++layer) {
    const std::string pre = layer_prefix(layer);
    ad::Var aligned;
    if (cfg.align == AlignMode::Attention) {
      std::vector<ad::Var> q, k, v;
      for (std::size_t h = 0; h < cfg.n_h; ++h) {
        const std::string head = pre + "head" + std::to_string(h) + ".";
        q.push_back(p[head + "W_q"]);
        k.push_back(p[head + "W_k"]);
        v.push_back(p[head + "W_v"]);
      }
      std::vector<ad::Var> cols = q;
      cols.insert(cols.end(), k.begin(), k.end());
      cols.insert(cols.end(), v.begin(), v.end());
      ad::Var qkv = ad::matmul(g, x, ad::concat_cols(g, cols));
      aligned = ad::block_attention(g, qkv, blocks, cfg.n_h, partner, cfg.attn_norm);
    } else {
      ad::Var mix = cfg.align == AlignMode::Mlp ? p[pre + "W_align"] : ad::banded(g, p[pre + "align_taps"], n_r);
      aligned = ad::block_mix(g, ad::matmul(g, x, p[pre + "W_v"]), mix, blocks, partner);
    }
    // r_hat = W_diff (r + W_head [heads]).
    ad::Var mixed = ad::add(g, x, ad::matmul(g, aligned, p[pre + "W_head"]));
    x = ad::matmul(g, mixed, p[pre + "W_diff"]);
  }
  // Row-major flatten of the interleaved stack puts Flat(a) then Flat(b) on each pair row.
  ad::Var flat = ad::reshape(g, x, {blocks / 2, 2 * n_r * l_r});
  return ad::relu(g, ad::affine(g, flat, p["hom.W_hom"], p["hom.b_hom"]));
}

template <typename T>
BagOutputs bag(Bound<T>& p, ad::Var diffs, const std::vector<std::size_t>& bag_sizes) {
  auto& g = p.graph();
  std::size_t total = 0;
  for (const std::size_t m : bag_sizes) {
    if (m == 0) throw Error(ErrorCode::EmptyBag, "bag with no pairs");
    total += m;
  }
  if (total != g.shape(diffs).at(0)) throw Error(ErrorCode::ShapeMismatch, "bag sizes do not cover the pair rows");

  ad::Var hidden = ad::relu(g, ad::affine(g, diffs, p["bag.mlp.W1"], p["bag.mlp.b1"]));
  ad::Var alpha_all = ad::sigmoid(g, ad::affine(g, hidden, p["bag.mlp.W2"], p["bag.mlp.b2"]));

  BagOutputs out;
  std::size_t row = 0;
  for (const std::size_t m : bag_sizes) {
    ad::Var alpha = ad::slice_rows(g, alpha_all, row, row + m);
    ad::Var h = ad::slice_rows(g, diffs, row, row + m);
    ad::Var pooled = ad::matmul(g, ad::transpose(g, alpha), h);
    out.y_hat.push_back(ad::sigmoid(g, ad::affine(g, pooled, p["bag.W_bag"], p["bag.b_bag"])));
    out.alpha.push_back(alpha);
    row += m;
  }
  return out;
}

template <typename T>
BagOutputs forward(Bound<T>& p, const ModelConfig& cfg, const BatchInput<T>& batch) {
  auto& g = p.graph();
  ad::Var seq = g.input(batch.sequences);
  ad::Var cond = g.input(batch.condition);
  return bag(p, hom(p, cfg, cms(p, cfg, seq, cond)), batch.bag_sizes);
}

template <typename T>
ad::Var batch_loss(ad::Graph<T>& g, const BagOutputs& out, const std::vector<int>& labels) {
  if (labels.size() != out.y_hat.size() || labels.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "one label per bag required");
  }
  ad::Var total = ad::bce(g, out.y_hat[0], static_cast<T>(labels[0]));
  for (std::size_t i = 1; i < labels.size(); ++i) total = ad::add(g, total, ad::bce(g, out.y_hat[i], static_cast<T>(labels[i])));
  return ad::scale(g, total, T{1} / static_cast<T>(labels.size()));
}

}  // namespace model

template <typename T>
Tensor<T> cms_forward(const ChromosomeSequence& seq, const ConditionEncoding& cond, const ParamStore<T>& params,
                      const ModelConfig& cfg) {
  validate(cfg);
  if (seq.d != cfg.d || seq.values.size() != 2 * cfg.d) {
    throw Error(ErrorCode::ShapeMismatch, "sequence is 2x" + std::to_string(seq.d) + ", model expects 2x" +
                                              std::to_string(cfg.d));
  }
  Tensor<T> x({1, 1, 2, cfg.d});
  std::transform(seq.values.begin(), seq.values.end(), x.data.begin(), [](float v) { return static_cast<T>(v); });
  Tensor<T> c({1, kConditionWidth});
  for (std::size_t i = 0; i < kChromTypes; ++i) c.data[i] = static_cast<T>(cond.c_onehot[i]);
  for (std::size_t i = 0; i < cond.b_onehot.size(); ++i) c.data[kChromTypes + i] = static_cast<T>(cond.b_onehot[i]);
  ad::Graph<T> g;
  model::Bound<T> p(g, params);
  return g.value(model::cms(p, cfg, g.input(std::move(x)), g.input(std::move(c))));
}

template <typename T>
Tensor<T> hom_align(const Tensor<T>& ra, const Tensor<T>& rb, const ParamStore<T>& params, const ModelConfig& cfg) {
  validate(cfg);
  const Shape expect{cfg.n_r(), cfg.l_r};
  if (ra.shape != expect || rb.shape != expect) {
    throw Error(ErrorCode::ShapeMismatch, "hom_align inputs must be " + shape_string(expect));
  }
  ad::Graph<T> g;
  model::Bound<T> p(g, params);
  ad::Var stacked = ad::concat_rows(g, {g.input(ra), g.input(rb)});
  Tensor<T> out = g.value(model::hom(p, cfg, stacked));
  out.shape = {cfg.l_h};
  return out;
}

template <typename T>
Prediction bag_forward(const std::vector<Tensor<T>>& diffs, const ParamStore<T>& params) {
  if (diffs.empty()) throw Error(ErrorCode::EmptyBag, "bag_forward needs at least one pair difference");
  const std::size_t l_h = diffs.front().size();
  Tensor<T> h({diffs.size(), l_h});
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i].size() != l_h) throw Error(ErrorCode::ShapeMismatch, "pair differences must share a width");
    std::copy(diffs[i].data.begin(), diffs[i].data.end(), h.data.begin() + i * l_h);
  }
  ad::Graph<T> g;
  model::Bound<T> p(g, params);
  const model::BagOutputs out = model::bag(p, g.input(std::move(h)), {diffs.size()});
  return to_prediction(g, out.y_hat[0], out.alpha[0]);
}

template <typename T>
std::vector<Prediction> predict_bags(const std::vector<const BagRecord*>& records, const ParamStore<T>& params,
                                     const ModelConfig& cfg) {
  validate(cfg);
  std::vector<Prediction> out;
  if (records.empty()) return out;
  ad::Graph<T> g;
  model::Bound<T> p(g, params);
  const model::BagOutputs res = model::forward(p, cfg, make_batch<T>(records, cfg));
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back(to_prediction(g, res.y_hat[i], res.alpha[i]));
  return out;
}

template <typename T>
Prediction predict_bag(const BagRecord& record, const ParamStore<T>& params, const ModelConfig& cfg) {
  return predict_bags<T>({&record}, params, cfg).front();
}

double bce_loss(double y_hat, int label) {
  const double p = std::clamp(y_hat, ad::kBceClamp, 1.0 - ad::kBceClamp);
  const double y = static_cast<double>(label);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

#define HOMNET_MODEL_INSTANTIATE(T)                                                                               \
  template void check_params(const ParamStore<T>&, const ModelConfig&);                                           \
  template BatchInput<T> make_batch(const std::vector<const BagRecord*>&, const ModelConfig&,                    \
                                    const std::vector<bool>*);                                                    \
  template class model::Bound<T>;                                                                                 \
  template ad::Var model::cms(model::Bound<T>&, const ModelConfig&, ad::Var, ad::Var);                            \
  template ad::Var model::hom(model::Bound<T>&, const ModelConfig&, ad::Var);                                     \
  template model::BagOutputs model::bag(model::Bound<T>&, ad::Var, const std::vector<std::size_t>&);              \
  template model::BagOutputs model::forward(model::Bound<T>&, const ModelConfig&, const BatchInput<T>&);          \
  template ad::Var model::batch_loss(ad::Graph<T>&, const model::BagOutputs&, const std::vector<int>&);           \
  template Tensor<T> cms_forward(const ChromosomeSequence&, const ConditionEncoding&, const ParamStore<T>&,       \
                                 const ModelConfig&);                                                             \
  template Tensor<T> hom_align(const Tensor<T>&, const Tensor<T>&, const ParamStore<T>&, const ModelConfig&);    \
  template Prediction bag_forward(const std::vector<Tensor<T>>&, const ParamStore<T>&);                           \
  template std::vector<Prediction> predict_bags(const std::vector<const BagRecord*>&, const ParamStore<T>&,       \
                                                const ModelConfig&);                                              \
  template Prediction predict_bag(const BagRecord&, const ParamStore<T>&, const ModelConfig&);

HOMNET_MODEL_INSTANTIATE(float)
HOMNET_MODEL_INSTANTIATE(double)

}  // namespace homnet
