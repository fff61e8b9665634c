#include "homnet/training.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <numeric>
#include <random>
#include <set>

#include "homnet/error.hpp"
#include "homnet/evaluation.hpp"
#include "homnet/kernels.hpp"
#include "homnet/synth.hpp"

namespace homnet {

namespace {

constexpr std::uint64_t kShuffleStream = 0x7368'7566;
constexpr std::size_t kEvalChunk = 64;

bool matches(const std::string& name, const std::string& prefix) { return name.compare(0, prefix.size(), prefix) == 0; }

void check_data(const std::vector<BagRecord>& train, const std::vector<BagRecord>& val, const ModelConfig& cfg) {
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (val.empty()) throw Error(ErrorCode::EmptyDataset, "validation set is empty");
  check_disjoint(train, val);
  for (const auto* set : {&train, &val}) {
    for (const auto& r : *set) {
      if (r.d() != cfg.d) {
        throw Error(ErrorCode::ShapeMismatch, "record " + r.record_id + " has d=" + std::to_string(r.d()) +
                                                  ", model expects d=" + std::to_string(cfg.d));
      }
    }
  }
}

template <typename T>
ParamStore<T> zeros_like(const ParamStore<double>& params) {
  ParamStore<T> out;
  for (const auto& [name, t] : params.entries()) out.add(name, Tensor<T>(t.shape));
  return out;
}

struct LoopResult {
  ParamStore<double> best;
  AdamState adam;
  TrainingMetadata meta;
};

LoopResult train_loop(ParamStore<double> params, const std::vector<bool>& frozen, const std::vector<BagRecord>& train,
                      const std::vector<BagRecord>& val, const ModelConfig& mcfg, const TrainConfig& tcfg) {
  LoopResult res;
  res.adam = adam_init(params);
  res.best = params;
  res.meta.seed = tcfg.seed;

  synth::Rng rng(synth::derive_seed(tcfg.seed, kShuffleStream));
  std::bernoulli_distribution coin(0.5);
  ParamStore<double> grads = zeros_like<double>(params);
  EarlyStopper stopper(tcfg.patience);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  bool out_of_steps = false;

  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs && !out_of_steps; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += tcfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + tcfg.batch_size);
      std::vector<const BagRecord*> batch;
      std::vector<int> labels;
      std::vector<bool> swap;
      for (std::size_t i = begin; i < end; ++i) {
        const BagRecord& r = train[order[i]];
        batch.push_back(&r);
        labels.push_back(r.label);
        for (std::size_t k = 0; k < r.pairs.size(); ++k) swap.push_back(tcfg.swap_augment && coin(rng));
      }
      ad::Graph<double> g;
      model::Bound<double> bound(g, params);
      const auto out = model::forward(bound, mcfg, make_batch<double>(batch, mcfg, &swap));
      const ad::Var loss = model::batch_loss(g, out, labels);
      g.backward(loss);
      for (auto& [name, t] : grads.entries()) std::fill(t.data.begin(), t.data.end(), 0.0);
      for (const auto& [name, v] : g.params()) grads.at(name) = g.grad(v);
      adam_update(params, grads, res.adam, tcfg, frozen);

      loss_sum += g.value(loss).data[0] * static_cast<double>(batch.size());
      seen += batch.size();
      ++res.meta.steps;
      if (tcfg.max_steps != 0 && res.meta.steps >= tcfg.max_steps) {
        out_of_steps = true;
        break;
      }
    }
    const ValidationResult v = validate_records(val, params, mcfg);
    const bool improved = stopper.update(v.metric);
    if (improved) res.best = params;
    res.meta.epochs_run = epoch;
    res.meta.val_history.push_back(v.metric);
    res.meta.loss_history.push_back(loss_sum / static_cast<double>(seen));
    if (tcfg.on_epoch) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      tcfg.on_epoch({epoch, res.meta.steps, res.meta.loss_history.back(), v.metric, improved, secs});
    }
    if (stopper.should_stop()) break;
  }
  res.meta.best_epoch = stopper.best_epoch();
  res.meta.best_val_metric = stopper.best();
  return res;
}

Checkpoint to_checkpoint(const ModelConfig& cfg, LoopResult&& res, const std::string& stage) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = res.best.cast<float>();
  ckpt.adam_m = res.adam.m.cast<float>();
  ckpt.adam_v = res.adam.v.cast<float>();
  ckpt.adam_t = res.adam.t;
  ckpt.metadata = std::move(res.meta);
  ckpt.metadata.stage = stage;
  return ckpt;
}

// Little-endian scalar IO independent of host byte order.
template <typename U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(ErrorCode::TruncatedFile, std::string("checkpoint ends inside the ") + what);
  }
}

}  // namespace

TrainConfig pretrain_defaults() { return {}; }

TrainConfig finetune_defaults() {
  TrainConfig cfg;
  cfg.lr = 1e-5;
  cfg.freeze_set = {"cms.", "hom.layer0.attn."};
  return cfg;
}

void validate(const TrainConfig& cfg) {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::InvariantViolation, "train config: " + why); };
  if (!(cfg.lr > 0.0)) fail("lr must be positive");
  if (cfg.patience == 0) fail("patience must be >= 1");
  if (cfg.batch_size == 0) fail("batch_size must be >= 1");
  if (cfg.max_epochs == 0) fail("max_epochs must be >= 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) fail("betas must lie in [0,1)");
  if (!(cfg.eps > 0.0)) fail("eps must be positive");
}

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["patience"] = cfg.patience;
  j["max_epochs"] = cfg.max_epochs;
  j["max_steps"] = cfg.max_steps;
  j["seed"] = cfg.seed;
  j["freeze_set"] = cfg.freeze_set;
  j["swap_augment"] = cfg.swap_augment;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["eps"] = cfg.eps;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig cfg) {
  try {
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("patience")) cfg.patience = j.at("patience").get<std::size_t>();
    if (j.contains("max_epochs")) cfg.max_epochs = j.at("max_epochs").get<std::size_t>();
    if (j.contains("max_steps")) cfg.max_steps = j.at("max_steps").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("freeze_set")) cfg.freeze_set = j.at("freeze_set").get<std::vector<std::string>>();
    if (j.contains("swap_augment")) cfg.swap_augment = j.at("swap_augment").get<bool>();
    if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
    if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("train config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

AdamState adam_init(const ParamStore<double>& params) {
  return {zeros_like<double>(params), zeros_like<double>(params), 0};
}

std::vector<bool> resolve_freeze(const ParamStore<double>& params, const std::vector<std::string>& freeze_set) {
  std::vector<bool> frozen(params.size(), false);
  for (const auto& prefix : freeze_set) {
    bool hit = false;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (matches(params.entries()[i].first, prefix)) frozen[i] = hit = true;
    }
    if (!hit) throw Error(ErrorCode::FreezeNameUnresolved, "freeze prefix '" + prefix + "' matches no tensor");
  }
  return frozen;
}

void adam_update(ParamStore<double>& params, const ParamStore<double>& grads, AdamState& state, const TrainConfig& cfg,
                 const std::vector<bool>& frozen) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size() ||
      frozen.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam: parameter, gradient, moment and freeze lists must align");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const kernels::AdamStep step{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, 1.0 - std::pow(cfg.beta1, t),
                               1.0 - std::pow(cfg.beta2, t)};
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params.entries()[i];
    const Tensor<double>& g = grads.entries()[i].second;
    Tensor<double>& m = state.m.entries()[i].second;
    Tensor<double>& v = state.v.entries()[i].second;
    if (g.shape != p.shape || m.shape != p.shape || v.shape != p.shape || grads.entries()[i].first != name) {
      throw Error(ErrorCode::ShapeMismatch, "adam: gradient for " + name + " does not match its parameter");
    }
    if (frozen[i]) continue;
    kernels::adam(p.size(), step, p.data.data(), m.data.data(), v.data.data(), g.data.data());
  }
}

bool EarlyStopper::update(double metric) {
  ++epochs_;
  if (metric > best_ + min_delta_) {
    best_ = metric;
    best_epoch_ = epochs_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

Checkpoint initial_checkpoint(const ModelConfig& cfg, std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = init_params(cfg, seed).cast<float>();
  ckpt.metadata.stage = "init";
  ckpt.metadata.seed = seed;
  return ckpt;
}

void check_disjoint(const std::vector<BagRecord>& a, const std::vector<BagRecord>& b) {
  std::set<std::string> subjects;
  for (const auto& r : a) subjects.insert(r.subject_id);
  for (const auto& r : b) {
    if (subjects.contains(r.subject_id)) {
      throw Error(ErrorCode::SubjectOverlap, "subject " + r.subject_id + " appears in both splits");
    }
  }
}

ValidationResult validate_records(const std::vector<BagRecord>& records, const ParamStore<double>& params,
                                  const ModelConfig& cfg) {
  ValidationResult res;
  std::vector<int> labels;
  for (std::size_t begin = 0; begin < records.size(); begin += kEvalChunk) {
    std::vector<const BagRecord*> chunk;
    for (std::size_t i = begin; i < std::min(records.size(), begin + kEvalChunk); ++i) chunk.push_back(&records[i]);
    for (const auto& p : predict_bags<double>(chunk, params, cfg)) res.scores.push_back(p.y_hat);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    labels.push_back(records[i].label);
    res.loss += bce_loss(res.scores[i], records[i].label);
  }
  if (!records.empty()) res.loss /= static_cast<double>(records.size());
  // AUC when both classes are present; otherwise lower loss is better.
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  const bool both = n_pos > 0 && n_pos < static_cast<std::ptrdiff_t>(labels.size());
  res.metric = both ? auc_roc(res.scores, labels) : -res.loss;
  return res;
}

ScalarGraphFn loss_graph(std::vector<BagRecord> bags, const ModelConfig& cfg) {
  if (bags.empty()) throw Error(ErrorCode::EmptyDataset, "loss needs at least one bag");
  std::vector<int> labels;
  for (const auto& r : bags) labels.push_back(r.label);
  return [bags = std::move(bags), labels = std::move(labels), cfg](ad::Graph<double>& g, const ParamStore<double>& p) {
    std::vector<const BagRecord*> ptrs;
    for (const auto& r : bags) ptrs.push_back(&r);
    model::Bound<double> bound(g, p);
    return model::batch_loss(g, model::forward(bound, cfg, make_batch<double>(ptrs, cfg)), labels);
  };
}

Checkpoint pretrain(const std::vector<BagRecord>& train, const std::vector<BagRecord>& val, const ModelConfig& mcfg,
                    const TrainConfig& tcfg) {
  validate(mcfg);
  validate(tcfg);
  check_data(train, val, mcfg);
  ParamStore<double> params = init_params(mcfg, tcfg.seed);
  const std::vector<bool> frozen = tcfg.freeze_set.empty() ? std::vector<bool>(params.size(), false)
                                                           : resolve_freeze(params, tcfg.freeze_set);
  return to_checkpoint(mcfg, train_loop(std::move(params), frozen, train, val, mcfg, tcfg), "pretrain");
}

Checkpoint finetune(const Checkpoint& ckpt, const std::vector<BagRecord>& train, const std::vector<BagRecord>& val,
                    const TrainConfig& tcfg) {
  validate(ckpt.config);
  validate(tcfg);
  check_params(ckpt.params, ckpt.config);
  check_data(train, val, ckpt.config);
  ParamStore<double> params = ckpt.params.cast<double>();
  const std::vector<bool> frozen = resolve_freeze(params, tcfg.freeze_set);
  return to_checkpoint(ckpt.config, train_loop(std::move(params), frozen, train, val, ckpt.config, tcfg), "finetune");
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  check_params(ckpt.params, ckpt.config);
  nlohmann::ordered_json header;
  header["config"] = to_json(ckpt.config);
  auto& tensors = header["tensors"] = nlohmann::ordered_json::array();
  std::string blob;
  const auto append = [&](const std::string& name, const Tensor<float>& t) {
    tensors.push_back({{"name", name},
                       {"shape", t.shape},
                       {"dtype", "f32"},
                       {"offset", blob.size()},
                       {"len", t.size() * sizeof(float)}});
    for (const float v : t.data) put_le(blob, std::bit_cast<std::uint32_t>(v));
  };
  for (const auto& [name, t] : ckpt.params.entries()) append(name, t);
  for (const auto& [name, t] : ckpt.adam_m.entries()) append("opt.m." + name, t);
  for (const auto& [name, t] : ckpt.adam_v.entries()) append("opt.v." + name, t);

  const TrainingMetadata& m = ckpt.metadata;
  auto& meta = header["metadata"];
  meta["stage"] = m.stage;
  meta["seed"] = m.seed;
  meta["epochs_run"] = m.epochs_run;
  meta["best_epoch"] = m.best_epoch;
  meta["best_val_metric"] = std::isfinite(m.best_val_metric) ? m.best_val_metric : 0.0;
  meta["steps"] = m.steps;
  meta["adam_t"] = ckpt.adam_t;
  meta["val_history"] = m.val_history;
  meta["loss_history"] = m.loss_history;

  const std::string text = header.dump();
  std::string prefix = "HOMN";
  put_le(prefix, kCheckpointVersion);
  put_le(prefix, static_cast<std::uint64_t>(text.size()));
  out.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error(ErrorCode::IoError, "checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  unsigned char fixed[16];
  read_exact(in, reinterpret_cast<char*>(fixed), 4, "magic");
  if (std::string(reinterpret_cast<char*>(fixed), 4) != "HOMN") throw Error(ErrorCode::BadMagic, "not a checkpoint");
  read_exact(in, reinterpret_cast<char*>(fixed + 4), 12, "preamble");
  const auto version = get_le<std::uint32_t>(fixed + 4);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionUnsupported, "checkpoint version " + std::to_string(version) + " (supported: " +
                                                   std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(fixed + 8);
  std::string text;
  std::string blob;
  try {
    text.resize(header_len);
  } catch (const std::exception&) {
    throw Error(ErrorCode::TruncatedFile, "implausible header length");
  }
  read_exact(in, text.data(), text.size(), "header");
  blob.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.config = model_config_from_json(header.at("config"));
    std::size_t covered = 0;
    for (const auto& tj : header.at("tensors")) {
      const auto name = tj.at("name").get<std::string>();
      const auto shape = tj.at("shape").get<Shape>();
      const auto offset = tj.at("offset").get<std::size_t>();
      const auto len = tj.at("len").get<std::size_t>();
      if (tj.at("dtype").get<std::string>() != "f32") throw Error(ErrorCode::ShapeMismatch, name + ": dtype must be f32");
      if (len != shape_size(shape) * sizeof(float)) {
        throw Error(ErrorCode::ShapeMismatch, name + ": byte length does not match shape " + shape_string(shape));
      }
      if (offset > blob.size() || len > blob.size() - offset) {
        throw Error(ErrorCode::TruncatedFile, name + ": blob extends past end of file");
      }
      Tensor<float> t(shape);
      const auto* src = reinterpret_cast<const unsigned char*>(blob.data() + offset);
      for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(src + 4 * i));
      covered += len;
      if (matches(name, "opt.m.")) {
        ckpt.adam_m.add(name.substr(6), std::move(t));
      } else if (matches(name, "opt.v.")) {
        ckpt.adam_v.add(name.substr(6), std::move(t));
      } else {
        ckpt.params.add(name, std::move(t));
      }
    }
    if (covered != blob.size()) {
      throw Error(ErrorCode::TruncatedFile, "tensor table covers " + std::to_string(covered) + " of " +
                                                std::to_string(blob.size()) + " blob bytes");
    }
    const auto& meta = header.at("metadata");
    TrainingMetadata& m = ckpt.metadata;
    m.stage = meta.value("stage", "");
    m.seed = meta.value<std::uint64_t>("seed", 0);
    m.epochs_run = meta.value<std::size_t>("epochs_run", 0);
    m.best_epoch = meta.value<std::size_t>("best_epoch", 0);
    m.best_val_metric = meta.value("best_val_metric", 0.0);
    m.steps = meta.value<std::size_t>("steps", 0);
    ckpt.adam_t = meta.value<std::uint64_t>("adam_t", 0);
    m.val_history = meta.value("val_history", std::vector<double>{});
    m.loss_history = meta.value("loss_history", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint header: ") + e.what());
  }
  check_params(ckpt.params, ckpt.config);
  for (const auto* moments : {&ckpt.adam_m, &ckpt.adam_v}) {
    if (moments->size() != 0) check_params(*moments, ckpt.config);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace homnet
