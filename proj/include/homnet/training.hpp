#pragma once

// Optimization: Adam, early stopping on validation AUC, self-supervised
// pretraining, fine-tuning with frozen tensors, and the binary checkpoint.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "homnet/gradcheck.hpp"
#include "homnet/model.hpp"

namespace homnet {

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  bool improved = false;
  double seconds = 0.0;
};

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 512;
  std::size_t patience = 10;
  std::size_t max_epochs = 100;
  std::size_t max_steps = 0;  // 0 = no step cap
  std::uint64_t seed = 0;
  std::vector<std::string> freeze_set;
  bool swap_augment = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::function<void(const EpochLog&)> on_epoch;  // not persisted
};

TrainConfig pretrain_defaults();
/// lr 1e-5, freeze_set {"cms.", "hom.layer0.attn."}.
TrainConfig finetune_defaults();

/// Throws InvariantViolation for lr <= 0, patience 0, batch_size 0.
void validate(const TrainConfig& cfg);
nlohmann::ordered_json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base);

struct AdamState {
  ParamStore<double> m;
  ParamStore<double> v;
  std::uint64_t t = 0;
};

/// Zero moments shaped like params.
AdamState adam_init(const ParamStore<double>& params);

/// Names matched by a freeze prefix. Throws FreezeNameUnresolved for a prefix matching nothing.
std::vector<bool> resolve_freeze(const ParamStore<double>& params, const std::vector<std::string>& freeze_set);

/// One bias-corrected Adam step (t is incremented first). Tensors with
/// frozen[i] set are skipped entirely, moments included. Throws ShapeMismatch.
void adam_update(ParamStore<double>& params, const ParamStore<double>& grads, AdamState& state, const TrainConfig& cfg,
                 const std::vector<bool>& frozen);

/// Tracks the best validation metric; improvement means exceeding the best by more than min_delta.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience, double min_delta = 1e-4) : patience_(patience), min_delta_(min_delta) {}

  /// Records the metric for the next epoch; returns true when it is a new best.
  bool update(double metric);
  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best() const { return best_; }
  std::size_t epochs() const { return epochs_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t epochs_ = 0;
  std::size_t stale_ = 0;
};

struct TrainingMetadata {
  std::string stage;  // "init", "pretrain" or "finetune"
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_metric = 0.0;
  std::size_t steps = 0;
  std::vector<double> val_history;
  std::vector<double> loss_history;
};

struct Checkpoint {
  ModelConfig config;
  ParamStore<float> params;
  ParamStore<float> adam_m;  // empty when no optimizer state is kept
  ParamStore<float> adam_v;
  std::uint64_t adam_t = 0;
  TrainingMetadata metadata;
};

/// Fresh checkpoint holding init_params(cfg, seed).
Checkpoint initial_checkpoint(const ModelConfig& cfg, std::uint64_t seed);

/// Throws SubjectOverlap when any subject_id appears in both sets.
void check_disjoint(const std::vector<BagRecord>& a, const std::vector<BagRecord>& b);

/// Mean BCE and AUC-or-(-loss) on records, evaluated in 64-bit.
struct ValidationResult {
  double loss = 0.0;
  double metric = 0.0;
  std::vector<double> scores;
};
ValidationResult validate_records(const std::vector<BagRecord>& records, const ParamStore<double>& params,
                                  const ModelConfig& cfg);

/// Mean BCE of the full network over `bags` (no pair swapping), for grad_check.
ScalarGraphFn loss_graph(std::vector<BagRecord> bags, const ModelConfig& cfg);

/// Self-supervised pretraining from init_params(mcfg, tcfg.seed); returns the best-validation weights.
/// Throws EmptyDataset, SubjectOverlap, ShapeMismatch.
Checkpoint pretrain(const std::vector<BagRecord>& train, const std::vector<BagRecord>& val, const ModelConfig& mcfg,
                    const TrainConfig& tcfg);

/// Continues from ckpt with fresh optimizer state and frozen tensors.
/// Throws EmptyDataset, SubjectOverlap, ShapeMismatch, FreezeNameUnresolved.
Checkpoint finetune(const Checkpoint& ckpt, const std::vector<BagRecord>& train, const std::vector<BagRecord>& val,
                    const TrainConfig& tcfg);

/// "HOMN" | u32 version | u64 header length | JSON header | f32 blobs, all little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace homnet
