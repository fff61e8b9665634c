// homnet: synth -> pretrain -> finetune -> eval/predict, plus gradcheck.
// Structured output goes to stdout as JSON, progress to stderr.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "homnet/evaluation.hpp"
#include "homnet/kernels.hpp"
#include "homnet/synth.hpp"
#include "homnet/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;
using namespace homnet;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitIo = 5;

#ifndef HOMNET_VERSION
#define HOMNET_VERSION "dev"
#endif

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "[homnet] " << msg << '\n'; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Readers never observe a partial file: write a sibling and rename over the target.
void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

class RunManifest {
 public:
  RunManifest(std::string command, int argc, char** argv)
      : command_(std::move(command)), argv_(argv, argv + argc), started_(std::chrono::system_clock::now()) {}

  ojson config = ojson::object();
  ojson seeds = ojson::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::system_clock::now() - started_).count();
  }

  void write(const fs::path& path) const {
    ojson j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["tool_version"] = HOMNET_VERSION;
    j["kernels"] = std::string(kernels::to_string(kernels::active()));
    j["config"] = config;
    j["seeds"] = seeds;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["started"] = iso_time(started_);
    j["seconds"] = elapsed();
    write_atomic(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::chrono::system_clock::time_point started_;
};

fs::path manifest_path(const fs::path& artifact) {
  fs::path p = artifact;
  p += ".manifest.json";
  return p;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  const std::string text = read_file(path);
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw UsageError("config " + path + " must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
}

json section(const json& cfg, const char* key) { return cfg.contains(key) ? cfg.at(key) : json::object(); }

// Configuration problems originate from flags or config files, so they are usage errors.
template <typename Fn>
auto as_usage(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvariantViolation || e.code() == ErrorCode::ParseError) throw UsageError(e.what());
    throw;
  }
}

std::vector<BagRecord> load_records(const std::string& path, RunManifest& manifest) {
  manifest.inputs.push_back(path);
  auto records = load_dataset(path);
  log("loaded " + std::to_string(records.size()) + " bags from " + path);
  return records;
}

void print(const ojson& j) { std::cout << j.dump(2) << std::endl; }

struct ModelFlags {
  std::optional<std::size_t> d, k_mg, l_r, n_h, hom_layers, l_h, m;
  std::optional<std::string> align, attn_norm;

  void add_to(CLI::App* app) {
    app->add_option("--d", d, "Sequence length");
    app->add_option("--k-mg", k_mg, "Region width");
    app->add_option("--l-r", l_r, "Region feature width");
    app->add_option("--n-h", n_h, "Alignment heads");
    app->add_option("--hom-layers", hom_layers, "Alignment layers");
    app->add_option("--l-h", l_h, "Pair difference width");
    app->add_option("--m", m, "Pairs per bag");
    app->add_option("--align", align, "Alignment module")->check(CLI::IsMember({"attention", "mlp", "cnn"}));
    app->add_option("--attn-norm", attn_norm, "Attention score normalization")
        ->check(CLI::IsMember({"softmax", "raw_eps"}));
  }

  ModelConfig resolve(const json& file, ModelConfig base) const {
    return as_usage([&] {
      ModelConfig cfg = model_config_from_json(section(file, "model"), base);
      if (d) cfg.d = *d;
      if (k_mg) cfg.k_mg = *k_mg;
      if (l_r) cfg.l_r = *l_r;
      if (n_h) cfg.n_h = *n_h;
      if (hom_layers) cfg.hom_layers = *hom_layers;
      if (l_h) cfg.l_h = *l_h;
      if (m) cfg.m = *m;
      if (align) cfg.align = parse_align_mode(*align);
      if (attn_norm) cfg.attn_norm = parse_attn_norm(*attn_norm);
      validate(cfg);
      return cfg;
    });
  }
};

struct TrainFlags {
  std::optional<double> lr;
  std::optional<std::size_t> batch_size, patience, epochs, max_steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::string>> freeze;
  bool no_swap = false;

  void add_to(CLI::App* app) {
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--batch-size", batch_size, "Bags per step");
    app->add_option("--patience", patience, "Early-stopping patience in epochs");
    app->add_option("--epochs", epochs, "Maximum epochs");
    app->add_option("--max-steps", max_steps, "Stop after this many steps (0 = unlimited)");
    app->add_option("--seed", seed, "Initialization and shuffling seed");
    app->add_option("--freeze", freeze, "Comma-separated tensor name prefixes to freeze, or 'none'")->delimiter(',');
    app->add_flag("--no-swap", no_swap, "Disable random a/b swapping within pairs");
  }

  TrainConfig resolve(const json& file, TrainConfig base) const {
    return as_usage([&] {
      TrainConfig cfg = train_config_from_json(section(file, "train"), base);
      if (lr) cfg.lr = *lr;
      if (batch_size) cfg.batch_size = *batch_size;
      if (patience) cfg.patience = *patience;
      if (epochs) cfg.max_epochs = *epochs;
      if (max_steps) cfg.max_steps = *max_steps;
      if (seed) cfg.seed = *seed;
      if (freeze) cfg.freeze_set = (freeze->size() == 1 && freeze->front() == "none") ? std::vector<std::string>{} : *freeze;
      if (no_swap) cfg.swap_augment = false;
      validate(cfg);
      return cfg;
    });
  }
};

void log_epochs(TrainConfig& cfg) {
  cfg.on_epoch = [](const EpochLog& e) {
    std::ostringstream line;
    line << "epoch " << e.epoch << " steps " << e.steps << " loss " << std::fixed << std::setprecision(4) << e.train_loss
         << " val " << e.val_metric << (e.improved ? " *" : "") << " (" << std::setprecision(1) << e.seconds << "s)";
    log(line.str());
  };
}

ojson summary(const Checkpoint& ckpt, const std::string& path, double seconds) {
  ojson j;
  j["checkpoint"] = path;
  j["stage"] = ckpt.metadata.stage;
  j["epochs_run"] = ckpt.metadata.epochs_run;
  j["best_epoch"] = ckpt.metadata.best_epoch;
  j["best_val_metric"] = ckpt.metadata.best_val_metric;
  j["steps"] = ckpt.metadata.steps;
  j["seconds"] = seconds;
  return j;
}

void save_ckpt(const Checkpoint& ckpt, const fs::path& path) {
  std::ostringstream buf;
  write_checkpoint(buf, ckpt);
  write_atomic(path, buf.str());
}

// ---- synth ----

struct SynthOpts {
  std::string out, config, from_manifest;
  std::optional<std::size_t> bags, m, d, bags_per_subject;
  std::optional<double> abnormal_ratio, mixed_type_ratio, val_fraction;
  std::optional<std::uint64_t> seed;
};

synth::CorpusConfig resolve_corpus(const SynthOpts& o) {
  return as_usage([&] {
    synth::CorpusConfig cfg;
    if (!o.from_manifest.empty()) {
      json j = json::parse(read_file(o.from_manifest), nullptr, false);
      if (j.is_discarded()) throw UsageError("manifest " + o.from_manifest + " is not JSON");
      // Accept either the corpus manifest or a run manifest embedding it.
      if (j.contains("config") && j.at("config").contains("corpus")) j = j.at("config").at("corpus");
      cfg = synth::config_from_manifest(j.dump());
    }
    const json file = section(load_config(o.config), "corpus");
    if (!file.empty()) {
      json base = json::parse(synth::manifest_json(cfg, {}));
      for (const auto& [key, value] : file.items()) (key == "seed" ? base["seed"] : base["config"][key]) = value;
      cfg = synth::config_from_manifest(base.dump());
    }
    if (o.bags_per_subject) cfg.bags_per_subject = *o.bags_per_subject;
    if (o.bags) {
      if (*o.bags % cfg.bags_per_subject != 0) throw UsageError("--bags must be a multiple of --bags-per-subject");
      cfg.n_subjects = *o.bags / cfg.bags_per_subject;
    }
    if (o.m) cfg.m = *o.m;
    if (o.d) cfg.d = *o.d;
    if (o.abnormal_ratio) cfg.abnormal_ratio = *o.abnormal_ratio;
    if (o.mixed_type_ratio) cfg.mixed_type_ratio = *o.mixed_type_ratio;
    if (o.val_fraction) cfg.val_fraction = *o.val_fraction;
    if (o.seed) cfg.seed = *o.seed;
    synth::validate(cfg);
    return cfg;
  });
}

int run_synth(const SynthOpts& o, RunManifest& manifest) {
  const synth::CorpusConfig cfg = resolve_corpus(o);
  log("synthesizing " + std::to_string(cfg.n_subjects * cfg.bags_per_subject) + " bags");
  const synth::Corpus corpus = synth::build_pretrain_corpus(synth::templates_for(cfg), cfg);
  const fs::path dir(o.out);
  const std::string corpus_manifest = synth::manifest_json(cfg, corpus.stats);
  for (const auto& [name, records] : {std::pair{"train.jsonl", &corpus.train}, std::pair{"val.jsonl", &corpus.val}}) {
    std::ostringstream buf;
    write_dataset(buf, *records);
    write_atomic(dir / name, buf.str());
    manifest.outputs.push_back((dir / name).string());
  }
  write_atomic(dir / "corpus.json", corpus_manifest);
  manifest.outputs.push_back((dir / "corpus.json").string());
  manifest.config["corpus"] = ojson::parse(corpus_manifest);
  manifest.seeds["corpus"] = cfg.seed;
  manifest.write(dir / "run_manifest.json");

  ojson j;
  j["train"] = (dir / "train.jsonl").string();
  j["val"] = (dir / "val.jsonl").string();
  j["counts"] = ojson::parse(corpus_manifest)["counts"];
  print(j);
  return 0;
}

// ---- pretrain / finetune ----

struct TrainOpts {
  std::string data, val, out, ckpt, config;
  ModelFlags model;
  TrainFlags train;
};

int run_pretrain(TrainOpts& o, RunManifest& manifest) {
  const json file = load_config(o.config);
  const auto train = load_records(o.data, manifest);
  const auto val = load_records(o.val, manifest);
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, o.data + " holds no bags");
  // Unless configured, the geometry follows the data.
  ModelConfig base;
  base.d = train.front().d();
  base.m = train.front().pairs.size();
  const ModelConfig mcfg = o.model.resolve(file, base);
  TrainConfig tcfg = o.train.resolve(file, pretrain_defaults());
  manifest.config["model"] = to_json(mcfg);
  manifest.config["train"] = to_json(tcfg);
  manifest.seeds["train"] = tcfg.seed;
  log_epochs(tcfg);

  const Checkpoint ckpt = pretrain(train, val, mcfg, tcfg);
  save_ckpt(ckpt, o.out);
  manifest.outputs.push_back(o.out);
  manifest.write(manifest_path(o.out));
  print(summary(ckpt, o.out, manifest.elapsed()));
  return 0;
}

int run_finetune(TrainOpts& o, RunManifest& manifest) {
  const json file = load_config(o.config);
  manifest.inputs.push_back(o.ckpt);
  const Checkpoint base = load_checkpoint(o.ckpt);
  const auto train = load_records(o.data, manifest);
  const auto val = load_records(o.val, manifest);
  TrainConfig tcfg = o.train.resolve(file, finetune_defaults());
  manifest.config["model"] = to_json(base.config);
  manifest.config["train"] = to_json(tcfg);
  manifest.seeds["train"] = tcfg.seed;
  log_epochs(tcfg);

  const Checkpoint ckpt = finetune(base, train, val, tcfg);
  save_ckpt(ckpt, o.out);
  manifest.outputs.push_back(o.out);
  manifest.write(manifest_path(o.out));
  print(summary(ckpt, o.out, manifest.elapsed()));
  return 0;
}

// ---- eval / predict ----

struct EvalOpts {
  std::string ckpt, data, out, csv;
  double threshold = 0.5;
  bool records = false;
  bool drop_partner = false;
  std::optional<std::size_t> truncate;
};

std::vector<Prediction> predict_all(const std::vector<BagRecord>& records, const ParamStore<float>& params,
                                    const ModelConfig& cfg) {
  constexpr std::size_t kChunk = 64;
  std::vector<Prediction> out;
  for (std::size_t begin = 0; begin < records.size(); begin += kChunk) {
    std::vector<const BagRecord*> chunk;
    for (std::size_t i = begin; i < std::min(records.size(), begin + kChunk); ++i) chunk.push_back(&records[i]);
    for (auto& p : predict_bags<float>(chunk, params, cfg)) out.push_back(std::move(p));
  }
  return out;
}

int run_eval(const EvalOpts& o, RunManifest& manifest) {
  manifest.inputs.push_back(o.ckpt);
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  auto records = load_records(o.data, manifest);
  if (o.drop_partner) records = drop_partner(std::move(records));
  if (o.truncate) records = truncate_bags(std::move(records), *o.truncate);
  const auto preds = predict_all(records, ckpt.params, ckpt.config);
  std::vector<ScoredRecord> scored;
  for (std::size_t i = 0; i < records.size(); ++i) scored.push_back({records[i].record_id, preds[i].y_hat, records[i].label});
  const EvalReport report = make_report(std::move(scored), o.threshold);
  const ojson j = to_json(report, o.records);

  manifest.config["model"] = to_json(ckpt.config);
  manifest.config["eval"] = {{"threshold", o.threshold}, {"drop_partner", o.drop_partner},
                             {"truncate", o.truncate ? ojson(*o.truncate) : ojson(nullptr)}};
  if (!o.out.empty()) {
    write_atomic(o.out, j.dump(2) + "\n");
    manifest.outputs.push_back(o.out);
  }
  if (!o.csv.empty()) {
    std::ostringstream buf;
    write_csv(buf, report);
    write_atomic(o.csv, buf.str());
    manifest.outputs.push_back(o.csv);
  }
  if (!manifest.outputs.empty()) manifest.write(manifest_path(manifest.outputs.front()));
  print(j);
  return 0;
}

int run_predict(const EvalOpts& o, RunManifest& manifest) {
  manifest.inputs.push_back(o.ckpt);
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  const auto records = load_records(o.data, manifest);
  const auto t0 = std::chrono::steady_clock::now();
  const auto preds = predict_all(records, ckpt.params, ckpt.config);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  ojson j;
  auto& arr = j["predictions"] = ojson::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    arr.push_back({{"record_id", records[i].record_id}, {"y_hat", preds[i].y_hat}, {"alphas", preds[i].alphas}});
  }
  j["milliseconds"] = ms;
  manifest.config["model"] = to_json(ckpt.config);
  if (!o.out.empty()) {
    write_atomic(o.out, j.dump(2) + "\n");
    manifest.outputs.push_back(o.out);
    manifest.write(manifest_path(o.out));
  }
  print(j);
  return 0;
}

// ---- gradcheck ----

struct GradOpts {
  std::string config;
  ModelFlags model;
  std::uint64_t seed = 0;
  std::size_t bags = 2;
  double h = 1e-5;
  double tol = 1e-4;
};

ModelConfig gradcheck_defaults() {
  ModelConfig cfg;
  cfg.d = 64;
  cfg.k_mg = 8;
  cfg.l_r = 8;
  cfg.n_h = 2;
  cfg.hom_layers = 2;
  cfg.m = 2;
  return cfg;
}

int run_gradcheck(const GradOpts& o, RunManifest& manifest) {
  const ModelConfig cfg = o.model.resolve(load_config(o.config), gradcheck_defaults());
  synth::CorpusConfig ccfg;
  ccfg.n_subjects = std::max<std::size_t>(o.bags, 2) * 2;
  ccfg.val_fraction = 0.0;
  ccfg.m = cfg.m;
  ccfg.d = cfg.d;
  ccfg.seed = o.seed;
  auto corpus = as_usage([&] { return synth::build_pretrain_corpus(synth::templates_for(ccfg), ccfg); });
  corpus.train.resize(std::min(o.bags, corpus.train.size()));

  ParamStore<double> params = init_params(cfg, o.seed);
  const GradCheckReport rep = grad_check(loss_graph(corpus.train, cfg), params, o.h, o.tol);

  ojson j;
  j["passed"] = rep.passed();
  j["checked"] = rep.checked;
  j["skipped"] = rep.skipped;
  j["max_rel_error"] = rep.max_rel_error;
  j["tolerance"] = o.tol;
  auto& fails = j["failures"] = ojson::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(rep.failures.size(), 20); ++i) {
    const auto& f = rep.failures[i];
    fails.push_back({{"tensor", f.tensor}, {"index", f.index}, {"analytic", f.analytic}, {"numeric", f.numeric},
                     {"rel_error", f.rel_error}});
  }
  manifest.config["model"] = to_json(cfg);
  manifest.seeds["init"] = o.seed;
  print(j);
  return rep.passed() ? 0 : kExitNumeric;
}

int exit_code(ErrorCode code) {
  switch (category(code)) {
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numeric: return kExitNumeric;
    case ErrorCategory::Io: return kExitIo;
  }
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HomNet karyotype abnormality screening"};
  app.set_version_flag("--version", HOMNET_VERSION);
  app.require_subcommand(1);

  SynthOpts synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic pretraining corpus");
  synth_cmd->add_option("--out", synth_opts.out, "Output directory")->required();
  synth_cmd->add_option("--bags", synth_opts.bags, "Total bags across both splits");
  synth_cmd->add_option("--bags-per-subject", synth_opts.bags_per_subject, "Bags drawn per subject");
  synth_cmd->add_option("--m", synth_opts.m, "Pairs per bag");
  synth_cmd->add_option("--d", synth_opts.d, "Sequence length");
  synth_cmd->add_option("--abnormal-ratio", synth_opts.abnormal_ratio, "Operator-abnormal fraction of bags")
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--mixed-type-ratio", synth_opts.mixed_type_ratio, "Mixed-type abnormal fraction of bags")
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--val-fraction", synth_opts.val_fraction, "Validation fraction by subject")
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--seed", synth_opts.seed, "Corpus seed");
  synth_cmd->add_option("--config", synth_opts.config, "JSON config with a \"corpus\" object");
  synth_cmd->add_option("--from-manifest", synth_opts.from_manifest, "Regenerate from a corpus or run manifest")
      ->check(CLI::ExistingFile);

  TrainOpts pre_opts;
  auto* pre_cmd = app.add_subcommand("pretrain", "Pretrain on a labeled corpus");
  pre_cmd->add_option("--data", pre_opts.data, "Training JSONL")->required();
  pre_cmd->add_option("--val", pre_opts.val, "Validation JSONL")->required();
  pre_cmd->add_option("--out", pre_opts.out, "Checkpoint path")->required();
  pre_cmd->add_option("--config", pre_opts.config, "JSON config with \"model\" and \"train\" objects");
  pre_opts.model.add_to(pre_cmd);
  pre_opts.train.add_to(pre_cmd);

  TrainOpts ft_opts;
  auto* ft_cmd = app.add_subcommand("finetune", "Fine-tune a checkpoint with frozen tensors");
  ft_cmd->add_option("--ckpt", ft_opts.ckpt, "Starting checkpoint")->required();
  ft_cmd->add_option("--data", ft_opts.data, "Training JSONL")->required();
  ft_cmd->add_option("--val", ft_opts.val, "Validation JSONL")->required();
  ft_cmd->add_option("--out", ft_opts.out, "Checkpoint path")->required();
  ft_cmd->add_option("--config", ft_opts.config, "JSON config with a \"train\" object");
  ft_opts.train.add_to(ft_cmd);

  EvalOpts eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Score a labeled file and report AUC and F1");
  eval_cmd->add_option("--ckpt", eval_opts.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval_opts.data, "Labeled JSONL")->required();
  eval_cmd->add_option("--out", eval_opts.out, "Also write the JSON report here");
  eval_cmd->add_option("--csv", eval_opts.csv, "Per-record scores as CSV");
  eval_cmd->add_option("--threshold", eval_opts.threshold, "F1 decision threshold")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_flag("--records", eval_opts.records, "Include per-record scores in the JSON report");
  eval_cmd->add_flag("--drop-partner", eval_opts.drop_partner, "Zero chromosome b of every pair");
  eval_cmd->add_option("--truncate", eval_opts.truncate, "Keep the first N pairs of each bag")
      ->check(CLI::PositiveNumber);

  EvalOpts pred_opts;
  auto* pred_cmd = app.add_subcommand("predict", "Print y_hat and pair weights per bag");
  pred_cmd->add_option("--ckpt", pred_opts.ckpt, "Checkpoint")->required();
  pred_cmd->add_option("--data", pred_opts.data, "JSONL bags")->required();
  pred_cmd->add_option("--out", pred_opts.out, "Also write the predictions here");

  GradOpts grad_opts;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full loss");
  grad_cmd->add_option("--config", grad_opts.config, "JSON config with a \"model\" object");
  grad_cmd->add_option("--seed", grad_opts.seed, "Data and initialization seed");
  grad_cmd->add_option("--bags", grad_opts.bags, "Bags in the probe batch")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--step", grad_opts.h, "Central-difference step")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--tol", grad_opts.tol, "Maximum relative error")->check(CLI::PositiveNumber);
  grad_opts.model.add_to(grad_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    RunManifest manifest(cmd->get_name(), argc, argv);
    if (cmd == synth_cmd) return run_synth(synth_opts, manifest);
    if (cmd == pre_cmd) return run_pretrain(pre_opts, manifest);
    if (cmd == ft_cmd) return run_finetune(ft_opts, manifest);
    if (cmd == eval_cmd) return run_eval(eval_opts, manifest);
    if (cmd == pred_cmd) return run_predict(pred_opts, manifest);
    return run_gradcheck(grad_opts, manifest);
  } catch (const UsageError& e) {
    log(std::string("usage error: ") + e.what());
    return kExitUsage;
  } catch (const Error& e) {
    log(std::string("error: ") + e.what());
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    log(std::string("error: ") + e.what());
    return kExitIo;
  } catch (const json::exception& e) {
    log(std::string("error: malformed input: ") + e.what());
    return kExitData;
  }
}
