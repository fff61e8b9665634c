#include "homnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "homnet/error.hpp"
#include "json.hpp"

namespace homnet::synth {

namespace {

// Stream tags keep independent draws decoupled from each other.
constexpr std::uint64_t kTemplateStream = 0x7465'6d70;
constexpr std::uint64_t kSubjectStream = 0x7375'626a;
constexpr std::uint64_t kBagStream = 0x6261'6773;
constexpr std::uint64_t kAssignStream = 0x6173'7367;
constexpr std::uint64_t kSplitStream = 0x7370'6c74;

constexpr double kLightLo = 0.15, kLightHi = 0.40;
constexpr double kDarkLo = 0.60, kDarkHi = 0.95;
constexpr double kHomologLengthJitter = 0.02;
constexpr std::size_t kMinRenderLen = 8;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

bool coin(Rng& rng) { return std::bernoulli_distribution(0.5)(rng); }

// Relative length per group, before a small within-group spread.
constexpr std::array<double, kLengthGroups> kGroupScale{1.00, 0.85, 0.72, 0.60, 0.50, 0.42, 0.36};
constexpr double kGroupSpread = 0.04;

std::vector<Band> random_bands(Rng& rng, int n) {
  std::vector<double> widths(static_cast<std::size_t>(n));
  for (double& w : widths) w = 0.5 + uniform(rng, 0.0, 1.0);
  const double total = std::accumulate(widths.begin(), widths.end(), 0.0);
  const bool dark_first = coin(rng);
  std::vector<Band> bands;
  double at = 0.0;
  for (int i = 0; i < n; ++i) {
    const double end = i + 1 == n ? 1.0 : at + widths[static_cast<std::size_t>(i)] / total;
    const bool dark = (i % 2 == 0) == dark_first;
    const double intensity = dark ? uniform(rng, kDarkLo, kDarkHi) : uniform(rng, kLightLo, kLightHi);
    bands.push_back({at, end, intensity});
    at = end;
  }
  return bands;
}

void check_span(std::size_t start, std::size_t len, std::size_t n, const char* what) {
  if (start > n || len > n - start) {
    throw Error(ErrorCode::SpanOutOfRange, std::string(what) + " [" + std::to_string(start) + ", " +
                                               std::to_string(start + len) + ") outside length " + std::to_string(n));
  }
}

std::vector<double> edit_row(const std::vector<double>& s, const Edit& e, const std::vector<double>* donor) {
  using Diff = std::ptrdiff_t;
  const auto at = [](auto& v, std::size_t i) { return v.begin() + static_cast<Diff>(i); };
  std::vector<double> out;
  switch (e.kind) {
    case AbnormalityKind::Deleted:
      out.assign(s.begin(), at(s, e.start));
      out.insert(out.end(), at(s, e.start + e.len), s.end());
      break;
    case AbnormalityKind::AddedForeign:
      out.assign(s.begin(), at(s, e.start));
      out.insert(out.end(), at(*donor, e.donor_start), at(*donor, e.donor_start + e.len));
      out.insert(out.end(), at(s, e.start), s.end());
      break;
    case AbnormalityKind::DuplicatedSelf:
      out.assign(s.begin(), at(s, e.start + e.len));
      out.insert(out.end(), at(s, e.start), at(s, e.start + e.len));
      out.insert(out.end(), at(s, e.start + e.len), s.end());
      break;
    case AbnormalityKind::Replaced:
      out = s;
      if (e.replace == ReplaceMode::Inversion) {
        std::reverse(at(out, e.start), at(out, e.start + e.len));
      } else {
        std::copy(at(*donor, e.donor_start), at(*donor, e.donor_start + e.len), at(out, e.start));
      }
      break;
    case AbnormalityKind::Robertsonian:
      out.assign(s.rbegin(), s.rend());
      out.insert(out.end(), s.begin(), s.end());
      break;
  }
  return out;
}

AbnormalitySpec sample_spec(Rng& rng, const CorpusConfig& cfg) {
  AbnormalitySpec spec;
  spec.kind = kAllKinds[pick(rng, kAllKinds.size())];
  spec.len_frac = uniform(rng, cfg.min_frac, cfg.max_frac);
  spec.start_frac = uniform(rng, 0.0, 1.0 - spec.len_frac);
  spec.replace = coin(rng) ? ReplaceMode::Inversion : ReplaceMode::Foreign;
  spec.donor_start_frac = uniform(rng, 0.0, 1.0 - spec.len_frac);
  if (spec.kind == AbnormalityKind::Robertsonian) spec.len_frac = spec.start_frac = 0.0;
  return spec;
}

ChromosomeSequence to_sequence(const RawSequencePair& raw, std::size_t d) {
  return normalize_fit(raw.size() > d ? resample_raw(raw, d) : raw, d);
}

std::string padded(const char* prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double IdeogramTemplate::darkness(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  const auto it = std::upper_bound(bands.begin(), bands.end(), u, [](double x, const Band& b) { return x < b.end_frac; });
  return it == bands.end() ? bands.back().intensity : it->intensity;
}

std::vector<int> LengthGroupTable::members(int g) const {
  std::vector<int> out;
  for (int t = 0; t < static_cast<int>(kChromTypes); ++t) {
    if (group[static_cast<std::size_t>(t)] == g) out.push_back(t);
  }
  return out;
}

LengthGroupTable iscn_length_groups() {
  LengthGroupTable table;
  const auto assign = [&](std::initializer_list<int> types, int g) {
    for (int t : types) table.group[static_cast<std::size_t>(t)] = g;
  };
  assign({0, 1, 2}, 1);
  assign({3, 4}, 2);
  assign({5, 6, 7, 8, 9, 10, 11, 22}, 3);
  assign({12, 13, 14}, 4);
  assign({15, 16, 17}, 5);
  assign({18, 19}, 6);
  assign({20, 21, 23}, 7);
  return table;
}

TemplateSet make_templates(std::uint64_t seed, std::size_t longest_len) {
  if (longest_len < 2 * kMinRenderLen) throw Error(ErrorCode::InvariantViolation, "longest_len too small");
  TemplateSet set;
  set.groups = iscn_length_groups();
  Rng rng(derive_seed(seed, kTemplateStream));
  for (int t = 0; t < static_cast<int>(kChromTypes); ++t) {
    const int g = set.groups.of(t);
    const double rel = kGroupScale[static_cast<std::size_t>(g - 1)] - uniform(rng, 0.0, kGroupSpread);
    IdeogramTemplate tmpl;
    tmpl.chrom_type = t;
    tmpl.base_len = std::max<std::size_t>(kMinRenderLen, static_cast<std::size_t>(std::lround(rel * longest_len)));
    // Larger chromosomes carry more resolvable bands.
    const int lo = 4 + (kLengthGroups - g);
    const int n_bands = std::uniform_int_distribution<int>(lo, std::min(12, lo + 2))(rng);
    tmpl.bands = random_bands(rng, n_bands);
    set.templates.push_back(std::move(tmpl));
  }
  return set;
}

RawSequencePair render_chromosome(const IdeogramTemplate& tmpl, int band_level, const RenderNoise& noise, Rng& rng) {
  band_index(band_level);
  const auto len = static_cast<std::size_t>(
      std::lround(static_cast<double>(tmpl.base_len) * static_cast<double>(band_level) / 700.0));
  if (len == 0) throw Error(ErrorCode::DegenerateLength, "template renders to zero samples");
  const double gain = uniform(rng, 0.9, 1.1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto render_side = [&] {
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double freq = uniform(rng, 0.5, 1.5);
    std::vector<double> row(len);
    for (std::size_t i = 0; i < len; ++i) {
      // Box-filter three sub-samples so band edges blur like pixel footprints.
      double dark = 0.0;
      for (double off : {0.25, 0.5, 0.75}) {
        const double u = (static_cast<double>(i) + off) / static_cast<double>(len);
        dark += tmpl.darkness(u + noise.warp_amp * std::sin(2.0 * std::numbers::pi * freq * u + phase));
      }
      dark = std::clamp(gain * dark / 3.0, 0.0, 1.0);
      const double v = 255.0 * (1.0 - dark) + (noise.sigma > 0.0 ? noise.sigma * gauss(rng) : 0.0);
      row[i] = std::clamp(v, 0.0, 255.0);
    }
    return row;
  };
  RawSequencePair out;
  out.left = render_side();
  out.right = render_side();
  return out;
}

IdeogramTemplate jitter_template(const IdeogramTemplate& tmpl, const TemplateJitter& jitter, Rng& rng) {
  IdeogramTemplate out = scale_template(tmpl, uniform(rng, 1.0 - jitter.length, 1.0 + jitter.length));
  constexpr double kMinWidth = 0.01;
  for (std::size_t i = 0; i + 1 < out.bands.size(); ++i) {
    const double lo = out.bands[i].start_frac + kMinWidth;
    const double hi = out.bands[i + 1].end_frac - kMinWidth;
    const double cut = std::clamp(out.bands[i].end_frac + uniform(rng, -jitter.boundary, jitter.boundary), lo, hi);
    out.bands[i].end_frac = cut;
    out.bands[i + 1].start_frac = cut;
  }
  for (auto& b : out.bands) {
    b.intensity = std::clamp(b.intensity + uniform(rng, -jitter.intensity, jitter.intensity), 0.05, 1.0);
  }
  return out;
}

IdeogramTemplate scale_template(const IdeogramTemplate& tmpl, double factor) {
  IdeogramTemplate out = tmpl;
  out.base_len = std::max<std::size_t>(kMinRenderLen,
                                       static_cast<std::size_t>(std::lround(static_cast<double>(tmpl.base_len) * factor)));
  return out;
}

std::string to_string(AbnormalityKind kind) {
  switch (kind) {
    case AbnormalityKind::Deleted: return "Deleted";
    case AbnormalityKind::AddedForeign: return "AddedForeign";
    case AbnormalityKind::DuplicatedSelf: return "DuplicatedSelf";
    case AbnormalityKind::Replaced: return "Replaced";
    case AbnormalityKind::Robertsonian: return "Robertsonian";
  }
  return "?";
}

void validate(const AbnormalitySpec& spec, double min_frac) {
  if (spec.kind == AbnormalityKind::Robertsonian) return;
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::SpanOutOfRange, to_string(spec.kind) + ": " + why);
  };
  if (!(spec.start_frac >= 0.0)) fail("start_frac < 0");
  if (!(spec.len_frac >= min_frac)) fail("len_frac below minimum " + std::to_string(min_frac));
  if (!(spec.start_frac + spec.len_frac <= 1.0 + 1e-12)) fail("start_frac + len_frac > 1");
  if (spec.needs_donor() && !(spec.donor_start_frac >= 0.0 && spec.donor_start_frac <= 1.0)) {
    fail("donor_start_frac outside [0,1]");
  }
}

Edit resolve(const AbnormalitySpec& spec, std::size_t n, std::size_t donor_n) {
  Edit e;
  e.kind = spec.kind;
  e.replace = spec.replace;
  if (spec.kind == AbnormalityKind::Robertsonian) return e;
  const auto to_index = [](double frac, std::size_t len) {
    return std::min(len, static_cast<std::size_t>(std::floor(frac * static_cast<double>(len))));
  };
  e.start = to_index(spec.start_frac, n);
  e.len = std::min(n - e.start, static_cast<std::size_t>(std::lround(spec.len_frac * static_cast<double>(n))));
  if (spec.kind == AbnormalityKind::AddedForeign && spec.start_frac + spec.len_frac >= 1.0) e.start = n;
  if (spec.needs_donor()) {
    e.len = std::min(e.len, donor_n);
    e.donor_start = std::min(to_index(spec.donor_start_frac, donor_n), donor_n - e.len);
  }
  return e;
}

RawSequencePair apply_edit(const RawSequencePair& seq, const Edit& edit, const RawSequencePair* donor) {
  if (seq.left.size() != seq.right.size()) throw Error(ErrorCode::InvariantViolation, "left/right length differ");
  if (edit.needs_donor()) {
    if (donor == nullptr) throw Error(ErrorCode::MissingDonor, to_string(edit.kind) + " needs a donor sequence");
    check_span(edit.donor_start, edit.len, donor->size(), "donor span");
  }
  if (edit.kind != AbnormalityKind::Robertsonian) check_span(edit.start, edit.len, seq.size(), "span");
  return {edit_row(seq.left, edit, donor ? &donor->left : nullptr),
          edit_row(seq.right, edit, donor ? &donor->right : nullptr)};
}

RawSequencePair apply_abnormality(const RawSequencePair& seq, const AbnormalitySpec& spec,
                                  const RawSequencePair* donor, double min_frac) {
  validate(spec, min_frac);
  if (spec.needs_donor() && donor == nullptr) {
    throw Error(ErrorCode::MissingDonor, to_string(spec.kind) + " needs a donor sequence");
  }
  return apply_edit(seq, resolve(spec, seq.size(), donor ? donor->size() : 0), donor);
}

void validate(const CorpusConfig& cfg) {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::InvariantViolation, "corpus config: " + why); };
  if (cfg.n_subjects == 0 || cfg.bags_per_subject == 0) fail("needs at least one bag");
  if (cfg.m == 0) fail("m must be positive");
  if (cfg.d < 2 * kMinRenderLen) fail("d too small");
  if (cfg.abnormal_ratio < 0.0 || cfg.mixed_type_ratio < 0.0) fail("ratios must be non-negative");
  if (cfg.abnormal_ratio + cfg.mixed_type_ratio > 1.0) fail("abnormal_ratio + mixed_type_ratio exceeds 1");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) fail("val_fraction must lie in [0,1)");
  if (!(cfg.min_frac > 0.0 && cfg.min_frac <= cfg.max_frac && cfg.max_frac < 0.5)) {
    fail("need 0 < min_frac <= max_frac < 0.5");
  }
}

TemplateSet templates_for(const CorpusConfig& cfg) {
  // Leaves room for a Robertsonian doubling of the longest jittered chromosome.
  return make_templates(cfg.seed, static_cast<std::size_t>(std::lround(0.42 * static_cast<double>(cfg.d))));
}

BagRecord synthesize_bag(const TemplateSet& templates, const CorpusConfig& cfg, std::size_t index, BagKind kind,
                         const std::string& subject_id, BagTrace* trace) {
  const std::size_t subject = index / cfg.bags_per_subject;
  const std::uint64_t subject_seed = derive_seed(derive_seed(cfg.seed, kSubjectStream), subject);
  // One individual's version of a chromosome type, shared across that subject's bags.
  const auto individual = [&](int type) {
    Rng rng(derive_seed(subject_seed, static_cast<std::uint64_t>(type)));
    return jitter_template(templates.templates.at(static_cast<std::size_t>(type)), cfg.subject_jitter, rng);
  };

  Rng rng(derive_seed(derive_seed(cfg.seed, kBagStream), index));
  BagRecord rec;
  rec.record_id = padded("bag-", index, 6);
  rec.subject_id = subject_id;
  rec.chrom_type = static_cast<int>(pick(rng, kChromTypes));
  rec.band_level = kBandLevels[pick(rng, kBandLevels.size())];
  rec.label = kind == BagKind::Normal ? 0 : 1;

  int partner = rec.chrom_type;
  if (kind == BagKind::MixedType) {
    std::vector<int> peers = templates.groups.members(templates.groups.of(rec.chrom_type));
    std::erase(peers, rec.chrom_type);
    partner = peers[pick(rng, peers.size())];
  }
  AbnormalitySpec spec = sample_spec(rng, cfg);
  int donor_type = static_cast<int>(pick(rng, kChromTypes - 1));
  if (donor_type >= rec.chrom_type) ++donor_type;

  const IdeogramTemplate self = individual(rec.chrom_type);
  const IdeogramTemplate other = individual(partner);
  const IdeogramTemplate donor_tmpl = individual(donor_type);

  if (trace) {
    *trace = {};
    trace->kind = kind;
    trace->spec = spec;
    trace->partner_type = kind == BagKind::MixedType ? partner : -1;
  }
  for (std::size_t p = 0; p < cfg.m; ++p) {
    // Cell-level condensation stretches both homologs together.
    const double cell = uniform(rng, 1.0 - cfg.cell_length_jitter, 1.0 + cfg.cell_length_jitter);
    const auto homolog = [&](const IdeogramTemplate& t) {
      return scale_template(t, cell * uniform(rng, 1.0 - kHomologLengthJitter, 1.0 + kHomologLengthJitter));
    };
    std::array<RawSequencePair, 2> raw{render_chromosome(homolog(self), rec.band_level, cfg.noise, rng),
                                       render_chromosome(homolog(other), rec.band_level, cfg.noise, rng)};
    std::array<RawSequencePair, 2> before = raw;
    const bool flip = coin(rng);
    if (kind == BagKind::Operator) {
      RawSequencePair donor;
      if (spec.needs_donor()) donor = render_chromosome(homolog(donor_tmpl), rec.band_level, cfg.noise, rng);
      auto& target = raw[flip ? 1 : 0];
      target = apply_abnormality(target, spec, spec.needs_donor() ? &donor : nullptr, cfg.min_frac);
    } else if (kind == BagKind::MixedType && flip) {
      std::swap(raw[0], raw[1]);
      std::swap(before[0], before[1]);
    }
    if (trace) {
      trace->before.push_back(before);
      trace->after.push_back(raw);
    }
    rec.pairs.push_back({to_sequence(raw[0], cfg.d), to_sequence(raw[1], cfg.d)});
  }
  return rec;
}

Corpus build_pretrain_corpus(const TemplateSet& templates, const CorpusConfig& cfg) {
  validate(cfg);
  const std::size_t total = cfg.n_subjects * cfg.bags_per_subject;
  const auto n_operator = static_cast<std::size_t>(std::lround(cfg.abnormal_ratio * static_cast<double>(total)));
  const auto n_mixed = std::min(total - n_operator,
                                static_cast<std::size_t>(std::lround(cfg.mixed_type_ratio * static_cast<double>(total))));
  std::vector<BagKind> kinds(total, BagKind::Normal);
  std::fill_n(kinds.begin(), n_operator, BagKind::Operator);
  std::fill_n(kinds.begin() + static_cast<std::ptrdiff_t>(n_operator), n_mixed, BagKind::MixedType);
  Rng assign(derive_seed(cfg.seed, kAssignStream));
  std::shuffle(kinds.begin(), kinds.end(), assign);

  std::vector<std::size_t> order(cfg.n_subjects);
  std::iota(order.begin(), order.end(), 0);
  Rng split(derive_seed(cfg.seed, kSplitStream));
  std::shuffle(order.begin(), order.end(), split);
  std::size_t n_val = static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(cfg.n_subjects)));
  if (cfg.val_fraction > 0.0 && cfg.n_subjects >= 2) n_val = std::clamp<std::size_t>(n_val, 1, cfg.n_subjects - 1);
  std::vector<bool> in_val(cfg.n_subjects, false);
  for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = true;

  Corpus corpus;
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t subject = i / cfg.bags_per_subject;
    BagTrace trace;
    BagRecord rec = synthesize_bag(templates, cfg, i, kinds[i], padded("subj-", subject, 5), &trace);
    switch (kinds[i]) {
      case BagKind::Normal: ++corpus.stats.normal; break;
      case BagKind::MixedType: ++corpus.stats.mixed_type; break;
      case BagKind::Operator: {
        const auto k = std::find(kAllKinds.begin(), kAllKinds.end(), trace.spec.kind) - kAllKinds.begin();
        ++corpus.stats.per_kind[static_cast<std::size_t>(k)];
        break;
      }
    }
    (in_val[subject] ? corpus.val : corpus.train).push_back(std::move(rec));
  }
  corpus.stats.train = corpus.train.size();
  corpus.stats.val = corpus.val.size();
  return corpus;
}

std::string manifest_json(const CorpusConfig& cfg, const CorpusStats& stats) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  auto& c = j["config"];
  c["n_subjects"] = cfg.n_subjects;
  c["bags_per_subject"] = cfg.bags_per_subject;
  c["m"] = cfg.m;
  c["d"] = cfg.d;
  c["abnormal_ratio"] = cfg.abnormal_ratio;
  c["mixed_type_ratio"] = cfg.mixed_type_ratio;
  c["val_fraction"] = cfg.val_fraction;
  c["min_frac"] = cfg.min_frac;
  c["max_frac"] = cfg.max_frac;
  c["noise_sigma"] = cfg.noise.sigma;
  c["noise_warp_amp"] = cfg.noise.warp_amp;
  c["subject_length_jitter"] = cfg.subject_jitter.length;
  c["subject_boundary_jitter"] = cfg.subject_jitter.boundary;
  c["subject_intensity_jitter"] = cfg.subject_jitter.intensity;
  c["cell_length_jitter"] = cfg.cell_length_jitter;
  auto& n = j["counts"];
  n["normal"] = stats.normal;
  n["mixed_type"] = stats.mixed_type;
  for (std::size_t k = 0; k < kAllKinds.size(); ++k) n[to_string(kAllKinds[k])] = stats.per_kind[k];
  n["train"] = stats.train;
  n["val"] = stats.val;
  return j.dump(2) + "\n";
}

CorpusConfig config_from_manifest(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    const auto& c = j.at("config");
    CorpusConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.n_subjects = c.at("n_subjects").get<std::size_t>();
    cfg.bags_per_subject = c.at("bags_per_subject").get<std::size_t>();
    cfg.m = c.at("m").get<std::size_t>();
    cfg.d = c.at("d").get<std::size_t>();
    cfg.abnormal_ratio = c.at("abnormal_ratio").get<double>();
    cfg.mixed_type_ratio = c.at("mixed_type_ratio").get<double>();
    cfg.val_fraction = c.at("val_fraction").get<double>();
    cfg.min_frac = c.at("min_frac").get<double>();
    cfg.max_frac = c.at("max_frac").get<double>();
    cfg.noise.sigma = c.at("noise_sigma").get<double>();
    cfg.noise.warp_amp = c.at("noise_warp_amp").get<double>();
    cfg.subject_jitter.length = c.at("subject_length_jitter").get<double>();
    cfg.subject_jitter.boundary = c.at("subject_boundary_jitter").get<double>();
    cfg.subject_jitter.intensity = c.at("subject_intensity_jitter").get<double>();
    cfg.cell_length_jitter = c.at("cell_length_jitter").get<double>();
    validate(cfg);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("corpus manifest: ") + e.what());
  }
}

}  // namespace homnet::synth
