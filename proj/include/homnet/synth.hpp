#pragma once

// Synthetic karyotype generator: banded chromosome templates, noisy
// sister-chromatid renderings, the five artificial structural abnormalities,
// and assembly of the self-supervised pretraining corpus.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "homnet/karyotype.hpp"

namespace homnet::synth {

using Rng = std::mt19937_64;

/// Deterministic child seed for stream `index` of `seed` (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

inline constexpr int kLengthGroups = 7;

struct Band {
  double start_frac;
  double end_frac;
  double intensity;  // staining darkness, 0 = background
  friend bool operator==(const Band&, const Band&) = default;
};

struct IdeogramTemplate {
  int chrom_type = 0;
  std::size_t base_len = 0;  // rendered length at band level 700
  std::vector<Band> bands;

  /// Darkness at relative position u in [0,1].
  double darkness(double u) const;
  friend bool operator==(const IdeogramTemplate&, const IdeogramTemplate&) = default;
};

/// ISCN size groups A..G as 1..7 over types 0..23 (22 = X, 23 = Y).
struct LengthGroupTable {
  std::array<int, kChromTypes> group{};

  int of(int chrom_type) const { return group.at(static_cast<std::size_t>(chrom_type)); }
  std::vector<int> members(int g) const;
  friend bool operator==(const LengthGroupTable&, const LengthGroupTable&) = default;
};

LengthGroupTable iscn_length_groups();

struct TemplateSet {
  std::vector<IdeogramTemplate> templates;  // indexed by chrom_type
  LengthGroupTable groups;
  friend bool operator==(const TemplateSet&, const TemplateSet&) = default;
};

/// 24 templates; the longest group-A chromosome renders `longest_len` samples at band 700.
TemplateSet make_templates(std::uint64_t seed, std::size_t longest_len = 215);

struct RenderNoise {
  double sigma = 8.0;       // gray-level noise per sample
  double warp_amp = 0.015;  // smooth positional warp, fraction of length
};

/// Length round(base_len * band_level / 700). Left and right are independent
/// noisy renderings of the same band profile sharing one staining gain.
RawSequencePair render_chromosome(const IdeogramTemplate& tmpl, int band_level, const RenderNoise& noise, Rng& rng);

/// Per-individual / per-cell variation of a template.
struct TemplateJitter {
  double length = 0.12;     // relative base_len jitter
  double boundary = 0.02;   // band boundary shift, fraction of length
  double intensity = 0.06;  // darkness jitter
};

IdeogramTemplate jitter_template(const IdeogramTemplate& tmpl, const TemplateJitter& jitter, Rng& rng);
IdeogramTemplate scale_template(const IdeogramTemplate& tmpl, double factor);

enum class AbnormalityKind { Deleted, AddedForeign, DuplicatedSelf, Replaced, Robertsonian };
inline constexpr std::array<AbnormalityKind, 5> kAllKinds{AbnormalityKind::Deleted, AbnormalityKind::AddedForeign,
                                                         AbnormalityKind::DuplicatedSelf, AbnormalityKind::Replaced,
                                                         AbnormalityKind::Robertsonian};
std::string to_string(AbnormalityKind kind);

enum class ReplaceMode { Inversion, Foreign };

/// Abnormality described in fractions of the host length.
struct AbnormalitySpec {
  AbnormalityKind kind = AbnormalityKind::Deleted;
  double start_frac = 0.0;  // span start (insertion point for AddedForeign)
  double len_frac = 0.0;
  ReplaceMode replace = ReplaceMode::Inversion;
  double donor_start_frac = 0.0;

  bool needs_donor() const {
    return kind == AbnormalityKind::AddedForeign ||
           (kind == AbnormalityKind::Replaced && replace == ReplaceMode::Foreign);
  }
};

/// Throws SpanOutOfRange unless 0 <= start, start + len <= 1 and len >= min_frac
/// (Robertsonian carries no span).
void validate(const AbnormalitySpec& spec, double min_frac = 0.1);

/// Abnormality in index terms on a concrete sequence.
struct Edit {
  AbnormalityKind kind = AbnormalityKind::Deleted;
  std::size_t start = 0;
  std::size_t len = 0;
  ReplaceMode replace = ReplaceMode::Inversion;
  std::size_t donor_start = 0;

  bool needs_donor() const {
    return kind == AbnormalityKind::AddedForeign || (kind == AbnormalityKind::Replaced && replace == ReplaceMode::Foreign);
  }
};

/// Converts fractions to indices for a host of length n and donor of length donor_n.
Edit resolve(const AbnormalitySpec& spec, std::size_t n, std::size_t donor_n);

/// Index-level operator, applied identically to left and right rows.
///   Deleted        remove [start, start+len)
///   AddedForeign   insert donor[donor_start, donor_start+len) at start
///   DuplicatedSelf insert a copy of [start, start+len) right after it
///   Replaced       reverse [start, start+len) (Inversion) or overwrite it
///                  with donor[donor_start, donor_start+len) (Foreign)
///   Robertsonian   reverse(seq) followed by seq
/// Throws SpanOutOfRange, MissingDonor.
RawSequencePair apply_edit(const RawSequencePair& seq, const Edit& edit, const RawSequencePair* donor = nullptr);

RawSequencePair apply_abnormality(const RawSequencePair& seq, const AbnormalitySpec& spec,
                                  const RawSequencePair* donor = nullptr, double min_frac = 0.1);

struct CorpusConfig {
  std::size_t n_subjects = 1000;
  std::size_t bags_per_subject = 1;
  std::size_t m = 5;
  std::size_t d = kDefaultLength;
  double abnormal_ratio = 0.4;    // operator-driven abnormal bags, fraction of all bags
  double mixed_type_ratio = 0.1;  // same-group mixed-type abnormal bags, fraction of all bags
  double val_fraction = 0.1;      // by subject
  double min_frac = 0.1;
  double max_frac = 0.35;
  RenderNoise noise;
  TemplateJitter subject_jitter;
  double cell_length_jitter = 0.05;
  std::uint64_t seed = 0;
};

/// Throws InvariantViolation for out-of-range ratios or sizes.
void validate(const CorpusConfig& cfg);

enum class BagKind { Normal, Operator, MixedType };

struct CorpusStats {
  std::size_t normal = 0;
  std::size_t mixed_type = 0;
  std::array<std::size_t, 5> per_kind{};  // indexed like kAllKinds
  std::size_t train = 0;
  std::size_t val = 0;
};

struct Corpus {
  std::vector<BagRecord> train;
  std::vector<BagRecord> val;
  CorpusStats stats;
};

/// Everything drawn for one bag, including the renderings before any abnormality.
struct BagTrace {
  BagKind kind = BagKind::Normal;
  AbnormalitySpec spec;
  int partner_type = -1;  // mixed-type bags
  std::vector<std::array<RawSequencePair, 2>> before;
  std::vector<std::array<RawSequencePair, 2>> after;
};

/// Generates bag `index` of the corpus; deterministic in (cfg.seed, index, kind).
BagRecord synthesize_bag(const TemplateSet& templates, const CorpusConfig& cfg, std::size_t index, BagKind kind,
                         const std::string& subject_id, BagTrace* trace = nullptr);

Corpus build_pretrain_corpus(const TemplateSet& templates, const CorpusConfig& cfg);

/// Templates seeded from cfg.seed, sized for cfg.d.
TemplateSet templates_for(const CorpusConfig& cfg);

std::string manifest_json(const CorpusConfig& cfg, const CorpusStats& stats);
CorpusConfig config_from_manifest(const std::string& json_text);

}  // namespace homnet::synth
