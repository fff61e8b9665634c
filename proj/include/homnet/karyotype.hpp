#pragma once

// Chromosome sequence data model: image -> gray-mean sequence pair ->
// fixed-length normalized 2 x d matrix, bag records, and the JSON Lines
// dataset format.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "homnet/tensor.hpp"

namespace homnet {

inline constexpr std::size_t kChromTypes = 24;
inline constexpr std::array<int, 4> kBandLevels{300, 400, 550, 700};
inline constexpr std::size_t kConditionWidth = kChromTypes + kBandLevels.size();
inline constexpr std::size_t kDefaultLength = 512;

/// Gray means (0..255, white background = 255) of the left and right halves
/// of a vertically oriented chromosome, one entry per image row.
struct RawSequencePair {
  std::vector<double> left;
  std::vector<double> right;

  std::size_t size() const { return left.size(); }
  friend bool operator==(const RawSequencePair&, const RawSequencePair&) = default;
};

/// 2 x d intensities in [0,1]; row 0 = left, row 1 = right. Darker = larger.
/// Entries at positions >= valid_len are exactly 0.
struct ChromosomeSequence {
  std::size_t d = 0;
  std::size_t valid_len = 0;
  std::vector<float> values;

  float left(std::size_t i) const { return values[i]; }
  float right(std::size_t i) const { return values[d + i]; }

  friend bool operator==(const ChromosomeSequence&, const ChromosomeSequence&) = default;
};

struct ChromosomePair {
  ChromosomeSequence a;
  ChromosomeSequence b;
  friend bool operator==(const ChromosomePair&, const ChromosomePair&) = default;
};

struct BagRecord {
  std::string record_id;
  std::string subject_id;
  int chrom_type = 0;
  int band_level = 300;
  int label = 0;
  std::vector<ChromosomePair> pairs;

  std::size_t d() const { return pairs.empty() ? 0 : pairs.front().a.d; }
  friend bool operator==(const BagRecord&, const BagRecord&) = default;
};

struct ConditionEncoding {
  std::array<double, kChromTypes> c_onehot{};
  std::array<double, kBandLevels.size()> b_onehot{};
};

/// Position of `band_level` in (300, 400, 550, 700); throws InvalidBand.
std::size_t band_index(int band_level);

/// Gray means over columns [0, W/2) and [W/2, W) for each row of a [H, W] image.
/// Throws TooSmall when H < min_height or W < 2.
RawSequencePair image_to_raw_pair(const Tensor<double>& image, std::size_t min_height = 8);

/// Maps v -> (255 - v) / 255, top-aligned and zero-padded to d.
/// Throws TooLong when raw.size() > d, InvariantViolation for values outside [0,255].
ChromosomeSequence normalize_fit(const RawSequencePair& raw, std::size_t d = kDefaultLength);

/// Linear interpolation of both rows to target_len samples; endpoints preserved.
RawSequencePair resample_raw(const RawSequencePair& raw, std::size_t target_len);

ConditionEncoding encode_condition(int chrom_type, int band_level);

/// Throws InvariantViolation naming the offending field.
void validate(const ChromosomeSequence& seq);
void validate(const BagRecord& record);

void write_dataset(std::ostream& out, const std::vector<BagRecord>& records);
std::vector<BagRecord> read_dataset(std::istream& in);

void save_dataset(const std::vector<BagRecord>& records, const std::filesystem::path& path);
std::vector<BagRecord> load_dataset(const std::filesystem::path& path);

}  // namespace homnet
