#include "homnet/karyotype.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace homnet {

namespace {

// Float-valued JSON keeps dataset values exact: numbers are parsed straight to
// float and printed in shortest round-trip form.
using RecordJson = nlohmann::basic_json<nlohmann::ordered_map, std::vector, std::string, bool, std::int64_t,
                                        std::uint64_t, float>;

[[noreturn]] void violation(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvariantViolation, field + ": " + what);
}

RecordJson sequence_row(const ChromosomeSequence& s, std::size_t row) {
  RecordJson arr = RecordJson::array();
  arr.get_ref<RecordJson::array_t&>().reserve(s.d);
  for (std::size_t i = 0; i < s.d; ++i) arr.push_back(s.values[row * s.d + i]);
  return arr;
}

std::vector<float> read_row(const RecordJson& j, const char* field) {
  if (!j.is_array()) violation(field, "expected an array");
  std::vector<float> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) violation(field, "expected numbers");
    out.push_back(v.get<float>());
  }
  return out;
}

ChromosomeSequence read_sequence(const RecordJson& pair, const char* left, const char* right, const char* valid) {
  std::vector<float> l = read_row(pair.at(left), left);
  std::vector<float> r = read_row(pair.at(right), right);
  if (l.size() != r.size()) violation(right, "length differs from " + std::string(left));
  ChromosomeSequence s;
  s.d = l.size();
  const auto& vj = pair.at(valid);
  if (!vj.is_number_integer() || vj.get<std::int64_t>() < 0) violation(valid, "expected a non-negative integer");
  s.valid_len = static_cast<std::size_t>(vj.get<std::int64_t>());
  s.values = std::move(l);
  s.values.insert(s.values.end(), r.begin(), r.end());
  return s;
}

int read_int(const RecordJson& j, const char* field) {
  const auto& v = j.at(field);
  if (!v.is_number_integer()) violation(field, "expected an integer");
  return static_cast<int>(v.get<std::int64_t>());
}

std::string read_string(const RecordJson& j, const char* field) {
  const auto& v = j.at(field);
  if (!v.is_string()) violation(field, "expected a string");
  return v.get<std::string>();
}

}  // namespace

std::size_t band_index(int band_level) {
  const auto it = std::find(kBandLevels.begin(), kBandLevels.end(), band_level);
  if (it == kBandLevels.end()) {
    throw Error(ErrorCode::InvalidBand, "band level " + std::to_string(band_level) + " not in {300,400,550,700}");
  }
  return static_cast<std::size_t>(it - kBandLevels.begin());
}

RawSequencePair image_to_raw_pair(const Tensor<double>& image, std::size_t min_height) {
  if (image.rank() != 2) throw Error(ErrorCode::ShapeMismatch, "image must be [H, W]");
  const std::size_t H = image.shape[0], W = image.shape[1];
  if (H < min_height || W < 2) {
    throw Error(ErrorCode::TooSmall, "image " + shape_string(image.shape) + " smaller than " +
                                         std::to_string(min_height) + "x2");
  }
  const std::size_t half = W / 2;
  RawSequencePair out;
  out.left.resize(H);
  out.right.resize(H);
  for (std::size_t r = 0; r < H; ++r) {
    double l = 0.0, rr = 0.0;
    for (std::size_t c = 0; c < half; ++c) l += image(r, c);
    for (std::size_t c = half; c < W; ++c) rr += image(r, c);
    out.left[r] = l / static_cast<double>(half);
    out.right[r] = rr / static_cast<double>(W - half);
  }
  return out;
}

ChromosomeSequence normalize_fit(const RawSequencePair& raw, std::size_t d) {
  if (raw.left.size() != raw.right.size()) violation("right", "length differs from left");
  if (raw.size() > d) {
    throw Error(ErrorCode::TooLong, "sequence length " + std::to_string(raw.size()) + " exceeds d=" +
                                        std::to_string(d) + "; resample first");
  }
  ChromosomeSequence s;
  s.d = d;
  s.valid_len = raw.size();
  s.values.assign(2 * d, 0.0f);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (const auto& [row, src] : {std::pair{0u, &raw.left}, std::pair{1u, &raw.right}}) {
      const double v = (*src)[i];
      if (!(v >= 0.0 && v <= 255.0)) violation(row == 0 ? "left" : "right", "gray value outside [0,255]");
      s.values[row * d + i] = static_cast<float>((255.0 - v) / 255.0);
    }
  }
  return s;
}

RawSequencePair resample_raw(const RawSequencePair& raw, std::size_t target_len) {
  if (target_len < 2) throw Error(ErrorCode::InvariantViolation, "target_len must be >= 2");
  if (raw.size() == 0) throw Error(ErrorCode::EmptyInput, "cannot resample an empty sequence");
  if (raw.size() == target_len) return raw;
  auto resample = [&](const std::vector<double>& src) {
    std::vector<double> out(target_len);
    const std::size_t n = src.size();
    if (n == 1) {
      std::fill(out.begin(), out.end(), src[0]);
      return out;
    }
    const double step = static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
    for (std::size_t i = 0; i < target_len; ++i) {
      const double x = static_cast<double>(i) * step;
      const std::size_t lo = std::min(static_cast<std::size_t>(x), n - 2);
      const double t = x - static_cast<double>(lo);
      out[i] = src[lo] + t * (src[lo + 1] - src[lo]);
    }
    out.front() = src.front();
    out.back() = src.back();
    return out;
  };
  return {resample(raw.left), resample(raw.right)};
}

ConditionEncoding encode_condition(int chrom_type, int band_level) {
  if (chrom_type < 0 || chrom_type >= static_cast<int>(kChromTypes)) {
    throw Error(ErrorCode::InvalidType, "chromosome type " + std::to_string(chrom_type) + " not in [0,24)");
  }
  ConditionEncoding enc;
  enc.b_onehot[band_index(band_level)] = 1.0;
  enc.c_onehot[static_cast<std::size_t>(chrom_type)] = 1.0;
  return enc;
}

void validate(const ChromosomeSequence& s) {
  if (s.d == 0) violation("d", "must be positive");
  if (s.values.size() != 2 * s.d) violation("values", "expected 2 x d entries");
  if (s.valid_len > s.d) violation("valid", "exceeds d");
  for (std::size_t row = 0; row < 2; ++row) {
    for (std::size_t i = 0; i < s.d; ++i) {
      const float v = s.values[row * s.d + i];
      if (!(v >= 0.0f && v <= 1.0f)) violation(row ? "right" : "left", "value outside [0,1]");
      if (i >= s.valid_len && v != 0.0f) violation(row ? "right" : "left", "non-zero padding past valid length");
    }
  }
}

void validate(const BagRecord& r) {
  if (r.chrom_type < 0 || r.chrom_type >= static_cast<int>(kChromTypes)) violation("chrom_type", "not in [0,24)");
  if (std::find(kBandLevels.begin(), kBandLevels.end(), r.band_level) == kBandLevels.end()) {
    violation("band_level", std::to_string(r.band_level) + " not in {300,400,550,700}");
  }
  if (r.label != 0 && r.label != 1) violation("label", "must be 0 or 1");
  if (r.pairs.empty()) violation("pairs", "bag must hold at least one pair");
  const std::size_t d = r.pairs.front().a.d;
  for (const auto& p : r.pairs) {
    validate(p.a);
    validate(p.b);
    if (p.a.d != d || p.b.d != d) violation("pairs", "all sequences in a bag must share d");
  }
}

void write_dataset(std::ostream& out, const std::vector<BagRecord>& records) {
  for (const auto& r : records) {
    RecordJson j = RecordJson::object();
    j["record_id"] = r.record_id;
    j["subject_id"] = r.subject_id;
    j["chrom_type"] = r.chrom_type;
    j["band_level"] = r.band_level;
    j["label"] = r.label;
    RecordJson pairs = RecordJson::array();
    for (const auto& p : r.pairs) {
      RecordJson pj = RecordJson::object();
      pj["a_left"] = sequence_row(p.a, 0);
      pj["a_right"] = sequence_row(p.a, 1);
      pj["b_left"] = sequence_row(p.b, 0);
      pj["b_right"] = sequence_row(p.b, 1);
      pj["a_valid"] = p.a.valid_len;
      pj["b_valid"] = p.b.valid_len;
      pairs.push_back(std::move(pj));
    }
    j["pairs"] = std::move(pairs);
    out << j.dump() << '\n';
  }
}

std::vector<BagRecord> read_dataset(std::istream& in) {
  std::vector<BagRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RecordJson j;
    try {
      j = RecordJson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!j.is_object()) violation("record", "expected a JSON object");
      BagRecord r;
      r.record_id = read_string(j, "record_id");
      r.subject_id = read_string(j, "subject_id");
      r.chrom_type = read_int(j, "chrom_type");
      r.band_level = read_int(j, "band_level");
      r.label = read_int(j, "label");
      const auto& pairs = j.at("pairs");
      if (!pairs.is_array()) violation("pairs", "expected an array");
      for (const auto& pj : pairs) {
        ChromosomePair p;
        p.a = read_sequence(pj, "a_left", "a_right", "a_valid");
        p.b = read_sequence(pj, "b_left", "b_right", "b_valid");
        r.pairs.push_back(std::move(p));
      }
      validate(r);
      records.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.detail());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvariantViolation, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void save_dataset(const std::vector<BagRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_dataset(out, records);
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<BagRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace homnet
