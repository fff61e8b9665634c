#pragma once

// Bag-level metrics, the handcrafted-feature logistic-regression baseline,
// and record transforms used by the ablations.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "homnet/karyotype.hpp"
#include "json.hpp"

namespace homnet {

/// Mann-Whitney statistic with midranks; labels are 0/1. Throws SingleClass, ShapeMismatch.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// A score >= threshold predicts label 1.
Confusion confusion(const std::vector<double>& scores, const std::vector<int>& labels, double threshold = 0.5);
/// 2TP / (2TP + FP + FN), 0 when the denominator is 0.
double f1_from(const Confusion& c);
double f1(const std::vector<double>& scores, const std::vector<int>& labels, double threshold = 0.5);

struct ScoredRecord {
  std::string id;
  double score = 0.0;
  int label = 0;
};

struct EvalReport {
  std::optional<double> auc;  // absent when only one class is present
  double f1 = 0.0;
  double threshold = 0.5;
  Confusion counts;
  std::vector<ScoredRecord> records;
};

EvalReport make_report(std::vector<ScoredRecord> records, double threshold = 0.5);
nlohmann::ordered_json to_json(const EvalReport& report, bool include_records = false);
void write_csv(std::ostream& out, const EvalReport& report);

/// Absolute-difference cost, full table, no window. Throws EmptyInput.
double dtw_distance(const std::vector<double>& x, const std::vector<double>& y);

struct ChromosomeFeatures {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t on_peak = 0;
  std::size_t off_peak = 0;
};

struct PairFeatures {
  ChromosomeFeatures a;
  ChromosomeFeatures b;
  double dtw = 0.0;
  double pearson_r = 0.0;
  double covariance = 0.0;

  std::vector<double> vector() const;
};

/// Peaks are strict local extrema beyond mean +- band_sigma * std.
inline constexpr double kPeakBandSigma = 0.5;

/// Left/right average over [0, valid_len). Throws DegenerateLength when valid_len < 3.
std::vector<double> channel_average(const ChromosomeSequence& seq);
ChromosomeFeatures chromosome_features(const std::vector<double>& seq, double band_sigma = kPeakBandSigma);
PairFeatures pair_features(const ChromosomePair& pair, double band_sigma = kPeakBandSigma);

struct LogisticModel {
  std::vector<double> mean;  // standardization from training data
  std::vector<double> scale;
  std::vector<double> weights;
  double bias = 0.0;

  double score(const std::vector<double>& features) const;
};

/// Full-batch gradient descent on mean logistic loss with L2 applied as a
/// proximal shrink to weights and intercept. Throws SingleClass, EmptyDataset.
LogisticModel fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2,
                           std::size_t epochs, double lr = 0.5);

/// Pair-level model on pair_features; bag score is the mean pair score.
EvalReport lr_baseline(const std::vector<BagRecord>& train, const std::vector<BagRecord>& test, double l2 = 1e-3,
                       std::size_t epochs = 500);

/// Zeroes chromosome b of every pair (single-chromosome ablation input).
std::vector<BagRecord> drop_partner(std::vector<BagRecord> records);
/// Keeps the first m pairs of each bag.
std::vector<BagRecord> truncate_bags(std::vector<BagRecord> records, std::size_t m);

}  // namespace homnet
