#include "homnet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "homnet/error.hpp"

namespace homnet {

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

void check_labels(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in length");
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::InvariantViolation, "labels must be 0 or 1");
  }
}

}  // namespace

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_labels(scores, labels);
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::SingleClass, "AUC needs both classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks are 1-based; tied runs share their average rank.
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

Confusion confusion(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  check_labels(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++(predicted ? c.tp : c.fn);
    } else {
      ++(predicted ? c.fp : c.tn);
    }
  }
  return c;
}

double f1_from(const Confusion& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double f1(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  return f1_from(confusion(scores, labels, threshold));
}

EvalReport make_report(std::vector<ScoredRecord> records, double threshold) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : records) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  EvalReport report;
  report.threshold = threshold;
  report.counts = confusion(scores, labels, threshold);
  report.f1 = f1_from(report.counts);
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  if (n_pos > 0 && n_pos < static_cast<std::ptrdiff_t>(labels.size())) report.auc = auc_roc(scores, labels);
  report.records = std::move(records);
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report, bool include_records) {
  nlohmann::ordered_json j;
  j["auc"] = report.auc ? nlohmann::ordered_json(*report.auc) : nlohmann::ordered_json(nullptr);
  j["f1"] = report.f1;
  j["threshold"] = report.threshold;
  j["n"] = report.records.size();
  j["tp"] = report.counts.tp;
  j["fp"] = report.counts.fp;
  j["tn"] = report.counts.tn;
  j["fn"] = report.counts.fn;
  if (include_records) {
    auto& arr = j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : report.records) arr.push_back({{"record_id", r.id}, {"score", r.score}, {"label", r.label}});
  }
  return j;
}

void write_csv(std::ostream& out, const EvalReport& report) {
  out << "record_id,score,label\n";
  const auto old = out.precision(17);
  for (const auto& r : report.records) out << r.id << ',' << r.score << ',' << r.label << '\n';
  out.precision(old);
}

double dtw_distance(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::EmptyInput, "DTW needs two non-empty sequences");
  const std::size_t n = x.size(), m = y.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = std::abs(x[i - 1] - y[j - 1]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<double> PairFeatures::vector() const {
  return {a.mean, a.variance, static_cast<double>(a.on_peak), static_cast<double>(a.off_peak),
          b.mean, b.variance, static_cast<double>(b.on_peak), static_cast<double>(b.off_peak),
          dtw,    pearson_r,  covariance};
}

std::vector<double> channel_average(const ChromosomeSequence& seq) {
  if (seq.valid_len < 3) {
    throw Error(ErrorCode::DegenerateLength, "valid_len " + std::to_string(seq.valid_len) + " < 3");
  }
  std::vector<double> out(seq.valid_len);
  for (std::size_t i = 0; i < seq.valid_len; ++i) {
    out[i] = 0.5 * (static_cast<double>(seq.left(i)) + static_cast<double>(seq.right(i)));
  }
  return out;
}

ChromosomeFeatures chromosome_features(const std::vector<double>& s, double band_sigma) {
  if (s.size() < 3) throw Error(ErrorCode::DegenerateLength, "need at least 3 samples");
  ChromosomeFeatures f;
  const double n = static_cast<double>(s.size());
  f.mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  for (double v : s) f.variance += (v - f.mean) * (v - f.mean);
  f.variance /= n;
  const double sd = std::sqrt(f.variance);
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] > s[i - 1] && s[i] > s[i + 1] && s[i] > f.mean + band_sigma * sd) ++f.on_peak;
    if (s[i] < s[i - 1] && s[i] < s[i + 1] && s[i] < f.mean - band_sigma * sd) ++f.off_peak;
  }
  return f;
}

PairFeatures pair_features(const ChromosomePair& pair, double band_sigma) {
  const std::vector<double> a = channel_average(pair.a);
  const std::vector<double> b = channel_average(pair.b);
  PairFeatures f;
  f.a = chromosome_features(a, band_sigma);
  f.b = chromosome_features(b, band_sigma);
  f.dtw = dtw_distance(a, b);
  const std::size_t n = std::min(a.size(), b.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  f.covariance = cov / static_cast<double>(n);
  f.pearson_r = (va == 0.0 || vb == 0.0) ? 0.0 : cov / std::sqrt(va * vb);
  return f;
}

double LogisticModel::score(const std::vector<double>& features) const {
  double z = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * (features[k] - mean[k]) / scale[k];
  return sigmoid(z);
}

LogisticModel fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2,
                           std::size_t epochs, double lr) {
  if (x.empty()) throw Error(ErrorCode::EmptyDataset, "no training rows");
  if (x.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "rows and labels differ in count");
  const auto n_pos = std::count(y.begin(), y.end(), 1);
  if (n_pos == 0 || n_pos == static_cast<std::ptrdiff_t>(y.size())) {
    throw Error(ErrorCode::SingleClass, "training data holds one class");
  }
  const std::size_t n = x.size(), p = x.front().size();
  LogisticModel model;
  model.mean.assign(p, 0.0);
  model.scale.assign(p, 0.0);
  for (const auto& row : x) {
    if (row.size() != p) throw Error(ErrorCode::ShapeMismatch, "ragged feature rows");
    for (std::size_t k = 0; k < p; ++k) model.mean[k] += row[k];
  }
  for (double& m : model.mean) m /= static_cast<double>(n);
  for (const auto& row : x)
    for (std::size_t k = 0; k < p; ++k) model.scale[k] += (row[k] - model.mean[k]) * (row[k] - model.mean[k]);
  for (double& s : model.scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s == 0.0) s = 1.0;
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) z[i][k] = (x[i][k] - model.mean[k]) / model.scale[k];

  model.weights.assign(p, 0.0);
  std::vector<double> grad(p);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = model.bias;
      for (std::size_t k = 0; k < p; ++k) s += model.weights[k] * z[i][k];
      const double err = sigmoid(s) - static_cast<double>(y[i]);
      for (std::size_t k = 0; k < p; ++k) grad[k] += err * z[i][k];
      grad_b += err;
    }
    const double shrink = 1.0 + lr * l2;
    for (std::size_t k = 0; k < p; ++k) model.weights[k] = (model.weights[k] - lr * grad[k] / static_cast<double>(n)) / shrink;
    model.bias = (model.bias - lr * grad_b / static_cast<double>(n)) / shrink;
  }
  return model;
}

EvalReport lr_baseline(const std::vector<BagRecord>& train, const std::vector<BagRecord>& test, double l2,
                       std::size_t epochs) {
  if (train.empty() || test.empty()) throw Error(ErrorCode::EmptyDataset, "baseline needs train and test records");
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& r : train) {
    for (const auto& p : r.pairs) {
      x.push_back(pair_features(p).vector());
      y.push_back(r.label);
    }
  }
  const LogisticModel model = fit_logistic(x, y, l2, epochs);
  std::vector<ScoredRecord> scored;
  for (const auto& r : test) {
    double total = 0.0;
    for (const auto& p : r.pairs) total += model.score(pair_features(p).vector());
    scored.push_back({r.record_id, total / static_cast<double>(r.pairs.size()), r.label});
  }
  return make_report(std::move(scored));
}

std::vector<BagRecord> drop_partner(std::vector<BagRecord> records) {
  for (auto& r : records) {
    for (auto& p : r.pairs) {
      std::fill(p.b.values.begin(), p.b.values.end(), 0.0f);
      p.b.valid_len = 0;
    }
  }
  return records;
}

std::vector<BagRecord> truncate_bags(std::vector<BagRecord> records, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::EmptyBag, "bags must keep at least one pair");
  for (auto& r : records) {
    if (r.pairs.size() > m) r.pairs.resize(m);
  }
  return records;
}

}  // namespace homnet
