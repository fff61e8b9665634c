#include <cmath>
#include <sstream>

#include "homnet/evaluation.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace homnet;
using testing::code_of;

namespace {

ChromosomeSequence sequence_of(const std::vector<float>& avg, std::size_t d) {
  ChromosomeSequence s;
  s.d = d;
  s.valid_len = avg.size();
  s.values.assign(2 * d, 0.0f);
  for (std::size_t i = 0; i < avg.size(); ++i) s.values[i] = s.values[d + i] = avg[i];
  return s;
}

std::vector<int> flipped(const std::vector<int>& y) {
  std::vector<int> out;
  for (int v : y) out.push_back(1 - v);
  return out;
}

}  // namespace

TEST_CASE("auc_roc examples") {
  CHECK(auc_roc({0.9, 0.1}, {1, 0}) == 1.0);
  CHECK(auc_roc({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}) == 0.5);
  CHECK(auc_roc({0.8, 0.6, 0.4}, {1, 0, 1}) == oracle::auc_pairwise({0.8, 0.6, 0.4}, {1, 0, 1}));
  CHECK(auc_roc({0.8, 0.6, 0.4}, {1, 0, 1}) == 0.5);
  CHECK(code_of([] { auc_roc({0.1, 0.2}, {1, 1}); }) == ErrorCode::SingleClass);
  CHECK(code_of([] { auc_roc({0.1}, {1, 0}); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("auc_roc against the exhaustive pair oracle") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::uniform_int_distribution<int> coarse(0, 4), bit(0, 1);
  std::uniform_real_distribution<double> fine(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(rng);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    // Half the trials draw from five values so ties are common.
    for (std::size_t i = 0; i < n; ++i) scores[i] = trial % 2 ? coarse(rng) / 4.0 : fine(rng);
    for (std::size_t i = 0; i < n; ++i) labels[i] = bit(rng);
    labels[0] = 1;
    labels[1] = 0;
    const double auc = auc_roc(scores, labels);
    CHECK(auc == oracle::auc_pairwise(scores, labels));
    CHECK(std::abs(auc + auc_roc(scores, flipped(labels)) - 1.0) < 1e-12);
    std::vector<double> warped;
    for (double s : scores) warped.push_back(std::exp(3.0 * s) - 7.0);
    CHECK(auc_roc(warped, labels) == auc);
  }
}

TEST_CASE("f1") {
  CHECK(f1({0.9, 0.1, 0.7}, {1, 0, 1}) == 1.0);
  CHECK(f1({0.9, 0.8, 0.1}, {1, 0, 1}) == 0.5);  // TP=1, FP=1, FN=1
  CHECK(f1({0.1, 0.2}, {1, 0}) == 0.0);
  CHECK(f1({0.1, 0.2}, {0, 0}) == 0.0);
  CHECK(f1({0.5}, {1}) == 1.0);  // the threshold is inclusive

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredRecord> recs;
    for (int i = 0; i < 20; ++i) recs.push_back({"r" + std::to_string(i), u(rng), bit(rng)});
    const EvalReport rep = make_report(recs);
    const Confusion& c = rep.counts;
    CHECK(c.tp + c.fp + c.tn + c.fn == recs.size());
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& r : recs) {
      const bool pred = r.score >= 0.5;
      tp += pred && r.label == 1;
      fp += pred && r.label == 0;
      fn += !pred && r.label == 1;
    }
    CHECK(c.tp == tp);
    const double expect = 2 * tp + fp + fn == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    CHECK(rep.f1 == expect);
  }
}

TEST_CASE("report serialization") {
  const EvalReport rep = make_report({{"a", 0.75, 1}, {"b", 0.25, 0}, {"c", 0.5, 0}});
  const auto j = to_json(rep, true);
  CHECK(j["auc"].get<double>() == 1.0);
  CHECK(j["f1"].get<double>() == rep.f1);
  CHECK(j["fp"].get<std::size_t>() == 1);
  CHECK(j["records"].size() == 3);
  CHECK(j["records"][0]["record_id"] == "a");
  CHECK_FALSE(to_json(rep).contains("records"));

  std::ostringstream csv;
  write_csv(csv, rep);
  CHECK(csv.str() == "record_id,score,label\na,0.75,1\nb,0.25,0\nc,0.5,0\n");

  const EvalReport single = make_report({{"a", 0.9, 1}});
  CHECK_FALSE(single.auc.has_value());
  CHECK(to_json(single)["auc"].is_null());
}

TEST_CASE("dtw_distance") {
  CHECK(dtw_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(dtw_distance({1, 2, 3}, {1, 3}) == 1.0);
  CHECK(oracle::dtw_paths({1, 2, 3}, {1, 3}) == 1.0);
  CHECK(code_of([] { dtw_distance({}, {1.0}); }) == ErrorCode::EmptyInput);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> x(len(rng)), y(len(rng));
    for (double& v : x) v = u(rng);
    for (double& v : y) v = u(rng);
    const double d = dtw_distance(x, y);
    CHECK(d == oracle::dtw_paths(x, y));
    CHECK(d == dtw_distance(y, x));
    CHECK(d > 0.0);
    CHECK(dtw_distance(x, x) == 0.0);
  }
}

TEST_CASE("pair_features") {
  SUBCASE("constant sequence") {
    const auto s = sequence_of(std::vector<float>(10, 0.4f), 16);
    const PairFeatures f = pair_features({s, s});
    CHECK(f.a.variance == 0.0);
    CHECK(f.a.on_peak == 0);
    CHECK(f.a.off_peak == 0);
    CHECK(f.covariance == 0.0);
    CHECK(f.pearson_r == 0.0);
    CHECK(f.dtw == 0.0);
  }
  SUBCASE("identical non-constant pair") {
    const auto s = sequence_of({0.1f, 0.9f, 0.2f, 0.8f, 0.3f}, 8);
    const PairFeatures f = pair_features({s, s});
    CHECK(f.dtw == 0.0);
    CHECK(f.pearson_r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.a.on_peak == f.b.on_peak);
  }
  SUBCASE("shifted alternating sequences anti-correlate") {
    std::vector<float> a, b;
    for (int i = 0; i < 12; ++i) {
      a.push_back(static_cast<float>(i % 2));
      b.push_back(static_cast<float>((i + 1) % 2));
    }
    const PairFeatures f = pair_features({sequence_of(a, 16), sequence_of(b, 16)});
    CHECK(f.pearson_r < 0.0);
    CHECK(f.pearson_r == doctest::Approx(-1.0).epsilon(1e-12));
    // Interior extrema of 0,1,0,1,... beyond the half-sigma band.
    CHECK(f.a.on_peak == 5);
    CHECK(f.a.off_peak == 5);
  }
  SUBCASE("degenerate length") {
    const auto s = sequence_of({0.1f, 0.2f}, 4);
    CHECK(code_of([&] { pair_features({s, s}); }) == ErrorCode::DegenerateLength);
  }
  SUBCASE("feature vector is finite") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
      auto a = testing::random_sequence(32, rng), b = testing::random_sequence(32, rng);
      if (a.valid_len < 3 || b.valid_len < 3) continue;
      for (double v : pair_features({a, b}).vector()) CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("fit_logistic") {
  SUBCASE("separable data is fit perfectly") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      const double v = i < 20 ? -1.0 - 0.05 * i : 1.0 + 0.05 * i;
      x.push_back({v, 0.3 * i});
      y.push_back(i < 20 ? 0 : 1);
    }
    const LogisticModel model = fit_logistic(x, y, 0.0, 2000);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK((model.score(x[i]) >= 0.5) == (y[i] == 1));
  }
  SUBCASE("heavy regularization drives scores to one half") {
    const std::vector<std::vector<double>> x{{0.0}, {1.0}, {2.0}, {3.0}};
    const LogisticModel model = fit_logistic(x, {0, 0, 1, 1}, 1e9, 200);
    CHECK(std::abs(model.weights[0]) < 1e-9);
    CHECK(std::abs(model.score({3.0}) - 0.5) < 1e-9);
  }
  SUBCASE("errors") {
    CHECK(code_of([] { fit_logistic({{1.0}, {2.0}}, {1, 1}, 0.0, 10); }) == ErrorCode::SingleClass);
    CHECK(code_of([] { fit_logistic({}, {}, 0.0, 10); }) == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("lr_baseline scores bags by mean pair score") {
  std::mt19937_64 rng(5);
  std::vector<BagRecord> train, test;
  // Abnormal bags carry a strong dip in chromosome b only.
  const auto make = [&](int label, const std::string& id) {
    BagRecord r = testing::random_record(24, 3, rng, id, id);
    r.label = label;
    for (auto& p : r.pairs) {
      p.a = sequence_of(std::vector<float>(20, 0.5f), 24);
      std::vector<float> b(20, 0.5f);
      if (label == 1)
        for (int i = 5; i < 12; ++i) b[i] = 0.0f;
      b[1] += 0.01f * static_cast<float>(rng() % 5);
      p.b = sequence_of(b, 24);
    }
    return r;
  };
  for (int i = 0; i < 20; ++i) train.push_back(make(i % 2, "t" + std::to_string(i)));
  for (int i = 0; i < 10; ++i) test.push_back(make(i % 2, "e" + std::to_string(i)));
  const EvalReport rep = lr_baseline(train, test);
  REQUIRE(rep.auc.has_value());
  CHECK(*rep.auc == 1.0);
  CHECK(rep.records.size() == test.size());
  CHECK(code_of([&] { lr_baseline({}, test); }) == ErrorCode::EmptyDataset);
}

TEST_CASE("ablation transforms") {
  std::mt19937_64 rng(6);
  std::vector<BagRecord> recs{testing::random_record(16, 4, rng), testing::random_record(16, 2, rng)};
  const auto dropped = drop_partner(recs);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t p = 0; p < recs[i].pairs.size(); ++p) {
      CHECK(dropped[i].pairs[p].a == recs[i].pairs[p].a);
      CHECK(dropped[i].pairs[p].b.values == std::vector<float>(32, 0.0f));
    }
    CHECK_NOTHROW(validate(dropped[i]));
  }
  const auto cut = truncate_bags(recs, 3);
  CHECK(cut[0].pairs.size() == 3);
  CHECK(cut[1].pairs.size() == 2);
  CHECK(cut[0].pairs[2] == recs[0].pairs[2]);
  CHECK(code_of([&] { truncate_bags(recs, 0); }) == ErrorCode::EmptyBag);
}
