#include <algorithm>
#include <cmath>

#include "homnet/model.hpp"
#include "test_support.hpp"

using namespace homnet;
using testing::code_of;

namespace {

// Plain nested-vector linear algebra for the scripted oracle.
using Mat = std::vector<std::vector<double>>;

Mat from(const Tensor<double>& t, std::size_t rows, std::size_t cols) {
  Mat m(rows, std::vector<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = t.data[i * cols + j];
  return m;
}
Mat from(const Tensor<double>& t) { return from(t, t.shape[0], t.shape[1]); }

Mat mul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}
Mat plus(Mat a, const Mat& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) a[i][j] += b[i][j];
  return a;
}
Mat bias_add(Mat a, const Tensor<double>& b) {
  for (auto& row : a)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b.data[j];
  return a;
}
Mat relu(Mat a) {
  for (auto& row : a)
    for (double& v : row) v = std::max(v, 0.0);
  return a;
}
double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }
Mat trans(const Mat& a) {
  Mat t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}
Mat softmax(Mat a) {
  for (auto& row : a) {
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double& v : row) s += (v = std::exp(v - mx));
    for (double& v : row) v /= s;
  }
  return a;
}
Mat hcat(const std::vector<Mat>& parts) {
  Mat out = parts[0];
  for (std::size_t p = 1; p < parts.size(); ++p)
    for (std::size_t i = 0; i < out.size(); ++i) out[i].insert(out[i].end(), parts[p][i].begin(), parts[p][i].end());
  return out;
}
double max_abs_diff(const Mat& a, const Tensor<double>& t) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) m = std::max(m, std::abs(a[i][j] - t.data[i * a[0].size() + j]));
  return m;
}

Mat oracle_cms(const ChromosomeSequence& seq, const ConditionEncoding& cond, const ParamStore<double>& p,
               const ModelConfig& cfg) {
  const std::size_t n_r = cfg.n_r(), l_r = cfg.l_r, k = cfg.k_mg;
  const Tensor<double>& K = p.at("cms.merge_kernels");
  Mat cvec(1, std::vector<double>());
  for (double v : cond.c_onehot) cvec[0].push_back(v);
  for (double v : cond.b_onehot) cvec[0].push_back(v);
  const Mat info = mul(cvec, from(p.at("cms.W_info")));
  Mat r(n_r, std::vector<double>(l_r, 0.0));
  for (std::size_t e = 0; e < n_r; ++e)
    for (std::size_t c = 0; c < l_r; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < k; ++j) acc += seq.values[i * cfg.d + e * k + j] * K.data[(c * 2 + i) * k + j];
      r[e][c] = acc + info[0][e * l_r + c];
    }
  const Mat local = relu(bias_add(mul(r, from(p.at("cms.W_R1"))), p.at("cms.b_R1")));
  const Mat r1 = plus(bias_add(mul(local, from(p.at("cms.W_R2"))), p.at("cms.b_R2")), r);
  const Mat g = relu(bias_add(mul(trans(r1), from(p.at("cms.W_R3"))), p.at("cms.b_R3")));
  return plus(trans(bias_add(mul(g, from(p.at("cms.W_R4"))), p.at("cms.b_R4"))), r1);
}

Mat oracle_aligned(const Mat& x, const Mat& y, const ParamStore<double>& p, const ModelConfig& cfg,
                   const std::string& pre) {
  if (cfg.align != AlignMode::Attention) {
    const Mat v = mul(y, from(p.at(pre + "W_v")));
    Mat mix;
    if (cfg.align == AlignMode::Mlp) {
      mix = from(p.at(pre + "W_align"));
    } else {
      const auto& taps = p.at(pre + "align_taps").data;
      mix.assign(cfg.n_r(), std::vector<double>(cfg.n_r(), 0.0));
      for (std::size_t e = 0; e < cfg.n_r(); ++e)
        for (std::size_t z = 0; z < cfg.n_r(); ++z)
          if (e <= z + 1 && z <= e + 1) mix[e][z] = taps[z + 1 - e];
    }
    return mul(mix, v);
  }
  std::vector<Mat> heads;
  for (std::size_t h = 0; h < cfg.n_h; ++h) {
    const std::string hp = pre + "head" + std::to_string(h) + ".";
    const Mat q = mul(x, from(p.at(hp + "W_q")));
    const Mat kk = mul(y, from(p.at(hp + "W_k")));
    const Mat v = mul(y, from(p.at(hp + "W_v")));
    Mat s = mul(q, trans(kk));
    for (auto& row : s)
      for (double& val : row) val /= std::sqrt(static_cast<double>(cfg.d_a()));
    heads.push_back(mul(softmax(s), v));
  }
  return hcat(heads);
}

std::vector<double> oracle_hom(Mat a, Mat b, const ParamStore<double>& p, const ModelConfig& cfg) {
  for (std::size_t layer = 0; layer < cfg.hom_layers; ++layer) {
    const std::string pre = "hom.layer" + std::to_string(layer) + ".attn.";
    const Mat wh = from(p.at(pre + "W_head")), wd = from(p.at(pre + "W_diff"));
    const Mat na = mul(plus(a, mul(oracle_aligned(a, b, p, cfg, pre), wh)), wd);
    const Mat nb = mul(plus(b, mul(oracle_aligned(b, a, p, cfg, pre), wh)), wd);
    a = na;
    b = nb;
  }
  Mat flat(1);
  for (const auto& row : a) flat[0].insert(flat[0].end(), row.begin(), row.end());
  for (const auto& row : b) flat[0].insert(flat[0].end(), row.begin(), row.end());
  return relu(bias_add(mul(flat, from(p.at("hom.W_hom"))), p.at("hom.b_hom")))[0];
}

double oracle_bag(const std::vector<std::vector<double>>& diffs, const ParamStore<double>& p,
                  std::vector<double>* alphas = nullptr) {
  const std::size_t l_h = diffs[0].size();
  std::vector<double> pooled(l_h, 0.0);
  for (const auto& h : diffs) {
    const Mat hidden = relu(bias_add(mul(Mat{h}, from(p.at("bag.mlp.W1"))), p.at("bag.mlp.b1")));
    const double a = sigm(bias_add(mul(hidden, from(p.at("bag.mlp.W2"))), p.at("bag.mlp.b2"))[0][0]);
    if (alphas) alphas->push_back(a);
    for (std::size_t j = 0; j < l_h; ++j) pooled[j] += a * h[j];
  }
  return sigm(bias_add(mul(Mat{pooled}, from(p.at("bag.W_bag"))), p.at("bag.b_bag"))[0][0]);
}

// Small non-zero biases so the oracle exercises every term.
ParamStore<double> perturbed_params(const ModelConfig& cfg, std::uint64_t seed) {
  ParamStore<double> p = init_params(cfg, seed);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (const auto& spec : param_layout(cfg)) {
    if (spec.bias)
      for (double& v : p.at(spec.name).data) v = u(rng);
  }
  return p;
}

ModelConfig tiny_config(AlignMode align = AlignMode::Attention) {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.k_mg = 4;
  cfg.l_r = 2;
  cfg.n_h = 2;
  cfg.hom_layers = 2;
  cfg.l_h = 4;
  cfg.m = 3;
  cfg.align = align;
  return cfg;
}

}  // namespace

TEST_CASE("config validation and JSON") {
  ModelConfig cfg;
  CHECK(cfg.n_r() == 16);
  CHECK(cfg.d_a() == 16);
  CHECK_NOTHROW(validate(cfg));
  ModelConfig bad = cfg;
  bad.k_mg = 30;
  CHECK(code_of([&] { validate(bad); }) == ErrorCode::InvariantViolation);
  bad = cfg;
  bad.n_h = 3;
  CHECK(code_of([&] { validate(bad); }) == ErrorCode::InvariantViolation);

  cfg.align = AlignMode::Cnn;
  cfg.attn_norm = num::AttnNorm::RawEps;
  const ModelConfig back = model_config_from_json(to_json(cfg), ModelConfig{});
  CHECK(back.align == AlignMode::Cnn);
  CHECK(back.attn_norm == num::AttnNorm::RawEps);
  CHECK(to_json(back) == to_json(cfg));
  CHECK(code_of([] { parse_align_mode("rnn"); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("parameter layout and initialization") {
  const ModelConfig cfg;
  const auto a = init_params(cfg, 3), b = init_params(cfg, 3);
  CHECK(a == b);
  CHECK_FALSE(a == init_params(cfg, 4));
  CHECK_NOTHROW(check_params(a, cfg));
  CHECK(a.at("cms.merge_kernels").shape == Shape{64, 1, 2, 32});
  CHECK(a.at("cms.W_info").shape == Shape{28, 16 * 64});
  CHECK(a.at("hom.layer1.attn.head3.W_q").shape == Shape{64, 16});
  CHECK(a.at("hom.layer0.attn.W_head").shape == Shape{64, 64});
  CHECK(a.at("hom.W_hom").shape == Shape{2 * 16 * 64, 128});
  CHECK(a.at("bag.mlp.W1").shape == Shape{128, 64});
  CHECK(a.at("bag.W_bag").shape == Shape{128, 1});

  for (const auto& spec : param_layout(cfg)) {
    const auto& t = a.at(spec.name);
    if (spec.bias) {
      for (double v : t.data) CHECK(v == 0.0);
      continue;
    }
    if (t.size() < 1000) continue;
    // Uniform(-B, B) has std B/sqrt(3); the sample mean has std B/sqrt(3n).
    double bound = 0.0, mean = 0.0;
    for (double v : t.data) {
      bound = std::max(bound, std::abs(v));
      mean += v;
    }
    mean /= static_cast<double>(t.size());
    CHECK(std::abs(mean) < 3.0 * bound / std::sqrt(3.0 * static_cast<double>(t.size())));
  }

  ParamStore<double> wrong = init_params(cfg, 1);
  wrong.at("cms.W_R1") = Tensor<double>({3, 3});
  CHECK(code_of([&] { check_params(wrong, cfg); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("cms shapes and residual identity") {
  std::mt19937_64 rng(1);
  SUBCASE("default geometry") {
    const ModelConfig cfg;
    const auto p = init_params(cfg, 1);
    const auto out = cms_forward(testing::random_sequence(512, rng), encode_condition(3, 400), p, cfg);
    CHECK(out.shape == Shape{16, 64});
  }
  SUBCASE("zeroed residual weights leave the region features") {
    const ModelConfig cfg = tiny_config();
    auto p = perturbed_params(cfg, 2);
    for (const char* name : {"cms.W_R1", "cms.b_R1", "cms.W_R2", "cms.b_R2", "cms.W_R3", "cms.b_R3", "cms.W_R4", "cms.b_R4"}) {
      std::fill(p.at(name).data.begin(), p.at(name).data.end(), 0.0);
    }
    const auto seq = testing::random_sequence(cfg.d, rng);
    const auto cond = encode_condition(5, 550);
    const auto out = cms_forward(seq, cond, p, cfg);
    // Post-merge regions: conv plus the reshaped condition term.
    const auto& K = p.at("cms.merge_kernels").data;
    const auto& W = p.at("cms.W_info");
    for (std::size_t e = 0; e < cfg.n_r(); ++e)
      for (std::size_t c = 0; c < cfg.l_r; ++c) {
        double conv = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < cfg.k_mg; ++j) conv += seq.values[i * cfg.d + e * cfg.k_mg + j] * K[(c * 2 + i) * cfg.k_mg + j];
        const double info = W(5, e * cfg.l_r + c) + W(24 + 2, e * cfg.l_r + c);
        CHECK(out(e, c) == doctest::Approx(conv + info).epsilon(1e-14));
      }
  }
}

TEST_CASE("scripted oracle: cms, hom and bag on the tiny config") {
  std::mt19937_64 rng(6);
  for (AlignMode align : {AlignMode::Attention, AlignMode::Mlp, AlignMode::Cnn}) {
    CAPTURE(to_string(align));
    const ModelConfig cfg = tiny_config(align);
    const auto p = perturbed_params(cfg, 7);
    const BagRecord rec = testing::random_record(cfg.d, cfg.m, rng);
    const auto cond = encode_condition(rec.chrom_type, rec.band_level);

    std::vector<std::vector<double>> diffs;
    for (const auto& pair : rec.pairs) {
      const auto ra = cms_forward(pair.a, cond, p, cfg), rb = cms_forward(pair.b, cond, p, cfg);
      const Mat oa = oracle_cms(pair.a, cond, p, cfg), ob = oracle_cms(pair.b, cond, p, cfg);
      CHECK(max_abs_diff(oa, ra) < 1e-12);
      CHECK(max_abs_diff(ob, rb) < 1e-12);

      const auto h = hom_align(ra, rb, p, cfg);
      const auto oh = oracle_hom(oa, ob, p, cfg);
      CHECK(h.shape == Shape{cfg.l_h});
      CHECK(max_abs_diff(Mat{oh}, h) < 1e-12);
      diffs.push_back(oh);
    }
    std::vector<double> alphas;
    const double y = oracle_bag(diffs, p, &alphas);
    const Prediction pred = predict_bag(rec, p, cfg);
    CHECK(std::abs(pred.y_hat - y) < 1e-10);
    REQUIRE(pred.alphas.size() == cfg.m);
    for (std::size_t i = 0; i < cfg.m; ++i) CHECK(std::abs(pred.alphas[i] - alphas[i]) < 1e-10);
  }
}

TEST_CASE("hom_align properties") {
  std::mt19937_64 rng(8);
  const auto random_regions = [&](std::size_t n, std::size_t l) {
    Tensor<double> t({n, l});
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& v : t.data) v = u(rng);
    return t;
  };

  SUBCASE("single region ignores the scores") {
    ModelConfig cfg = tiny_config();
    cfg.k_mg = cfg.d;  // n_r = 1
    auto p = perturbed_params(cfg, 3);
    const auto ra = random_regions(1, cfg.l_r), rb = random_regions(1, cfg.l_r);
    const auto before = hom_align(ra, rb, p, cfg);
    for (const auto& spec : param_layout(cfg)) {
      if (spec.name.ends_with("W_q") || spec.name.ends_with("W_k")) {
        for (double& v : p.at(spec.name).data) v *= -3.0;
      }
    }
    CHECK(hom_align(ra, rb, p, cfg) == before);
  }
  SUBCASE("zeroed head projection reduces each layer to W_diff") {
    ModelConfig cfg = tiny_config();
    cfg.hom_layers = 1;
    auto p = perturbed_params(cfg, 4);
    std::fill(p.at("hom.layer0.attn.W_head").data.begin(), p.at("hom.layer0.attn.W_head").data.end(), 0.0);
    const auto ra = random_regions(cfg.n_r(), cfg.l_r), rb = random_regions(cfg.n_r(), cfg.l_r);
    const Mat wd = from(p.at("hom.layer0.attn.W_diff"));
    Mat flat(1);
    for (const auto& row : mul(from(ra), wd)) flat[0].insert(flat[0].end(), row.begin(), row.end());
    for (const auto& row : mul(from(rb), wd)) flat[0].insert(flat[0].end(), row.begin(), row.end());
    const Mat want = relu(bias_add(mul(flat, from(p.at("hom.W_hom"))), p.at("hom.b_hom")));
    CHECK(max_abs_diff(want, hom_align(ra, rb, p, cfg)) < 1e-12);
  }
  SUBCASE("swapping inputs changes the difference vector") {
    const ModelConfig cfg = tiny_config();
    const auto p = perturbed_params(cfg, 5);
    const auto ra = random_regions(cfg.n_r(), cfg.l_r), rb = random_regions(cfg.n_r(), cfg.l_r);
    CHECK_FALSE(hom_align(ra, rb, p, cfg) == hom_align(rb, ra, p, cfg));
  }
  SUBCASE("wrong input shape") {
    const ModelConfig cfg = tiny_config();
    const auto p = init_params(cfg, 1);
    CHECK(code_of([&] { hom_align(random_regions(3, 2), random_regions(2, 2), p, cfg); }) == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("bag_forward properties") {
  const ModelConfig cfg = tiny_config();
  const auto p = perturbed_params(cfg, 9);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Tensor<double>> diffs;
  for (int i = 0; i < 5; ++i) {
    Tensor<double> h({cfg.l_h});
    for (double& v : h.data) v = u(rng);
    diffs.push_back(h);
  }

  SUBCASE("identical differences get identical weights") {
    const auto pred = bag_forward(std::vector<Tensor<double>>(4, diffs[0]), p);
    for (double a : pred.alphas) CHECK(a == pred.alphas[0]);
  }
  SUBCASE("single pair") {
    const auto pred = bag_forward({diffs[0]}, p);
    std::vector<double> alphas;
    CHECK(std::abs(pred.y_hat - oracle_bag({diffs[0].data}, p, &alphas)) < 1e-12);
    CHECK(std::abs(pred.alphas[0] - alphas[0]) < 1e-12);
  }
  SUBCASE("permutation invariance") {
    const auto base = bag_forward(diffs, p);
    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<Tensor<double>> shuffled;
    for (std::size_t i : perm) shuffled.push_back(diffs[i]);
    const auto moved = bag_forward(shuffled, p);
    CHECK(std::abs(moved.y_hat - base.y_hat) < 1e-12);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(moved.alphas[i] == base.alphas[perm[i]]);
    CHECK(base.y_hat > 0.0);
    CHECK(base.y_hat < 1.0);
  }
  SUBCASE("empty bag") {
    CHECK(code_of([&] { bag_forward(std::vector<Tensor<double>>{}, p); }) == ErrorCode::EmptyBag);
  }
}

TEST_CASE("bce_loss") {
  CHECK(bce_loss(0.5, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(0.5, 1) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(bce_loss(0.9, 1) == doctest::Approx(0.10536).epsilon(1e-4));
  CHECK(bce_loss(1.0 - 1e-12, 1) < 1e-6);
  CHECK(std::isfinite(bce_loss(0.0, 1)));
  CHECK(bce_loss(0.0, 1) == doctest::Approx(-std::log(ad::kBceClamp)));
}

TEST_CASE("predict_bag") {
  const ModelConfig cfg = tiny_config();
  const auto p = perturbed_params(cfg, 11);
  std::mt19937_64 rng(12);
  const BagRecord rec = testing::random_record(cfg.d, cfg.m, rng);

  const Prediction a = predict_bag(rec, p, cfg), b = predict_bag(rec, p, cfg);
  CHECK(a.y_hat == b.y_hat);
  CHECK(a.alphas == b.alphas);

  BagRecord shuffled = rec;
  std::reverse(shuffled.pairs.begin(), shuffled.pairs.end());
  CHECK(std::abs(predict_bag(shuffled, p, cfg).y_hat - a.y_hat) < 1e-12);

  SUBCASE("batched prediction matches per-bag prediction") {
    std::vector<BagRecord> recs;
    for (int i = 0; i < 4; ++i) recs.push_back(testing::random_record(cfg.d, 1 + static_cast<std::size_t>(i), rng));
    std::vector<const BagRecord*> ptrs;
    for (const auto& r : recs) ptrs.push_back(&r);
    const auto batch = predict_bags(ptrs, p, cfg);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(std::abs(batch[i].y_hat - predict_bag(recs[i], p, cfg).y_hat) < 1e-12);
  }
  SUBCASE("float path stays close to double") {
    const auto pf = p.cast<float>();
    CHECK(std::abs(predict_bag(rec, pf, cfg).y_hat - a.y_hat) < 1e-5);
  }
  SUBCASE("saturated outputs stay strictly inside (0,1)") {
    for (const double bias : {1e4, -1e4}) {
      auto sat = p;
      sat.at("bag.b_bag").data[0] = bias;
      const Prediction s = predict_bag(rec, sat, cfg);
      CHECK(s.y_hat > 0.0);
      CHECK(s.y_hat < 1.0);
    }
  }
  SUBCASE("wrong sequence length") {
    const BagRecord other = testing::random_record(cfg.d * 2, 2, rng);
    CHECK(code_of([&] { predict_bag(other, p, cfg); }) == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("make_batch interleaves and swaps pairs") {
  const ModelConfig cfg = tiny_config();
  std::mt19937_64 rng(13);
  const BagRecord r = testing::random_record(cfg.d, 2, rng);
  const std::vector<bool> swap{true, false};
  const auto batch = make_batch<double>({&r}, cfg, &swap);
  CHECK(batch.sequences.shape == Shape{4, 1, 2, cfg.d});
  CHECK(batch.condition.shape == Shape{4, kConditionWidth});
  CHECK(batch.bag_sizes == std::vector<std::size_t>{2});
  const auto row = [&](std::size_t i) {
    return std::vector<double>(batch.sequences.data.begin() + static_cast<long>(i * 2 * cfg.d),
                               batch.sequences.data.begin() + static_cast<long>((i + 1) * 2 * cfg.d));
  };
  const auto as_double = [](const ChromosomeSequence& s) { return std::vector<double>(s.values.begin(), s.values.end()); };
  CHECK(row(0) == as_double(r.pairs[0].b));
  CHECK(row(1) == as_double(r.pairs[0].a));
  CHECK(row(2) == as_double(r.pairs[1].a));
  CHECK(row(3) == as_double(r.pairs[1].b));
  const std::vector<bool> short_mask{true};
  CHECK(code_of([&] { make_batch<double>({&r}, cfg, &short_mask); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("shape chain over random legal configs") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<std::size_t> pick(1, 4);
  for (int trial = 0; trial < 25; ++trial) {
    ModelConfig cfg;
    cfg.k_mg = pick(rng);
    cfg.d = cfg.k_mg * pick(rng);
    cfg.n_h = pick(rng);
    cfg.l_r = cfg.n_h * pick(rng);
    cfg.hom_layers = pick(rng);
    cfg.l_h = 2 * pick(rng);
    cfg.m = pick(rng);
    cfg.align = static_cast<AlignMode>(trial % 3);
    const auto p = init_params(cfg, static_cast<std::uint64_t>(trial));
    const BagRecord r = testing::random_record(cfg.d, cfg.m, rng);
    const auto regions = cms_forward(r.pairs[0].a, encode_condition(r.chrom_type, r.band_level), p, cfg);
    CHECK(regions.shape == Shape{cfg.n_r(), cfg.l_r});
    CHECK(hom_align(regions, regions, p, cfg).shape == Shape{cfg.l_h});
    const Prediction pred = predict_bag(r, p, cfg);
    CHECK(pred.alphas.size() == cfg.m);
    CHECK((pred.y_hat > 0.0 && pred.y_hat < 1.0));
  }
}
