#include <cmath>
#include <random>

#include "doctest.h"
#include "homnet/error.hpp"
#include "homnet/numerics.hpp"

using namespace homnet;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor<double> t(std::move(shape));
  for (double& v : t.data) v = dist(rng);
  return t;
}

// Direct loop cross-correlation with the documented accumulation order.
Tensor<double> conv_oracle(const Tensor<double>& in, const Tensor<double>& k, num::Stride s) {
  const std::size_t N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
  const std::size_t Co = k.shape[0], kh = k.shape[2], kw = k.shape[3];
  const std::size_t Ho = (H - kh) / s.h + 1, Wo = (W - kw) / s.w + 1;
  Tensor<double> out({N, Co, Ho, Wo});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < Co; ++o)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t x = 0; x < Wo; ++x) {
          double acc = 0.0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j)
                acc += in.data[((n * C + c) * H + y * s.h + i) * W + x * s.w + j] *
                       k.data[((o * C + c) * kh + i) * kw + j];
          out.data[((n * Co + o) * Ho + y) * Wo + x] = acc;
        }
  return out;
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("conv2d_strided examples") {
  SUBCASE("default merge geometry") {
    const Tensor<double> in({1, 2, 512}, 0.5);
    const Tensor<double> k({64, 1, 2, 32}, 0.01);
    CHECK(num::conv2d_strided(in, k, {2, 32}).shape == Shape{64, 1, 16});
  }
  SUBCASE("zero kernels") {
    std::mt19937_64 rng(1);
    const auto in = random_tensor({1, 2, 8}, rng);
    const auto out = num::conv2d_strided(in, Tensor<double>({3, 1, 2, 4}), {2, 4});
    for (double v : out.data) CHECK(v == 0.0);
  }
  SUBCASE("ones") {
    const Tensor<double> in({1, 2, 4}, 1.0);
    const Tensor<double> k({1, 1, 2, 2}, 1.0);
    const auto out = num::conv2d_strided(in, k, {2, 2});
    CHECK(out.shape == Shape{1, 1, 2});
    CHECK(out.data == std::vector<double>{4.0, 4.0});
  }
  SUBCASE("non-integral output extent") {
    CHECK(code_of([] { num::conv2d_strided(Tensor<double>({1, 2, 5}), Tensor<double>({1, 1, 2, 2}), {2, 2}); }) ==
          ErrorCode::ShapeMismatch);
  }
  SUBCASE("channel mismatch") {
    CHECK(code_of([] { num::conv2d_strided(Tensor<double>({2, 2, 4}), Tensor<double>({1, 1, 2, 2}), {2, 2}); }) ==
          ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("conv2d_strided equals the loop oracle bit for bit") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> small(1, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t N = small(rng), C = small(rng), Co = small(rng), kh = small(rng), kw = small(rng);
    const std::size_t sh = small(rng), sw = small(rng), Ho = small(rng), Wo = small(rng) + 1;
    const std::size_t H = (Ho - 1) * sh + kh, W = (Wo - 1) * sw + kw;
    const auto in = random_tensor({N, C, H, W}, rng);
    const auto k = random_tensor({Co, C, kh, kw}, rng);
    const auto got = num::conv2d_strided(in, k, {sh, sw});
    const auto want = conv_oracle(in, k, {sh, sw});
    CHECK(got.shape == want.shape);
    CHECK(got.data == want.data);
  }
}

TEST_CASE("affine, activations and softmax") {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({3, 4}, rng);
  Tensor<double> eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 1.0;
  CHECK(num::affine(x, eye).data == x.data);

  const Tensor<double> bias({2}, std::vector<double>{1.0, -1.0});
  const auto y = num::affine(Tensor<double>::matrix(1, 2, {2.0, 3.0}), Tensor<double>::matrix(2, 2, {1, 0, 0, 1}), &bias);
  CHECK(y.data == std::vector<double>{3.0, 2.0});

  const auto r = num::act(Tensor<double>({3}, std::vector<double>{-1.0, 0.0, 2.0}), num::Activation::Relu);
  CHECK(r.data == std::vector<double>{0.0, 0.0, 2.0});
  CHECK(num::sigmoid(0.0) == 0.5);
  CHECK(num::sigmoid(0.0f) == 0.5f);

  const auto s = num::softmax_rows(Tensor<double>::matrix(1, 2, {0.0, 0.0}));
  CHECK(s.data == std::vector<double>{0.5, 0.5});

  const auto big = random_tensor({20, 9}, rng, -30.0, 30.0);
  const auto sm = num::softmax_rows(big);
  for (std::size_t i = 0; i < 20; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < 9; ++j) {
      CHECK(sm(i, j) > 0.0);
      total += sm(i, j);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  CHECK(code_of([] { num::matmul(Tensor<double>({2, 3}), Tensor<double>({2, 3})); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("raw row normalization floors the denominator") {
  const auto out = num::normalize_rows_raw(Tensor<double>::matrix(2, 2, {1.0, 3.0, 1e-9, -1e-9}));
  CHECK(out(0, 0) == 0.25);
  CHECK(out(0, 1) == 0.75);
  CHECK(std::abs(out(1, 0)) == doctest::Approx(1e-9 / num::kRawFloor));
}

TEST_CASE("layout helpers") {
  const auto x = Tensor<double>::matrix(4, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  const auto t = num::transpose(x);
  CHECK(t.shape == Shape{3, 4});
  CHECK(t(2, 1) == 5.0);

  // Two 2x3 blocks, each transposed to 3x2.
  const auto bt = num::block_transpose(x, 2);
  CHECK(bt.shape == Shape{6, 2});
  CHECK(bt.data == std::vector<double>{0, 3, 1, 4, 2, 5, 6, 9, 7, 10, 8, 11});

  const auto a = Tensor<double>::matrix(2, 1, {1, 2});
  const auto b = Tensor<double>::matrix(2, 2, {3, 4, 5, 6});
  CHECK(num::concat_cols<double>({&a, &b}).data == std::vector<double>{1, 3, 4, 2, 5, 6});
  const auto c = Tensor<double>::matrix(1, 2, {7, 8});
  CHECK(num::concat_rows<double>({&b, &c}).data == std::vector<double>{3, 4, 5, 6, 7, 8});
  CHECK(num::sum(b) == 18.0);
  CHECK(num::scale(b, 2.0).data == std::vector<double>{6, 8, 10, 12});
}

TEST_CASE("alignment weights follow scaled dot products") {
  std::mt19937_64 rng(4);
  const std::size_t blocks = 2, heads = 2, n = 3, da = 2;
  const auto qkv = random_tensor({blocks * n, 3 * heads * da}, rng);
  const auto w = num::alignment_weights(qkv, blocks, heads, {1, 0}, num::AttnNorm::Softmax);
  CHECK(w.shape == Shape{blocks, heads, n, n});
  const std::size_t width = 3 * heads * da;
  for (std::size_t p = 0; p < blocks; ++p)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> s(n);
        double mx = -1e300;
        for (std::size_t z = 0; z < n; ++z) {
          double dot = 0.0;
          for (std::size_t c = 0; c < da; ++c)
            dot += qkv.data[(p * n + e) * width + h * da + c] * qkv.data[((1 - p) * n + z) * width + (heads + h) * da + c];
          s[z] = dot / std::sqrt(2.0);
          mx = std::max(mx, s[z]);
        }
        double total = 0.0;
        for (double& v : s) total += (v = std::exp(v - mx));
        for (std::size_t z = 0; z < n; ++z)
          CHECK(w.data[((p * heads + h) * n + e) * n + z] == doctest::Approx(s[z] / total).epsilon(1e-12));
      }
}

TEST_CASE("ops are pure and repeatable") {
  std::mt19937_64 rng(8);
  const auto a = random_tensor({5, 6}, rng);
  const auto b = random_tensor({6, 4}, rng);
  const auto a0 = a, b0 = b;
  const auto r1 = num::matmul(a, b);
  const auto r2 = num::matmul(a, b);
  CHECK(r1 == r2);
  CHECK(a == a0);
  CHECK(b == b0);
}
