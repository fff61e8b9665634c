// Compiled with -mavx2 (no -mfma). Keep this translation unit free of shared
// inline templates from other headers so no AVX2 code leaks into scalar paths.

#include <immintrin.h>

#include <cstddef>

namespace homnet::kernels::avx2 {

namespace {

template <int Rows>
inline void gemm_rows_d(std::size_t K, std::size_t N, const double* A, const double* B, double* C,
                        bool accumulate) {
  std::size_t j = 0;
  for (; j + 8 <= N; j += 8) {
    __m256d acc[Rows][2];
    for (int r = 0; r < Rows; ++r) {
      acc[r][0] = accumulate ? _mm256_loadu_pd(C + r * N + j) : _mm256_setzero_pd();
      acc[r][1] = accumulate ? _mm256_loadu_pd(C + r * N + j + 4) : _mm256_setzero_pd();
    }
    for (std::size_t k = 0; k < K; ++k) {
      const __m256d b0 = _mm256_loadu_pd(B + k * N + j);
      const __m256d b1 = _mm256_loadu_pd(B + k * N + j + 4);
      for (int r = 0; r < Rows; ++r) {
        const __m256d a = _mm256_broadcast_sd(A + r * K + k);
        acc[r][0] = _mm256_add_pd(acc[r][0], _mm256_mul_pd(a, b0));
        acc[r][1] = _mm256_add_pd(acc[r][1], _mm256_mul_pd(a, b1));
      }
    }
    for (int r = 0; r < Rows; ++r) {
      _mm256_storeu_pd(C + r * N + j, acc[r][0]);
      _mm256_storeu_pd(C + r * N + j + 4, acc[r][1]);
    }
  }
  for (; j + 4 <= N; j += 4) {
    __m256d acc[Rows];
    for (int r = 0; r < Rows; ++r)
      acc[r] = accumulate ? _mm256_loadu_pd(C + r * N + j) : _mm256_setzero_pd();
    for (std::size_t k = 0; k < K; ++k) {
      const __m256d b0 = _mm256_loadu_pd(B + k * N + j);
      for (int r = 0; r < Rows; ++r)
        acc[r] = _mm256_add_pd(acc[r], _mm256_mul_pd(_mm256_broadcast_sd(A + r * K + k), b0));
    }
    for (int r = 0; r < Rows; ++r) _mm256_storeu_pd(C + r * N + j, acc[r]);
  }
  for (; j < N; ++j) {
    for (int r = 0; r < Rows; ++r) {
      double acc = accumulate ? C[r * N + j] : 0.0;
      for (std::size_t k = 0; k < K; ++k) acc = acc + A[r * K + k] * B[k * N + j];
      C[r * N + j] = acc;
    }
  }
}

template <int Rows>
inline void gemm_rows_f(std::size_t K, std::size_t N, const float* A, const float* B, float* C,
                        bool accumulate) {
  std::size_t j = 0;
  for (; j + 16 <= N; j += 16) {
    __m256 acc[Rows][2];
    for (int r = 0; r < Rows; ++r) {
      acc[r][0] = accumulate ? _mm256_loadu_ps(C + r * N + j) : _mm256_setzero_ps();
      acc[r][1] = accumulate ? _mm256_loadu_ps(C + r * N + j + 8) : _mm256_setzero_ps();
    }
    for (std::size_t k = 0; k < K; ++k) {
      const __m256 b0 = _mm256_loadu_ps(B + k * N + j);
      const __m256 b1 = _mm256_loadu_ps(B + k * N + j + 8);
      for (int r = 0; r < Rows; ++r) {
        const __m256 a = _mm256_broadcast_ss(A + r * K + k);
        acc[r][0] = _mm256_add_ps(acc[r][0], _mm256_mul_ps(a, b0));
        acc[r][1] = _mm256_add_ps(acc[r][1], _mm256_mul_ps(a, b1));
      }
    }
    for (int r = 0; r < Rows; ++r) {
      _mm256_storeu_ps(C + r * N + j, acc[r][0]);
      _mm256_storeu_ps(C + r * N + j + 8, acc[r][1]);
    }
  }
  for (; j + 8 <= N; j += 8) {
    __m256 acc[Rows];
    for (int r = 0; r < Rows; ++r)
      acc[r] = accumulate ? _mm256_loadu_ps(C + r * N + j) : _mm256_setzero_ps();
    for (std::size_t k = 0; k < K; ++k) {
      const __m256 b0 = _mm256_loadu_ps(B + k * N + j);
      for (int r = 0; r < Rows; ++r)
        acc[r] = _mm256_add_ps(acc[r], _mm256_mul_ps(_mm256_broadcast_ss(A + r * K + k), b0));
    }
    for (int r = 0; r < Rows; ++r) _mm256_storeu_ps(C + r * N + j, acc[r]);
  }
  for (; j < N; ++j) {
    for (int r = 0; r < Rows; ++r) {
      float acc = accumulate ? C[r * N + j] : 0.0f;
      for (std::size_t k = 0; k < K; ++k) acc = acc + A[r * K + k] * B[k * N + j];
      C[r * N + j] = acc;
    }
  }
}

}  // namespace

void gemm(std::size_t M, std::size_t K, std::size_t N, const double* A, const double* B, double* C,
          bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= M; i += 4) gemm_rows_d<4>(K, N, A + i * K, B, C + i * N, accumulate);
  for (; i < M; ++i) gemm_rows_d<1>(K, N, A + i * K, B, C + i * N, accumulate);
}

void gemm(std::size_t M, std::size_t K, std::size_t N, const float* A, const float* B, float* C,
          bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= M; i += 4) gemm_rows_f<4>(K, N, A + i * K, B, C + i * N, accumulate);
  for (; i < M; ++i) gemm_rows_f<1>(K, N, A + i * K, B, C + i * N, accumulate);
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void add(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void axpy(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), _mm256_mul_ps(va, _mm256_loadu_ps(x + i))));
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

// max(x, 0) returns the second operand for NaN and for +-0, matching x > 0 ? x : 0.
void relu(std::size_t n, const double* x, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu(std::size_t n, const float* x, float* out) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const double* x, const double* gout, double* gin) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d g = _mm256_and_pd(mask, _mm256_loadu_pd(gout + i));
    _mm256_storeu_pd(gin + i, _mm256_add_pd(_mm256_loadu_pd(gin + i), g));
  }
  for (; i < n; ++i) gin[i] = gin[i] + (x[i] > 0.0 ? gout[i] : 0.0);
}

void relu_backward(std::size_t n, const float* x, const float* gout, float* gin) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(gout + i));
    _mm256_storeu_ps(gin + i, _mm256_add_ps(_mm256_loadu_ps(gin + i), g));
  }
  for (; i < n; ++i) gin[i] = gin[i] + (x[i] > 0.0f ? gout[i] : 0.0f);
}

void adam(std::size_t n, double lr, double beta1, double beta2, double eps, double bc1, double bc2,
          double* p, double* m, double* v, const double* g) {
  const double omb1 = 1.0 - beta1;
  const double omb2 = 1.0 - beta2;
  const __m256d vb1 = _mm256_set1_pd(beta1), vb2 = _mm256_set1_pd(beta2);
  const __m256d vomb1 = _mm256_set1_pd(omb1), vomb2 = _mm256_set1_pd(omb2);
  const __m256d vbc1 = _mm256_set1_pd(bc1), vbc2 = _mm256_set1_pd(bc2);
  const __m256d vlr = _mm256_set1_pd(lr), veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(vomb1, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(vomb2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, vbc1);
    const __m256d v_hat = _mm256_div_pd(vi, vbc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + omb1 * g[i];
    v[i] = beta2 * v[i] + omb2 * (g[i] * g[i]);
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] = p[i] - lr * m_hat / (__builtin_sqrt(v_hat) + eps);
  }
}

}  // namespace homnet::kernels::avx2
