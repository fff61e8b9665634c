// AArch64 only. Same per-element operation order as the scalar reference;
// vmulq + vaddq are used instead of vfmaq to stay bit-identical.

#include <arm_neon.h>

#include <cmath>
#include <cstddef>

namespace homnet::kernels::neon {

void gemm(std::size_t M, std::size_t K, std::size_t N, const double* A, const double* B, double* C,
          bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    const double* a_row = A + i * K;
    double* c_row = C + i * N;
    std::size_t j = 0;
    for (; j + 4 <= N; j += 4) {
      float64x2_t acc0 = accumulate ? vld1q_f64(c_row + j) : vdupq_n_f64(0.0);
      float64x2_t acc1 = accumulate ? vld1q_f64(c_row + j + 2) : vdupq_n_f64(0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const float64x2_t a = vdupq_n_f64(a_row[k]);
        acc0 = vaddq_f64(acc0, vmulq_f64(a, vld1q_f64(B + k * N + j)));
        acc1 = vaddq_f64(acc1, vmulq_f64(a, vld1q_f64(B + k * N + j + 2)));
      }
      vst1q_f64(c_row + j, acc0);
      vst1q_f64(c_row + j + 2, acc1);
    }
    for (; j < N; ++j) {
      double acc = accumulate ? c_row[j] : 0.0;
      for (std::size_t k = 0; k < K; ++k) acc = acc + a_row[k] * B[k * N + j];
      c_row[j] = acc;
    }
  }
}

void gemm(std::size_t M, std::size_t K, std::size_t N, const float* A, const float* B, float* C,
          bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    const float* a_row = A + i * K;
    float* c_row = C + i * N;
    std::size_t j = 0;
    for (; j + 8 <= N; j += 8) {
      float32x4_t acc0 = accumulate ? vld1q_f32(c_row + j) : vdupq_n_f32(0.0f);
      float32x4_t acc1 = accumulate ? vld1q_f32(c_row + j + 4) : vdupq_n_f32(0.0f);
      for (std::size_t k = 0; k < K; ++k) {
        const float32x4_t a = vdupq_n_f32(a_row[k]);
        acc0 = vaddq_f32(acc0, vmulq_f32(a, vld1q_f32(B + k * N + j)));
        acc1 = vaddq_f32(acc1, vmulq_f32(a, vld1q_f32(B + k * N + j + 4)));
      }
      vst1q_f32(c_row + j, acc0);
      vst1q_f32(c_row + j + 4, acc1);
    }
    for (; j < N; ++j) {
      float acc = accumulate ? c_row[j] : 0.0f;
      for (std::size_t k = 0; k < K; ++k) acc = acc + a_row[k] * B[k * N + j];
      c_row[j] = acc;
    }
  }
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void add(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void axpy(std::size_t n, float a, const float* x, float* y) {
  const float32x4_t va = vdupq_n_f32(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), vmulq_f32(va, vld1q_f32(x + i))));
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

// Element-wise select keeps NaN -> 0 and -0 -> +0 like the scalar reference.
void relu(std::size_t n, const double* x, double* out) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    vst1q_f64(out + i, vbslq_f64(vcgtq_f64(v, zero), v, zero));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu(std::size_t n, const float* x, float* out) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    vst1q_f32(out + i, vbslq_f32(vcgtq_f32(v, zero), v, zero));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const double* x, const double* gout, double* gin) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vbslq_f64(vcgtq_f64(vld1q_f64(x + i), zero), vld1q_f64(gout + i), zero);
    vst1q_f64(gin + i, vaddq_f64(vld1q_f64(gin + i), g));
  }
  for (; i < n; ++i) gin[i] = gin[i] + (x[i] > 0.0 ? gout[i] : 0.0);
}

void relu_backward(std::size_t n, const float* x, const float* gout, float* gin) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t g = vbslq_f32(vcgtq_f32(vld1q_f32(x + i), zero), vld1q_f32(gout + i), zero);
    vst1q_f32(gin + i, vaddq_f32(vld1q_f32(gin + i), g));
  }
  for (; i < n; ++i) gin[i] = gin[i] + (x[i] > 0.0f ? gout[i] : 0.0f);
}

void adam(std::size_t n, double lr, double beta1, double beta2, double eps, double bc1, double bc2,
          double* p, double* m, double* v, const double* g) {
  const double omb1 = 1.0 - beta1;
  const double omb2 = 1.0 - beta2;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gi = vld1q_f64(g + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(vdupq_n_f64(beta1), vld1q_f64(m + i)),
                                     vmulq_f64(vdupq_n_f64(omb1), gi));
    const float64x2_t vi = vaddq_f64(vmulq_f64(vdupq_n_f64(beta2), vld1q_f64(v + i)),
                                     vmulq_f64(vdupq_n_f64(omb2), vmulq_f64(gi, gi)));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, vdupq_n_f64(bc1));
    const float64x2_t v_hat = vdivq_f64(vi, vdupq_n_f64(bc2));
    const float64x2_t step = vdivq_f64(vmulq_f64(vdupq_n_f64(lr), m_hat),
                                       vaddq_f64(vsqrtq_f64(v_hat), vdupq_n_f64(eps)));
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + omb1 * g[i];
    v[i] = beta2 * v[i] + omb2 * (g[i] * g[i]);
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] = p[i] - lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace homnet::kernels::neon
