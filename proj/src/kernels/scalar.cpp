#include <cmath>

#include "homnet/kernels.hpp"

namespace homnet::kernels::scalar {

template <typename T>
void gemm(std::size_t M, std::size_t K, std::size_t N, const T* A, const T* B, T* C, bool accumulate) {
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      T acc = accumulate ? C[i * N + j] : T{0};
      for (std::size_t k = 0; k < K; ++k) acc = acc + A[i * K + k] * B[k * N + j];
      C[i * N + j] = acc;
    }
  }
}

template <typename T>
void add(std::size_t n, const T* x, const T* y, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

template <typename T>
void relu(std::size_t n, const T* x, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T{0} ? x[i] : T{0};
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* gout, T* gin) {
  for (std::size_t i = 0; i < n; ++i) gin[i] = gin[i] + (x[i] > T{0} ? gout[i] : T{0});
}

void adam(std::size_t n, const AdamStep& s, double* p, double* m, double* v, const double* g) {
  const double one_minus_b1 = 1.0 - s.beta1;
  const double one_minus_b2 = 1.0 - s.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + one_minus_b1 * g[i];
    v[i] = s.beta2 * v[i] + one_minus_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / s.bias_correction1;
    const double v_hat = v[i] / s.bias_correction2;
    p[i] = p[i] - s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

template void gemm<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
template void add<float>(std::size_t, const float*, const float*, float*);
template void add<double>(std::size_t, const double*, const double*, double*);
template void axpy<float>(std::size_t, float, const float*, float*);
template void axpy<double>(std::size_t, double, const double*, double*);
template void relu<float>(std::size_t, const float*, float*);
template void relu<double>(std::size_t, const double*, double*);
template void relu_backward<float>(std::size_t, const float*, const float*, float*);
template void relu_backward<double>(std::size_t, const double*, const double*, double*);

}  // namespace homnet::kernels::scalar
