#pragma once

// Data-parallel inner loops used by the autodiff engine and the optimizer.
//
// Every kernel has a scalar reference in kernels::scalar. SIMD variants
// (AVX2 on x86-64, NEON on AArch64) vectorize across independent outputs only:
// each output element sees the same sequence of IEEE operations as the scalar
// reference, so all backends agree bit-for-bit. The build disables FP
// contraction so no backend fuses multiply-add behind our back.

#include <cstddef>
#include <string_view>

namespace homnet::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend b);

/// True when the backend was compiled in and the running CPU supports it.
bool supported(Backend b);

/// Best supported backend, unless overridden by HOMNET_KERNELS=scalar|avx2|neon.
Backend active();

/// Forces a backend for the whole process. Throws std::invalid_argument when unsupported.
void set_backend(Backend b);

/// Scalars for one bias-corrected Adam step.
struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

// C[M x N] (= or +=) A[M x K] * B[K x N]. Each C[i][j] accumulates over k in
// increasing order, starting from 0 or from the previous C[i][j].
void gemm(std::size_t M, std::size_t K, std::size_t N, const double* A, const double* B, double* C,
          bool accumulate);
void gemm(std::size_t M, std::size_t K, std::size_t N, const float* A, const float* B, float* C,
          bool accumulate);

// out = x + y
void add(std::size_t n, const double* x, const double* y, double* out);
void add(std::size_t n, const float* x, const float* y, float* out);

// y += a * x
void axpy(std::size_t n, double a, const double* x, double* y);
void axpy(std::size_t n, float a, const float* x, float* y);

// out = max(x, 0)
void relu(std::size_t n, const double* x, double* out);
void relu(std::size_t n, const float* x, float* out);

// gin += (x > 0) ? gout : 0
void relu_backward(std::size_t n, const double* x, const double* gout, double* gin);
void relu_backward(std::size_t n, const float* x, const float* gout, float* gin);

// In-place Adam update of params p with moments m, v and gradient g.
void adam(std::size_t n, const AdamStep& step, double* p, double* m, double* v, const double* g);

// Scalar references, always available. The dispatching entry points above
// route here when the active backend is Scalar.
namespace scalar {
template <typename T>
void gemm(std::size_t M, std::size_t K, std::size_t N, const T* A, const T* B, T* C, bool accumulate);
template <typename T>
void add(std::size_t n, const T* x, const T* y, T* out);
template <typename T>
void axpy(std::size_t n, T a, const T* x, T* y);
template <typename T>
void relu(std::size_t n, const T* x, T* out);
template <typename T>
void relu_backward(std::size_t n, const T* x, const T* gout, T* gin);
void adam(std::size_t n, const AdamStep& step, double* p, double* m, double* v, const double* g);
}  // namespace scalar

}  // namespace homnet::kernels
