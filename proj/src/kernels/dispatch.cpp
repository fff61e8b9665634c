#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "homnet/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define HOMNET_HAVE_AVX2 1
#endif
#if defined(__aarch64__)
#define HOMNET_HAVE_NEON 1
#endif

namespace homnet::kernels {

#ifdef HOMNET_HAVE_AVX2
namespace avx2 {
void gemm(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
void gemm(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
void add(std::size_t, const double*, const double*, double*);
void add(std::size_t, const float*, const float*, float*);
void axpy(std::size_t, double, const double*, double*);
void axpy(std::size_t, float, const float*, float*);
void relu(std::size_t, const double*, double*);
void relu(std::size_t, const float*, float*);
void relu_backward(std::size_t, const double*, const double*, double*);
void relu_backward(std::size_t, const float*, const float*, float*);
void adam(std::size_t, double, double, double, double, double, double, double*, double*, double*,
          const double*);
}  // namespace avx2
#define SIMD_NS avx2
#define SIMD_BACKEND Backend::Avx2
#elif defined(HOMNET_HAVE_NEON)
namespace neon {
void gemm(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
void gemm(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, bool);
void add(std::size_t, const double*, const double*, double*);
void add(std::size_t, const float*, const float*, float*);
void axpy(std::size_t, double, const double*, double*);
void axpy(std::size_t, float, const float*, float*);
void relu(std::size_t, const double*, double*);
void relu(std::size_t, const float*, float*);
void relu_backward(std::size_t, const double*, const double*, double*);
void relu_backward(std::size_t, const float*, const float*, float*);
void adam(std::size_t, double, double, double, double, double, double, double*, double*, double*,
          const double*);
}  // namespace neon
#define SIMD_NS neon
#define SIMD_BACKEND Backend::Neon
#endif

namespace {

Backend detect() {
#ifdef HOMNET_HAVE_AVX2
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Backend::Avx2;
#endif
#ifdef HOMNET_HAVE_NEON
  return Backend::Neon;
#endif
  return Backend::Scalar;
}

Backend initial() {
  if (const char* env = std::getenv("HOMNET_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && supported(Backend::Avx2)) return Backend::Avx2;
    if (v == "neon" && supported(Backend::Neon)) return Backend::Neon;
  }
  return detect();
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{initial()};
  return backend;
}

inline bool use_simd() {
#ifdef SIMD_NS
  return current().load(std::memory_order_relaxed) != Backend::Scalar;
#else
  return false;
#endif
}

}  // namespace

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool supported(Backend b) {
  if (b == Backend::Scalar) return true;
#ifdef SIMD_NS
  if (b == SIMD_BACKEND) return detect() == SIMD_BACKEND;
#endif
  return false;
}

Backend active() { return current().load(); }

void set_backend(Backend b) {
  if (!supported(b)) throw std::invalid_argument("kernel backend not supported: " + std::string(to_string(b)));
  current().store(b);
}

#ifdef SIMD_NS
#define DISPATCH(call_simd, call_scalar) \
  do {                                   \
    if (use_simd()) {                    \
      SIMD_NS::call_simd;                \
    } else {                             \
      scalar::call_scalar;               \
    }                                    \
  } while (0)
#else
#define DISPATCH(call_simd, call_scalar) scalar::call_scalar
#endif

void gemm(std::size_t M, std::size_t K, std::size_t N, const double* A, const double* B, double* C,
          bool accumulate) {
  DISPATCH(gemm(M, K, N, A, B, C, accumulate), gemm<double>(M, K, N, A, B, C, accumulate));
}
void gemm(std::size_t M, std::size_t K, std::size_t N, const float* A, const float* B, float* C,
          bool accumulate) {
  DISPATCH(gemm(M, K, N, A, B, C, accumulate), gemm<float>(M, K, N, A, B, C, accumulate));
}
void add(std::size_t n, const double* x, const double* y, double* out) {
  DISPATCH(add(n, x, y, out), add<double>(n, x, y, out));
}
void add(std::size_t n, const float* x, const float* y, float* out) {
  DISPATCH(add(n, x, y, out), add<float>(n, x, y, out));
}
void axpy(std::size_t n, double a, const double* x, double* y) {
  DISPATCH(axpy(n, a, x, y), axpy<double>(n, a, x, y));
}
void axpy(std::size_t n, float a, const float* x, float* y) {
  DISPATCH(axpy(n, a, x, y), axpy<float>(n, a, x, y));
}
void relu(std::size_t n, const double* x, double* out) { DISPATCH(relu(n, x, out), relu<double>(n, x, out)); }
void relu(std::size_t n, const float* x, float* out) { DISPATCH(relu(n, x, out), relu<float>(n, x, out)); }
void relu_backward(std::size_t n, const double* x, const double* gout, double* gin) {
  DISPATCH(relu_backward(n, x, gout, gin), relu_backward<double>(n, x, gout, gin));
}
void relu_backward(std::size_t n, const float* x, const float* gout, float* gin) {
  DISPATCH(relu_backward(n, x, gout, gin), relu_backward<float>(n, x, gout, gin));
}
void adam(std::size_t n, const AdamStep& s, double* p, double* m, double* v, const double* g) {
  DISPATCH(adam(n, s.lr, s.beta1, s.beta2, s.eps, s.bias_correction1, s.bias_correction2, p, m, v, g),
           adam(n, s, p, m, v, g));
}

}  // namespace homnet::kernels
