#include "boss/kernels.hpp"

#if defined(BOSS_HAVE_AVX2_TU) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace boss::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void sgd_update(double* theta, double* velocity, const double* grad, std::size_t n, double lr,
                double mu, double wd) {
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d vwd = _mm256_set1_pd(wd);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d th = _mm256_loadu_pd(theta + i);
    __m256d g = _mm256_fmadd_pd(vwd, th, _mm256_loadu_pd(grad + i));
    __m256d v = _mm256_fnmadd_pd(vlr, g, _mm256_mul_pd(vmu, _mm256_loadu_pd(velocity + i)));
    _mm256_storeu_pd(velocity + i, v);
    _mm256_storeu_pd(theta + i, _mm256_add_pd(th, v));
  }
  for (; i < n; ++i) {
    velocity[i] = mu * velocity[i] - lr * (grad[i] + wd * theta[i]);
    theta[i] += velocity[i];
  }
}

void relu(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  // max_pd(x, 0) returns 0 for NaN lanes; the scalar path does the same.
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad(const double* pre, double* grad, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(grad + i, _mm256_and_pd(mask, _mm256_loadu_pd(grad + i)));
  }
  for (; i < n; ++i)
    if (!(pre[i] > 0.0)) grad[i] = 0.0;
}

}  // namespace

const KernelTable* table() {
  static const KernelTable t{"avx2", dot, axpy, sgd_update, relu, relu_grad};
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &t : nullptr;
}

}  // namespace boss::kernels::avx2

#else

namespace boss::kernels::avx2 {
const KernelTable* table() { return nullptr; }
}  // namespace boss::kernels::avx2

#endif
