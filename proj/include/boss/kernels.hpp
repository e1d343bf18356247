#pragma once
// Dense arithmetic kernels used by the MLP trainer.
//
// Every kernel has a portable scalar reference in boss::kernels::scalar and,
// on x86-64, an AVX2/FMA variant in boss::kernels::avx2. The active table is
// picked once at startup from the CPU feature bits; setting BOSS_KERNELS=scalar
// in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace boss::kernels {

using DotFn = double (*)(const double* a, const double* b, std::size_t n);
// y += alpha * x
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);
// v = mu * v - lr * (g + wd * theta); theta += v
using SgdFn = void (*)(double* theta, double* velocity, const double* grad, std::size_t n,
                       double lr, double mu, double wd);
// x = max(x, 0)
using ReluFn = void (*)(double* x, std::size_t n);
// grad[i] = pre[i] > 0 ? grad[i] : 0
using ReluGradFn = void (*)(const double* pre, double* grad, std::size_t n);

struct KernelTable {
  std::string_view name;
  DotFn dot;
  AxpyFn axpy;
  SgdFn sgd_update;
  ReluFn relu;
  ReluGradFn relu_grad;
};

namespace scalar {
const KernelTable& table();
}

namespace avx2 {
// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* table();
}

// Table selected for this process.
const KernelTable& active();

// Convenience wrappers over active().
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace boss::kernels
