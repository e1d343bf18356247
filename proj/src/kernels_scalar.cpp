#include "boss/kernels.hpp"

namespace boss::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void sgd_update(double* theta, double* velocity, const double* grad, std::size_t n, double lr,
                double mu, double wd) {
  for (std::size_t i = 0; i < n; ++i) {
    velocity[i] = mu * velocity[i] - lr * (grad[i] + wd * theta[i]);
    theta[i] += velocity[i];
  }
}

void relu(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad(const double* pre, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(pre[i] > 0.0)) grad[i] = 0.0;
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{"scalar", dot, axpy, sgd_update, relu, relu_grad};
  return t;
}

}  // namespace boss::kernels::scalar
