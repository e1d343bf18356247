#include "boss/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "boss/kernels.hpp"

namespace boss::nn {

MlpParams::MlpParams(MlpShape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.parameter_count()) throw Error("MlpParams: buffer size does not match shape");
}

bool MlpParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

MlpParams init_params(MlpShape shape, Rng& rng) {
  if (shape.input == 0 || shape.hidden == 0 || shape.classes == 0) throw Error("init_params: empty layer");
  MlpParams p(shape);
  auto fill = [&](std::span<double> w, std::size_t fan_in, std::size_t fan_out) {
    double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-s, s);
    for (auto& v : w) v = u(rng);
  };
  fill(p.w1(), shape.input, shape.hidden);
  fill(p.w2(), shape.hidden, shape.classes);
  return p;
}

namespace {

// out(r, o) = b[o] + W[o, :] . in(r, :)
void dense(const Matrix& in, std::span<const double> w, std::span<const double> b, Matrix& out) {
  const auto& k = kernels::active();
  const std::size_t n_out = b.size(), n_in = in.cols;
  out = Matrix(in.rows, n_out);
  for (std::size_t r = 0; r < in.rows; ++r) {
    const double* x = in.data.data() + r * n_in;
    double* y = out.data.data() + r * n_out;
    for (std::size_t o = 0; o < n_out; ++o) y[o] = b[o] + k.dot(w.data() + o * n_in, x, n_in);
  }
}

struct Activations {
  Matrix pre;     // hidden pre-activation
  Matrix hidden;  // relu(pre)
  Matrix logits;
};

Activations forward_full(const MlpParams& p, const Matrix& x) {
  if (x.cols != p.shape().input)
    throw Error("forward: expected " + std::to_string(p.shape().input) + " feature columns, got " +
                std::to_string(x.cols));
  Activations a;
  dense(x, p.w1(), p.b1(), a.pre);
  a.hidden = a.pre;
  kernels::active().relu(a.hidden.data.data(), a.hidden.data.size());
  dense(a.hidden, p.w2(), p.b2(), a.logits);
  return a;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows != b.rows || a.cols != b.cols) throw Error(std::string(who) + ": shape mismatch");
}

void log_softmax_row(std::span<const double> z, double scale, std::vector<double>& out) {
  out.resize(z.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : z) mx = std::max(mx, v * scale);
  double s = 0.0;
  for (double v : z) s += std::exp(v * scale - mx);
  double lse = mx + std::log(s);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * scale - lse;
}

}  // namespace

Matrix forward(const MlpParams& params, const Matrix& x) { return forward_full(params, x).logits; }

std::vector<double> softmax(std::span<const double> logits) {
  for (double v : logits)
    if (!std::isfinite(v)) throw Error("softmax: non-finite logit");
  std::vector<double> out;
  log_softmax_row(logits, 1.0, out);
  for (auto& v : out) v = std::exp(v);
  return out;
}

double cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows != labels.size()) throw Error("cross_entropy_loss: row/label count mismatch");
  if (logits.rows == 0) throw Error("cross_entropy_loss: empty batch");
  std::vector<double> ls;
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) throw Error("cross_entropy_loss: label out of range");
    log_softmax_row(logits.row(r), 1.0, ls);
    total -= ls[static_cast<std::size_t>(y)];
  }
  return total / static_cast<double>(logits.rows);
}

double mse_logit_loss(const Matrix& student, const Matrix& teacher) {
  check_same_shape(student, teacher, "mse_logit_loss");
  if (student.rows == 0) throw Error("mse_logit_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < student.data.size(); ++i) {
    double d = student.data[i] - teacher.data[i];
    total += d * d;
  }
  return total / static_cast<double>(student.rows);
}

double kl_distill_loss(const Matrix& student, const Matrix& teacher, double temperature) {
  check_same_shape(student, teacher, "kl_distill_loss");
  if (!(temperature > 0.0)) throw Error("kl_distill_loss: temperature must be > 0");
  if (student.rows == 0) throw Error("kl_distill_loss: empty batch");
  std::vector<double> ls, lt;
  double total = 0.0;
  for (std::size_t r = 0; r < student.rows; ++r) {
    log_softmax_row(student.row(r), 1.0 / temperature, ls);
    log_softmax_row(teacher.row(r), 1.0 / temperature, lt);
    double kl = 0.0;
    for (std::size_t c = 0; c < ls.size(); ++c) kl += std::exp(lt[c]) * (lt[c] - ls[c]);
    total += std::max(kl, 0.0);
  }
  return temperature * temperature * total / static_cast<double>(student.rows);
}

double combined_loss(double gt, double dt, double alpha) { return alpha * gt + (1.0 - alpha) * dt; }

void DistillConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("distill.alpha must lie in [0, 1]");
  if (!(temperature > 0.0)) throw Error("distill.temperature must be > 0");
}

LossAndGradients gradients(const MlpParams& params, const Matrix& x, std::span<const int> labels,
                           const std::optional<DistillTarget>& distill) {
  const auto& shape = params.shape();
  if (labels.size() != x.rows) throw Error("gradients: row/label count mismatch");
  if (x.rows == 0) throw Error("gradients: empty batch");
  const Activations a = forward_full(params, x);
  const std::size_t n = x.rows, C = shape.classes, H = shape.hidden, D = shape.input;
  const double inv_n = 1.0 / static_cast<double>(n);

  double alpha = 1.0;
  const Matrix* teacher = nullptr;
  if (distill) {
    distill->config.validate();
    if (distill->teacher_logits == nullptr) throw Error("gradients: distillation target without teacher logits");
    check_same_shape(a.logits, *distill->teacher_logits, "gradients");
    alpha = distill->config.alpha;
    teacher = distill->teacher_logits;
  }
  const bool use_task = alpha > 0.0;
  const bool use_distill = teacher != nullptr && alpha < 1.0;

  LossAndGradients out{0.0, MlpGradients(shape)};
  Matrix dlogits(n, C);
  std::vector<double> ls, lt;

  if (use_task) {
    double ce = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      int y = labels[r];
      if (y < 0 || static_cast<std::size_t>(y) >= C) throw Error("gradients: label out of range");
      log_softmax_row(a.logits.row(r), 1.0, ls);
      ce -= ls[static_cast<std::size_t>(y)];
      for (std::size_t c = 0; c < C; ++c) {
        double g = std::exp(ls[c]) - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0);
        dlogits(r, c) += alpha * g * inv_n;
      }
    }
    out.loss += alpha * ce * inv_n;
  }
  if (use_distill) {
    const double beta = 1.0 - alpha;
    double dt = 0.0;
    if (distill->config.loss == DistillLoss::mse_logit) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < C; ++c) {
          double d = a.logits(r, c) - (*teacher)(r, c);
          dt += d * d;
          dlogits(r, c) += beta * 2.0 * d * inv_n;
        }
    } else {
      const double T = distill->config.temperature;
      for (std::size_t r = 0; r < n; ++r) {
        log_softmax_row(a.logits.row(r), 1.0 / T, ls);
        log_softmax_row(teacher->row(r), 1.0 / T, lt);
        double kl = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          double pt = std::exp(lt[c]);
          kl += pt * (lt[c] - ls[c]);
          dlogits(r, c) += beta * T * (std::exp(ls[c]) - pt) * inv_n;
        }
        dt += T * T * kl;
      }
    }
    out.loss += beta * dt * inv_n;
  }

  const auto& k = kernels::active();
  auto gw1 = out.grads.w1(), gb1 = out.grads.b1(), gw2 = out.grads.w2(), gb2 = out.grads.b2();
  auto w2 = params.w2();
  std::vector<double> dh(H);
  for (std::size_t r = 0; r < n; ++r) {
    const double* h = a.hidden.data.data() + r * H;
    const double* xr = x.data.data() + r * D;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      double g = dlogits(r, c);
      gb2[c] += g;
      k.axpy(g, h, gw2.data() + c * H, H);
      k.axpy(g, w2.data() + c * H, dh.data(), H);
    }
    k.relu_grad(a.pre.data.data() + r * H, dh.data(), H);
    for (std::size_t j = 0; j < H; ++j) {
      gb1[j] += dh[j];
      k.axpy(dh[j], xr, gw1.data() + j * D, D);
    }
  }
  return out;
}

double evaluate(const MlpParams& params, const Dataset& ds) {
  if (ds.size() == 0) throw Error("evaluate: empty dataset");
  Matrix logits = forward(params, ds.features);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    auto row = logits.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    if (static_cast<int>(best) == ds.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace boss::nn
