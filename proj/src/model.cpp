#include "symbnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symbnn {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLog2 = 0.69314718055994530942;

// tanh through a single exp; evaluated on |x| so that it stays exactly odd,
// which keeps sign-flipped networks bitwise equivalent. Absolute error is a
// few ulp of 1.
inline double odd_tanh(double x) {
  const double t = 1.0 - 2.0 / (std::exp(2.0 * std::abs(x)) + 1.0);
  return std::copysign(t, x);
}

constexpr int kBlock = 64;

// Log likelihood and, optionally, its gradient (accumulated into grad_theta
// and grad_log_sigma). Hand-written backprop over blocks of points stored
// neuron-major, so the inner loops run over points.
double likelihood_kernel(const Architecture &arch, const double *theta, double log_sigma,
                         const RegressionData &data, double *grad_theta, double *grad_log_sigma) {
  const int layers = arch.num_layers();
  const int last = layers - 1;
  std::vector<std::size_t> offset(static_cast<std::size_t>(layers) + 1, 0);
  for (int l = 0; l < layers; ++l) offset[l + 1] = offset[l] + static_cast<std::size_t>(arch.width(l)) * kBlock;
  std::vector<double> z(offset.back());
  std::vector<double> delta(2 * static_cast<std::size_t>(arch.max_width()) * kBlock);
  double *delta_cur = delta.data();
  double *delta_prev = delta.data() + static_cast<std::ptrdiff_t>(arch.max_width()) * kBlock;

  const double inv_var = std::exp(-2.0 * log_sigma);
  const bool use_tanh = arch.activation() == Activation::tanh;
  const auto n = static_cast<Eigen::Index>(data.size());
  const int n_in = arch.input_dim();
  const int m = arch.output_dim();
  double sq = 0.0;

  for (Eigen::Index p0 = 0; p0 < n; p0 += kBlock) {
    const int nb = static_cast<int>(std::min<Eigen::Index>(kBlock, n - p0));
    for (int p = 0; p < nb; ++p) {
      for (int j = 0; j < n_in; ++j) z[static_cast<std::size_t>(j * kBlock + p)] = data.X(p0 + p, j);
    }
    for (int l = 1; l <= last; ++l) {
      const int rows = arch.width(l);
      const int cols = arch.width(l - 1);
      const double *w = theta + arch.weight_offset(l);
      const double *b = theta + arch.bias_offset(l);
      const double *in = z.data() + offset[l - 1];
      double *out = z.data() + offset[l];
      for (int i = 0; i < rows; ++i) {
        double *o = out + static_cast<std::ptrdiff_t>(i) * kBlock;
        const double *row = w + static_cast<std::ptrdiff_t>(i) * cols;
        for (int p = 0; p < nb; ++p) o[p] = b[i];
        for (int j = 0; j < cols; ++j) {
          const double wij = row[j];
          const double *a = in + static_cast<std::ptrdiff_t>(j) * kBlock;
          for (int p = 0; p < nb; ++p) o[p] += wij * a[p];
        }
        if (l == last) continue;
        if (use_tanh) {
          for (int p = 0; p < nb; ++p) o[p] = odd_tanh(o[p]);
        } else {
          for (int p = 0; p < nb; ++p) o[p] = o[p] > 0.0 ? o[p] : 0.0;
        }
      }
    }
    const double *yhat = z.data() + offset[last];
    for (int k = 0; k < m; ++k) {
      double *dk = delta_cur + static_cast<std::ptrdiff_t>(k) * kBlock;
      const double *yk = yhat + static_cast<std::ptrdiff_t>(k) * kBlock;
      for (int p = 0; p < nb; ++p) {
        const double r = data.Y(p0 + p, k) - yk[p];
        sq += r * r;
        dk[p] = r * inv_var;
      }
    }
    if (grad_theta == nullptr) continue;

    for (int l = last; l >= 1; --l) {
      const int rows = arch.width(l);
      const int cols = arch.width(l - 1);
      const double *in = z.data() + offset[l - 1];
      const double *w = theta + arch.weight_offset(l);
      double *gw = grad_theta + arch.weight_offset(l);
      double *gb = grad_theta + arch.bias_offset(l);
      for (int i = 0; i < rows; ++i) {
        const double *d = delta_cur + static_cast<std::ptrdiff_t>(i) * kBlock;
        double sb = 0.0;
        for (int p = 0; p < nb; ++p) sb += d[p];
        gb[i] += sb;
        double *grow = gw + static_cast<std::ptrdiff_t>(i) * cols;
        for (int j = 0; j < cols; ++j) {
          const double *a = in + static_cast<std::ptrdiff_t>(j) * kBlock;
          double s = 0.0;
          for (int p = 0; p < nb; ++p) s += d[p] * a[p];
          grow[j] += s;
        }
      }
      if (l == 1) break;
      for (int j = 0; j < cols; ++j) {
        double *dp = delta_prev + static_cast<std::ptrdiff_t>(j) * kBlock;
        for (int p = 0; p < nb; ++p) dp[p] = 0.0;
        for (int i = 0; i < rows; ++i) {
          const double wij = w[static_cast<std::ptrdiff_t>(i) * cols + j];
          const double *d = delta_cur + static_cast<std::ptrdiff_t>(i) * kBlock;
          for (int p = 0; p < nb; ++p) dp[p] += wij * d[p];
        }
        const double *a = in + static_cast<std::ptrdiff_t>(j) * kBlock;
        if (use_tanh) {
          for (int p = 0; p < nb; ++p) dp[p] *= 1.0 - a[p] * a[p];
        } else {
          for (int p = 0; p < nb; ++p) dp[p] = a[p] > 0.0 ? dp[p] : 0.0;
        }
      }
      std::swap(delta_cur, delta_prev);
    }
  }
  const double count = static_cast<double>(n) * m;
  if (grad_log_sigma != nullptr) *grad_log_sigma += -count + sq * inv_var;
  return -count * (kHalfLog2Pi + log_sigma) - 0.5 * sq * inv_var;
}

void check_state(const ParamState &state, const Architecture &arch) {
  if (static_cast<std::size_t>(state.theta.size()) != arch.param_dim()) {
    throw Error("model", "parameter vector has length " + std::to_string(state.theta.size()) +
                             ", architecture expects " + std::to_string(arch.param_dim()));
  }
}

}  // namespace

Vector ParamState::packed() const {
  Vector q(theta.size() + 1);
  q << theta, log_sigma;
  return q;
}

ParamState ParamState::unpack(const Vector &q) {
  return {q.head(q.size() - 1), q[q.size() - 1]};
}

void RegressionData::check(const Architecture &arch) const {
  if (X.rows() != Y.rows()) throw Error("model", "X and Y have different row counts");
  if (X.cols() != arch.input_dim() || Y.cols() != arch.output_dim()) {
    throw Error("model", "data has " + std::to_string(X.cols()) + " inputs and " +
                             std::to_string(Y.cols()) + " outputs; architecture expects " +
                             std::to_string(arch.input_dim()) + " and " +
                             std::to_string(arch.output_dim()));
  }
  if (!X.allFinite() || !Y.allFinite()) throw Error("model", "data contains non-finite values");
}

RegressionData concat(const RegressionData &a, const RegressionData &b) {
  RegressionData out;
  out.X.resize(a.X.rows() + b.X.rows(), a.X.cols());
  out.Y.resize(a.Y.rows() + b.Y.rows(), a.Y.cols());
  out.X << a.X, b.X;
  out.Y << a.Y, b.Y;
  return out;
}

double log_prior(const ParamState &state) {
  const double d = static_cast<double>(state.theta.size());
  const double sigma = state.sigma();
  return -d * kHalfLog2Pi - 0.5 * state.theta.squaredNorm() + kLog2 - kHalfLog2Pi -
         0.5 * sigma * sigma + state.log_sigma;
}

double log_likelihood(const ParamState &state, const RegressionData &data,
                      const Architecture &arch) {
  check_state(state, arch);
  data.check(arch);
  return likelihood_kernel(arch, state.theta.data(), state.log_sigma, data, nullptr, nullptr);
}

double log_posterior(const ParamState &state, const RegressionData &data,
                     const Architecture &arch) {
  return log_prior(state) + log_likelihood(state, data, arch);
}

Vector grad_log_posterior(const ParamState &state, const RegressionData &data,
                          const Architecture &arch) {
  check_state(state, arch);
  data.check(arch);
  const auto d = static_cast<Eigen::Index>(arch.param_dim());
  Vector grad(d + 1);
  grad.head(d) = -state.theta;
  const double sigma = state.sigma();
  grad[d] = 1.0 - sigma * sigma;
  likelihood_kernel(arch, state.theta.data(), state.log_sigma, data, grad.data(), &grad[d]);
  return grad;
}

ParamState sample_prior(const Architecture &arch, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamState s;
  s.theta.resize(static_cast<Eigen::Index>(arch.param_dim()));
  for (Eigen::Index i = 0; i < s.theta.size(); ++i) s.theta[i] = normal(rng);
  double sigma = 0.0;
  while (sigma == 0.0) sigma = std::abs(normal(rng));
  s.log_sigma = std::log(sigma);
  return s;
}

MlpPosterior::MlpPosterior(Architecture arch, RegressionData data)
    : arch_(std::move(arch)), data_(std::move(data)) {
  data_.check(arch_);
}

double MlpPosterior::log_density(const Vector &q, Vector *grad) const {
  const auto d = static_cast<Eigen::Index>(arch_.param_dim());
  const double log_sigma = q[d];
  const double sigma = std::exp(log_sigma);
  const double prior = -static_cast<double>(d) * kHalfLog2Pi - 0.5 * q.head(d).squaredNorm() +
                       kLog2 - kHalfLog2Pi - 0.5 * sigma * sigma + log_sigma;
  if (grad == nullptr) {
    return prior + likelihood_kernel(arch_, q.data(), log_sigma, data_, nullptr, nullptr);
  }
  grad->resize(d + 1);
  grad->head(d) = -q.head(d);
  (*grad)[d] = 1.0 - sigma * sigma;
  return prior + likelihood_kernel(arch_, q.data(), log_sigma, data_, grad->data(), &(*grad)[d]);
}

Vector MlpPosterior::initial_point(Rng &rng) const { return sample_prior(arch_, rng).packed(); }

double map_loss(const ParamState &state, const RegressionData &data, const Architecture &arch,
                Vector *grad) {
  check_state(state, arch);
  const auto d = static_cast<Eigen::Index>(arch.param_dim());
  const double count = static_cast<double>(data.size()) * arch.output_dim();
  if (grad == nullptr) {
    const double ll = likelihood_kernel(arch, state.theta.data(), state.log_sigma, data, nullptr, nullptr);
    return -ll - count * kHalfLog2Pi + 0.5 * state.theta.squaredNorm();
  }
  Vector g = Vector::Zero(d + 1);
  const double ll = likelihood_kernel(arch, state.theta.data(), state.log_sigma, data, g.data(), &g[d]);
  g = -g;
  g.head(d) += state.theta;
  *grad = std::move(g);
  return -ll - count * kHalfLog2Pi + 0.5 * state.theta.squaredNorm();
}

MapResult map_estimate(const RegressionData &data, const Architecture &arch,
                       const ParamState &init, const MapConfig &config) {
  if (config.steps < 1) throw Error("map", "steps must be at least 1");
  data.check(arch);
  check_state(init, arch);
  MapResult result;
  Vector q = init.packed();
  Vector accum = Vector::Zero(q.size());
  Vector grad;
  result.state = init;
  result.loss = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= config.steps; ++step) {
    const ParamState cur = ParamState::unpack(q);
    const double loss = map_loss(cur, data, arch, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw Error("map", "non-finite loss at step " + std::to_string(step));
    }
    if (loss < result.loss) {
      result.loss = loss;
      result.state = cur;
    }
    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      result.checkpoints.push_back(result.loss);
    }
    if (step == config.steps) break;
    accum = config.decay * accum + (1.0 - config.decay) * grad.cwiseAbs2();
    q.array() -= config.learning_rate * grad.array() / (accum.array().sqrt() + config.epsilon);
  }
  return result;
}

ParamState ensemble_init(const Architecture &arch, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamState s;
  s.theta.resize(static_cast<Eigen::Index>(arch.param_dim()));
  for (Eigen::Index i = 0; i < s.theta.size(); ++i) s.theta[i] = normal(rng);
  s.log_sigma = 0.0;
  return s;
}

std::vector<MapResult> deep_ensemble(const RegressionData &data, const Architecture &arch,
                                     const std::vector<std::uint64_t> &seeds,
                                     const MapConfig &config, Execution exec) {
  if (seeds.empty()) throw Error("ensemble", "at least one member is required");
  std::vector<MapResult> members(seeds.size());
  const auto n = static_cast<std::ptrdiff_t>(seeds.size());
  if (exec == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      members[i] = map_estimate(data, arch, ensemble_init(arch, seeds[i]), config);
    }
    return members;
  }
  std::vector<std::string> errors(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      members[i] = map_estimate(data, arch, ensemble_init(arch, seeds[i]), config);
    } catch (const std::exception &e) {
      errors[i] = e.what();
    }
  }
  for (const auto &e : errors) {
    if (!e.empty()) throw Error("ensemble", e);
  }
  return members;
}

}  // namespace symbnn
