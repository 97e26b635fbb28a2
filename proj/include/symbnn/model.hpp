#ifndef SYMBNN_MODEL_HPP_
#define SYMBNN_MODEL_HPP_

#include <cstdint>
#include <vector>

#include "symbnn/common.hpp"
#include "symbnn/log_density.hpp"
#include "symbnn/net.hpp"

namespace symbnn {

// Network parameters plus the likelihood scale, stored as log sigma.
struct ParamState {
  Vector theta;
  double log_sigma = 0.0;

  double sigma() const { return std::exp(log_sigma); }

  // (theta, log_sigma) as one vector of length d + 1.
  Vector packed() const;
  static ParamState unpack(const Vector &q);
};

struct RegressionData {
  RowMatrix X;  // N x n
  RowMatrix Y;  // N x m

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  void check(const Architecture &arch) const;
};

RegressionData concat(const RegressionData &a, const RegressionData &b);

// log N(theta | 0, I) + log(2 N(sigma; 0, 1)) + log_sigma. The last term is the
// Jacobian of sigma = exp(log_sigma).
double log_prior(const ParamState &state);

// Sum over points and outputs of log N(y | f_theta(x), sigma^2).
double log_likelihood(const ParamState &state, const RegressionData &data,
                      const Architecture &arch);

double log_posterior(const ParamState &state, const RegressionData &data,
                     const Architecture &arch);

// Gradient of log_posterior with respect to (theta, log_sigma), length d + 1.
Vector grad_log_posterior(const ParamState &state, const RegressionData &data,
                          const Architecture &arch);

// Draws theta ~ N(0, I) and sigma from the half-normal prior.
ParamState sample_prior(const Architecture &arch, Rng &rng);

// Posterior over the packed (theta, log_sigma) vector. Chains start from prior
// draws.
class MlpPosterior : public LogDensity {
public:
  MlpPosterior(Architecture arch, RegressionData data);

  std::size_t dim() const override { return arch_.param_dim() + 1; }
  double log_density(const Vector &q, Vector *grad) const override;
  Vector initial_point(Rng &rng) const override;

  const Architecture &arch() const { return arch_; }
  const RegressionData &data() const { return data_; }

private:
  Architecture arch_;
  RegressionData data_;
};

// Negative log posterior used for point estimates:
//   (1 / 2 sigma^2) sum ||f(x_i) - y_i||^2 + N m log sigma + theta^T theta / 2
double map_loss(const ParamState &state, const RegressionData &data, const Architecture &arch,
                Vector *grad = nullptr);

struct MapConfig {
  int steps = 500;
  double learning_rate = 1e-4;
  double decay = 0.9;
  double epsilon = 1e-8;
  int checkpoint_every = 10;
};

struct MapResult {
  ParamState state;  // best-loss iterate
  double loss = 0.0;
  std::vector<double> checkpoints;  // best loss so far, every checkpoint_every steps
};

// Full-batch RMSProp on map_loss. Returns the best iterate seen.
MapResult map_estimate(const RegressionData &data, const Architecture &arch,
                       const ParamState &init, const MapConfig &config);

// Initialization used for ensemble members: theta ~ N(0, I), log_sigma = 0.
ParamState ensemble_init(const Architecture &arch, std::uint64_t seed);

// One independent MAP run per seed; no bootstrapping.
std::vector<MapResult> deep_ensemble(const RegressionData &data, const Architecture &arch,
                                     const std::vector<std::uint64_t> &seeds,
                                     const MapConfig &config,
                                     Execution exec = Execution::parallel);

}  // namespace symbnn

#endif  // SYMBNN_MODEL_HPP_
