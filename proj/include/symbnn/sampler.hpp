#ifndef SYMBNN_SAMPLER_HPP_
#define SYMBNN_SAMPLER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "symbnn/common.hpp"
#include "symbnn/log_density.hpp"
#include "symbnn/sample_set.hpp"

namespace symbnn {

struct SamplerConfig {
  int warmup_steps = 1024;
  double initial_step_size = 1.0;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  bool adapt_mass_matrix = true;
  std::uint64_t seed = 0;

  // Dual averaging constants.
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;

  // Energy error above which a trajectory counts as divergent.
  double max_energy_error = 1000.0;

  void validate() const;
};

struct ChainDiagnostics {
  int chain_id = 0;
  std::uint64_t seed = 0;
  double mean_accept = 0.0;  // post-warmup mean acceptance statistic
  int divergences = 0;       // post-warmup
  double step_size = 0.0;
  long leapfrog_steps = 0;
  bool failed = false;
  std::string error;
  // More than 25% of post-warmup transitions diverged.
  bool divergence_flag = false;
};

struct ChainResult {
  std::vector<Vector> draws;
  Vector inv_metric;
  ChainDiagnostics diag;
};

// Dynamic-trajectory NUTS (multinomial sampling along the trajectory, Stan
// style generalized no-U-turn criterion) with diagonal mass matrix. Warmup
// follows the windowed scheme: fast step-size buffer, doubling slow windows
// for the metric, terminal step-size buffer. Throws Error when no finite
// starting point can be found.
ChainResult sample_chain(const LogDensity &target, const SamplerConfig &config, int n_draws,
                         int chain_id = 0);

struct RunResult {
  std::vector<ChainResult> chains;

  int failed_chains() const;
  long divergences() const;
  double mean_accept() const;
};

// Independent chains with seeds config.seed + chain_id. Failed chains are
// recorded; throws only when more than 5% of chains fail. Results do not
// depend on the execution mode or worker count.
RunResult run_chains(const LogDensity &target, const SamplerConfig &config, int n_chains,
                     int draws_per_chain = 1, Execution exec = Execution::parallel);

// Packs chain draws of an MlpPosterior run into a SampleSet (failed chains
// are skipped).
SampleSet collect_samples(const Architecture &arch, const RunResult &run,
                          const SamplerConfig &config);

}  // namespace symbnn

#endif  // SYMBNN_SAMPLER_HPP_
