#include "symbnn/chains.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace symbnn {

ModeSpec::ModeSpec(std::vector<double> probabilities) : pi_(std::move(probabilities)) {
  if (pi_.empty()) throw Error("bound", "at least one mode is required");
  if (static_cast<int>(pi_.size()) > kMaxModes) {
    throw Error("bound", "at most " + std::to_string(kMaxModes) + " modes are supported");
  }
  for (double p : pi_) {
    if (!(p > 0.0) || !std::isfinite(p)) throw Error("bound", "mode probabilities must be positive");
  }
  const double total = std::accumulate(pi_.begin(), pi_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("bound", "mode probabilities sum to " + std::to_string(total) + ", expected 1");
  }
}

double expected_chains(const ModeSpec &spec) {
  const auto &pi = spec.probabilities();
  const int nu = spec.num_modes();
  const std::uint32_t full = (std::uint32_t{1} << nu) - 1;
  // Kahan-compensated alternating sum over all proper subsets J.
  double sum = 0.0;
  double comp = 0.0;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    double pi_j = 0.0;
    for (int j = 0; j < nu; ++j) {
      if (mask & (std::uint32_t{1} << j)) pi_j += pi[static_cast<std::size_t>(j)];
    }
    const double rest = 1.0 - pi_j;
    if (!(rest > 0.0)) throw Error("bound", "a proper subset of modes carries all probability mass");
    const int q = std::popcount(mask);
    const double term = ((nu - 1 - q) % 2 == 0 ? 1.0 : -1.0) / rest;
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double bound_probability(const ModeSpec &spec, long rho) {
  if (rho < 1) throw Error("bound", "rho must be at least 1");
  return 1.0 - expected_chains(spec) / static_cast<double>(rho);
}

long required_chains(const ModeSpec &spec, double p_target) {
  if (!(p_target > 0.0 && p_target < 1.0)) throw Error("bound", "target probability must lie in (0, 1)");
  const double ratio = expected_chains(spec) / (1.0 - p_target);
  // Absorb representation error such as 1 / (1 - 0.99) = 99.99999999999991.
  const double rounded = std::round(ratio);
  const double rho = std::abs(ratio - rounded) < 1e-9 * std::max(1.0, ratio) ? rounded : std::ceil(ratio);
  return std::max(1L, static_cast<long>(rho));
}

BoundResult chain_bound(const ModeSpec &spec, double p_target) {
  BoundResult r;
  r.expected_chains = expected_chains(spec);
  r.required_chains = required_chains(spec, p_target);
  r.bound_probability = 1.0 - r.expected_chains / static_cast<double>(r.required_chains);
  return r;
}

OracleEstimate mc_oracle_expected_chains(const ModeSpec &spec, long n_trials, std::uint64_t seed,
                                         Execution exec) {
  if (n_trials < 1) throw Error("bound", "n_trials must be at least 1");
  const auto &pi = spec.probabilities();
  const int nu = spec.num_modes();
  const std::uint32_t full = (std::uint32_t{1} << nu) - 1;
  constexpr long kBlock = 4096;
  const long blocks = (n_trials + kBlock - 1) / kBlock;
  std::vector<double> sums(static_cast<std::size_t>(blocks), 0.0);
  std::vector<double> sq_sums(static_cast<std::size_t>(blocks), 0.0);

  auto run_block = [&](long b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::discrete_distribution<int> mode(pi.begin(), pi.end());
    const long begin = b * kBlock;
    const long end = std::min(n_trials, begin + kBlock);
    double s = 0.0, s2 = 0.0;
    for (long t = begin; t < end; ++t) {
      std::uint32_t seen = 0;
      long draws = 0;
      while (seen != full) {
        seen |= std::uint32_t{1} << mode(rng);
        ++draws;
      }
      const double v = static_cast<double>(draws);
      s += v;
      s2 += v * v;
    }
    sums[static_cast<std::size_t>(b)] = s;
    sq_sums[static_cast<std::size_t>(b)] = s2;
  };

  if (exec == Execution::serial) {
    for (long b = 0; b < blocks; ++b) run_block(b);
  } else {
#pragma omp parallel for schedule(static)
    for (long b = 0; b < blocks; ++b) run_block(b);
  }

  const double n = static_cast<double>(n_trials);
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double total_sq = std::accumulate(sq_sums.begin(), sq_sums.end(), 0.0);
  OracleEstimate est;
  est.trials = n_trials;
  est.mean = total / n;
  const double var = n > 1 ? std::max(0.0, (total_sq - n * est.mean * est.mean) / (n - 1.0)) : 0.0;
  est.std_error = std::sqrt(var / n);
  return est;
}

}  // namespace symbnn
