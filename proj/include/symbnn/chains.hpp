#ifndef SYMBNN_CHAINS_HPP_
#define SYMBNN_CHAINS_HPP_

#include <cstdint>
#include <vector>

#include "symbnn/common.hpp"

namespace symbnn {

// Visit probabilities of the functionally diverse posterior modes, i.e. a
// categorical distribution over modes for an independently started chain.
class ModeSpec {
public:
  static constexpr int kMaxModes = 24;

  explicit ModeSpec(std::vector<double> probabilities);

  const std::vector<double> &probabilities() const { return pi_; }
  int num_modes() const { return static_cast<int>(pi_.size()); }

private:
  std::vector<double> pi_;
};

struct BoundResult {
  double expected_chains = 0.0;
  double bound_probability = 0.0;  // lower bound on P(chains needed < rho)
  long required_chains = 0;        // rho
};

// Expected number of independent chains until every mode has been visited
// (generalized coupon collector), by inclusion-exclusion over all subsets:
//   E = sum_{q=0}^{nu-1} (-1)^{nu-1-q} sum_{|J|=q} 1 / (1 - Pi_J)
double expected_chains(const ModeSpec &spec);

// Markov-inequality bound 1 - E / rho. Negative values are valid but vacuous.
double bound_probability(const ModeSpec &spec, long rho);

// Smallest rho with 1 - E / rho >= p_target, i.e. ceil(E / (1 - p_target)).
long required_chains(const ModeSpec &spec, double p_target);

BoundResult chain_bound(const ModeSpec &spec, double p_target);

struct OracleEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long trials = 0;
};

// Monte Carlo estimate of expected_chains: draw modes i.i.d. from pi until all
// have appeared. Trials are split into fixed blocks with their own RNG
// streams, so the result is independent of worker count and execution mode.
OracleEstimate mc_oracle_expected_chains(const ModeSpec &spec, long n_trials, std::uint64_t seed,
                                         Execution exec = Execution::parallel);

}  // namespace symbnn

#endif  // SYMBNN_CHAINS_HPP_
