#ifndef SYMBNN_LOG_DENSITY_HPP_
#define SYMBNN_LOG_DENSITY_HPP_

#include <cstddef>

#include "symbnn/common.hpp"

namespace symbnn {

// Unnormalized log density over an unconstrained real vector, as consumed by
// the sampler. Implementations must be safe to call concurrently.
class LogDensity {
public:
  virtual ~LogDensity() = default;

  virtual std::size_t dim() const = 0;

  // Returns log p(q) and, when grad is non-null, writes its gradient.
  virtual double log_density(const Vector &q, Vector *grad) const = 0;

  // Starting point for a chain.
  virtual Vector initial_point(Rng &rng) const = 0;
};

}  // namespace symbnn

#endif  // SYMBNN_LOG_DENSITY_HPP_
