#ifndef SYMBNN_COMMON_HPP_
#define SYMBNN_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace symbnn {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

// Error carrying the pipeline stage that raised it; the CLI prints both.
class Error : public std::runtime_error {
public:
  Error(std::string stage, const std::string &cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}

  const std::string &stage() const { return stage_; }

private:
  std::string stage_;
};

// Selects between the OpenMP kernels and their serial reference versions.
// Both produce identical results; the serial path exists for testing and
// benchmarking.
enum class Execution { serial, parallel };

// Sets the OpenMP worker count for subsequent parallel kernels (<= 0 keeps
// the runtime default).
void set_workers(int n);
int workers();

// SplitMix64 finalizer; maps (base, stream) to a well-mixed sub-stream seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double log_normal_pdf(double x, double mean, double sigma) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  const double z = (x - mean) / sigma;
  return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
}

}  // namespace symbnn

#endif  // SYMBNN_COMMON_HPP_
