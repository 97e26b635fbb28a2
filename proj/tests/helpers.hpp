#ifndef SYMBNN_TESTS_HELPERS_HPP_
#define SYMBNN_TESTS_HELPERS_HPP_

#include <random>
#include <vector>

#include "symbnn/model.hpp"
#include "symbnn/net.hpp"

namespace testing {

inline symbnn::Vector random_vector(std::size_t n, symbnn::Rng &rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  symbnn::Vector v(static_cast<Eigen::Index>(n));
  for (auto &x : v) x = d(rng);
  return v;
}

inline std::vector<double> to_std(const symbnn::Vector &v) { return {v.data(), v.data() + v.size()}; }

inline symbnn::RegressionData random_data(const symbnn::Architecture &arch, std::size_t n,
                                          symbnn::Rng &rng) {
  std::normal_distribution<double> d;
  symbnn::RegressionData data;
  data.X.resize(static_cast<Eigen::Index>(n), arch.input_dim());
  data.Y.resize(static_cast<Eigen::Index>(n), arch.output_dim());
  for (Eigen::Index i = 0; i < data.X.size(); ++i) data.X.data()[i] = d(rng);
  for (Eigen::Index i = 0; i < data.Y.size(); ++i) data.Y.data()[i] = d(rng);
  return data;
}

}  // namespace testing

#endif  // SYMBNN_TESTS_HELPERS_HPP_
