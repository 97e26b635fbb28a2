#ifndef SYMBNN_DATA_HPP_
#define SYMBNN_DATA_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "symbnn/common.hpp"
#include "symbnn/model.hpp"

namespace symbnn {

// Per-column affine map z = (v - mean) / std. Columns with zero spread pass
// through unscaled (std stored as 1).
struct Standardization {
  Vector x_mean, x_std, y_mean, y_std;

  static Standardization fit(const RowMatrix &X, const RowMatrix &Y,
                             std::vector<std::string> *warnings = nullptr);
  void apply(RowMatrix &X, RowMatrix &Y) const;
  void invert(RowMatrix &X, RowMatrix &Y) const;
  nlohmann::json to_json() const;
};

struct Dataset {
  std::string name;
  RowMatrix X;
  RowMatrix Y;
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  RegressionData regression() const { return {X, Y}; }
};

// x1, x2 ~ U(-2, 2); y ~ N(x1 sin(x1) + cos(x2), 0.1^2).
Dataset gen_regression2d(std::size_t n_points = 256, std::uint64_t seed = 0);
double regression2d_surface(double x1, double x2);

// Synthetic 1-D sinusoid: x uniform over the union of `intervals` (chosen in
// proportion to interval length), y ~ N(amplitude sin(2 pi frequency x),
// noise^2). A stand-in for small 1-D demo datasets, not a reproduction of any
// published one.
struct SinusoidSpec {
  std::vector<std::pair<double, double>> intervals{{-1.0, 1.0}};
  double amplitude = 1.0;
  double frequency = 0.5;
  double noise = 0.1;

  static SinusoidSpec from_json(const nlohmann::json &j);
  nlohmann::json to_json() const;
};

Dataset gen_sinusoidal(std::size_t n_points, std::uint64_t seed, const SinusoidSpec &spec = {});

struct Split {
  Dataset train;
  Dataset test;
  Standardization standardization;
  std::vector<std::string> warnings;
};

// Seeded random split (train gets round(train_frac * N) rows, at least one of
// each); standardization is fitted on train and applied to both parts.
Split split_standardize(const Dataset &data, double train_frac = 0.8, std::uint64_t seed = 0);

// Numeric CSV with header. `target_columns` names the outputs; when empty the
// last column is the target.
Dataset load_csv(const std::string &path, const std::vector<std::string> &target_columns = {});
Dataset load_csv(std::istream &is, const std::vector<std::string> &target_columns = {},
                 const std::string &name = "data");

void write_csv(std::ostream &os, const Dataset &data);
void write_csv(const std::string &path, const Dataset &data);

}  // namespace symbnn

#endif  // SYMBNN_DATA_HPP_
