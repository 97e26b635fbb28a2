#include "symbnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "symbnn/io.hpp"

namespace symbnn {

namespace {

constexpr double kPi = 3.14159265358979323846;

void column_stats(const RowMatrix &M, Vector &mean, Vector &sd, const std::string &kind,
                  std::vector<std::string> *warnings) {
  const Eigen::Index n = M.rows();
  mean = M.colwise().mean().transpose();
  sd.resize(M.cols());
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    const double ss = (M.col(c).array() - mean[c]).square().sum();
    const double s = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    if (!(s > 0.0)) {
      sd[c] = 1.0;
      mean[c] = 0.0;
      if (warnings != nullptr) {
        warnings->push_back(kind + " column " + std::to_string(c) + " has zero spread; left unscaled");
      }
    } else {
      sd[c] = s;
    }
  }
}

std::vector<std::string> numbered(const std::string &prefix, Eigen::Index n) {
  std::vector<std::string> v;
  for (Eigen::Index i = 1; i <= n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

}  // namespace

Standardization Standardization::fit(const RowMatrix &X, const RowMatrix &Y,
                                     std::vector<std::string> *warnings) {
  Standardization s;
  column_stats(X, s.x_mean, s.x_std, "feature", warnings);
  column_stats(Y, s.y_mean, s.y_std, "target", warnings);
  return s;
}

void Standardization::apply(RowMatrix &X, RowMatrix &Y) const {
  X = ((X.rowwise() - x_mean.transpose()).array().rowwise() / x_std.transpose().array()).matrix();
  Y = ((Y.rowwise() - y_mean.transpose()).array().rowwise() / y_std.transpose().array()).matrix();
}

void Standardization::invert(RowMatrix &X, RowMatrix &Y) const {
  X = ((X.array().rowwise() * x_std.transpose().array()).matrix().rowwise() + x_mean.transpose());
  Y = ((Y.array().rowwise() * y_std.transpose().array()).matrix().rowwise() + y_mean.transpose());
}

nlohmann::json Standardization::to_json() const {
  auto vec = [](const Vector &v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"x_mean", vec(x_mean)}, {"x_std", vec(x_std)}, {"y_mean", vec(y_mean)}, {"y_std", vec(y_std)}};
}

double regression2d_surface(double x1, double x2) { return x1 * std::sin(x1) + std::cos(x2); }

Dataset gen_regression2d(std::size_t n_points, std::uint64_t seed) {
  if (n_points < 1) throw Error("data", "n_points must be at least 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  Dataset d;
  d.name = "regression2d";
  const auto n = static_cast<Eigen::Index>(n_points);
  d.X.resize(n, 2);
  d.Y.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = u(rng);
    const double x2 = u(rng);
    d.X(i, 0) = x1;
    d.X(i, 1) = x2;
    d.Y(i, 0) = regression2d_surface(x1, x2) + noise(rng);
  }
  d.x_names = {"x1", "x2"};
  d.y_names = {"y"};
  return d;
}

SinusoidSpec SinusoidSpec::from_json(const nlohmann::json &j) {
  SinusoidSpec s;
  if (j.contains("intervals")) {
    s.intervals.clear();
    for (const auto &iv : j["intervals"]) s.intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
  }
  s.amplitude = j.value("amplitude", s.amplitude);
  s.frequency = j.value("frequency", s.frequency);
  s.noise = j.value("noise", s.noise);
  return s;
}

nlohmann::json SinusoidSpec::to_json() const {
  nlohmann::json iv = nlohmann::json::array();
  for (const auto &[a, b] : intervals) iv.push_back({a, b});
  return {{"intervals", iv}, {"amplitude", amplitude}, {"frequency", frequency}, {"noise", noise}};
}

Dataset gen_sinusoidal(std::size_t n_points, std::uint64_t seed, const SinusoidSpec &spec) {
  if (spec.intervals.empty()) throw Error("data", "sinusoid spec needs at least one interval");
  std::vector<double> lengths;
  for (const auto &[a, b] : spec.intervals) {
    if (!(b > a)) throw Error("data", "sinusoid intervals must have positive length");
    lengths.push_back(b - a);
  }
  Rng rng(seed);
  std::discrete_distribution<std::size_t> which(lengths.begin(), lengths.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.name = "sinusoidal";
  const auto n = static_cast<Eigen::Index>(n_points);
  d.X.resize(n, 1);
  d.Y.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &[a, b] = spec.intervals[which(rng)];
    const double x = a + (b - a) * unit(rng);
    const double eps = noise(rng);
    d.X(i, 0) = x;
    d.Y(i, 0) = spec.amplitude * std::sin(2.0 * kPi * spec.frequency * x) + spec.noise * eps;
  }
  d.x_names = {"x"};
  d.y_names = {"y"};
  return d;
}

Split split_standardize(const Dataset &data, double train_frac, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 2) throw Error("data", "splitting needs at least two rows");
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw Error("data", "train fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  auto take = [&](std::size_t begin, std::size_t end) {
    Dataset part;
    part.name = data.name;
    part.x_names = data.x_names;
    part.y_names = data.y_names;
    part.X.resize(static_cast<Eigen::Index>(end - begin), data.X.cols());
    part.Y.resize(static_cast<Eigen::Index>(end - begin), data.Y.cols());
    for (std::size_t r = begin; r < end; ++r) {
      part.X.row(static_cast<Eigen::Index>(r - begin)) = data.X.row(static_cast<Eigen::Index>(idx[r]));
      part.Y.row(static_cast<Eigen::Index>(r - begin)) = data.Y.row(static_cast<Eigen::Index>(idx[r]));
    }
    return part;
  };
  Split s;
  s.train = take(0, n_train);
  s.test = take(n_train, n);
  s.standardization = Standardization::fit(s.train.X, s.train.Y, &s.warnings);
  s.standardization.apply(s.train.X, s.train.Y);
  s.standardization.apply(s.test.X, s.test.Y);
  return s;
}

Dataset load_csv(std::istream &is, const std::vector<std::string> &target_columns,
                 const std::string &name) {
  const CsvTable table = read_csv(is, name);
  const std::size_t cols = table.header.size();
  if (cols < 2) throw Error("data", name + ": need at least one feature and one target column");
  std::vector<bool> is_target(cols, false);
  if (target_columns.empty()) {
    is_target.back() = true;
  } else {
    for (const auto &t : target_columns) {
      const auto it = std::find(table.header.begin(), table.header.end(), t);
      if (it == table.header.end()) throw Error("data", name + ": no column named '" + t + "'");
      is_target[static_cast<std::size_t>(it - table.header.begin())] = true;
    }
  }
  Dataset d;
  d.name = name;
  for (std::size_t c = 0; c < cols; ++c) (is_target[c] ? d.y_names : d.x_names).push_back(table.header[c]);
  if (d.x_names.empty()) throw Error("data", name + ": every column is a target");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  d.X.resize(n, static_cast<Eigen::Index>(d.x_names.size()));
  d.Y.resize(n, static_cast<Eigen::Index>(d.y_names.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index xi = 0, yi = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = table.rows[static_cast<std::size_t>(r)][c];
      if (is_target[c]) {
        d.Y(r, yi++) = v;
      } else {
        d.X(r, xi++) = v;
      }
    }
  }
  if (!d.X.allFinite() || !d.Y.allFinite()) throw Error("data", name + ": non-finite values");
  return d;
}

Dataset load_csv(const std::string &path, const std::vector<std::string> &target_columns) {
  std::ifstream in(path);
  if (!in) throw Error("data", "cannot open " + path);
  return load_csv(in, target_columns, path);
}

void write_csv(std::ostream &os, const Dataset &data) {
  const auto x_names = data.x_names.empty() ? numbered("x", data.X.cols()) : data.x_names;
  const auto y_names = data.y_names.empty() ? numbered("y", data.Y.cols()) : data.y_names;
  bool first = true;
  for (const auto &h : x_names) {
    os << (first ? "" : ",") << h;
    first = false;
  }
  for (const auto &h : y_names) os << ',' << h;
  os << '\n';
  for (Eigen::Index r = 0; r < data.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) os << (c ? "," : "") << format_double(data.X(r, c));
    for (Eigen::Index c = 0; c < data.Y.cols(); ++c) os << ',' << format_double(data.Y(r, c));
    os << '\n';
  }
}

void write_csv(const std::string &path, const Dataset &data) {
  std::ofstream out(path);
  if (!out) throw Error("data", "cannot write " + path);
  write_csv(out, data);
}

}  // namespace symbnn
