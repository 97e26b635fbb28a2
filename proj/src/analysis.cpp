#include "symbnn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace symbnn {

namespace {

constexpr double kDensityFloor = 1e-300;

Vector forward_at(const Architecture &arch, const Vector &theta, const Vector &x,
                  std::vector<double> &scratch) {
  Vector y(arch.output_dim());
  forward(arch, {theta.data(), static_cast<std::size_t>(theta.size())},
          {x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())},
          scratch);
  return y;
}

template <typename Fn>
void for_each_index(std::ptrdiff_t n, Execution exec, Fn &&fn) {
  if (exec == Execution::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
  } else {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
  }
}

double normal_pdf(double y, double mean, double sigma) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  const double z = (y - mean) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

Vector grid_input(const GridSpec &grid, int input_dim, double xv) {
  Vector x = grid.anchor.size() == input_dim ? grid.anchor : Vector::Zero(input_dim);
  x[grid.input_dim] = xv;
  return x;
}

// Unnormalized mixture mass for one x row over draws [begin, end).
void accumulate_row(const SampleSet &samples, const GridSpec &grid, double xv, std::size_t begin,
                    std::size_t end, const std::vector<double> &ys, double *row) {
  const Architecture &arch = samples.arch;
  std::vector<double> scratch(2 * static_cast<std::size_t>(arch.max_width()));
  const Vector x = grid_input(grid, arch.input_dim(), xv);
  for (std::size_t g = begin; g < end; ++g) {
    const double mean = forward_at(arch, samples.draws[g].theta, x, scratch)[grid.output_dim];
    const double sigma = samples.draws[g].sigma();
    for (std::size_t j = 0; j < ys.size(); ++j) row[j] += normal_pdf(ys[j], mean, sigma);
  }
}

void normalize_row(double *row, std::size_t n, double dy) {
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) total += row[j];
  total *= dy;
  if (total > 0.0) {
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
  }
}

}  // namespace

LppdResult lppd_from_log_lik(const RowMatrix &log_lik) {
  const Eigen::Index G = log_lik.rows();
  const Eigen::Index N = log_lik.cols();
  if (G == 0) throw Error("analysis", "empty sample set");
  LppdResult r;
  r.per_point.resize(static_cast<std::size_t>(N));
  const double log_g = std::log(static_cast<double>(G));
  for (Eigen::Index i = 0; i < N; ++i) {
    const double m = log_lik.col(i).maxCoeff();
    double s = 0.0;
    for (Eigen::Index g = 0; g < G; ++g) s += std::exp(log_lik(g, i) - m);
    r.per_point[static_cast<std::size_t>(i)] = m + std::log(s) - log_g;
  }
  if (N > 0) {
    r.mean = std::accumulate(r.per_point.begin(), r.per_point.end(), 0.0) / static_cast<double>(N);
  }
  if (N > 1) {
    double ss = 0.0;
    for (double v : r.per_point) ss += (v - r.mean) * (v - r.mean);
    r.std_error = std::sqrt(ss / static_cast<double>(N - 1) / static_cast<double>(N));
  }
  return r;
}

LppdResult lppd(const SampleSet &samples, const RegressionData &test, Execution exec) {
  if (samples.empty()) throw Error("analysis", "empty sample set");
  const Architecture &arch = samples.arch;
  test.check(arch);
  const auto G = static_cast<Eigen::Index>(samples.size());
  const auto N = static_cast<Eigen::Index>(test.size());
  RowMatrix log_lik(G, N);
  for_each_index(G, exec, [&](std::ptrdiff_t g) {
    std::vector<double> scratch(2 * static_cast<std::size_t>(arch.max_width()));
    const ParamState &s = samples.draws[static_cast<std::size_t>(g)];
    const double sigma = s.sigma();
    for (Eigen::Index i = 0; i < N; ++i) {
      const Vector x = test.X.row(i).transpose();
      const Vector f = forward_at(arch, s.theta, x, scratch);
      double ll = 0.0;
      for (Eigen::Index k = 0; k < f.size(); ++k) ll += log_normal_pdf(test.Y(i, k), f[k], sigma);
      log_lik(g, i) = ll;
    }
  });
  return lppd_from_log_lik(log_lik);
}

std::vector<double> GridSpec::x_values() const {
  std::vector<double> v(static_cast<std::size_t>(x_points));
  for (int i = 0; i < x_points; ++i) {
    v[static_cast<std::size_t>(i)] = x_points == 1 ? x_min : x_min + (x_max - x_min) * i / (x_points - 1);
  }
  return v;
}

std::vector<double> GridSpec::y_values() const {
  std::vector<double> v(static_cast<std::size_t>(y_points));
  for (int i = 0; i < y_points; ++i) v[static_cast<std::size_t>(i)] = y_min + (y_max - y_min) * i / (y_points - 1);
  return v;
}

void GridSpec::validate() const {
  if (x_points < 1 || y_points < 2 || !(y_max > y_min) || !(x_max >= x_min)) {
    throw Error("analysis", "invalid grid specification");
  }
}

RowMatrix ppd_mass(const SampleSet &samples, const GridSpec &grid, std::size_t begin,
                   std::size_t end, Execution exec) {
  grid.validate();
  if (grid.input_dim >= samples.arch.input_dim() || grid.output_dim >= samples.arch.output_dim()) {
    throw Error("analysis", "grid dimension out of range for the architecture");
  }
  const auto xs = grid.x_values();
  const auto ys = grid.y_values();
  RowMatrix mass = RowMatrix::Zero(grid.x_points, grid.y_points);
  for_each_index(grid.x_points, exec, [&](std::ptrdiff_t i) {
    accumulate_row(samples, grid, xs[static_cast<std::size_t>(i)], begin, end, ys, mass.row(i).data());
  });
  return mass;
}

PPDGrid ppd_grid(const SampleSet &samples, const GridSpec &grid, Execution exec) {
  if (samples.empty()) throw Error("analysis", "empty sample set");
  PPDGrid out;
  out.x = grid.x_values();
  out.y = grid.y_values();
  out.density = ppd_mass(samples, grid, 0, samples.size(), exec);
  const double dy = grid.dy();
  for (Eigen::Index i = 0; i < out.density.rows(); ++i) {
    normalize_row(out.density.row(i).data(), static_cast<std::size_t>(out.density.cols()), dy);
  }
  return out;
}

double discrete_kl(std::span<const double> p, std::span<const double> q, double dy) {
  if (p.size() != q.size()) throw Error("analysis", "KL arguments differ in length");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double pj = std::max(p[j], kDensityFloor);
    const double qj = std::max(q[j], kDensityFloor);
    kl += pj * std::log(pj / qj) * dy;
  }
  return kl;
}

std::vector<double> kl_consecutive(const SampleSet &samples, const GridSpec &grid, Execution exec) {
  grid.validate();
  const std::size_t G = samples.size();
  if (G < 2) throw Error("analysis", "KL tracking needs at least two draws");
  const auto xs = grid.x_values();
  const auto ys = grid.y_values();
  const double dy = grid.dy();
  const auto ny = static_cast<std::size_t>(grid.y_points);
  // per_row(i, g - 2) = KL for x row i after adding draw g.
  RowMatrix per_row(grid.x_points, static_cast<Eigen::Index>(G - 1));
  for_each_index(grid.x_points, exec, [&](std::ptrdiff_t i) {
    std::vector<double> sum(ny, 0.0), prev(ny), cur(ny);
    accumulate_row(samples, grid, xs[static_cast<std::size_t>(i)], 0, 1, ys, sum.data());
    prev = sum;
    normalize_row(prev.data(), ny, dy);
    for (std::size_t g = 1; g < G; ++g) {
      accumulate_row(samples, grid, xs[static_cast<std::size_t>(i)], g, g + 1, ys, sum.data());
      cur = sum;
      normalize_row(cur.data(), ny, dy);
      per_row(i, static_cast<Eigen::Index>(g - 1)) = discrete_kl(cur, prev, dy);
      std::swap(prev, cur);
    }
  });
  std::vector<double> kl(G - 1);
  for (std::size_t g = 0; g + 1 < G; ++g) {
    kl[g] = per_row.col(static_cast<Eigen::Index>(g)).sum() / static_cast<double>(grid.x_points);
  }
  return kl;
}

RowMatrix knn_graph(const RowMatrix &points, int k, double sim_sigma) {
  const Eigen::Index n = points.rows();
  if (k < 1 || n < k + 1) throw Error("analysis", "k-NN graph needs at least k + 1 points");
  RowMatrix sq(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) sq(i, j) = (points.row(i) - points.row(j)).squaredNorm();
  }
  RowMatrix A = RowMatrix::Zero(n, n);
  const double inv = 1.0 / (2.0 * sim_sigma * sim_sigma);
  std::vector<std::pair<double, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    order.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) order.emplace_back(sq(i, j), j);
    }
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end());
    for (int t = 0; t < k; ++t) {
      const Eigen::Index j = order[static_cast<std::size_t>(t)].second;
      const double s = std::exp(-sq(i, j) * inv);
      A(i, j) = std::max(A(i, j), s);
      A(j, i) = std::max(A(j, i), s);
    }
  }
  return A;
}

std::vector<int> kmeans(const RowMatrix &points, int clusters, int restarts, int max_iterations,
                        std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (clusters < 1 || n < clusters) throw Error("analysis", "k-means needs at least as many points as clusters");
  std::vector<int> best_labels;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    RowMatrix centers(clusters, points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = points.row(first(rng));
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < clusters; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - centers.row(c - 1)).squaredNorm());
      }
      const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
      Eigen::Index pick = 0;
      if (total > 0.0) {
        std::discrete_distribution<Eigen::Index> dist(d2.begin(), d2.end());
        pick = dist(rng);
      } else {
        pick = first(rng);
      }
      centers.row(c) = points.row(pick);
    }
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      bool changed = false;
      inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        int arg = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < clusters; ++c) {
          const double d = (points.row(i) - centers.row(c)).squaredNorm();
          if (d < bd) {
            bd = d;
            arg = c;
          }
        }
        inertia += bd;
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      RowMatrix sums = RowMatrix::Zero(clusters, points.cols());
      std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < clusters; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      }
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

ClusterResult spectral_cluster(const RowMatrix &points, const ClusterConfig &config) {
  const Eigen::Index n = points.rows();
  if (config.clusters < 1 || n < config.clusters) {
    throw Error("analysis", "spectral clustering needs at least as many points as clusters");
  }
  ClusterResult result;
  if (config.clusters == 1) {
    result.labels.assign(static_cast<std::size_t>(n), 0);
    return result;
  }
  const int k = static_cast<int>(std::min<Eigen::Index>(config.k, n - 1));
  const RowMatrix A = knn_graph(points, k, config.sim_sigma);
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int n_comp = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<Eigen::Index> stack{s};
    comp[static_cast<std::size_t>(s)] = n_comp;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        if (A(u, v) > 0.0 && comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = n_comp;
          stack.push_back(v);
        }
      }
    }
    ++n_comp;
  }
  result.components = n_comp;
  const Vector degree = A.rowwise().sum();
  Vector inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
  // L_norm = D^{-1/2} (D - A) D^{-1/2} = I - D^{-1/2} A D^{-1/2} for non-isolated nodes.
  Eigen::MatrixXd L = -(inv_sqrt.asDiagonal() * A * inv_sqrt.asDiagonal());
  for (Eigen::Index i = 0; i < n; ++i) L(i, i) += degree[i] > 0.0 ? 1.0 : 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(L);
  if (solver.info() != Eigen::Success) throw Error("analysis", "eigen-decomposition failed");
  const int c = config.clusters;
  RowMatrix embedding = solver.eigenvectors().leftCols(c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  for (int j = 0; j < std::min<Eigen::Index>(n, c + 1); ++j) result.eigenvalues.push_back(solver.eigenvalues()[j]);
  result.labels = kmeans(embedding, c, config.restarts, config.max_iterations, config.seed);
  return result;
}

double adjusted_rand_index(const std::vector<int> &a, const std::vector<int> &b) {
  if (a.size() != b.size()) throw Error("analysis", "label vectors differ in length");
  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++ca[a[i]];
    ++cb[b[i]];
  }
  auto choose2 = [](long x) { return static_cast<double>(x) * static_cast<double>(x - 1) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto &[key, v] : joint) sum_joint += choose2(v);
  for (const auto &[key, v] : ca) sum_a += choose2(v);
  for (const auto &[key, v] : cb) sum_b += choose2(v);
  const double total = choose2(static_cast<long>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace symbnn
