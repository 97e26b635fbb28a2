#ifndef SYMBNN_ANALYSIS_HPP_
#define SYMBNN_ANALYSIS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "symbnn/common.hpp"
#include "symbnn/model.hpp"
#include "symbnn/sample_set.hpp"

namespace symbnn {

struct LppdResult {
  std::vector<double> per_point;
  double mean = 0.0;
  double std_error = 0.0;
};

// Per test point: log of the Monte Carlo predictive density
//   (1/G) sum_g N(y | f_g(x), sigma_g^2 I), via log-sum-exp.
LppdResult lppd(const SampleSet &samples, const RegressionData &test,
                Execution exec = Execution::parallel);

// Same estimator for externally computed per-draw log-likelihoods:
// log_lik(g, i) is draw g's log density at test point i.
LppdResult lppd_from_log_lik(const RowMatrix &log_lik);

// Regular grid over one input dimension (others fixed at `anchor`) and one
// output dimension.
struct GridSpec {
  double x_min = -3.0, x_max = 3.0;
  int x_points = 61;
  double y_min = -3.0, y_max = 3.0;
  int y_points = 121;
  int input_dim = 0;   // varied input
  int output_dim = 0;  // evaluated output
  Vector anchor;       // values of the other inputs; zeros when empty

  std::vector<double> x_values() const;
  std::vector<double> y_values() const;
  double dy() const { return (y_max - y_min) / (y_points - 1); }
  void validate() const;
};

// density(ix, iy) = p(y | x), each row normalized so sum_y density * dy = 1.
struct PPDGrid {
  std::vector<double> x;
  std::vector<double> y;
  RowMatrix density;
};

PPDGrid ppd_grid(const SampleSet &samples, const GridSpec &grid,
                 Execution exec = Execution::parallel);

// Unnormalized mixture sum_g N(y | f_g(x), sigma_g^2) over draws [begin, end).
RowMatrix ppd_mass(const SampleSet &samples, const GridSpec &grid, std::size_t begin,
                   std::size_t end, Execution exec = Execution::parallel);

// Discrete KL(p || q) between two densities on the same grid with cell width
// dy: sum p log(p / q) dy. Densities are floored at 1e-300.
double discrete_kl(std::span<const double> p, std::span<const double> q, double dy);

// KL(PPD_{1..g} || PPD_{1..g-1}) averaged over the x grid, for g = 2..G.
// Entry 0 corresponds to g = 2.
std::vector<double> kl_consecutive(const SampleSet &samples, const GridSpec &grid,
                                   Execution exec = Execution::parallel);

// Symmetric k-NN graph with Gaussian similarity weights (zero diagonal).
RowMatrix knn_graph(const RowMatrix &points, int k = 4, double sim_sigma = 1.0);

struct ClusterResult {
  std::vector<int> labels;      // 0-based cluster ids
  std::vector<double> eigenvalues;  // leading eigenvalues of the normalized Laplacian
  int components = 1;               // connected components of the k-NN graph
};

struct ClusterConfig {
  int clusters = 3;
  int k = 4;
  double sim_sigma = 1.0;
  int restarts = 32;
  int max_iterations = 300;
  std::uint64_t seed = 0;
};

// Spectral clustering: symmetric normalized Laplacian of the k-NN graph,
// row-normalized embedding on its smallest eigenvectors, then k-means++.
// When the graph has more components than clusters the zero eigenspace is
// larger than the embedding and the partition is not well defined; check
// `components` in that case.
ClusterResult spectral_cluster(const RowMatrix &points, const ClusterConfig &config);

// k-means with k-means++ seeding; best of `restarts` by inertia.
std::vector<int> kmeans(const RowMatrix &points, int clusters, int restarts, int max_iterations,
                        std::uint64_t seed);

double adjusted_rand_index(const std::vector<int> &a, const std::vector<int> &b);

}  // namespace symbnn

#endif  // SYMBNN_ANALYSIS_HPP_
