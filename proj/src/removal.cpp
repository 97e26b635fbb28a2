#include "symbnn/removal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "symbnn/symmetry.hpp"

namespace symbnn {

namespace {

// Minimizes s -> 1/2 s^2 a + C sum max(0, 1 - s m_i) over s >= 0, where
// a = ||beta||^2 and m_i = |beta^T phi_i|. Convex and piecewise quadratic, so
// walking the breakpoints 1 / m_i in increasing order finds the minimum.
double best_ray_scale(double a, std::vector<double> margins, double C) {
  std::vector<double> breaks;
  breaks.reserve(margins.size());
  double slope = 0.0;  // C * sum of m_i over still-active hinge terms
  for (double m : margins) {
    if (m > 0.0) {
      breaks.push_back(1.0 / m);
      slope += C * m;
    }
  }
  std::sort(breaks.begin(), breaks.end());
  double lo = 0.0;
  for (double b : breaks) {
    const double s = slope / a;
    if (s <= b) return std::max(s, lo);
    lo = b;
    slope -= C / b;  // the term with margin 1 / b leaves the active set
    slope = std::max(slope, 0.0);
  }
  return std::max(slope / a, lo);
}

Hyperplane run_subgradient(const RowMatrix &cloud, Vector beta, const RemovalConfig &config) {
  const Eigen::Index n = cloud.rows();
  Vector margins(n);
  Vector grad(beta.size());
  Hyperplane best{beta, std::numeric_limits<double>::infinity()};
  for (int t = 1; t <= config.svm_iterations + 1; ++t) {
    margins.noalias() = cloud * beta;
    double hinge = 0.0;
    grad = beta;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double m = std::abs(margins[r]);
      if (m < 1.0) {
        hinge += 1.0 - m;
        if (margins[r] != 0.0) {
          grad.noalias() -= (margins[r] > 0.0 ? config.C : -config.C) * cloud.row(r).transpose();
        }
      }
    }
    const double loss = 0.5 * beta.squaredNorm() + config.C * hinge;
    if (loss < best.loss) best = {beta, loss};
    if (t > config.svm_iterations) break;
    beta -= (config.svm_step / std::sqrt(static_cast<double>(t))) * grad;
  }
  const double a = best.beta.squaredNorm();
  if (a > 0.0 && std::isfinite(a)) {
    const Vector m = (cloud * best.beta).cwiseAbs();
    const double s = best_ray_scale(a, std::vector<double>(m.data(), m.data() + m.size()), config.C);
    if (s > 0.0) {
      const Vector scaled = s * best.beta;
      const double loss = svm_loss(scaled, cloud, config.C);
      if (loss <= best.loss) best = {scaled, loss};
    }
  }
  return best;
}

}  // namespace

void RemovalConfig::validate() const {
  if (!(C > 0.0) || restarts < 1 || k < 1 || iterations < 1 || !(sim_sigma > 0.0) ||
      svm_iterations < 1 || !(svm_step > 0.0) || sweeps < 1) {
    throw Error("removal", "removal settings must all be positive");
  }
}

NeuronCloud NeuronCloud::build(const SampleSet &samples, int layer) {
  const Architecture &arch = samples.arch;
  if (!arch.is_hidden(layer)) throw Error("removal", "layer " + std::to_string(layer) + " is not hidden");
  NeuronCloud cloud;
  cloud.layer = layer;
  cloud.num_classes = arch.width(layer);
  const auto width = static_cast<std::size_t>(cloud.num_classes);
  const std::size_t dim = neuron_vector_dim(arch, layer);
  cloud.vectors.resize(static_cast<Eigen::Index>(samples.size() * width), static_cast<Eigen::Index>(dim));
  cloud.sample.resize(samples.size() * width);
  cloud.label.resize(samples.size() * width);
  for (std::size_t g = 0; g < samples.size(); ++g) {
    const Vector &theta = samples.draws[g].theta;
    for (std::size_t i = 0; i < width; ++i) {
      const std::size_t r = g * width + i;
      extract_neuron_flat(arch, {theta.data(), static_cast<std::size_t>(theta.size())}, layer,
                          static_cast<int>(i), {cloud.vectors.row(static_cast<Eigen::Index>(r)).data(), dim});
      cloud.sample[r] = g;
      cloud.label[r] = static_cast<int>(i);
    }
  }
  return cloud;
}

double svm_loss(const Vector &beta, const RowMatrix &cloud, double C) {
  if (cloud.cols() != beta.size()) throw Error("removal", "hyperplane dimension mismatch");
  const Vector margins = cloud * beta;
  double hinge = 0.0;
  for (Eigen::Index r = 0; r < margins.size(); ++r) hinge += std::max(0.0, 1.0 - std::abs(margins[r]));
  return 0.5 * beta.squaredNorm() + C * hinge;
}

Hyperplane fit_hyperplane(const RowMatrix &cloud, const RemovalConfig &config, Rng &rng) {
  config.validate();
  if (cloud.rows() == 0) throw Error("removal", "cannot fit a hyperplane to an empty cloud");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> starts(static_cast<std::size_t>(config.restarts));
  for (auto &s : starts) {
    s.resize(cloud.cols());
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = normal(rng);
  }
  std::vector<Hyperplane> results(starts.size());
  const auto n = static_cast<int>(starts.size());
  if (config.exec == Execution::serial) {
    for (int r = 0; r < n; ++r) results[r] = run_subgradient(cloud, starts[r], config);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < n; ++r) results[r] = run_subgradient(cloud, starts[r], config);
  }
  const Hyperplane *best = nullptr;
  for (const auto &h : results) {
    if (!std::isfinite(h.loss)) continue;
    if (best == nullptr || h.loss < best->loss) best = &h;
  }
  if (best == nullptr) throw Error("removal", "all hyperplane restarts produced non-finite loss");
  return *best;
}

TanhRemovalResult tanh_removal(SampleSet &samples, int layer, const RemovalConfig &config, Rng &rng) {
  if (samples.arch.activation() != Activation::tanh) {
    throw Error("removal", "sign-flip removal requires a tanh network");
  }
  const NeuronCloud cloud = NeuronCloud::build(samples, layer);
  TanhRemovalResult result;
  result.plane = fit_hyperplane(cloud.vectors, config, rng);
  Vector side = cloud.vectors * result.plane.beta;
  if ((side.array() < 0.0).count() > (side.array() > 0.0).count()) {
    result.plane.beta = -result.plane.beta;
    side = -side;
  }
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    if (side[static_cast<Eigen::Index>(r)] < 0.0) {
      Vector &theta = samples.draws[cloud.sample[r]].theta;
      negate_neuron(samples.arch, {theta.data(), static_cast<std::size_t>(theta.size())}, layer, cloud.label[r]);
      ++result.flips;
    }
  }
  return result;
}

Vector knn_class_probs(std::span<const double> query, std::size_t query_sample,
                       const NeuronCloud &cloud, int k, double sim_sigma) {
  const Eigen::Index dim = cloud.vectors.cols();
  if (static_cast<Eigen::Index>(query.size()) != dim) throw Error("removal", "query dimension mismatch");
  Eigen::Map<const Vector> q(query.data(), dim);
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(cloud.size());
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    if (cloud.sample[r] == query_sample) continue;
    dist.emplace_back((cloud.vectors.row(static_cast<Eigen::Index>(r)).transpose() - q).squaredNorm(), r);
  }
  if (dist.empty()) throw Error("removal", "no neighbours outside the query's own sample");
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk - 1), dist.end());
  // Similarities relative to the nearest neighbour; the shift cancels on
  // normalization and keeps far-away queries from underflowing.
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < kk; ++j) nearest = std::min(nearest, dist[j].first);
  Vector scores = Vector::Zero(cloud.num_classes);
  const double inv = 1.0 / (2.0 * sim_sigma * sim_sigma);
  for (std::size_t j = 0; j < kk; ++j) {
    scores[cloud.label[dist[j].second]] += std::exp(-(dist[j].first - nearest) * inv);
  }
  return scores / scores.sum();
}

std::vector<int> greedy_assign(const RowMatrix &probs) {
  const Eigen::Index n = probs.rows();
  if (probs.cols() != n) throw Error("removal", "greedy assignment needs a square probability matrix");
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (Eigen::Index step = 0; step < n; ++step) {
    Eigen::Index best_v = -1, best_c = -1;
    double best_p = -std::numeric_limits<double>::infinity();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (assignment[static_cast<std::size_t>(v)] >= 0) continue;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (taken[static_cast<std::size_t>(c)]) continue;
        if (probs(v, c) > best_p) {
          best_p = probs(v, c);
          best_v = v;
          best_c = c;
        }
      }
    }
    assignment[static_cast<std::size_t>(best_v)] = static_cast<int>(best_c);
    taken[static_cast<std::size_t>(best_c)] = true;
  }
  return assignment;
}

PermutationRemovalResult permutation_removal(SampleSet &samples, int layer,
                                             const RemovalConfig &config) {
  config.validate();
  const Architecture &arch = samples.arch;
  if (!arch.is_hidden(layer)) throw Error("removal", "layer " + std::to_string(layer) + " is not hidden");
  PermutationRemovalResult result;
  const std::size_t G = samples.size();
  if (G < 2) return result;
  const int width = arch.width(layer);
  const auto dim = static_cast<std::size_t>(neuron_vector_dim(arch, layer));

  for (int it = 0; it < config.iterations; ++it) {
    ++result.iterations;
    const NeuronCloud cloud = NeuronCloud::build(samples, layer);
    std::vector<std::vector<int>> assignments(G);

    auto classify = [&](std::size_t g) {
      RowMatrix probs(width, width);
      for (int i = 0; i < width; ++i) {
        const auto r = static_cast<Eigen::Index>(g * static_cast<std::size_t>(width) + static_cast<std::size_t>(i));
        probs.row(i) = knn_class_probs({cloud.vectors.row(r).data(), dim}, g, cloud, config.k,
                                       config.sim_sigma).transpose();
      }
      assignments[g] = greedy_assign(probs);
    };
    const auto n = static_cast<std::ptrdiff_t>(G);
    if (config.exec == Execution::serial) {
      for (std::ptrdiff_t g = 0; g < n; ++g) classify(static_cast<std::size_t>(g));
    } else {
#pragma omp parallel for schedule(dynamic, 16)
      for (std::ptrdiff_t g = 0; g < n; ++g) classify(static_cast<std::size_t>(g));
    }

    long changed = 0;
    for (std::size_t g = 0; g < G; ++g) {
      const auto &a = assignments[g];
      bool identity = true;
      for (int i = 0; i < width; ++i) identity = identity && a[static_cast<std::size_t>(i)] == i;
      if (identity) continue;
      LayerTransform t;
      t.perm.assign(static_cast<std::size_t>(width), 0);
      t.signs.assign(static_cast<std::size_t>(width), 1);
      for (int i = 0; i < width; ++i) t.perm[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])] = i;
      Vector &theta = samples.draws[g].theta;
      apply_layer_transform(arch, {theta.data(), static_cast<std::size_t>(theta.size())}, layer, t);
      ++changed;
    }
    result.changes += changed;
    if (changed == 0) break;
  }
  return result;
}

nlohmann::json RemovalReport::to_json() const {
  nlohmann::json layers_json = nlohmann::json::array();
  for (const auto &l : layers) {
    layers_json.push_back({{"layer", l.layer},
                           {"flips", l.flips},
                           {"permutation_changes", l.permutation_changes},
                           {"iterations", l.iterations},
                           {"hyperplane_loss", l.hyperplane_loss}});
  }
  return {{"layers", layers_json}, {"sweeps", sweeps}};
}

RemovalReport geometry_removal(SampleSet &samples, const RemovalConfig &config, Rng &rng) {
  config.validate();
  samples.check();
  if (samples.arch.activation() != Activation::tanh) {
    throw Error("removal", "symmetry removal is implemented for tanh networks only");
  }
  RemovalReport report;
  if (samples.empty()) return report;
  for (int sweep = 0; sweep < config.sweeps; ++sweep) {
    ++report.sweeps;
    bool changed = false;
    for (int layer = samples.arch.num_layers() - 2; layer >= 1; --layer) {
      LayerReport lr;
      lr.layer = layer;
      const auto tanh = tanh_removal(samples, layer, config, rng);
      lr.flips = tanh.flips;
      lr.hyperplane_loss = tanh.plane.loss;
      const auto perm = permutation_removal(samples, layer, config);
      lr.permutation_changes = perm.changes;
      lr.iterations = perm.iterations;
      changed = changed || lr.flips > 0 || lr.permutation_changes > 0;
      report.layers.push_back(lr);
    }
    if (!changed) break;
  }
  return report;
}

}  // namespace symbnn
