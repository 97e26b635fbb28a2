#ifndef SYMBNN_REMOVAL_HPP_
#define SYMBNN_REMOVAL_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"
#include "symbnn/common.hpp"
#include "symbnn/sample_set.hpp"

namespace symbnn {

struct RemovalConfig {
  double C = 1.0;           // hinge cost
  int restarts = 8;         // hyperplane restarts
  int k = 1024;             // k-NN neighbours, clipped to the available pool
  int iterations = 256;     // relabeling iterations per layer
  double sim_sigma = 1.0;   // Gaussian similarity bandwidth
  int svm_iterations = 2000;
  double svm_step = 0.1;    // subgradient step is svm_step / sqrt(t)
  // Full reverse-order passes. One pass is the plain algorithm; deeper nets
  // need more because a layer's neuron vectors include the incoming weights
  // of the layer below, which is only aligned later in the pass.
  int sweeps = 1;
  Execution exec = Execution::parallel;

  void validate() const;
};

// Neuron parameter vectors of one hidden layer, pooled over samples. Row r
// belongs to sample `sample[r]` and carries class label `label[r]`.
struct NeuronCloud {
  int layer = 0;
  int num_classes = 0;
  RowMatrix vectors;
  std::vector<std::size_t> sample;
  std::vector<int> label;

  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }

  // Row g * M_l + i holds neuron i of draw g, labeled i.
  static NeuronCloud build(const SampleSet &samples, int layer);
};

struct Hyperplane {
  Vector beta;
  double loss = 0.0;
};

// 1/2 beta^T beta + C * sum max(0, 1 - |beta^T phi|)
double svm_loss(const Vector &beta, const RowMatrix &cloud, double C);

// Best of `restarts` subgradient runs from N(0, I) starting points. Each run
// keeps its best iterate and finishes with an exact line search along the
// ray through it.
Hyperplane fit_hyperplane(const RowMatrix &cloud, const RemovalConfig &config, Rng &rng);

struct TanhRemovalResult {
  Hyperplane plane;
  long flips = 0;
};

// Fits the hyperplane on the pooled layer cloud and negates every neuron with
// beta^T phi < 0 in its own draw. The loss is even in beta, so of beta and
// -beta the orientation needing fewer flips is used.
TanhRemovalResult tanh_removal(SampleSet &samples, int layer, const RemovalConfig &config, Rng &rng);

// Similarity-weighted class vote of the k nearest pool vectors, skipping
// vectors from the query's own sample.
Vector knn_class_probs(std::span<const double> query, std::size_t query_sample,
                       const NeuronCloud &cloud, int k, double sim_sigma);

// Row r of `probs` is vector r's distribution over classes. Repeatedly takes
// the globally most probable (vector, class) pair among unassigned vectors and
// free classes. Returns the class of each vector; ties go to the lowest vector
// index, then the lowest class.
std::vector<int> greedy_assign(const RowMatrix &probs);

struct PermutationRemovalResult {
  int iterations = 0;  // iterations run, including the final unchanged one
  long changes = 0;    // total per-draw reassignments
};

// Iterative greedy constrained k-NN relabeling. Labels are frozen for the
// duration of one iteration; permutations are applied at the end of it.
PermutationRemovalResult permutation_removal(SampleSet &samples, int layer,
                                             const RemovalConfig &config);

struct LayerReport {
  int layer = 0;
  long flips = 0;
  long permutation_changes = 0;
  int iterations = 0;
  double hyperplane_loss = 0.0;
};

struct RemovalReport {
  std::vector<LayerReport> layers;  // one entry per layer and sweep, in processing order
  int sweeps = 0;                   // sweeps run; stops early once one changes nothing

  nlohmann::json to_json() const;
};

// Sign-flip then permutation removal for each hidden layer, last hidden layer
// first, repeated for up to config.sweeps passes. Only exact equioutput
// transformations are written back.
RemovalReport geometry_removal(SampleSet &samples, const RemovalConfig &config, Rng &rng);

}  // namespace symbnn

#endif  // SYMBNN_REMOVAL_HPP_
