#ifndef SYMBNN_SYMMETRY_HPP_
#define SYMBNN_SYMMETRY_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "symbnn/common.hpp"
#include "symbnn/net.hpp"

namespace symbnn {

// Permutation and signs for one hidden layer. After the transform, neuron i
// holds signs[i] * (old neuron perm[i]).
struct LayerTransform {
  std::vector<int> perm;
  std::vector<int> signs;  // each +1 or -1

  bool operator==(const LayerTransform &) const = default;
};

// One element of the equioutput transformation set: a LayerTransform for
// each hidden layer, in layer order. Acts on theta as a signed permutation of
// neuron blocks; never materialized as a matrix.
struct EquioutputTransform {
  std::vector<LayerTransform> layers;

  bool operator==(const EquioutputTransform &) const = default;
};

EquioutputTransform identity_transform(const Architecture &arch);

// Applies `second` after `first`: apply(compose(second, first)) ==
// apply(second) . apply(first).
EquioutputTransform compose(const EquioutputTransform &second, const EquioutputTransform &first);
EquioutputTransform inverse(const EquioutputTransform &t);

Vector apply_transform(const Architecture &arch, const Vector &theta, const EquioutputTransform &t);

// In-place action of a single layer's transform.
void apply_layer_transform(const Architecture &arch, std::span<double> theta, int layer,
                           const LayerTransform &t);

// Uniform permutation (Fisher-Yates) and i.i.d. uniform signs per hidden layer.
EquioutputTransform random_transform(const Architecture &arch, Rng &rng);

struct CardinalityBound {
  double log10_value = 0.0;
  std::optional<std::uint64_t> exact;  // set when the product fits in 64 bits
};

// prod over hidden layers of M_l! * 2^M_l. Throws for ReLU networks, whose
// scaling symmetries form an infinite family.
CardinalityBound cardinality_lower_bound(const Architecture &arch);

struct EquioutputCheck {
  bool equal = false;
  double max_deviation = 0.0;
};

// Compares two parameter vectors of the same architecture on inputs drawn
// i.i.d. from N(0, I).
EquioutputCheck verify_function_equal(const Architecture &arch, const Vector &a, const Vector &b,
                                      int n_test_inputs, double tol, Rng &rng);

EquioutputCheck verify_equioutput(const Architecture &arch, const Vector &theta,
                                  const EquioutputTransform &t, int n_test_inputs, double tol,
                                  Rng &rng);

// Multiplies a ReLU neuron's incoming weights and bias by c > 0 and its
// outgoing weights by 1/c.
Vector relu_scale_neuron(const Architecture &arch, const Vector &theta, int layer, int neuron,
                         double c);

// {"layers": [{"perm": [...], "signs": [...]}, ...]}
nlohmann::json transform_to_json(const EquioutputTransform &t);
EquioutputTransform transform_from_json(const nlohmann::json &j);

}  // namespace symbnn

#endif  // SYMBNN_SYMMETRY_HPP_
