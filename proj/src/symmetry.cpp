#include "symbnn/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace symbnn {

namespace {

void check_shape(const Architecture &arch, const EquioutputTransform &t) {
  if (static_cast<int>(t.layers.size()) != arch.num_hidden_layers()) {
    throw Error("symmetry", "transform has " + std::to_string(t.layers.size()) +
                                " layers, architecture has " +
                                std::to_string(arch.num_hidden_layers()) + " hidden layers");
  }
  for (int h = 0; h < arch.num_hidden_layers(); ++h) {
    const auto &lt = t.layers[static_cast<std::size_t>(h)];
    const auto width = static_cast<std::size_t>(arch.width(h + 1));
    if (lt.perm.size() != width || lt.signs.size() != width) {
      throw Error("symmetry", "layer transform size does not match layer width");
    }
    std::vector<bool> seen(width, false);
    for (int p : lt.perm) {
      if (p < 0 || static_cast<std::size_t>(p) >= width || seen[static_cast<std::size_t>(p)]) {
        throw Error("symmetry", "layer transform is not a permutation");
      }
      seen[static_cast<std::size_t>(p)] = true;
    }
    for (int s : lt.signs) {
      if (s != 1 && s != -1) throw Error("symmetry", "signs must be +1 or -1");
      if (s == -1 && arch.activation() != Activation::tanh) {
        throw Error("symmetry", "sign flips are only equioutput for tanh networks");
      }
    }
  }
}

}  // namespace

EquioutputTransform identity_transform(const Architecture &arch) {
  EquioutputTransform t;
  for (int l = 1; l <= arch.num_hidden_layers(); ++l) {
    LayerTransform lt;
    lt.perm.resize(static_cast<std::size_t>(arch.width(l)));
    std::iota(lt.perm.begin(), lt.perm.end(), 0);
    lt.signs.assign(lt.perm.size(), 1);
    t.layers.push_back(std::move(lt));
  }
  return t;
}

EquioutputTransform compose(const EquioutputTransform &second, const EquioutputTransform &first) {
  if (second.layers.size() != first.layers.size()) {
    throw Error("symmetry", "cannot compose transforms of different depth");
  }
  EquioutputTransform out;
  for (std::size_t h = 0; h < first.layers.size(); ++h) {
    const auto &a = second.layers[h];
    const auto &b = first.layers[h];
    LayerTransform lt;
    lt.perm.resize(a.perm.size());
    lt.signs.resize(a.perm.size());
    for (std::size_t i = 0; i < a.perm.size(); ++i) {
      const auto via = static_cast<std::size_t>(a.perm[i]);
      lt.perm[i] = b.perm[via];
      lt.signs[i] = a.signs[i] * b.signs[via];
    }
    out.layers.push_back(std::move(lt));
  }
  return out;
}

EquioutputTransform inverse(const EquioutputTransform &t) {
  EquioutputTransform out;
  for (const auto &lt : t.layers) {
    LayerTransform inv;
    inv.perm.resize(lt.perm.size());
    inv.signs.resize(lt.perm.size());
    for (std::size_t i = 0; i < lt.perm.size(); ++i) inv.perm[static_cast<std::size_t>(lt.perm[i])] = static_cast<int>(i);
    for (std::size_t i = 0; i < lt.perm.size(); ++i) inv.signs[i] = lt.signs[static_cast<std::size_t>(inv.perm[i])];
    out.layers.push_back(std::move(inv));
  }
  return out;
}

void apply_layer_transform(const Architecture &arch, std::span<double> theta, int layer,
                           const LayerTransform &t) {
  const int width = arch.width(layer);
  const int in = arch.width(layer - 1);
  const int out = arch.width(layer + 1);
  const std::size_t block = static_cast<std::size_t>(in + out + 1);
  std::vector<double> old(block * static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) {
    extract_neuron_flat(arch, theta, layer, i, {old.data() + block * static_cast<std::size_t>(i), block});
  }
  for (int i = 0; i < width; ++i) {
    const double *src = old.data() + block * static_cast<std::size_t>(t.perm[static_cast<std::size_t>(i)]);
    const double s = static_cast<double>(t.signs[static_cast<std::size_t>(i)]);
    std::size_t p = 0;
    for (int j = 0; j < in; ++j) theta[arch.weight_index(layer, i, j)] = s * src[p++];
    for (int k = 0; k < out; ++k) theta[arch.weight_index(layer + 1, k, i)] = s * src[p++];
    theta[arch.bias_index(layer, i)] = s * src[p];
  }
}

Vector apply_transform(const Architecture &arch, const Vector &theta, const EquioutputTransform &t) {
  if (static_cast<std::size_t>(theta.size()) != arch.param_dim()) {
    throw Error("symmetry", "parameter vector does not match the architecture");
  }
  check_shape(arch, t);
  Vector out = theta;
  std::span<double> view(out.data(), static_cast<std::size_t>(out.size()));
  for (int h = 0; h < arch.num_hidden_layers(); ++h) {
    apply_layer_transform(arch, view, h + 1, t.layers[static_cast<std::size_t>(h)]);
  }
  return out;
}

EquioutputTransform random_transform(const Architecture &arch, Rng &rng) {
  EquioutputTransform t = identity_transform(arch);
  std::bernoulli_distribution coin(0.5);
  const bool flips = arch.activation() == Activation::tanh;
  for (auto &lt : t.layers) {
    for (std::size_t i = lt.perm.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(lt.perm[i - 1], lt.perm[pick(rng)]);
    }
    if (flips) {
      for (auto &s : lt.signs) s = coin(rng) ? -1 : 1;
    }
  }
  return t;
}

CardinalityBound cardinality_lower_bound(const Architecture &arch) {
  if (arch.activation() != Activation::tanh) {
    throw Error("symmetry", "cardinality bound is unsupported for ReLU: scaling symmetries are infinite");
  }
  CardinalityBound bound;
  bool fits = true;
  unsigned __int128 exact = 1;
  const unsigned __int128 limit = ~std::uint64_t{0};
  for (int l = 1; l <= arch.num_hidden_layers(); ++l) {
    const int m = arch.width(l);
    bound.log10_value += std::lgamma(static_cast<double>(m) + 1.0) / std::log(10.0) + m * std::log10(2.0);
    for (int k = 1; k <= m && fits; ++k) {
      exact *= static_cast<unsigned>(2 * k);
      fits = exact <= limit;
    }
  }
  if (fits) bound.exact = static_cast<std::uint64_t>(exact);
  return bound;
}

EquioutputCheck verify_function_equal(const Architecture &arch, const Vector &a, const Vector &b,
                                      int n_test_inputs, double tol, Rng &rng) {
  if (n_test_inputs < 1) throw Error("symmetry", "need at least one test input");
  std::normal_distribution<double> normal(0.0, 1.0);
  EquioutputCheck check;
  Vector x(arch.input_dim());
  for (int t = 0; t < n_test_inputs; ++t) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    const double dev = (forward(arch, a, x) - forward(arch, b, x)).cwiseAbs().maxCoeff();
    check.max_deviation = std::max(check.max_deviation, dev);
  }
  check.equal = check.max_deviation < tol;
  return check;
}

EquioutputCheck verify_equioutput(const Architecture &arch, const Vector &theta,
                                  const EquioutputTransform &t, int n_test_inputs, double tol,
                                  Rng &rng) {
  return verify_function_equal(arch, theta, apply_transform(arch, theta, t), n_test_inputs, tol, rng);
}

Vector relu_scale_neuron(const Architecture &arch, const Vector &theta, int layer, int neuron,
                         double c) {
  if (!(c > 0.0)) throw Error("symmetry", "ReLU scaling factor must be positive");
  NeuronParamVector phi = extract_neuron_vector(arch, theta, layer, neuron);
  phi.incoming *= c;
  phi.bias *= c;
  phi.outgoing /= c;
  Vector out = theta;
  write_neuron_vector(arch, out, phi);
  return out;
}

nlohmann::json transform_to_json(const EquioutputTransform &t) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto &lt : t.layers) layers.push_back({{"perm", lt.perm}, {"signs", lt.signs}});
  return {{"layers", layers}};
}

EquioutputTransform transform_from_json(const nlohmann::json &j) {
  EquioutputTransform t;
  for (const auto &l : j.at("layers")) {
    t.layers.push_back({l.at("perm").get<std::vector<int>>(), l.at("signs").get<std::vector<int>>()});
  }
  return t;
}

}  // namespace symbnn
