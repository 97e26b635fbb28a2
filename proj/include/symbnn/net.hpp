#ifndef SYMBNN_NET_HPP_
#define SYMBNN_NET_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "symbnn/common.hpp"

namespace symbnn {

enum class Activation { tanh, relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string &s);

// Fully connected MLP. Layers are indexed from 0: layer 0 is the input (no
// parameters), layers 1..K-2 are hidden, layer K-1 is the linear output.
// Neurons are indexed from 0 within a layer.
//
// Flat parameter layout: all weights first, then all biases. Weights are
// layer-major, then neuron-major (row), then input-minor (column); biases are
// layer-major, then neuron-major.
class Architecture {
public:
  Architecture() = default;
  Architecture(std::vector<int> widths, Activation hidden = Activation::tanh);

  const std::vector<int> &widths() const { return widths_; }
  Activation activation() const { return activation_; }

  int num_layers() const { return static_cast<int>(widths_.size()); }
  int width(int layer) const { return widths_[static_cast<std::size_t>(layer)]; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_hidden_layers() const { return num_layers() - 2; }
  bool is_hidden(int layer) const { return layer >= 1 && layer <= num_layers() - 2; }
  int max_width() const;

  std::size_t param_dim() const { return num_weights_ + num_biases_; }
  std::size_t num_weights() const { return num_weights_; }

  // Flat position of the weight from neuron `from` in layer-1 to neuron `to`
  // in `layer`.
  std::size_t weight_index(int layer, int to, int from) const {
    return weight_offset_[static_cast<std::size_t>(layer)] +
           static_cast<std::size_t>(to) * static_cast<std::size_t>(width(layer - 1)) +
           static_cast<std::size_t>(from);
  }
  std::size_t bias_index(int layer, int neuron) const {
    return num_weights_ + bias_offset_[static_cast<std::size_t>(layer)] +
           static_cast<std::size_t>(neuron);
  }
  std::size_t weight_offset(int layer) const { return weight_offset_[static_cast<std::size_t>(layer)]; }
  std::size_t bias_offset(int layer) const { return num_weights_ + bias_offset_[static_cast<std::size_t>(layer)]; }

  bool operator==(const Architecture &other) const {
    return widths_ == other.widths_ && activation_ == other.activation_;
  }

private:
  std::vector<int> widths_;
  Activation activation_ = Activation::tanh;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::size_t num_weights_ = 0;
  std::size_t num_biases_ = 0;
};

std::size_t param_dim(const Architecture &arch);

// Forward pass. `scratch` must hold at least 2 * arch.max_width() doubles; it
// lets hot loops avoid allocation.
void forward(const Architecture &arch, std::span<const double> theta, std::span<const double> x,
             std::span<double> out, std::span<double> scratch);

Vector forward(const Architecture &arch, const Vector &theta, const Vector &x);

struct NeuronOrigin {
  std::size_t sample = 0;
  int layer = 0;
  int neuron = 0;
};

// Parameters a hidden neuron owns: incoming weights, outgoing weights (the
// matching column of the next layer) and its bias.
struct NeuronParamVector {
  Vector incoming;
  Vector outgoing;
  double bias = 0.0;
  NeuronOrigin origin;

  std::size_t dim() const {
    return static_cast<std::size_t>(incoming.size() + outgoing.size()) + 1;
  }
  // (incoming, outgoing, bias) concatenated.
  Vector flat() const;
  NeuronParamVector negated() const;
};

std::size_t neuron_vector_dim(const Architecture &arch, int layer);

NeuronParamVector extract_neuron_vector(const Architecture &arch, const Vector &theta, int layer,
                                        int neuron, std::size_t sample = 0);

// Overwrites the positions of theta referenced by phi.origin.
void write_neuron_vector(const Architecture &arch, Vector &theta, const NeuronParamVector &phi);

// Flat-vector variants used by the removal kernels.
void extract_neuron_flat(const Architecture &arch, std::span<const double> theta, int layer,
                         int neuron, std::span<double> out);
void negate_neuron(const Architecture &arch, std::span<double> theta, int layer, int neuron);

}  // namespace symbnn

#endif  // SYMBNN_NET_HPP_
