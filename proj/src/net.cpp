#include "symbnn/net.hpp"

#include <algorithm>
#include <cmath>

namespace symbnn {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string &s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw Error("net", "unknown activation '" + s + "'");
}

Architecture::Architecture(std::vector<int> widths, Activation hidden)
    : widths_(std::move(widths)), activation_(hidden) {
  if (widths_.size() < 2) throw Error("net", "architecture needs at least input and output layers");
  for (int w : widths_) {
    if (w < 1) throw Error("net", "layer widths must be positive");
  }
  weight_offset_.assign(widths_.size(), 0);
  bias_offset_.assign(widths_.size(), 0);
  for (int l = 1; l < num_layers(); ++l) {
    weight_offset_[static_cast<std::size_t>(l)] = num_weights_;
    bias_offset_[static_cast<std::size_t>(l)] = num_biases_;
    num_weights_ += static_cast<std::size_t>(width(l)) * static_cast<std::size_t>(width(l - 1));
    num_biases_ += static_cast<std::size_t>(width(l));
  }
}

int Architecture::max_width() const { return *std::max_element(widths_.begin(), widths_.end()); }

std::size_t param_dim(const Architecture &arch) { return arch.param_dim(); }

void forward(const Architecture &arch, std::span<const double> theta, std::span<const double> x,
             std::span<double> out, std::span<double> scratch) {
  const int width = arch.max_width();
  double *cur = scratch.data();
  double *next = scratch.data() + width;
  std::copy(x.begin(), x.end(), cur);
  const int last = arch.num_layers() - 1;
  for (int l = 1; l <= last; ++l) {
    const int rows = arch.width(l);
    const int cols = arch.width(l - 1);
    const double *w = theta.data() + arch.weight_offset(l);
    const double *b = theta.data() + arch.bias_offset(l);
    for (int i = 0; i < rows; ++i) {
      double o = b[i];
      const double *row = w + static_cast<std::ptrdiff_t>(i) * cols;
      for (int j = 0; j < cols; ++j) o += row[j] * cur[j];
      if (l < last) {
        o = arch.activation() == Activation::tanh ? std::tanh(o) : std::max(o, 0.0);
      }
      next[i] = o;
    }
    std::swap(cur, next);
  }
  std::copy(cur, cur + arch.output_dim(), out.begin());
}

Vector forward(const Architecture &arch, const Vector &theta, const Vector &x) {
  if (static_cast<std::size_t>(theta.size()) != arch.param_dim()) {
    throw Error("net", "parameter vector has length " + std::to_string(theta.size()) +
                           ", architecture expects " + std::to_string(arch.param_dim()));
  }
  if (x.size() != arch.input_dim()) {
    throw Error("net", "input has dimension " + std::to_string(x.size()) + ", expected " +
                           std::to_string(arch.input_dim()));
  }
  Vector y(arch.output_dim());
  std::vector<double> scratch(2 * static_cast<std::size_t>(arch.max_width()));
  forward(arch, {theta.data(), static_cast<std::size_t>(theta.size())},
          {x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())},
          scratch);
  return y;
}

Vector NeuronParamVector::flat() const {
  Vector v(static_cast<Eigen::Index>(dim()));
  v << incoming, outgoing, bias;
  return v;
}

NeuronParamVector NeuronParamVector::negated() const {
  NeuronParamVector n = *this;
  n.incoming = -incoming;
  n.outgoing = -outgoing;
  n.bias = -bias;
  return n;
}

namespace {

void check_hidden(const Architecture &arch, int layer, int neuron) {
  if (!arch.is_hidden(layer)) {
    throw Error("net", "layer " + std::to_string(layer) + " is not a hidden layer");
  }
  if (neuron < 0 || neuron >= arch.width(layer)) {
    throw Error("net", "neuron " + std::to_string(neuron) + " out of range for layer " +
                           std::to_string(layer));
  }
}

}  // namespace

std::size_t neuron_vector_dim(const Architecture &arch, int layer) {
  return static_cast<std::size_t>(arch.width(layer - 1) + arch.width(layer + 1) + 1);
}

NeuronParamVector extract_neuron_vector(const Architecture &arch, const Vector &theta, int layer,
                                        int neuron, std::size_t sample) {
  check_hidden(arch, layer, neuron);
  NeuronParamVector phi;
  phi.origin = {sample, layer, neuron};
  const int in = arch.width(layer - 1);
  const int out = arch.width(layer + 1);
  phi.incoming.resize(in);
  phi.outgoing.resize(out);
  for (int j = 0; j < in; ++j) phi.incoming[j] = theta[static_cast<Eigen::Index>(arch.weight_index(layer, neuron, j))];
  for (int k = 0; k < out; ++k) phi.outgoing[k] = theta[static_cast<Eigen::Index>(arch.weight_index(layer + 1, k, neuron))];
  phi.bias = theta[static_cast<Eigen::Index>(arch.bias_index(layer, neuron))];
  return phi;
}

void write_neuron_vector(const Architecture &arch, Vector &theta, const NeuronParamVector &phi) {
  const int layer = phi.origin.layer;
  const int neuron = phi.origin.neuron;
  check_hidden(arch, layer, neuron);
  if (phi.incoming.size() != arch.width(layer - 1) || phi.outgoing.size() != arch.width(layer + 1)) {
    throw Error("net", "neuron parameter vector shape does not match the architecture");
  }
  for (int j = 0; j < phi.incoming.size(); ++j) {
    theta[static_cast<Eigen::Index>(arch.weight_index(layer, neuron, j))] = phi.incoming[j];
  }
  for (int k = 0; k < phi.outgoing.size(); ++k) {
    theta[static_cast<Eigen::Index>(arch.weight_index(layer + 1, k, neuron))] = phi.outgoing[k];
  }
  theta[static_cast<Eigen::Index>(arch.bias_index(layer, neuron))] = phi.bias;
}

void extract_neuron_flat(const Architecture &arch, std::span<const double> theta, int layer,
                         int neuron, std::span<double> out) {
  const int in = arch.width(layer - 1);
  const int next = arch.width(layer + 1);
  std::size_t p = 0;
  for (int j = 0; j < in; ++j) out[p++] = theta[arch.weight_index(layer, neuron, j)];
  for (int k = 0; k < next; ++k) out[p++] = theta[arch.weight_index(layer + 1, k, neuron)];
  out[p] = theta[arch.bias_index(layer, neuron)];
}

void negate_neuron(const Architecture &arch, std::span<double> theta, int layer, int neuron) {
  const int in = arch.width(layer - 1);
  const int next = arch.width(layer + 1);
  for (int j = 0; j < in; ++j) {
    double &v = theta[arch.weight_index(layer, neuron, j)];
    v = -v;
  }
  for (int k = 0; k < next; ++k) {
    double &v = theta[arch.weight_index(layer + 1, k, neuron)];
    v = -v;
  }
  double &b = theta[arch.bias_index(layer, neuron)];
  b = -b;
}

}  // namespace symbnn
