#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcinv/closed_form.hpp"
#include "mcinv/linalg.hpp"

namespace mcinv {

enum class Activation { Linear, Tanh, Softplus };

std::string_view toString(Activation a);
Activation activationFromString(std::string_view s);

struct LayerSpec {
  Eigen::Index width = 0;
  Activation activation = Activation::Linear;
};

/// Parses "16:tanh,8:softplus" into hidden-layer specs. The empty string means
/// no hidden layers.
std::vector<LayerSpec> parseArchitecture(std::string_view text);
std::string formatArchitecture(std::span<const LayerSpec> hidden);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::Linear;
};

/// Intermediate values of a forward pass, kept for backpropagation.
struct ForwardTape {
  std::vector<Matrix> inputs;          // input to each layer
  std::vector<Matrix> preactivations;  // W a + b 1^T for each layer
};

/// Fully connected feed-forward network acting column-wise on a batch.
/// Parameters flatten layer by layer: W (column-major), then b.
class DenseNetwork {
 public:
  explicit DenseNetwork(std::vector<Layer> layers);

  /// Hidden layers from `hidden`, then a linear output layer of width
  /// `outputDim`; weights uniform in [-r, r] with r = fan_in^{-1/2}, biases zero.
  static DenseNetwork initialize(Eigen::Index inputDim, std::span<const LayerSpec> hidden,
                                 Eigen::Index outputDim, std::uint64_t seed);
  static DenseNetwork zeros(Eigen::Index inputDim, std::span<const LayerSpec> hidden,
                            Eigen::Index outputDim);
  /// One linear layer x -> W x + b.
  static DenseNetwork affine(Matrix weight, Vector bias);
  static DenseNetwork affine(const AffineMap& map) { return affine(map.weight, map.bias); }

  Eigen::Index inputDim() const { return layers_.front().weight.cols(); }
  Eigen::Index outputDim() const { return layers_.back().weight.rows(); }
  const std::vector<Layer>& layers() const { return layers_; }
  Eigen::Index parameterCount() const;

  Vector flatten() const;
  /// Same architecture with parameters read from `theta`.
  DenseNetwork withParameters(std::span<const double> theta) const;
  void assign(std::span<const double> theta);

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, ForwardTape& tape) const;

  /// Given dL/d(output), writes dL/d(parameters) into `grad` (length
  /// parameterCount(), overwritten) and returns dL/d(input).
  Matrix backward(const ForwardTape& tape, const Matrix& outputGrad,
                  std::span<double> grad) const;

  /// Sum over layers of ||W||_F^2.
  double weightNormSquared() const;
  /// Sum over layers of ||b||^2.
  double biasNormSquared() const;

  bool isSingleLinearLayer() const {
    return layers_.size() == 1 && layers_.front().activation == Activation::Linear;
  }

 private:
  std::vector<Layer> layers_;
};

/// Encoder/decoder pair. Parameters flatten as [encoder, decoder].
struct AutoencoderParams {
  DenseNetwork encoder;
  DenseNetwork decoder;

  AutoencoderParams(DenseNetwork enc, DenseNetwork dec);

  Eigen::Index parameterCount() const {
    return encoder.parameterCount() + decoder.parameterCount();
  }
  Vector flatten() const;
  AutoencoderParams withParameters(std::span<const double> theta) const;
};

}  // namespace mcinv
