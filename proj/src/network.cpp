#include "mcinv/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "mcinv/error.hpp"
#include "mcinv/rng.hpp"

namespace mcinv {

std::string_view toString(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

Activation activationFromString(std::string_view s) {
  if (s == "linear") return Activation::Linear;
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

std::vector<LayerSpec> parseArchitecture(std::string_view text) {
  std::vector<LayerSpec> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw InvalidArgument("architecture item '" + std::string(item) +
                            "' must look like WIDTH:ACTIVATION");
    const std::string_view widthText = item.substr(0, colon);
    long width = 0;
    const auto [ptr, ec] =
        std::from_chars(widthText.data(), widthText.data() + widthText.size(), width);
    if (ec != std::errc{} || ptr != widthText.data() + widthText.size() || width < 1)
      throw InvalidArgument("architecture item '" + std::string(item) + "' has a bad width");
    out.push_back({static_cast<Eigen::Index>(width), activationFromString(item.substr(colon + 1))});
  }
  return out;
}

std::string formatArchitecture(std::span<const LayerSpec> hidden) {
  std::string s;
  for (const auto& l : hidden) {
    if (!s.empty()) s += ',';
    s += std::to_string(l.width) + ":" + std::string(toString(l.activation));
  }
  return s;
}

namespace {

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::Linear: return z;
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Softplus:
      // log(1 + e^z) = max(z, 0) + log1p(e^{-|z|})
      return z.unaryExpr([](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
  }
  return z;
}

Matrix activationDerivative(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::Linear: return Matrix::Ones(z.rows(), z.cols());
    case Activation::Tanh: return (1.0 - z.array().tanh().square()).matrix();
    case Activation::Softplus:
      return z.unaryExpr([](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      });
  }
  return z;
}

std::vector<Layer> shapeLayers(Eigen::Index inputDim, std::span<const LayerSpec> hidden,
                               Eigen::Index outputDim) {
  if (inputDim < 1 || outputDim < 1) throw InvalidArgument("network dimensions must be positive");
  std::vector<Layer> layers;
  Eigen::Index in = inputDim;
  for (const auto& spec : hidden) {
    if (spec.width < 1) throw InvalidArgument("layer width must be positive");
    layers.push_back({Matrix::Zero(spec.width, in), Vector::Zero(spec.width), spec.activation});
    in = spec.width;
  }
  layers.push_back({Matrix::Zero(outputDim, in), Vector::Zero(outputDim), Activation::Linear});
  return layers;
}

}  // namespace

DenseNetwork::DenseNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidArgument("DenseNetwork: need at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.rows() < 1 || layer.weight.cols() < 1)
      throw InvalidArgument("DenseNetwork: empty weight matrix");
    if (layer.bias.size() != layer.weight.rows())
      throw InvalidArgument("DenseNetwork: bias length does not match weight rows");
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows())
      throw InvalidArgument("DenseNetwork: layer " + std::to_string(l) +
                            " input does not chain with the previous output");
  }
}

DenseNetwork DenseNetwork::initialize(Eigen::Index inputDim, std::span<const LayerSpec> hidden,
                                      Eigen::Index outputDim, std::uint64_t seed) {
  auto layers = shapeLayers(inputDim, hidden, outputDim);
  Rng rng(seed);
  for (auto& layer : layers) {
    const double r = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.uniform(-r, r);
  }
  return DenseNetwork(std::move(layers));
}

DenseNetwork DenseNetwork::zeros(Eigen::Index inputDim, std::span<const LayerSpec> hidden,
                                 Eigen::Index outputDim) {
  return DenseNetwork(shapeLayers(inputDim, hidden, outputDim));
}

DenseNetwork DenseNetwork::affine(Matrix weight, Vector bias) {
  std::vector<Layer> layers;
  layers.push_back({std::move(weight), std::move(bias), Activation::Linear});
  return DenseNetwork(std::move(layers));
}

Eigen::Index DenseNetwork::parameterCount() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Vector DenseNetwork::flatten() const {
  Vector theta(parameterCount());
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    theta.segment(k, l.weight.size()) = l.weight.reshaped();
    k += l.weight.size();
    theta.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return theta;
}

void DenseNetwork::assign(std::span<const double> theta) {
  if (static_cast<Eigen::Index>(theta.size()) != parameterCount())
    throw InvalidArgument("DenseNetwork: parameter vector has length " +
                          std::to_string(theta.size()) + ", expected " +
                          std::to_string(parameterCount()));
  std::size_t k = 0;
  for (auto& l : layers_) {
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(k), l.weight.size(), l.weight.data());
    k += static_cast<std::size_t>(l.weight.size());
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(k), l.bias.size(), l.bias.data());
    k += static_cast<std::size_t>(l.bias.size());
  }
}

DenseNetwork DenseNetwork::withParameters(std::span<const double> theta) const {
  DenseNetwork copy = *this;
  copy.assign(theta);
  return copy;
}

Matrix DenseNetwork::forward(const Matrix& x) const {
  if (x.rows() != inputDim())
    throw InvalidArgument("DenseNetwork::forward: input has " + std::to_string(x.rows()) +
                          " rows, expected " + std::to_string(inputDim()));
  Matrix a = x;
  for (const auto& l : layers_) {
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    a = activate(l.activation, z);
  }
  return a;
}

Matrix DenseNetwork::forward(const Matrix& x, ForwardTape& tape) const {
  if (x.rows() != inputDim())
    throw InvalidArgument("DenseNetwork::forward: input has " + std::to_string(x.rows()) +
                          " rows, expected " + std::to_string(inputDim()));
  tape.inputs.clear();
  tape.preactivations.clear();
  Matrix a = x;
  for (const auto& l : layers_) {
    tape.inputs.push_back(a);
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    a = activate(l.activation, z);
    tape.preactivations.push_back(std::move(z));
  }
  return a;
}

Matrix DenseNetwork::backward(const ForwardTape& tape, const Matrix& outputGrad,
                              std::span<double> grad) const {
  if (static_cast<Eigen::Index>(grad.size()) != parameterCount())
    throw InvalidArgument("DenseNetwork::backward: gradient buffer has wrong length");
  if (tape.inputs.size() != layers_.size())
    throw InvalidArgument("DenseNetwork::backward: tape does not match network");

  // Offsets of each layer's block in the flat vector.
  std::vector<std::size_t> offset(layers_.size());
  std::size_t k = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offset[l] = k;
    k += static_cast<std::size_t>(layers_[l].weight.size() + layers_[l].bias.size());
  }

  Matrix delta = outputGrad;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    if (layer.activation != Activation::Linear)
      delta = delta.cwiseProduct(activationDerivative(layer.activation, tape.preactivations[l]));
    Eigen::Map<Matrix> gw(grad.data() + offset[l], layer.weight.rows(), layer.weight.cols());
    gw.noalias() = delta * tape.inputs[l].transpose();
    Eigen::Map<Vector> gb(grad.data() + offset[l] + layer.weight.size(), layer.bias.size());
    gb = delta.rowwise().sum();
    delta = layer.weight.transpose() * delta;
  }
  return delta;
}

double DenseNetwork::weightNormSquared() const {
  double s = 0.0;
  for (const auto& l : layers_) s += l.weight.squaredNorm();
  return s;
}

double DenseNetwork::biasNormSquared() const {
  double s = 0.0;
  for (const auto& l : layers_) s += l.bias.squaredNorm();
  return s;
}

AutoencoderParams::AutoencoderParams(DenseNetwork enc, DenseNetwork dec)
    : encoder(std::move(enc)), decoder(std::move(dec)) {
  if (encoder.outputDim() != decoder.inputDim())
    throw InvalidArgument("AutoencoderParams: encoder output (" +
                          std::to_string(encoder.outputDim()) + ") must equal decoder input (" +
                          std::to_string(decoder.inputDim()) + ")");
}

Vector AutoencoderParams::flatten() const {
  Vector theta(parameterCount());
  theta << encoder.flatten(), decoder.flatten();
  return theta;
}

AutoencoderParams AutoencoderParams::withParameters(std::span<const double> theta) const {
  if (static_cast<Eigen::Index>(theta.size()) != parameterCount())
    throw InvalidArgument("AutoencoderParams: parameter vector has wrong length");
  const auto ne = static_cast<std::size_t>(encoder.parameterCount());
  return AutoencoderParams(encoder.withParameters(theta.subspan(0, ne)),
                           decoder.withParameters(theta.subspan(ne)));
}

}  // namespace mcinv
