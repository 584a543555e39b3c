// Copyright 2026 The CEM Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cem/network.hpp"

#include <cmath>
#include <random>

#include "cem/error.hpp"

namespace cem {
namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return pre;
    case Activation::kRelu:
      return pre.cwiseMax(0.0);
    case Activation::kTanh:
      return pre.array().tanh();
    case Activation::kSigmoid:
      return (1.0 + (-pre.array()).exp()).inverse();
    case Activation::kSoftmax: {
      Eigen::MatrixXd out = pre.colwise() - pre.rowwise().maxCoeff();
      out = out.array().exp();
      out.array().colwise() /= out.rowwise().sum().array();
      return out;
    }
  }
  return pre;
}

// Gradient w.r.t. the pre-activation given the post-activation values.
Eigen::MatrixXd activation_backward(const Eigen::MatrixXd& out,
                                    const Eigen::MatrixXd& grad, Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return grad;
    case Activation::kRelu:
      return (out.array() > 0.0).select(grad, 0.0);
    case Activation::kTanh:
      return grad.array() * (1.0 - out.array().square());
    case Activation::kSigmoid:
      return grad.array() * out.array() * (1.0 - out.array());
    case Activation::kSoftmax: {
      const Eigen::VectorXd dot = (grad.array() * out.array()).rowwise().sum();
      return out.array() * (grad.colwise() - dot).array();
    }
  }
  return grad;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softmax") return Activation::kSoftmax;
  throw Error(ErrorKind::kParse, "unknown activation '" + name + "'");
}

long NeuralModule::param_count() const {
  long n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

NeuralModule make_mlp(const std::vector<int>& dims,
                      const std::vector<Activation>& activations,
                      std::uint64_t seed) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw Error(ErrorKind::kShapeMismatch,
                "make_mlp needs one activation per layer");
  }
  std::mt19937_64 rng(seed);
  NeuralModule m;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    const double limit = activations[l] == Activation::kRelu
                             ? std::sqrt(6.0 / in)
                             : std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = u(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = activations[l];
    layer.weight_velocity = Eigen::MatrixXd::Zero(out, in);
    layer.bias_velocity = Eigen::VectorXd::Zero(out);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

NeuralModule make_linear(const Eigen::MatrixXd& weights,
                         const Eigen::VectorXd& bias) {
  if (bias.size() != weights.rows()) {
    throw Error(ErrorKind::kShapeMismatch, "bias size != weight rows");
  }
  DenseLayer layer{weights, bias, Activation::kIdentity,
                   Eigen::MatrixXd::Zero(weights.rows(), weights.cols()),
                   Eigen::VectorXd::Zero(bias.size())};
  NeuralModule m;
  m.layers.push_back(std::move(layer));
  return m;
}

ForwardResult forward(const NeuralModule& m, const Eigen::MatrixXd& batch) {
  if (m.layers.empty() || batch.cols() != m.in_dim()) {
    throw Error(ErrorKind::kShapeMismatch,
                "forward: batch width " + std::to_string(batch.cols()) +
                    " != module input " +
                    std::to_string(m.layers.empty() ? 0 : m.in_dim()));
  }
  ForwardResult r;
  r.tape.input = batch;
  r.tape.version = m.version;
  const Eigen::MatrixXd* x = &batch;
  for (const auto& layer : m.layers) {
    Eigen::MatrixXd pre = (*x) * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    r.tape.outputs.push_back(activate(pre, layer.activation));
    x = &r.tape.outputs.back();
  }
  r.output = r.tape.outputs.back();
  return r;
}

Eigen::MatrixXd predict(const NeuralModule& m, const Eigen::MatrixXd& batch) {
  if (m.layers.empty() || batch.cols() != m.in_dim()) {
    throw Error(ErrorKind::kShapeMismatch, "predict: batch width mismatch");
  }
  Eigen::MatrixXd x = batch;
  for (const auto& layer : m.layers) {
    Eigen::MatrixXd pre = x * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    x = activate(pre, layer.activation);
  }
  return x;
}

BackwardResult backward(const NeuralModule& m, TapePass& tape,
                        const Eigen::MatrixXd& out_grad) {
  if (tape.consumed || tape.version != m.version ||
      tape.outputs.size() != m.layers.size()) {
    throw Error(ErrorKind::kStaleTape,
                "tape already consumed or recorded for other parameters");
  }
  if (out_grad.rows() != tape.input.rows() || out_grad.cols() != m.out_dim()) {
    throw Error(ErrorKind::kShapeMismatch, "backward: out_grad shape");
  }
  tape.consumed = true;

  BackwardResult r;
  r.params.layers.resize(m.layers.size());
  Eigen::MatrixXd grad = out_grad;
  for (size_t l = m.layers.size(); l-- > 0;) {
    const DenseLayer& layer = m.layers[l];
    const Eigen::MatrixXd& in = l == 0 ? tape.input : tape.outputs[l - 1];
    const Eigen::MatrixXd dpre =
        activation_backward(tape.outputs[l], grad, layer.activation);
    r.params.layers[l].weights = dpre.transpose() * in;
    r.params.layers[l].bias = dpre.colwise().sum().transpose();
    grad = dpre * layer.weights;
  }
  r.input_grad = std::move(grad);
  return r;
}

Eigen::MatrixXd noise_inject(const Eigen::MatrixXd& feats,
                             const NoiseModel& noise, std::uint64_t seed) {
  if (noise.std < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "noise std must be >= 0");
  }
  if (noise.std == 0.0) return feats;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise.std);
  Eigen::MatrixXd z = feats;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index t = 0; t < z.cols(); ++t) z(i, t) += normal(rng);
  }
  return z;
}

double clip_grad_norm(ParamGrads& grads, double max_norm) {
  double sq = 0.0;
  for (const LayerGrad& g : grads.layers) {
    sq += g.weights.squaredNorm() + g.bias.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (LayerGrad& g : grads.layers) {
      g.weights *= scale;
      g.bias *= scale;
    }
  }
  return norm;
}

NeuralModule sgd_step(NeuralModule m, const ParamGrads& grads, double lr,
                      double momentum) {
  if (grads.layers.size() != m.layers.size()) {
    throw Error(ErrorKind::kShapeMismatch, "gradient layer count");
  }
  for (size_t l = 0; l < m.layers.size(); ++l) {
    DenseLayer& layer = m.layers[l];
    layer.weight_velocity = momentum * layer.weight_velocity + grads.layers[l].weights;
    layer.bias_velocity = momentum * layer.bias_velocity + grads.layers[l].bias;
    layer.weights -= lr * layer.weight_velocity;
    layer.bias -= lr * layer.bias_velocity;
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw Error(ErrorKind::kNonFinite,
                  "non-finite parameter in layer " + std::to_string(l));
    }
  }
  ++m.version;
  return m;
}

LossAndGrad task_loss(const Eigen::MatrixXd& logits,
                      const Eigen::VectorXi& labels) {
  if (labels.size() != logits.rows()) {
    throw Error(ErrorKind::kShapeMismatch, "one label per logit row");
  }
  const Eigen::Index n = logits.rows();
  Eigen::MatrixXd shifted = logits.colwise() - logits.rowwise().maxCoeff();
  const Eigen::VectorXd log_z = shifted.array().exp().rowwise().sum().log();
  LossAndGrad r;
  r.grad = (shifted.colwise() - log_z).array().exp();  // softmax
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= logits.cols()) {
      throw Error(ErrorKind::kLabelOutOfRange,
                  "label " + std::to_string(y) + " at row " + std::to_string(i));
    }
    r.value += log_z[i] - shifted(i, y);
    r.grad(i, y) -= 1.0;
  }
  r.value /= static_cast<double>(n);
  r.grad /= static_cast<double>(n);
  return r;
}

LossAndGrad mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "mse_loss shapes");
  }
  const double scale = 1.0 / static_cast<double>(pred.size());
  const Eigen::MatrixXd diff = pred - target;
  return {diff.squaredNorm() * scale, 2.0 * scale * diff};
}

nlohmann::json to_json(const NeuralModule& m) {
  auto flat = [](const auto& x) {
    // Row-major flattening for matrices, plain copy for vectors.
    std::vector<double> out;
    out.reserve(static_cast<size_t>(x.size()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) out.push_back(x(r, c));
    }
    return out;
  };
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers) {
    layers.push_back({{"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", to_string(l.activation)},
                      {"weights", flat(l.weights)},
                      {"bias", flat(l.bias)},
                      {"weight_velocity", flat(l.weight_velocity)},
                      {"bias_velocity", flat(l.bias_velocity)}});
  }
  return {{"layers", std::move(layers)}};
}

NeuralModule module_from_json(const nlohmann::json& doc) {
  try {
    NeuralModule m;
    Eigen::Index prev_out = -1;
    for (const auto& j : doc.at("layers")) {
      const auto in = j.at("in").get<Eigen::Index>();
      const auto out = j.at("out").get<Eigen::Index>();
      if (in <= 0 || out <= 0 || (prev_out >= 0 && in != prev_out)) {
        throw Error(ErrorKind::kShapeMismatch, "layer dims do not chain");
      }
      prev_out = out;
      auto read = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
        const auto v = j.at(key).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
          throw Error(ErrorKind::kShapeMismatch,
                      std::string("layer field '") + key + "' has wrong size");
        }
        return Eigen::MatrixXd(
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>(v.data(), rows, cols));
      };
      DenseLayer layer;
      layer.weights = read("weights", out, in);
      layer.bias = read("bias", out, 1);
      layer.activation = activation_from_string(j.at("activation").get<std::string>());
      layer.weight_velocity = j.contains("weight_velocity")
                                  ? read("weight_velocity", out, in)
                                  : Eigen::MatrixXd::Zero(out, in);
      layer.bias_velocity = j.contains("bias_velocity")
                                ? Eigen::VectorXd(read("bias_velocity", out, 1))
                                : Eigen::VectorXd::Zero(out);
      m.layers.push_back(std::move(layer));
    }
    if (m.layers.empty()) throw Error(ErrorKind::kParse, "module has no layers");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("model checkpoint: ") + e.what());
  }
}

}  // namespace cem
