// SPDX-License-Identifier: Apache-2.0
#include "oric/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oric/error.hpp"
#include "oric/rng.hpp"

namespace oric {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kModelFormat = "oric-mlp";
constexpr int kModelVersion = 1;

void layer_forward(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.resize(layer.outputs);
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    const double* w = layer.weights.data() + o * layer.inputs;
    double z = layer.bias[o];
    for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
    out[o] = z;
  }
}

void check_dims(const MlpModel& model, std::size_t n) {
  if (model.layers.empty()) throw InvalidArgument("model has no layers");
  if (n != model.input_dim()) {
    throw InvalidArgument("feature dimension " + std::to_string(n) + " does not match model input " +
                          std::to_string(model.input_dim()));
  }
}

}  // namespace

std::size_t MlpModel::num_parameters() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpModel init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::uint64_t seed) {
  MlpModel model;
  model.seed = seed;
  Rng rng(seed);
  std::size_t in = input_dim;
  std::vector<std::size_t> sizes(hidden.begin(), hidden.end());
  sizes.push_back(1);
  for (std::size_t out : sizes) {
    if (in == 0 || out == 0) throw InvalidArgument("layer sizes must be positive");
    DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    model.layers.push_back(std::move(layer));
    in = out;
  }
  return model;
}

void validate(const MlpModel& model) {
  if (model.layers.empty()) throw ValidationError("model has no layers");
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
      throw ValidationError("layer " + std::to_string(l) + " has inconsistent blob sizes");
    }
    if (l > 0 && layer.inputs != model.layers[l - 1].outputs) {
      throw ValidationError("layer " + std::to_string(l) + " input does not chain");
    }
  }
  if (model.layers.back().outputs != 1) throw ValidationError("model output dimension must be 1");
  if (model.activation != "relu") throw ValidationError("unsupported activation '" + model.activation + "'");
}

double forward(const MlpModel& model, std::span<const double> input) {
  check_dims(model, input.size());
  std::vector<double> cur(input.begin(), input.end()), next;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    layer_forward(model.layers[l], cur, next);
    if (l + 1 < model.layers.size()) {
      for (double& v : next) v = std::max(v, 0.0);
    }
    cur.swap(next);
  }
  return cur[0];
}

double predict(const MlpModel& model, std::span<const double> input) {
  const double y = forward(model, input);
  return model.clamp_output ? std::clamp(y, 0.0, 1.0) : y;
}

double weighted_loss(std::span<const double> predictions, std::span<const double> targets, bool weighted) {
  if (predictions.size() != targets.size()) {
    throw InvalidArgument("predictions and targets differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double w = weighted ? targets[i] : 1.0;
    const double e = predictions[i] - targets[i];
    sum += w * e * e;
  }
  return sum;
}

std::vector<double> weighted_loss_gradient(std::span<const double> predictions,
                                           std::span<const double> targets, bool weighted) {
  if (predictions.size() != targets.size()) {
    throw InvalidArgument("predictions and targets differ in length");
  }
  std::vector<double> g(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double w = weighted ? targets[i] : 1.0;
    g[i] = 2.0 * w * (predictions[i] - targets[i]);
  }
  return g;
}

std::vector<double> flatten_parameters(const MlpModel& model) {
  std::vector<double> p;
  p.reserve(model.num_parameters());
  for (const auto& l : model.layers) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void assign_parameters(MlpModel& model, std::span<const double> params) {
  if (params.size() != model.num_parameters()) throw InvalidArgument("parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : model.layers) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(k), l.weights.size(), l.weights.begin());
    k += l.weights.size();
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(k), l.bias.size(), l.bias.begin());
    k += l.bias.size();
  }
}

double accumulate_gradient(const MlpModel& model, std::span<const double> input, double target,
                           double weight, std::span<double> gradient) {
  check_dims(model, input.size());
  const std::size_t num_layers = model.layers.size();
  thread_local std::vector<std::vector<double>> pre;
  thread_local std::vector<std::vector<double>> act;
  pre.resize(num_layers);
  act.resize(num_layers);

  // Forward, keeping pre-activations and activations.
  std::span<const double> in = input;
  for (std::size_t l = 0; l < num_layers; ++l) {
    layer_forward(model.layers[l], in, pre[l]);
    act[l] = pre[l];
    if (l + 1 < num_layers) {
      for (double& v : act[l]) v = std::max(v, 0.0);
    }
    in = act[l];
  }
  const double pred = pre.back()[0];
  const double err = pred - target;
  const double loss = weight * err * err;

  // Parameter offsets per layer in the flattened layout.
  thread_local std::vector<std::size_t> offset;
  offset.assign(num_layers, 0);
  for (std::size_t l = 1; l < num_layers; ++l) {
    offset[l] = offset[l - 1] + model.layers[l - 1].weights.size() + model.layers[l - 1].bias.size();
  }

  thread_local std::vector<double> delta, prev_delta;
  delta.assign(1, 2.0 * weight * err);
  for (std::size_t l = num_layers; l-- > 0;) {
    const auto& layer = model.layers[l];
    std::span<const double> below = l == 0 ? input : std::span<const double>(act[l - 1]);
    double* gw = gradient.data() + offset[l];
    double* gb = gw + layer.weights.size();
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* row = gw + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += d * below[i];
      gb[o] += d;
    }
    if (l == 0) break;
    prev_delta.assign(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = layer.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) prev_delta[i] += w[i] * d;
    }
    for (std::size_t i = 0; i < layer.inputs; ++i) {
      if (pre[l - 1][i] <= 0.0) prev_delta[i] = 0.0;
    }
    delta.swap(prev_delta);
  }
  return loss;
}

LossAndGradient loss_and_gradient(const MlpModel& model, std::span<const std::vector<double>> inputs,
                                  std::span<const double> targets, bool weighted) {
  if (inputs.size() != targets.size()) throw InvalidArgument("inputs and targets differ in length");
  LossAndGradient out;
  out.gradient.assign(model.num_parameters(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out.loss += accumulate_gradient(model, inputs[i], targets[i], weighted ? targets[i] : 1.0, out.gradient);
  }
  return out;
}

std::string model_to_json(const MlpModel& model) {
  ordered_json root;
  root["format"] = kModelFormat;
  root["version"] = kModelVersion;
  root["determinism"] =
      "Training is single-threaded; identical seed, config and data give a bit-identical model. "
      "Inference is a pure forward pass.";
  root["input_dim"] = model.input_dim();
  root["activation"] = model.activation;
  root["clamp_output"] = model.clamp_output;
  root["seed"] = model.seed;
  root["config_hash"] = model.config_hash;
  root["layers"] = ordered_json::array();
  for (const auto& l : model.layers) {
    root["layers"].push_back(
        {{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
  }
  return root.dump() + "\n";
}

MlpModel model_from_json(const std::string& text) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("model file: malformed JSON at byte ") + std::to_string(e.byte));
  }
  try {
    if (root.at("format").get<std::string>() != kModelFormat) throw ValidationError("not an oric-mlp model file");
    if (root.at("version").get<int>() != kModelVersion) throw ValidationError("unsupported model file version");
    MlpModel model;
    model.activation = root.at("activation").get<std::string>();
    model.clamp_output = root.at("clamp_output").get<bool>();
    model.seed = root.at("seed").get<std::uint64_t>();
    model.config_hash = root.at("config_hash").get<std::string>();
    for (const auto& l : root.at("layers")) {
      DenseLayer layer;
      layer.inputs = l.at("inputs").get<std::size_t>();
      layer.outputs = l.at("outputs").get<std::size_t>();
      layer.weights = l.at("weights").get<std::vector<double>>();
      layer.bias = l.at("bias").get<std::vector<double>>();
      model.layers.push_back(std::move(layer));
    }
    validate(model);
    if (root.at("input_dim").get<std::size_t>() != model.input_dim()) {
      throw ValidationError("model input_dim does not match its first layer");
    }
    return model;
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::string& path, const MlpModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << model_to_json(model);
  if (!out) throw IoError("error while writing '" + path + "'");
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace oric
