// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oric {

// Fully connected layer; weights are row-major (outputs x inputs).
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Regression MLP: rectified-linear hidden layers and a single linear output.
struct MlpModel {
  std::vector<DenseLayer> layers;
  std::string activation = "relu";
  // Clamp the output to [0, 1] at inference (rank targets).
  bool clamp_output = true;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t num_parameters() const noexcept;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

// Uniform fan-in initialization, U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), zero biases.
MlpModel init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::uint64_t seed);

// Checks that layer shapes chain and end in a single output.
void validate(const MlpModel& model);

// Raw network output, no clamping.
double forward(const MlpModel& model, std::span<const double> input);

// Inference: forward pass, clamped to [0, 1] when the model says so. Throws
// InvalidArgument on a dimension mismatch.
double predict(const MlpModel& model, std::span<const double> input);

// Sum over samples of weight_i * (pred_i - target_i)^2. With `weighted`, the
// weight is the target itself; otherwise 1.
double weighted_loss(std::span<const double> predictions, std::span<const double> targets,
                     bool weighted = true);

// d loss / d pred_i = 2 * weight_i * (pred_i - target_i).
std::vector<double> weighted_loss_gradient(std::span<const double> predictions,
                                           std::span<const double> targets, bool weighted = true);

// Parameters flattened layer by layer, weights then bias.
std::vector<double> flatten_parameters(const MlpModel& model);
void assign_parameters(MlpModel& model, std::span<const double> params);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as flatten_parameters
};

// Loss over the given samples and its exact gradient by backpropagation.
LossAndGradient loss_and_gradient(const MlpModel& model, std::span<const std::vector<double>> inputs,
                                  std::span<const double> targets, bool weighted = true);

// Adds one sample's gradient of weight * (pred - target)^2 into `gradient`
// (flatten_parameters layout) and returns that sample's loss.
double accumulate_gradient(const MlpModel& model, std::span<const double> input, double target,
                           double weight, std::span<double> gradient);

// Versioned JSON model file.
std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

}  // namespace oric
