// Copyright 2026 The Multicast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "multicast/detstream.hpp"
#include "multicast/geometry.hpp"

namespace multicast {

inline constexpr std::size_t kTrajectoryWindow = 5;
inline constexpr std::size_t kBoxCoords = 4;

// Forecasts the next-frame box of a track from its most recent boxes. All
// boxes are normalized to [0, 1] by the frame dims, oldest first.
class TrajectoryPredictor {
 public:
  virtual ~TrajectoryPredictor() = default;

  virtual std::size_t window() const { return kTrajectoryWindow; }

  // Throws ContractError unless history.size() == window().
  virtual BoundingBox predict(std::span<const BoundingBox> history) const = 0;
};

// Maps a raw 4-vector to a valid normalized box: coordinates clamped to
// [0, 1], swapped when inverted and pulled at least kMinNormExtent apart.
inline constexpr double kMinNormExtent = 1e-6;
BoundingBox repair_box(double x1, double y1, double x2, double y2);

// Per-coordinate least-squares line through the history, evaluated one step
// past the end. A constant history returns the same box.
BoundingBox linear_extrapolate(std::span<const BoundingBox> history);

class LinearExtrapolator final : public TrajectoryPredictor {
 public:
  BoundingBox predict(std::span<const BoundingBox> history) const override;
};

// LSTM layer parameters. Gate blocks are stacked as [input, forget, cell,
// output], each `hidden` rows.
struct LstmLayer {
  Eigen::MatrixXd w_input;      // 4H x input
  Eigen::MatrixXd w_recurrent;  // 4H x H
  Eigen::VectorXd bias;         // 4H
};

// Two stacked LSTM layers followed by an affine head reading the last hidden
// state of the top layer.
class TrajectoryModel final : public TrajectoryPredictor {
 public:
  static constexpr std::size_t kDefaultHidden = 200;

  TrajectoryModel() = default;

  // All parameters zero.
  static TrajectoryModel zeros(std::size_t hidden, std::size_t window = kTrajectoryWindow);

  // Uniform in +-1/sqrt(fan_in), forget-gate bias 1.
  static TrajectoryModel initialized(std::size_t hidden, std::uint64_t seed,
                                     std::size_t window = kTrajectoryWindow);

  std::size_t hidden_size() const { return static_cast<std::size_t>(head_weight.cols()); }
  std::size_t window() const override { return window_; }
  std::size_t parameter_count() const;

  // Raw head output for one or more sequences: `steps[t]` is a 4 x B matrix
  // of normalized boxes at timestep t. Returns 4 x B.
  Eigen::MatrixXd forward(std::span<const Eigen::MatrixXd> steps) const;

  BoundingBox predict(std::span<const BoundingBox> history) const override;

  // Each sequence is run on its own, so results equal predict() exactly.
  std::vector<BoundingBox> predict_batch(std::span<const std::vector<BoundingBox>> histories) const;

  bool all_finite() const;

  // Calls fn(name, values) for every parameter tensor in a fixed order.
  void for_each_tensor(const std::function<void(const std::string&, std::span<double>)>& fn);
  void for_each_tensor(
      const std::function<void(const std::string&, std::span<const double>)>& fn) const;

  LstmLayer layer1;
  LstmLayer layer2;
  Eigen::MatrixXd head_weight;  // 4 x H
  Eigen::VectorXd head_bias;    // 4
  // Frame dims of the training corpus; informational.
  FrameDims trained_dims{1, 1};

  friend bool operator==(const TrajectoryModel& a, const TrajectoryModel& b);

 private:
  std::size_t window_ = kTrajectoryWindow;
};

// Gradient of the loss with respect to every model tensor; same layout as the
// model it belongs to.
using ModelGradient = TrajectoryModel;

struct SampleSource {
  std::string video_id;
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  std::int64_t track_id = 0;

  friend bool operator==(const SampleSource&, const SampleSource&) = default;
};

// `input` holds `window` consecutive normalized boxes of one track, `target`
// the box on the following frame.
struct TrajectorySample {
  std::vector<BoundingBox> input;
  BoundingBox target;
  SampleSource source;

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

// Mean squared error over the batch and the four coordinates.
double batch_loss(const TrajectoryModel& model, std::span<const TrajectorySample> batch);

// Same loss; writes d(loss)/d(param) into `grad` via backpropagation through
// time. `grad` is resized to match the model.
double batch_loss_and_gradient(const TrajectoryModel& model,
                               std::span<const TrajectorySample> batch, ModelGradient& grad);

enum class Optimizer { sgd, momentum, adam };

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 200;
  std::size_t batch_size = 32;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::sgd;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t hidden_size = TrajectoryModel::kDefaultHidden;
  // Return the parameters with the lowest validation loss seen, including
  // the untrained ones.
  bool restore_best = true;
};

struct EpochLoss {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  TrajectoryModel model;
  // Entry 0 holds the losses of the untrained model.
  std::vector<EpochLoss> curve;
  double final_val_mse = 0.0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

// Mini-batch gradient descent on MSE. Deterministic in (dataset, cfg).
// Throws ValidationError for an empty dataset or a bad config and
// DivergenceError when the loss stops being finite.
TrainResult train(std::span<const TrajectorySample> dataset, const TrainConfig& cfg);

struct LabeledLog {
  std::string video_id;
  DetectionLog log;
};

// Links each log's detections into tracks (greedy IoU association between
// consecutive frames) and slides a (window + 1)-box window over every run of
// consecutive frames. A missing frame ends the run.
std::vector<TrajectorySample> window_dataset(std::span<const LabeledLog> logs,
                                             std::size_t window = kTrajectoryWindow,
                                             double association_iou = 0.3);

// Versioned little-endian binary container: shapes, normalization dims and
// every parameter as raw IEEE-754 doubles.
void save_model(const TrajectoryModel& model, std::ostream& out);
TrajectoryModel load_model(std::istream& in);
void save_model(const TrajectoryModel& model, const std::filesystem::path& path);
TrajectoryModel load_model(const std::filesystem::path& path);
std::string serialize_model(const TrajectoryModel& model);

std::string to_string(Optimizer opt);
Optimizer optimizer_from_string(const std::string& name);

// Reads a `[train]` section: learning_rate, epochs, batch_size,
// validation_fraction, seed, optimizer, hidden_size, restore_best...
TrainConfig read_train_config(const std::filesystem::path& path);
TrainConfig parse_train_config(std::istream& in);
void validate(const TrainConfig& cfg);

}  // namespace multicast
