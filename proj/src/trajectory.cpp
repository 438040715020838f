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

#include "multicast/trajectory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "multicast/config.hpp"
#include "multicast/errors.hpp"
#include "multicast/random.hpp"

namespace multicast {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Box helpers and the linear baseline.

namespace {

void repair_axis(double& lo, double& hi) {
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (lo > hi) std::swap(lo, hi);
  if (hi - lo < kMinNormExtent) {
    const double mid = 0.5 * (lo + hi);
    lo = mid - 0.5 * kMinNormExtent;
    hi = mid + 0.5 * kMinNormExtent;
    if (lo < 0.0) {
      lo = 0.0;
      hi = kMinNormExtent;
    } else if (hi > 1.0) {
      hi = 1.0;
      lo = 1.0 - kMinNormExtent;
    }
  }
}

void check_history(std::span<const BoundingBox> history, std::size_t window) {
  if (history.size() != window) {
    throw ContractError("trajectory history must hold " + std::to_string(window) +
                        " boxes, got " + std::to_string(history.size()));
  }
  for (const auto& b : history) {
    const bool in_unit = b.x1 >= 0.0 && b.y1 >= 0.0 && b.x2 <= 1.0 && b.y2 <= 1.0;
    if (!is_valid(b) || !in_unit) {
      throw ContractError("history box " + to_string(b) + " is not a normalized box");
    }
  }
}

double coord(const BoundingBox& b, std::size_t k) {
  switch (k) {
    case 0: return b.x1;
    case 1: return b.y1;
    case 2: return b.x2;
    default: return b.y2;
  }
}

}  // namespace

BoundingBox repair_box(double x1, double y1, double x2, double y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw ContractError("non-finite predicted box");
  }
  repair_axis(x1, x2);
  repair_axis(y1, y2);
  return BoundingBox{x1, y1, x2, y2};
}

BoundingBox linear_extrapolate(std::span<const BoundingBox> history) {
  if (history.empty()) throw ContractError("linear_extrapolate needs at least one box");
  const auto n = history.size();
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  double stt = 0.0;
  for (std::size_t t = 0; t < n; ++t) stt += (t - t_mean) * (t - t_mean);

  double out[4];
  for (std::size_t k = 0; k < kBoxCoords; ++k) {
    double mean = 0.0;
    for (const auto& b : history) mean += coord(b, k);
    mean /= static_cast<double>(n);
    double sty = 0.0;
    for (std::size_t t = 0; t < n; ++t) sty += (t - t_mean) * (coord(history[t], k) - mean);
    const double slope = stt > 0.0 ? sty / stt : 0.0;
    out[k] = mean + slope * (static_cast<double>(n) - t_mean);
  }
  return repair_box(out[0], out[1], out[2], out[3]);
}

BoundingBox LinearExtrapolator::predict(std::span<const BoundingBox> history) const {
  check_history(history, window());
  return linear_extrapolate(history);
}

// ---------------------------------------------------------------------------
// LSTM forward and backward passes.

namespace {

struct LayerTrace {
  std::vector<MatrixXd> input;      // T, in x B
  std::vector<MatrixXd> gates;      // T, 4H x B, post-activation [i, f, g, o]
  std::vector<MatrixXd> cell;       // T + 1, cell[0] = 0
  std::vector<MatrixXd> tanh_cell;  // T
  std::vector<MatrixXd> hidden;     // T + 1, hidden[0] = 0
};

LayerTrace run_layer(const LstmLayer& layer, std::span<const MatrixXd> inputs) {
  const auto h = layer.w_recurrent.cols();
  const auto b = inputs.front().cols();
  LayerTrace tr;
  tr.input.assign(inputs.begin(), inputs.end());
  tr.cell.push_back(MatrixXd::Zero(h, b));
  tr.hidden.push_back(MatrixXd::Zero(h, b));
  for (const auto& x : inputs) {
    MatrixXd z = layer.w_input * x + layer.w_recurrent * tr.hidden.back();
    z.colwise() += layer.bias;
    auto sig = [](auto&& blk) { return (1.0 / (1.0 + (-blk.array()).exp())).matrix(); };
    z.topRows(2 * h) = sig(z.topRows(2 * h));
    z.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
    z.bottomRows(h) = sig(z.bottomRows(h));

    const auto i = z.topRows(h);
    const auto f = z.middleRows(h, h);
    const auto g = z.middleRows(2 * h, h);
    const auto o = z.bottomRows(h);
    MatrixXd c = f.cwiseProduct(tr.cell.back()) + i.cwiseProduct(g);
    MatrixXd tc = c.array().tanh().matrix();
    tr.hidden.push_back(o.cwiseProduct(tc));
    tr.cell.push_back(std::move(c));
    tr.tanh_cell.push_back(std::move(tc));
    tr.gates.push_back(std::move(z));
  }
  return tr;
}

// `dh_out[t]` is the gradient arriving at hidden[t + 1] from above. Adds the
// parameter gradients into `grad` and returns the gradients at the inputs.
std::vector<MatrixXd> backprop_layer(const LstmLayer& layer, const LayerTrace& tr,
                                     const std::vector<MatrixXd>& dh_out, LstmLayer& grad,
                                     bool want_input_grad) {
  const auto h = layer.w_recurrent.cols();
  const auto b = tr.input.front().cols();
  const auto steps = tr.input.size();
  std::vector<MatrixXd> dx(want_input_grad ? steps : 0);
  MatrixXd dh_next = MatrixXd::Zero(h, b);
  MatrixXd dc_next = MatrixXd::Zero(h, b);
  MatrixXd dz(4 * h, b);

  for (std::size_t s = steps; s-- > 0;) {
    const auto& z = tr.gates[s];
    const auto i = z.topRows(h).array();
    const auto f = z.middleRows(h, h).array();
    const auto g = z.middleRows(2 * h, h).array();
    const auto o = z.bottomRows(h).array();
    const auto tc = tr.tanh_cell[s].array();

    const Eigen::ArrayXXd dh = (dh_out[s] + dh_next).array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tc * tc);
    dz.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
    dz.middleRows(h, h) = (dc * tr.cell[s].array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * h, h) = (dc * i * (1.0 - g * g)).matrix();
    dz.bottomRows(h) = (dh * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();

    grad.w_input.noalias() += dz * tr.input[s].transpose();
    grad.w_recurrent.noalias() += dz * tr.hidden[s].transpose();
    grad.bias += dz.rowwise().sum();
    if (want_input_grad) dx[s].noalias() = layer.w_input.transpose() * dz;
    dh_next.noalias() = layer.w_recurrent.transpose() * dz;
  }
  return dx;
}

std::vector<MatrixXd> batch_steps(std::span<const TrajectorySample> batch, std::size_t window) {
  std::vector<MatrixXd> steps(window, MatrixXd(kBoxCoords, static_cast<Eigen::Index>(batch.size())));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (batch[j].input.size() != window) {
      throw ContractError("sample window " + std::to_string(batch[j].input.size()) +
                          " does not match model window " + std::to_string(window));
    }
    for (std::size_t t = 0; t < window; ++t) {
      const auto& bx = batch[j].input[t];
      steps[t].col(static_cast<Eigen::Index>(j)) << bx.x1, bx.y1, bx.x2, bx.y2;
    }
  }
  return steps;
}

MatrixXd batch_targets(std::span<const TrajectorySample> batch) {
  MatrixXd y(kBoxCoords, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& t = batch[j].target;
    y.col(static_cast<Eigen::Index>(j)) << t.x1, t.y1, t.x2, t.y2;
  }
  return y;
}

LstmLayer zero_layer(Eigen::Index in, Eigen::Index h) {
  return LstmLayer{MatrixXd::Zero(4 * h, in), MatrixXd::Zero(4 * h, h), VectorXd::Zero(4 * h)};
}

void fill_uniform(double* data, Eigen::Index n, double limit, Rng& rng) {
  for (Eigen::Index k = 0; k < n; ++k) data[k] = rng.uniform(-limit, limit);
}

}  // namespace

TrajectoryModel TrajectoryModel::zeros(std::size_t hidden, std::size_t window) {
  if (hidden == 0 || window == 0) throw ContractError("hidden size and window must be positive");
  const auto h = static_cast<Eigen::Index>(hidden);
  TrajectoryModel m;
  m.layer1 = zero_layer(kBoxCoords, h);
  m.layer2 = zero_layer(h, h);
  m.head_weight = MatrixXd::Zero(kBoxCoords, h);
  m.head_bias = VectorXd::Zero(kBoxCoords);
  m.window_ = window;
  return m;
}

TrajectoryModel TrajectoryModel::initialized(std::size_t hidden, std::uint64_t seed,
                                             std::size_t window) {
  TrajectoryModel m = zeros(hidden, window);
  Rng rng(seed);
  const auto h = static_cast<Eigen::Index>(hidden);
  const double k_hidden = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto init_layer = [&](LstmLayer& l, Eigen::Index fan_in) {
    fill_uniform(l.w_input.data(), l.w_input.size(), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    fill_uniform(l.w_recurrent.data(), l.w_recurrent.size(), k_hidden, rng);
    fill_uniform(l.bias.data(), l.bias.size(), k_hidden, rng);
    l.bias.segment(h, h).setOnes();
  };
  init_layer(m.layer1, kBoxCoords);
  init_layer(m.layer2, h);
  fill_uniform(m.head_weight.data(), m.head_weight.size(), k_hidden, rng);
  fill_uniform(m.head_bias.data(), m.head_bias.size(), k_hidden, rng);
  return m;
}

std::size_t TrajectoryModel::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, std::span<const double> v) { n += v.size(); });
  return n;
}

MatrixXd TrajectoryModel::forward(std::span<const MatrixXd> steps) const {
  const LayerTrace l1 = run_layer(layer1, steps);
  const LayerTrace l2 = run_layer(layer2, std::span(l1.hidden).subspan(1));
  MatrixXd y = head_weight * l2.hidden.back();
  y.colwise() += head_bias;
  return y;
}

BoundingBox TrajectoryModel::predict(std::span<const BoundingBox> history) const {
  check_history(history, window_);
  std::vector<MatrixXd> steps;
  steps.reserve(history.size());
  for (const auto& b : history) {
    MatrixXd x(kBoxCoords, 1);
    x << b.x1, b.y1, b.x2, b.y2;
    steps.push_back(std::move(x));
  }
  const MatrixXd y = forward(steps);
  return repair_box(y(0, 0), y(1, 0), y(2, 0), y(3, 0));
}

std::vector<BoundingBox> TrajectoryModel::predict_batch(
    std::span<const std::vector<BoundingBox>> histories) const {
  std::vector<BoundingBox> out;
  out.reserve(histories.size());
  for (const auto& h : histories) out.push_back(predict(h));
  return out;
}

bool TrajectoryModel::all_finite() const {
  bool ok = true;
  for_each_tensor([&](const std::string&, std::span<const double> v) {
    ok = ok && std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  });
  return ok;
}

void TrajectoryModel::for_each_tensor(
    const std::function<void(const std::string&, std::span<double>)>& fn) {
  auto span_of = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  fn("layer1.w_input", span_of(layer1.w_input));
  fn("layer1.w_recurrent", span_of(layer1.w_recurrent));
  fn("layer1.bias", span_of(layer1.bias));
  fn("layer2.w_input", span_of(layer2.w_input));
  fn("layer2.w_recurrent", span_of(layer2.w_recurrent));
  fn("layer2.bias", span_of(layer2.bias));
  fn("head.weight", span_of(head_weight));
  fn("head.bias", span_of(head_bias));
}

void TrajectoryModel::for_each_tensor(
    const std::function<void(const std::string&, std::span<const double>)>& fn) const {
  const_cast<TrajectoryModel*>(this)->for_each_tensor(
      [&](const std::string& name, std::span<double> v) { fn(name, v); });
}

bool operator==(const TrajectoryModel& a, const TrajectoryModel& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() &&
           std::equal(x.data(), x.data() + x.size(), y.data(), [](double p, double q) {
             return std::bit_cast<std::uint64_t>(p) == std::bit_cast<std::uint64_t>(q);
           });
  };
  auto same_layer = [&](const LstmLayer& x, const LstmLayer& y) {
    return same(x.w_input, y.w_input) && same(x.w_recurrent, y.w_recurrent) && same(x.bias, y.bias);
  };
  return a.window_ == b.window_ && a.trained_dims == b.trained_dims &&
         same_layer(a.layer1, b.layer1) && same_layer(a.layer2, b.layer2) &&
         same(a.head_weight, b.head_weight) && same(a.head_bias, b.head_bias);
}

double batch_loss(const TrajectoryModel& model, std::span<const TrajectorySample> batch) {
  if (batch.empty()) return 0.0;
  const auto steps = batch_steps(batch, model.window());
  const MatrixXd diff = model.forward(steps) - batch_targets(batch);
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

double batch_loss_and_gradient(const TrajectoryModel& model,
                               std::span<const TrajectorySample> batch, ModelGradient& grad) {
  grad = TrajectoryModel::zeros(model.hidden_size(), model.window());
  if (batch.empty()) return 0.0;
  const auto steps = batch_steps(batch, model.window());
  const LayerTrace l1 = run_layer(model.layer1, steps);
  const LayerTrace l2 = run_layer(model.layer2, std::span(l1.hidden).subspan(1));
  MatrixXd y = model.head_weight * l2.hidden.back();
  y.colwise() += model.head_bias;
  const MatrixXd diff = y - batch_targets(batch);
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;

  const MatrixXd dy = (2.0 / n) * diff;
  grad.head_weight.noalias() = dy * l2.hidden.back().transpose();
  grad.head_bias = dy.rowwise().sum();

  const auto h = static_cast<Eigen::Index>(model.hidden_size());
  const auto b = static_cast<Eigen::Index>(batch.size());
  std::vector<MatrixXd> dh2(steps.size(), MatrixXd::Zero(h, b));
  dh2.back() = model.head_weight.transpose() * dy;
  const std::vector<MatrixXd> dh1 = backprop_layer(model.layer2, l2, dh2, grad.layer2, true);
  backprop_layer(model.layer1, l1, dh1, grad.layer1, false);
  return loss;
}

// ---------------------------------------------------------------------------
// Training.

std::string to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::momentum: return "momentum";
    case Optimizer::adam: return "adam";
  }
  return "sgd";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "momentum") return Optimizer::momentum;
  if (name == "adam") return Optimizer::adam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ValidationError("learning_rate must be > 0");
  }
  if (cfg.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (cfg.batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw ValidationError("validation_fraction must be in (0, 1)");
  }
  if (cfg.hidden_size == 0) throw ValidationError("hidden_size must be >= 1");
}

namespace {

class ParameterUpdater {
 public:
  ParameterUpdater(const TrainConfig& cfg, const TrajectoryModel& shape) : cfg_(cfg) {
    shape.for_each_tensor([&](const std::string&, std::span<const double> v) {
      first_.emplace_back(v.size(), 0.0);
      second_.emplace_back(v.size(), 0.0);
    });
  }

  void apply(TrajectoryModel& model, const ModelGradient& grad) {
    ++step_;
    std::vector<std::span<const double>> grads;
    grad.for_each_tensor([&](const std::string&, std::span<const double> g) { grads.push_back(g); });
    std::size_t k = 0;
    const double lr = cfg_.learning_rate;
    const double b1 = cfg_.adam_beta1;
    const double b2 = cfg_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    model.for_each_tensor([&](const std::string&, std::span<double> p) {
      const auto g = grads[k];
      auto& m = first_[k];
      auto& v = second_[k];
      for (std::size_t j = 0; j < p.size(); ++j) {
        switch (cfg_.optimizer) {
          case Optimizer::sgd:
            p[j] -= lr * g[j];
            break;
          case Optimizer::momentum:
            m[j] = cfg_.momentum * m[j] + g[j];
            p[j] -= lr * m[j];
            break;
          case Optimizer::adam:
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.adam_epsilon);
            break;
        }
      }
      ++k;
    });
  }

 private:
  const TrainConfig& cfg_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  long step_ = 0;
};

void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.below(i))]);
  }
}

std::vector<TrajectorySample> gather(std::span<const TrajectorySample> data,
                                     std::span<const std::size_t> idx) {
  std::vector<TrajectorySample> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data[i]);
  return out;
}

}  // namespace

TrainResult train(std::span<const TrajectorySample> dataset, const TrainConfig& cfg) {
  validate(cfg);
  if (dataset.empty()) throw ValidationError("empty dataset");
  const std::size_t window = dataset.front().input.size();

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);

  std::vector<TrajectorySample> train_set;
  std::vector<TrajectorySample> val_set;
  if (dataset.size() == 1) {
    train_set = gather(dataset, order);
    val_set = train_set;
  } else {
    auto n_val = static_cast<std::size_t>(
        std::llround(cfg.validation_fraction * static_cast<double>(dataset.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, dataset.size() - 1);
    val_set = gather(dataset, std::span(order).first(n_val));
    train_set = gather(dataset, std::span(order).subspan(n_val));
  }

  TrainResult result;
  result.train_size = train_set.size();
  result.val_size = val_set.size();
  result.model = TrajectoryModel::initialized(cfg.hidden_size, rng.next(), window);

  double best_val = batch_loss(result.model, val_set);
  result.curve.push_back({0, batch_loss(result.model, train_set), best_val});
  TrajectoryModel best = result.model;

  ParameterUpdater updater(cfg, result.model);
  ModelGradient grad;
  std::vector<std::size_t> train_order(train_set.size());
  std::iota(train_order.begin(), train_order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(train_order, rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < train_order.size(); start += cfg.batch_size) {
      const auto len = std::min(cfg.batch_size, train_order.size() - start);
      const auto batch = gather(train_set, std::span(train_order).subspan(start, len));
      const double loss = batch_loss_and_gradient(result.model, batch, grad);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, "non-finite training loss");
      weighted += loss * static_cast<double>(len);
      updater.apply(result.model, grad);
    }
    const double val = batch_loss(result.model, val_set);
    if (!std::isfinite(val) || !result.model.all_finite()) {
      throw DivergenceError(epoch, "non-finite parameters or validation loss");
    }
    result.curve.push_back({epoch, weighted / static_cast<double>(train_set.size()), val});
    if (cfg.restore_best && val < best_val) {
      best_val = val;
      best = result.model;
    }
  }

  if (cfg.restore_best) result.model = std::move(best);
  result.final_val_mse = batch_loss(result.model, val_set);
  return result;
}

// ---------------------------------------------------------------------------
// Dataset windowing.

std::vector<TrajectorySample> window_dataset(std::span<const LabeledLog> logs, std::size_t window,
                                             double association_iou) {
  if (window == 0) throw ContractError("window must be positive");
  std::vector<TrajectorySample> out;
  for (const auto& labeled : logs) {
    struct Run {
      std::int64_t id = 0;
      std::int64_t first_frame = 0;
      std::int64_t last_frame = 0;
      std::vector<BoundingBox> boxes;
    };
    std::vector<Run> open;
    std::vector<Run> closed;
    std::int64_t next_id = 0;

    for (const auto& frame : labeled.log.frames) {
      std::vector<BoundingBox> dets;
      for (const auto& d : frame.detections) dets.push_back(d.box);

      std::vector<Run> still_open;
      std::vector<TrackRef> refs;
      std::vector<std::size_t> ref_run;
      for (std::size_t r = 0; r < open.size(); ++r) {
        if (open[r].last_frame == frame.frame_id - 1) {
          refs.push_back({open[r].id, open[r].boxes.back()});
          ref_run.push_back(r);
        }
      }
      std::vector<bool> extended(open.size(), false);
      std::vector<bool> used(dets.size(), false);
      for (const auto& a : greedy_associate(dets, refs, association_iou)) {
        Run& run = open[ref_run[a.track]];
        run.boxes.push_back(dets[a.detection]);
        run.last_frame = frame.frame_id;
        extended[ref_run[a.track]] = true;
        used[a.detection] = true;
      }
      for (std::size_t r = 0; r < open.size(); ++r) {
        (extended[r] ? still_open : closed).push_back(std::move(open[r]));
      }
      for (std::size_t d = 0; d < dets.size(); ++d) {
        if (!used[d]) still_open.push_back({next_id++, frame.frame_id, frame.frame_id, {dets[d]}});
      }
      open = std::move(still_open);
    }
    closed.insert(closed.end(), std::make_move_iterator(open.begin()),
                  std::make_move_iterator(open.end()));
    std::sort(closed.begin(), closed.end(), [](const Run& a, const Run& b) { return a.id < b.id; });

    for (const auto& run : closed) {
      if (run.boxes.size() <= window) continue;
      for (std::size_t k = 0; k + window < run.boxes.size(); ++k) {
        TrajectorySample s;
        for (std::size_t t = 0; t < window; ++t) {
          s.input.push_back(normalize(run.boxes[k + t], labeled.log.dims));
        }
        s.target = normalize(run.boxes[k + window], labeled.log.dims);
        const auto first = run.first_frame + static_cast<std::int64_t>(k);
        s.source = {labeled.video_id, first, first + static_cast<std::int64_t>(window), run.id};
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model container.

namespace {

constexpr char kMagic[8] = {'M', 'C', 'T', 'R', 'A', 'J', '\r', '\n'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kLayerCount = 2;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t uint(int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) throw ValidationError("truncated model file");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  double f64() { return std::bit_cast<double>(uint(8)); }

 private:
  std::istream& in_;
};

}  // namespace

std::string serialize_model(const TrajectoryModel& model) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(kBoxCoords));
  put_u32(out, static_cast<std::uint32_t>(model.hidden_size()));
  put_u32(out, kLayerCount);
  put_u32(out, static_cast<std::uint32_t>(model.window()));
  put_u32(out, static_cast<std::uint32_t>(model.trained_dims.width));
  put_u32(out, static_cast<std::uint32_t>(model.trained_dims.height));
  model.for_each_tensor([&](const std::string&, std::span<const double> v) {
    put_u64(out, v.size());
    for (double x : v) put_u64(out, std::bit_cast<std::uint64_t>(x));
  });
  return out;
}

void save_model(const TrajectoryModel& model, std::ostream& out) {
  const std::string bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("model write failure");
}

TrajectoryModel load_model(std::istream& in) {
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw ValidationError("not a trajectory model file");
  }
  Reader r(in);
  if (const auto v = r.u32(); v != kFormatVersion) {
    throw ValidationError("unsupported model format version " + std::to_string(v));
  }
  const auto input = r.u32();
  const auto hidden = r.u32();
  const auto layers = r.u32();
  const auto window = r.u32();
  if (input != kBoxCoords || layers != kLayerCount || hidden == 0 || window == 0 || hidden > 65536) {
    throw ValidationError("unexpected model shape");
  }
  TrajectoryModel model = TrajectoryModel::zeros(hidden, window);
  model.trained_dims.width = static_cast<int>(r.u32());
  model.trained_dims.height = static_cast<int>(r.u32());
  model.for_each_tensor([&](const std::string& name, std::span<double> v) {
    if (r.uint(8) != v.size()) throw ValidationError("tensor " + name + " has the wrong size");
    for (double& x : v) x = r.f64();
  });
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes in model file");
  return model;
}

void save_model(const TrajectoryModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_model(model, out);
}

TrajectoryModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return load_model(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

TrainConfig parse_train_config(std::istream& in) {
  TrainConfig cfg;
  for (const auto& s : config::parse(in)) {
    if (s.name != "train") throw ParseError(s.line, "unknown section [" + s.name + "]");
    s.expect_keys({"learning_rate", "epochs", "batch_size", "validation_fraction", "seed",
                   "optimizer", "momentum", "hidden_size", "restore_best"});
    if (auto e = s.find("learning_rate")) cfg.learning_rate = config::to_double(*e);
    if (auto e = s.find("epochs")) cfg.epochs = static_cast<int>(config::to_int(*e));
    if (auto e = s.find("batch_size")) cfg.batch_size = static_cast<std::size_t>(config::to_int(*e));
    if (auto e = s.find("validation_fraction")) cfg.validation_fraction = config::to_double(*e);
    if (auto e = s.find("seed")) cfg.seed = static_cast<std::uint64_t>(config::to_int(*e));
    if (auto e = s.find("optimizer")) cfg.optimizer = optimizer_from_string(e->value);
    if (auto e = s.find("momentum")) cfg.momentum = config::to_double(*e);
    if (auto e = s.find("hidden_size")) cfg.hidden_size = static_cast<std::size_t>(config::to_int(*e));
    if (auto e = s.find("restore_best")) cfg.restore_best = config::to_bool(*e);
  }
  validate(cfg);
  return cfg;
}

TrainConfig read_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_train_config(in);
}

}  // namespace multicast
