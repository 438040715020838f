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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "multicast/random.hpp"
#include "multicast/trajectory.hpp"

namespace gradcheck {

using namespace multicast;

struct TensorError {
  std::string name;
  std::size_t size = 0;
  double max_rel = 0.0;
};

// Random normalized boxes and targets; the model input need not be a valid
// trajectory for the gradient to be checked.
inline std::vector<TrajectorySample> random_batch(Rng& rng, std::size_t n, std::size_t window) {
  std::vector<TrajectorySample> batch(n);
  auto box = [&] {
    const double x = rng.uniform(0.0, 0.7);
    const double y = rng.uniform(0.0, 0.7);
    return BoundingBox{x, y, x + rng.uniform(0.05, 0.3), y + rng.uniform(0.05, 0.3)};
  };
  for (auto& s : batch) {
    for (std::size_t t = 0; t < window; ++t) s.input.push_back(box());
    s.target = box();
  }
  return batch;
}

// Per-element relative error |a - n| / max(|a| + |n|, floor) between the
// analytic gradient and central differences, reported per tensor.
inline std::vector<TensorError> check(const TrajectoryModel& model,
                                      const std::vector<TrajectorySample>& batch,
                                      double step = 1e-6, double floor = 1e-7) {
  ModelGradient grad;
  batch_loss_and_gradient(model, batch, grad);
  std::vector<std::vector<double>> analytic;
  grad.for_each_tensor([&](const std::string&, std::span<const double> v) {
    analytic.emplace_back(v.begin(), v.end());
  });

  std::vector<TensorError> out;
  TrajectoryModel probe = model;
  std::size_t tensor = 0;
  probe.for_each_tensor([&](const std::string& name, std::span<double> values) {
    TensorError e{name, values.size(), 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + step;
      const double up = batch_loss(probe, batch);
      values[i] = orig - step;
      const double down = batch_loss(probe, batch);
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[tensor][i];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor);
      e.max_rel = std::max(e.max_rel, rel);
    }
    out.push_back(e);
    ++tensor;
  });
  return out;
}

}  // namespace gradcheck
