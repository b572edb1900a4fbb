/*
 * Copyright 2026 The PCNN Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcnn/common.hpp"

namespace pcnn {

/// Optimization settings. Defaults: batch 16, Adam at 2e-5, linear warm-up
/// over the first 10% of optimizer steps.
struct Hyperparams {
  int batch_size = 16;
  double learning_rate = 2e-5;
  double warmup_fraction = 0.10;
  int epochs = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning_rate must be a finite non-negative number");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
      throw ConfigError("warmup_fraction must lie in [0,1)");
    if (epochs <= 0) throw ConfigError("epochs must be positive");
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// lr(s) = base * s / W for s <= W (1-based steps), base afterwards, where
/// W = ceil(warmup_fraction * total_steps).
class WarmupSchedule {
 public:
  WarmupSchedule(double base_lr, double warmup_fraction, std::size_t total_steps)
      : base_(base_lr), total_(total_steps) {
    // The epsilon keeps products like 0.1 * 30 from rounding up to 4.
    double w = std::ceil(warmup_fraction * static_cast<double>(total_steps) - 1e-9);
    warmup_ = w > 0.0 ? static_cast<std::size_t>(w) : 0;
  }

  double lr(std::size_t step) const {
    if (warmup_ > 0 && step <= warmup_)
      return base_ * static_cast<double>(step) / static_cast<double>(warmup_);
    return base_;
  }

  std::size_t warmup_steps() const { return warmup_; }
  std::size_t total_steps() const { return total_; }

 private:
  double base_;
  std::size_t total_;
  std::size_t warmup_ = 0;
};

class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Applies one update. `params` and `grads` must list identically shaped
  /// tensors in the same order on every call.
  void step(const ParamList& params, const ParamList& grads, double lr) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.values.size(), 0.0);
        v_.emplace_back(p.values.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k].values;
      auto g = grads[k].values;
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> step_loss;
  std::vector<double> lr_trace;
  std::size_t steps = 0;

  double final_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.back(); }
};

}  // namespace pcnn
