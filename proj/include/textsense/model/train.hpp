// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "textsense/model/tape.hpp"

namespace textsense::model {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t decay_every = 20;  // epochs; 0 disables decay
  double decay_factor = 0.5;

  /// Step-decayed learning rate for a zero-based epoch.
  double rate_at(std::size_t epoch) const;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, const AdamConfig& cfg);

  /// One update with the current gradients at learning rate `lr`.
  void step(double lr);
  void zero_grad();

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamConfig cfg_;
  std::size_t steps_ = 0;
};

/// Model plus data, as the training loop sees them.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::size_t num_examples() const = 0;
  /// Mean loss over the examples at `indices`, recorded on `tape`.
  virtual Var batch_loss(Tape& tape, std::span<const std::size_t> indices) = 0;
  /// Training-set metric reported per epoch (accuracy or mAP).
  virtual double epoch_metric() { return 0.0; }
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 20;
  AdamConfig optimizer;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;    // mean batch loss
  double metric = 0.0;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::size_t epoch, std::size_t batch, double loss);
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// Mini-batch Adam with a per-epoch shuffle drawn from `seed`. Fully
/// deterministic given (model state, data, config, seed).
std::vector<EpochStats> train(Trainable& model, const TrainConfig& cfg, std::uint64_t seed);

/// Writes the loss curve as CSV with columns epoch,loss,metric.
void write_curve_csv(const std::filesystem::path& path, std::span<const EpochStats> curve,
                     const char* metric_name);

/// Reverse-mode gradients against central finite differences on up to
/// `max_entries` randomly chosen parameter entries. Returns the largest
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
double grad_check(const std::vector<Parameter*>& params, const std::function<Var(Tape&)>& loss,
                  double epsilon, std::uint64_t seed, std::size_t max_entries = 64);

/// One float64 array file per parameter under `dir`.
void save_parameters(const std::filesystem::path& dir, const std::vector<Parameter*>& params);
void load_parameters(const std::filesystem::path& dir, const std::vector<Parameter*>& params);

}  // namespace textsense::model
