// SPDX-License-Identifier: Apache-2.0
#include "textsense/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "textsense/core/array_io.hpp"
#include "textsense/core/rng.hpp"

namespace textsense::model {

double AdamConfig::rate_at(std::size_t epoch) const {
  if (decay_every == 0) return learning_rate;
  return learning_rate * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

Adam::Adam(std::vector<Parameter*> params, const AdamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("Adam: learning rate must be >= 0");
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Adam::step(double lr) {
  ++steps_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& value = params_[i]->value.data();
    const auto& grad = params_[i]->grad.data();
    auto& m = m_[i].data();
    auto& v = v_[i].data();
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * grad[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
      value[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.epsilon);
    }
  }
}

TrainingAborted::TrainingAborted(std::size_t epoch, std::size_t batch, double loss)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "training aborted: non-finite loss " << loss << " at epoch " << epoch << ", batch "
           << batch;
        return os.str();
      }()),
      epoch_(epoch),
      batch_(batch) {}

std::vector<EpochStats> train(Trainable& model, const TrainConfig& cfg, std::uint64_t seed) {
  const std::size_t n = model.num_examples();
  if (n == 0) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch size must be >= 1");
  if (!(cfg.optimizer.learning_rate >= 0.0)) {
    throw std::invalid_argument("train: learning rate must be >= 0");
  }
  Adam adam(model.parameters(), cfg.optimizer);
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> curve;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    const double lr = cfg.optimizer.rate_at(epoch);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - start);
      Tape tape;
      adam.zero_grad();
      const Var loss = model.batch_loss(tape, std::span(order).subspan(start, count));
      const double value = loss.item();
      if (!std::isfinite(value)) throw TrainingAborted(epoch, batches, value);
      tape.backward(loss);
      adam.step(lr);
      loss_sum += value;
      ++batches;
    }
    curve.push_back({epoch, loss_sum / static_cast<double>(batches), model.epoch_metric()});
  }
  return curve;
}

void write_curve_csv(const std::filesystem::path& path, std::span<const EpochStats> curve,
                     const char* metric_name) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss," << metric_name << '\n';
  char line[128];
  for (const auto& e : curve) {
    std::snprintf(line, sizeof line, "%zu,%.10g,%.10g\n", e.epoch + 1, e.loss, e.metric);
    out << line;
  }
}

double grad_check(const std::vector<Parameter*>& params, const std::function<Var(Tape&)>& loss,
                  double epsilon, std::uint64_t seed, std::size_t max_entries) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw std::invalid_argument("grad_check: epsilon must lie in [1e-7, 1e-3]");
  }
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    const Var out = loss(tape);
    tape.backward(out);
  }
  struct Entry {
    Parameter* param;
    std::size_t index;
  };
  std::vector<Entry> entries;
  for (Parameter* p : params)
    for (std::size_t k = 0; k < p->value.size(); ++k) entries.push_back({p, k});
  Rng rng(seed);
  for (std::size_t i = entries.size(); i > 1; --i) std::swap(entries[i - 1], entries[rng.below(i)]);
  if (entries.size() > max_entries) entries.resize(max_entries);

  auto evaluate = [&] {
    Tape tape;
    return loss(tape).item();
  };
  double worst = 0.0;
  for (const auto& e : entries) {
    double& slot = e.param->value.data()[e.index];
    const double saved = slot;
    slot = saved + epsilon;
    const double up = evaluate();
    slot = saved - epsilon;
    const double down = evaluate();
    slot = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = e.param->grad.data()[e.index];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

namespace {

std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') ? c : '_';
  return out;
}

}  // namespace

void save_parameters(const std::filesystem::path& dir, const std::vector<Parameter*>& params) {
  std::filesystem::create_directories(dir);
  for (const Parameter* p : params) {
    RealArray array{{p->value.rows(), p->value.cols()}, {"row", "col"}, p->value.data()};
    write_array(dir / (file_stem(p->name) + ".bin"), array, DType::float64);
  }
}

void load_parameters(const std::filesystem::path& dir, const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    const RealArray array = read_real_array(dir / (file_stem(p->name) + ".bin"));
    if (array.shape.size() != 2 || array.shape[0] != p->value.rows() ||
        array.shape[1] != p->value.cols()) {
      throw std::runtime_error("parameter " + p->name + ": stored shape does not match");
    }
    p->value = Matrix(array.shape[0], array.shape[1], array.data);
    p->zero_grad();
  }
}

}  // namespace textsense::model
