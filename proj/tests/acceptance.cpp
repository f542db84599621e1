// SPDX-License-Identifier: Apache-2.0
// Acceptance checks 1-7. One PASS/FAIL line per check; exit status is the
// number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "textsense/core/rng.hpp"
#include "textsense/harness/experiment.hpp"
#include "textsense/model/har_head.hpp"
#include "textsense/model/losses.hpp"
#include "textsense/model/ops.hpp"
#include "textsense/signal/fmcw.hpp"
#include "textsense/signal/rfid.hpp"
#include "textsense/text/attention.hpp"

using namespace textsense;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("textsense_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

Outcome physics() {
  Outcome out;
  Rng rng(101);
  signal::FmcwParams p;
  const double range_tol = p.light_speed / (2.0 * p.bandwidth);
  const double velocity_tol =
      p.carrier_wavelength / (2.0 * double(p.num_chirps) * p.chirp_duration);
  for (int i = 0; i < 100; ++i) {
    signal::FmcwTarget t;
    t.range = rng.uniform(2.0 * p.range_resolution(), p.max_range() - 2.0 * p.range_resolution());
    t.radial_velocity = rng.uniform(-0.8, 0.8) * p.max_velocity();
    t.reflectivity = rng.uniform(0.2, 2.0);
    const auto cube = signal::synth_fmcw_cube(p, std::span(&t, 1), rng.next_u64());
    const auto peak = signal::find_peak(signal::range_doppler_map(cube, p));
    out.require(std::abs(peak.range - t.range) <= range_tol,
                "range " + std::to_string(peak.range) + " vs " + std::to_string(t.range));
    out.require(std::abs(peak.velocity - t.radial_velocity) <= velocity_tol,
                "velocity " + std::to_string(peak.velocity) + " vs " + std::to_string(t.radial_velocity));

    signal::RfidLink link{rng.uniform(0.1, 4.0), rng.uniform(0.5, 10.0), rng.uniform(0.5, 10.0),
                          rng.uniform(0.5, 4.0), rng.uniform(0.1, 1.0), rng.uniform(0.2, 20.0)};
    signal::RfidLink far = link;
    const double k = rng.uniform(1.1, 5.0);
    far.distance *= k;
    out.require(rel(signal::rfid_received_power(link) / signal::rfid_received_power(far),
                    std::pow(k, 4)) < 1e-12, "d^-4 scaling");

    const double r = rng.uniform(0.1, 50.0);
    const auto pos = signal::spherical_to_cartesian(r, rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    out.require(rel(pos.x * pos.x + pos.y * pos.y + pos.z * pos.z, r * r) < 1e-12, "norm identity");
  }
  return out;
}

Outcome attention() {
  Outcome out;
  Rng rng(102);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = 1 + rng.below(4), l = 1 + rng.below(5), c = 1 + rng.below(8);
    const std::size_t heads = 1 + rng.below(4), dk = 1 + rng.below(4);
    const auto w = text::MhsaWeights::random(c, heads, dk, rng);
    std::vector<Matrix> samples;
    for (std::size_t s = 0; s < b; ++s) samples.push_back(random_matrix(l, c, rng));
    const auto x = text::TokenMatrix::from_samples(samples, text::TokenRole::initial);
    text::AttentionMaps maps;
    const auto y = text::mhsa_forward(x, w, &maps);
    for (std::size_t s = 0; s < b; ++s) {
      const Matrix ref = oracle::mhsa(samples[s], w.w_q, w.w_k, w.w_v, w.w_o);
      const Matrix got = y.sample(s);
      for (std::size_t i = 0; i < got.size(); ++i)
        out.require(std::abs(got.data()[i] - ref.data()[i]) < 1e-10, "oracle mismatch");
      for (const auto& m : maps[s])
        for (std::size_t i = 0; i < l; ++i) {
          const auto row = m.row(i);
          out.require(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-12,
                      "softmax row sum");
        }
    }
    const auto zero = text::mhsa_forward(x, text::MhsaWeights::zeros(c, heads, dk));
    out.require(zero.data() == x.data(), "zero-weight identity");

    std::vector<std::size_t> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = l; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    Matrix permuted(l, c);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < c; ++j) permuted(i, j) = samples[0](perm[i], j);
    const Matrix a = y.sample(0);
    const Matrix pb =
        text::mhsa_forward(text::TokenMatrix::from_samples({permuted}, text::TokenRole::initial), w).sample(0);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < c; ++j)
        out.require(std::abs(pb(i, j) - a(perm[i], j)) < 1e-10, "permutation equivariance");
  }
  return out;
}

Outcome gradients() {
  using namespace model;
  Outcome out;
  Rng rng(103);
  double worst = 0.0;
  auto check = [&](const char* what, std::vector<Parameter*> params,
                   const std::function<Var(Tape&)>& loss) {
    const double err = oracle::gradient_error(params, loss);
    worst = std::max(worst, err);
    out.require(err < 1e-4, std::string(what) + " error " + std::to_string(err));
  };
  for (int config = 0; config < 50; ++config) {
    const std::size_t n = 2 + rng.below(5), d = 2 + rng.below(6), k = 2 + rng.below(4);
    const Matrix x = random_matrix(n, d, rng);
    std::vector<int> labels(n);
    for (auto& v : labels) v = int(rng.below(k));

    AffineLayer affine(d, k, rng);
    const Matrix weights = random_matrix(n, k, rng);
    check("affine", affine.parameters(), [&](Tape& t) {
      return sum(mul(affine.forward(t, t.constant(x)), t.constant(weights)));
    });

    Parameter z("z", random_matrix(n, d, rng, 2.0));
    const Matrix zw = random_matrix(n, d, rng);
    check("nonlinearity", {&z}, [&](Tape& t) {
      const Var v = t.parameter(z);
      return sum(mul(add(relu(v), softplus(v)), t.constant(zw)));
    });

    text::MhsaLayer layer(d, 1 + rng.below(3), 1 + rng.below(3), rng);
    check("attention", layer.parameters(), [&](Tape& t) {
      const Var y = text::mhsa(t.constant(x), layer.bind(t));
      return sum(mul(y, y));
    });

    HarHead head(d, 4, k, rng);
    check("cross-entropy", head.parameters(), [&](Tape& t) {
      return cross_entropy(softmax_rows(head.forward(t, t.constant(x))), one_hot(labels, k));
    });
    check("focal", head.parameters(), [&](Tape& t) {
      return focal(softmax_rows(head.forward(t, t.constant(x))), labels, kFocalGamma, kFocalAlpha);
    });

    Parameter raw("offsets", random_matrix(n, 2, rng, 2.0));
    Matrix gt(n, 2);
    for (double& v : gt.data()) v = rng.uniform(0.1, 3.0);
    check("localization", {&raw}, [&](Tape& t) { return tiou_loss(softplus(t.parameter(raw)), gt); });
  }
  if (out.ok) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative error %.3e", worst);
    out.detail = buf;
  }
  return out;
}

Outcome metrics() {
  Outcome out;
  Rng rng(104);
  const double ts[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (int n = 0; n < 1000; ++n) {
    std::vector<eval::Segment> gts;
    std::vector<eval::Detection> dets;
    const int classes = 1 + int(rng.below(2));
    auto seg = [&] {
      const double s = double(rng.below(10));
      return eval::Segment{s, s + 1.0 + double(rng.below(6)), int(rng.below(std::uint64_t(classes)))};
    };
    const std::size_t ng = 1 + rng.below(5), nd = rng.below(6);
    for (std::size_t i = 0; i < ng; ++i) gts.push_back(seg());
    for (std::size_t i = 0; i < nd; ++i) dets.push_back({seg(), double(rng.below(4)) / 4.0});
    for (const auto& d : dets)
      for (const auto& g : gts)
        out.require(std::abs(eval::tiou(d.segment, g) -
                             oracle::tiou(d.segment.start, d.segment.end, g.start, g.end)) < 1e-12,
                    "tiou");
    const auto match = oracle::exhaustive_match(dets, gts);
    double mean = 0.0, previous = 2.0;
    for (double t : ts) {
      const double a = eval::ap_at_t(dets, gts, t);
      out.require(std::abs(a - oracle::ap(dets, gts, match, t)) < 1e-12, "ap_at_t");
      out.require(a <= previous, "AP@t increased with t");
      previous = a;
      mean += a / 5.0;
    }
    out.require(std::abs(eval::mean_ap(dets, gts, ts) - mean) < 1e-12, "mean_ap");
  }
  return out;
}

harness::ExperimentConfig har_config(const fs::path& out) {
  harness::ExperimentConfig c;
  c.data.num_classes = 3;
  c.data.num_train = 200;
  c.data.num_test = 60;
  c.output = out;
  return c;
}

Outcome argmax_invariance() {
  Outcome out;
  auto c = har_config(scratch("zero_weight"));
  c.text_weight = 0.0;
  harness::cmd_gen(c);
  const auto r = harness::cmd_run(c);
  for (std::size_t s = 0; s < r.baseline.size(); ++s) {
    out.require(r.baseline[s].predictions.size() == 60, "test set size");
    out.require(r.baseline[s].predictions == r.fused[s].predictions, "predictions differ");
  }
  fs::remove_all(c.output);
  return out;
}

Outcome ablation_direction() {
  Outcome out;
  auto c = har_config(scratch("direction"));
  c.pooling = text::Pooling::cross_attention;
  c.text_weight = 0.1;
  c.seeds = {1, 2, 3, 4, 5};
  harness::cmd_gen(c);
  const auto r = harness::cmd_run(c);
  const auto* w = r.table.find("W", "mean");
  const auto* wt = r.table.find("W+T", "mean");
  out.require(w && wt, "mean rows missing");
  if (!out.ok) return out;
  const std::int64_t base = *w->values[0], fused = *wt->values[0];
  // 1 percentage point = 10000 report units
  out.require(fused >= base - 10000, "W+T below baseline - 1pp");
  out.detail = "W " + harness::format_units(base, 2) + " W+T " + harness::format_units(fused, 2) +
               " delta " + harness::format_units(fused - base, 2) + " pp";

  Rng rng(105);
  for (int i = 0; i < 100; ++i) {
    std::vector<model::LevelLoss> a(1 + rng.below(4)), b(a.size()), mix(a.size());
    const double s = rng.uniform(-3, 3), u = rng.uniform(-3, 3);
    double cls = 0.0, loc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = {rng.uniform(0, 2), rng.uniform(0, 1)};
      b[j] = {rng.uniform(0, 2), rng.uniform(0, 1)};
      mix[j] = {s * a[j].classification + u * b[j].classification,
                s * a[j].localization + u * b[j].localization};
      cls += a[j].classification;
      loc += a[j].localization;
    }
    const double la = model::tal_total_loss(a), lb = model::tal_total_loss(b);
    out.require(std::abs(model::tal_total_loss(mix) - (s * la + u * lb)) <= 1e-9 * (1 + std::abs(s * la + u * lb)),
                "loss weighting not linear");
    out.require(std::abs(la - (1.0 * cls + 1000.0 * loc)) <= 1e-12 * (1 + la), "loss weights not (1, 1000)");
  }
  fs::remove_all(c.output);
  return out;
}

Outcome determinism() {
  Outcome out;
  auto c = har_config(scratch("determinism"));
  c.seeds = {11};
  harness::cmd_gen(c);
  harness::cmd_run(c);
  const auto first = slurp(c.output / "report.csv");
  harness::cmd_run(c);
  out.require(!first.empty(), "empty report");
  out.require(slurp(c.output / "report.csv") == first, "report.csv differs");
  fs::remove_all(c.output);
  return out;
}

}  // namespace

int main() {
  struct Check {
    int id;
    const char* name;
    double budget_s;  // 0 = no runtime bound
    Outcome (*run)();
  };
  const Check checks[] = {
      {1, "physics round trips", 10.0, physics},
      {2, "multi-head self-attention correctness", 5.0, attention},
      {3, "gradient engine vs central differences", 30.0, gradients},
      {4, "metric oracle equivalence", 0.0, metrics},
      {5, "argmax invariance at zero text weight", 0.0, argmax_invariance},
      {6, "synthetic ablation direction and loss weighting", 600.0, ablation_direction},
      {7, "byte-identical reports", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& check : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (check.budget_s > 0 && secs >= check.budget_s) {
      o.require(false, "runtime budget exceeded");
      if (o.detail.empty()) o.detail = "runtime budget exceeded";
    }
    failures += o.ok ? 0 : 1;
    std::printf("%s %d %s (%.2f s)%s%s\n", o.ok ? "PASS" : "FAIL", check.id, check.name, secs,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
