#include "bodyshape/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "bodyshape/errors.hpp"
#include "bodyshape/sampling.hpp"
#include "parallel.hpp"

namespace bodyshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr std::uint64_t kStartStream = 0x7374617274730000ULL;

using Clock = std::chrono::steady_clock;

std::pair<double, double> true_bin(const Thresholds& t, Level level) {
  const auto l = static_cast<std::size_t>(level);
  const double lo = l == 0 ? -kInf : t.cuts[l - 1];
  const double hi = l == kNumLevels - 1 ? kInf : t.cuts[l];
  return {lo, hi};
}

// Optimization target: the clipped bin shrunk by a small margin so the
// optimum sits strictly inside the bin rather than on an edge.
struct Term {
  std::size_t slot;
  double weight;
  double lo;
  double hi;
  double inv_scale;
};

class Objective {
 public:
  Objective(const MeasurementProbe& probe, const std::vector<TargetInterval>& targets,
            double margin_fraction, double regularization)
      : probe_(probe), regularization_(regularization) {
    for (const auto& t : targets) {
      const double margin = std::min(margin_fraction * t.scale, 0.25 * (t.hi - t.lo));
      terms_.push_back({index(t.measurement), t.weight, t.lo + margin, t.hi - margin, 1.0 / t.scale});
    }
  }

  double operator()(const BetaVector& beta) const {
    const auto m = probe_.measure(beta);
    double f = regularization_ * beta.squaredNorm();
    for (const auto& t : terms_) {
      const double v = m.values[t.slot];
      const double d = (std::max(0.0, t.lo - v) + std::max(0.0, v - t.hi)) * t.inv_scale;
      f += t.weight * d * d;
    }
    if (!std::isfinite(f)) throw Error(ErrorKind::Numerical, "solver objective is not finite");
    return f;
  }

  BetaVector gradient(const BetaVector& beta, double h) const {
    BetaVector g;
    BetaVector x = beta;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(kNumBetas); ++i) {
      x[i] = beta[i] + h;
      const double fp = (*this)(x);
      x[i] = beta[i] - h;
      const double fm = (*this)(x);
      x[i] = beta[i];
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  }

 private:
  const MeasurementProbe& probe_;
  double regularization_;
  std::vector<Term> terms_;
};

BetaVector project(BetaVector b, double box) { return b.cwiseMax(-box).cwiseMin(box); }

struct Run {
  BetaVector beta;
  double objective = 0.0;
  std::vector<double> trace;
  int iterations = 0;
};

std::size_t count_satisfied(const MeasurementVector& m, const BinTable& bins,
                            const std::vector<TargetInterval>& targets) {
  std::size_t n = 0;
  for (const auto& t : targets)
    if (bins.classify(t.measurement, m[t.measurement]) == t.level) ++n;
  return n;
}

}  // namespace

void SolverOptions::validate() const {
  if (starts < 1) throw Error(ErrorKind::Config, "solver needs at least one start");
  if (max_iterations < 1) throw Error(ErrorKind::Config, "solver needs at least one iteration");
  if (!(tolerance > 0.0)) throw Error(ErrorKind::Config, "tolerance must be positive");
  if (!(fd_step > 0.0)) throw Error(ErrorKind::Config, "finite-difference step must be positive");
  if (!(regularization >= 0.0)) throw Error(ErrorKind::Config, "regularization must be >= 0");
  if (!(margin_fraction >= 0.0 && margin_fraction < 0.5))
    throw Error(ErrorKind::Config, "margin fraction must be in [0, 0.5)");
  if (!(clip_extension >= 0.0)) throw Error(ErrorKind::Config, "clip extension must be >= 0");
  if (!(box > 0.0 && box <= kBetaLimit))
    throw Error(ErrorKind::Config, "solver box must be in (0, 5]");
}

std::vector<TargetInterval> constraint_intervals(const BinTable& bins,
                                                 const ConstraintSet& constraints,
                                                 double clip_extension) {
  std::vector<TargetInterval> out;
  out.reserve(constraints.size());
  for (const auto& c : constraints.items) {
    const Thresholds& t = bins.thresholds(c.measurement);
    const auto [lo, hi] = true_bin(t, c.level);
    const double ext = clip_extension * (t.observed_max - t.observed_min);
    TargetInterval ti;
    ti.measurement = c.measurement;
    ti.level = c.level;
    ti.weight = c.weight;
    ti.true_lo = lo;
    ti.true_hi = hi;
    ti.lo = std::isfinite(lo) ? lo : std::min(t.observed_min - ext, t.cuts[0] - ext);
    ti.hi = std::isfinite(hi) ? hi : std::max(t.observed_max + ext, t.cuts[3] + ext);
    ti.scale = t.cuts[3] - t.cuts[0];
    out.push_back(ti);
  }
  return out;
}

SolveResult solve_shape(const BodyModelAsset& asset, const BinTable& bins,
                        const ConstraintSet& constraints, const SolverOptions& options) {
  options.validate();
  const auto started = Clock::now();
  const auto targets = constraint_intervals(bins, constraints, options.clip_extension);
  const MeasurementProbe probe(asset);
  const Objective f(probe, targets, options.margin_fraction, options.regularization);

  auto out_of_time = [&] {
    return options.time_budget && Clock::now() - started >= *options.time_budget;
  };

  std::vector<Run> runs(static_cast<std::size_t>(options.starts));
  std::vector<std::size_t> satisfied(runs.size(), 0);
  std::vector<char> ran(runs.size(), 0);
  std::atomic<bool> exhausted{false};

  detail::parallel_for(runs.size(), [&](std::size_t s) {
    if (s > 0 && out_of_time()) {
      exhausted = true;
      return;
    }
    Run& run = runs[s];
    run.beta = s == 0 ? BetaVector::Zero()
                      : project(sample_shape(mix_seed(options.seed, kStartStream), s).as_vector(),
                                options.box);
    run.objective = f(run.beta);
    run.trace.push_back(run.objective);
    double step = 1.0;
    for (int it = 0; it < options.max_iterations; ++it) {
      if (out_of_time()) {
        exhausted = true;
        break;
      }
      const BetaVector g = f.gradient(run.beta, options.fd_step);
      double gain = 0.0;
      step = std::min(step * 2.0, 64.0);
      for (int k = 0; k < 50; ++k, step *= 0.5) {
        const BetaVector candidate = project(run.beta - step * g, options.box);
        const BetaVector delta = candidate - run.beta;
        if (delta.squaredNorm() < 1e-24) break;
        const double fc = f(candidate);
        if (fc <= run.objective + kArmijo * g.dot(delta)) {
          gain = run.objective - fc;
          run.beta = candidate;
          run.objective = fc;
          break;
        }
      }
      ++run.iterations;
      run.trace.push_back(run.objective);
      if (gain <= options.tolerance) break;
    }
    satisfied[s] = count_satisfied(probe.measure(run.beta), bins, targets);
    ran[s] = 1;
  });

  SolveResult result;
  result.budget_exhausted = exhausted;
  std::optional<std::size_t> best;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    if (!ran[s]) continue;
    ++result.starts_run;
    if (!best || satisfied[s] > satisfied[*best] ||
        (satisfied[s] == satisfied[*best] && runs[s].objective < runs[*best].objective))
      best = s;
  }
  Run& winner = runs[*best];

  result.beta = ShapeParams(winner.beta);
  result.objective = winner.objective;
  result.trace = std::move(winner.trace);
  result.iterations = winner.iterations;
  result.measurements = measure_all(asset, evaluate_mesh(asset, result.beta));
  result.labels = assign_labels(bins, result.measurements);
  for (const auto& t : targets) {
    ConstraintOutcome o;
    o.measurement = t.measurement;
    o.target = t.level;
    o.value = result.measurements[t.measurement];
    o.achieved = bins.classify(t.measurement, o.value);
    o.lo = t.true_lo;
    o.hi = t.true_hi;
    o.satisfied = o.achieved == t.level;
    o.hinge = std::max(0.0, o.lo - o.value) + std::max(0.0, o.value - o.hi);
    if (o.satisfied) ++result.satisfied;
    result.constraints.push_back(o);
  }
  return result;
}

std::string solve_report_json(const SolveResult& r) {
  using nlohmann::ordered_json;
  auto finite_or_null = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json doc;
  std::vector<double> beta(r.beta.values().begin(), r.beta.values().end());
  doc["shape_params"] = beta;
  ordered_json meas = ordered_json::object();
  for (auto m : all_measurements()) meas[std::string(name(m))] = r.measurements[m];
  doc["measurements"] = meas;
  ordered_json labels = ordered_json::object();
  for (auto m : all_measurements()) labels[std::string(name(m))] = std::string(name(r.labels[m]));
  doc["labels"] = labels;
  ordered_json cons = ordered_json::array();
  for (const auto& c : r.constraints) {
    cons.push_back({{"measurement", std::string(name(c.measurement))},
                    {"target", std::string(name(c.target))},
                    {"achieved", std::string(name(c.achieved))},
                    {"value", c.value},
                    {"lo", finite_or_null(c.lo)},
                    {"hi", finite_or_null(c.hi)},
                    {"hinge", c.hinge},
                    {"satisfied", c.satisfied}});
  }
  doc["constraints"] = cons;
  doc["satisfied"] = r.satisfied;
  doc["total"] = r.constraints.size();
  doc["objective"] = r.objective;
  doc["iterations"] = r.iterations;
  doc["starts_run"] = r.starts_run;
  doc["budget_exhausted"] = r.budget_exhausted;
  return doc.dump(2);
}

}  // namespace bodyshape
