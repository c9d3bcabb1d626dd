#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bodyshape/bodymodel.hpp"
#include "bodyshape/labeling.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/sampling.hpp"
#include "bodyshape/textlang.hpp"

namespace bodyshape {

// Interval a measurement must land in for its target level. `lo`/`hi` are
// the optimization bounds (open extremes clipped near the calibration
// population); `true_lo`/`true_hi` are the label's real bin edges, which may
// be infinite.
struct TargetInterval {
  Measurement measurement;
  Level level;
  double weight = 1.0;
  double lo = 0.0;
  double hi = 0.0;
  double true_lo = 0.0;
  double true_hi = 0.0;
  double scale = 1.0;  // spread of the middle cuts, normalizes the hinge
};

struct SolverOptions {
  int starts = 4;               // origin plus seeded random starts
  int max_iterations = 200;     // per start
  double fd_step = 1e-4;
  double tolerance = 1e-12;     // stop once an iteration gains less than this
  double regularization = 1e-3; // weight of |beta|^2
  double margin_fraction = 0.02;
  double clip_extension = 0.10;
  double box = kSamplingBound;
  std::uint64_t seed = 0;
  std::optional<std::chrono::milliseconds> time_budget;

  void validate() const;
};

std::vector<TargetInterval> constraint_intervals(const BinTable& bins,
                                                 const ConstraintSet& constraints,
                                                 double clip_extension = 0.10);

struct ConstraintOutcome {
  Measurement measurement;
  Level target;
  Level achieved;
  double value = 0.0;
  double lo = 0.0;  // true bin edges
  double hi = 0.0;
  double hinge = 0.0;  // distance outside the true bin, zero when satisfied
  bool satisfied = false;
};

struct SolveResult {
  ShapeParams beta = ShapeParams::zeros();
  MeasurementVector measurements;
  LabelSet labels;
  std::vector<ConstraintOutcome> constraints;
  std::size_t satisfied = 0;
  double objective = 0.0;
  std::vector<double> trace;  // objective per iteration of the winning start
  int iterations = 0;
  int starts_run = 0;
  bool budget_exhausted = false;

  bool all_satisfied() const { return satisfied == constraints.size(); }
};

// Projected gradient descent on the squared hinge distance to the target
// intervals plus a small pull towards the mean shape. ErrorKind::Numerical
// if the objective stops being finite.
SolveResult solve_shape(const BodyModelAsset& asset, const BinTable& bins,
                        const ConstraintSet& constraints, const SolverOptions& options = {});

std::string solve_report_json(const SolveResult& result);

}  // namespace bodyshape
