#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "defeat/estimator.hpp"
#include "defeat/flux.hpp"
#include "defeat/mesh.hpp"
#include "defeat/primal.hpp"
#include "defeat/problem.hpp"

namespace defeat {

enum class MarkKind { feature, element };

struct MarkItem {
  MarkKind kind = MarkKind::element;
  int id = 0;
  double value = 0.0;  // squared indicator
};

/// Smallest set whose squared indicators sum to at least theta times the total.
/// Items are taken in decreasing order; ties prefer features, then lower ids.
std::vector<MarkItem> doerfler_mark(std::vector<MarkItem> items, double theta);

enum class AdaptMode { h_only, combined };

struct AdaptiveConfig {
  double theta = 0.3;
  EstimatorWeights weights;
  FluxOptions flux;
  AdaptMode mode = AdaptMode::combined;
  std::size_t max_dofs = 5000;
  int reference_levels = 0;  // > 0 enables the energy error column
  int max_iterations = 500;
  double assumption_ratio = 10.0;
};

struct HistoryRow {
  int iter = 0;
  std::size_t N = 0;
  double eta_div = 0.0;
  double eta_g = 0.0;
  double eta_sigma = 0.0;
  double eta_num = 0.0;
  double eta_def = 0.0;
  double eta_total = 0.0;
  std::size_t n_included = 0;
  std::optional<double> error;
  std::vector<int> features_marked;  // feature ids marked at this iteration
  std::size_t elements_marked = 0;
};

struct AdaptiveState {
  int iteration = 0;
  ProblemSpec spec;  // feature statuses track the included set
  std::shared_ptr<Mesh> mesh;         // mesh of the next solve
  std::shared_ptr<Mesh> solved_mesh;  // mesh carrying cls, u, flux and report
  ActiveClassification cls;
  DiscreteSolution u;
  GlobalFlux flux;
  EstimatorReport report;
  std::vector<HistoryRow> history;
  bool finished = false;
  std::string stop_reason;
  std::vector<std::string> warnings;
  int flat_steps = 0;
};

AdaptiveState initial_state(const ProblemSpec& spec, Mesh mesh);

/// Solve, estimate and record one history row, then mark and refine unless
/// a stopping rule fires. Returns false once the loop is finished.
bool step(AdaptiveState& state, const AdaptiveConfig& config);

using IterationCallback = std::function<void(const AdaptiveState&)>;

/// Iterates step() until a stopping rule fires. The callback runs after each
/// step; solved_mesh and the solution fields describe the last solve.
std::vector<HistoryRow> run(AdaptiveState& state, const AdaptiveConfig& config,
                            const IterationCallback& on_iteration = {});

/// Energy-norm distance to a reference solution computed on `levels` uniform
/// bisection rounds of the current mesh with every feature included.
double reference_error(const AdaptiveState& state, int levels);

/// Features violating the covering-ratio assumption: neglected features whose
/// largest covering element exceeds `ratio` times the smallest.
std::vector<int> covering_violations(const Mesh& mesh, const ProblemSpec& spec, double ratio);

}  // namespace defeat
