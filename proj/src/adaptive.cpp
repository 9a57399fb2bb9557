#include "defeat/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace defeat {

std::vector<MarkItem> doerfler_mark(std::vector<MarkItem> items, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  if (items.empty()) return {};
  double total = 0.0;
  for (const auto& it : items) {
    if (!(it.value >= 0.0)) throw std::invalid_argument("indicators must be nonnegative");
    total += it.value;
  }
  std::sort(items.begin(), items.end(), [](const MarkItem& a, const MarkItem& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.kind != b.kind) return a.kind == MarkKind::feature;
    return a.id < b.id;
  });
  std::vector<MarkItem> out;
  if (!(total > 0.0)) return out;
  const double target = theta * total;
  double sum = 0.0;
  for (const auto& it : items) {
    if (it.value <= 0.0) break;
    out.push_back(it);
    sum += it.value;
    // a relative slack keeps theta = 1 from chasing rounding noise
    if (sum >= target * (1.0 - 1e-14)) break;
  }
  return out;
}

AdaptiveState initial_state(const ProblemSpec& spec, Mesh mesh) {
  spec.validate();
  AdaptiveState s;
  s.spec = spec;
  s.mesh = std::make_shared<Mesh>(std::move(mesh));
  return s;
}

double reference_error(const AdaptiveState& state, int levels) {
  if (levels < 1) throw std::invalid_argument("reference_error needs at least one level");
  std::vector<int> ancestor;
  const Mesh fine = refine_uniform(*state.solved_mesh, levels, &ancestor);
  ProblemSpec full = state.spec;
  for (auto& f : full.features) f.status = FeatureStatus::included;
  const auto cls = classify_active(fine, full.features);
  const auto u_ref = solve_primal(full, fine, cls);
  return energy_error(*state.solved_mesh, state.u, fine, cls, u_ref, ancestor, full);
}

std::vector<int> covering_violations(const Mesh& mesh, const ProblemSpec& spec, double ratio) {
  std::vector<int> out;
  for (const auto& f : spec.features) {
    if (f.included()) continue;
    const BoundingBox box = f.shape.bbox();
    double hmin = INFINITY, hmax = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto tri = mesh.triangle(static_cast<int>(t));
      BoundingBox tb;
      for (const auto& p : tri) tb.expand(p);
      if (!tb.overlaps(box)) continue;
      if (intersection_area(tri, f) <= 0.0) continue;
      const double h = mesh.diameter(static_cast<int>(t));
      hmin = std::min(hmin, h);
      hmax = std::max(hmax, h);
    }
    if (hmax > ratio * hmin) out.push_back(f.id);
  }
  return out;
}

namespace {

void solve_and_estimate(AdaptiveState& s, const AdaptiveConfig& config) {
  s.solved_mesh = s.mesh;
  const Mesh& mesh = *s.mesh;
  s.cls = classify_active(mesh, s.spec.features);
  s.u = solve_primal(s.spec, mesh, s.cls);
  s.flux = reconstruct_flux(mesh, s.cls, s.u, s.spec, config.flux);
  s.report = estimate(mesh, s.cls, s.u, s.flux, s.spec, config.weights);
}

}  // namespace

bool step(AdaptiveState& s, const AdaptiveConfig& config) {
  if (s.finished) return false;
  if (!(config.theta > 0.0 && config.theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  solve_and_estimate(s, config);

  HistoryRow row;
  row.iter = s.iteration;
  row.N = s.u.num_dofs;
  row.eta_div = s.report.eta_div_total;
  row.eta_g = s.report.eta_g_total;
  row.eta_sigma = s.report.eta_sigma_total;
  row.eta_num = s.report.eta_num;
  row.eta_def = s.report.eta_def;
  row.eta_total = s.report.eta_total;
  row.n_included = s.spec.num_included();
  if (config.reference_levels > 0) row.error = reference_error(s, config.reference_levels);

  if (!s.history.empty()) {
    const double prev = s.history.back().eta_total;
    const double rel = std::abs(row.eta_total - prev) / std::max(prev, 1e-300);
    s.flat_steps = rel < 1e-12 ? s.flat_steps + 1 : 0;
  }

  auto finish = [&](std::string why) {
    s.history.push_back(row);
    s.finished = true;
    s.stop_reason = std::move(why);
    return false;
  };
  if (row.N >= config.max_dofs) return finish("max_dofs");
  if (s.flat_steps >= 3) return finish("stagnation: estimator unchanged for 3 steps");
  if (s.iteration + 1 >= config.max_iterations) return finish("max_iterations");

  std::vector<MarkItem> items;
  items.reserve(s.cls.active.size() + s.spec.features.size());
  for (int t : s.cls.active) items.push_back({MarkKind::element, t, s.report.element_indicator_sq(t)});
  if (config.mode == AdaptMode::combined)
    for (std::size_t f = 0; f < s.spec.features.size(); ++f)
      if (!s.spec.features[f].included())
        items.push_back({MarkKind::feature, static_cast<int>(f), s.report.feature_indicator_sq(static_cast<int>(f))});
  const auto marked = doerfler_mark(std::move(items), config.theta);
  if (marked.empty())
    return finish(row.eta_total > 0.0 ? "stagnation: nothing marked with a positive estimator"
                                      : "estimator vanished");

  std::vector<int> elements;
  for (const auto& m : marked) {
    if (m.kind == MarkKind::element) {
      elements.push_back(m.id);
    } else {
      auto& f = s.spec.features[static_cast<std::size_t>(m.id)];
      row.features_marked.push_back(f.id);
      f.status = FeatureStatus::included;
    }
  }
  row.elements_marked = elements.size();
  s.history.push_back(row);
  if (!elements.empty()) s.mesh = std::make_shared<Mesh>(refine(*s.mesh, elements));
  for (int id : covering_violations(*s.mesh, s.spec, config.assumption_ratio)) {
    std::string msg = "iteration " + std::to_string(s.iteration) + ": neglected feature " +
                      std::to_string(id) + " is covered by elements of very different sizes";
    s.warnings.push_back(msg);
  }
  ++s.iteration;
  return true;
}

std::vector<HistoryRow> run(AdaptiveState& s, const AdaptiveConfig& config,
                            const IterationCallback& on_iteration) {
  if (s.history.empty() && config.max_dofs == 0) throw std::invalid_argument("max_dofs must be positive");
  while (true) {
    const bool more = step(s, config);
    if (on_iteration) on_iteration(s);
    if (!more) break;
  }
  return s.history;
}

}  // namespace defeat
