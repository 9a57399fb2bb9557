#include <doctest.h>

#include <algorithm>
#include <random>

#include "defeat/adaptive.hpp"
#include "defeat/io.hpp"
#include "support.hpp"

using namespace defeat;
using namespace testing;

namespace {

std::vector<MarkItem> elements(std::initializer_list<double> values) {
  std::vector<MarkItem> out;
  int id = 0;
  for (double v : values) out.push_back({MarkKind::element, id++, v});
  return out;
}

std::vector<double> marked_values(const std::vector<MarkItem>& m) {
  std::vector<double> v;
  for (const auto& it : m) v.push_back(it.value);
  return v;
}

AdaptiveState preset_state(const std::string& preset, std::size_t max_dofs, AdaptiveConfig& cfg,
                           const std::string& mode = "combined") {
  RunConfig rc = preset_config(preset);
  rc.max_dofs = max_dofs;
  rc.mode = mode;
  cfg = adaptive_config(rc);
  const ProblemSpec spec = make_problem(rc);
  return initial_state(spec, build_structured_mesh(spec.domain, rc.h0, spec.boundary));
}

}  // namespace

TEST_CASE("Doerfler marking on small lists") {
  CHECK(marked_values(doerfler_mark(elements({4, 3, 2, 1}), 0.5)) == std::vector<double>{4, 3});
  CHECK(marked_values(doerfler_mark(elements({1, 100, 1}), 0.5)) == std::vector<double>{100});
  CHECK(doerfler_mark(elements({1, 0, 2, 0}), 1.0).size() == 2);
  CHECK(doerfler_mark(elements({0, 0}), 0.5).empty());
  CHECK(doerfler_mark({}, 0.5).empty());
  CHECK_THROWS_AS(doerfler_mark(elements({1}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(doerfler_mark(elements({1}), 1.5), std::invalid_argument);
  CHECK_THROWS_AS(doerfler_mark(elements({1, -1}), 0.5), std::invalid_argument);
}

TEST_CASE("Doerfler ties prefer features, then lower ids") {
  std::vector<MarkItem> items{{MarkKind::element, 0, 1.0}, {MarkKind::feature, 5, 1.0}, {MarkKind::element, 1, 1.0},
                              {MarkKind::feature, 2, 1.0}};
  const auto m = doerfler_mark(items, 0.5);
  REQUIRE(m.size() == 2);
  CHECK(m[0].kind == MarkKind::feature);
  CHECK(m[0].id == 2);
  CHECK(m[1].kind == MarkKind::feature);
  CHECK(m[1].id == 5);
}

TEST_CASE("Doerfler marking is a minimal cardinality set") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    std::vector<MarkItem> items;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = u(rng) < 0.2 ? 0.0 : std::pow(u(rng), 3);
      items.push_back({i % 3 == 0 ? MarkKind::feature : MarkKind::element, i, v});
      total += v;
    }
    const double theta = 0.05 + 0.95 * u(rng);
    const auto m = doerfler_mark(items, theta);
    if (total == 0.0) {
      CHECK(m.empty());
      continue;
    }
    double sum = 0.0;
    for (const auto& it : m) sum += it.value;
    CHECK(sum >= theta * total * (1.0 - 1e-12));
    // brute force over all subsets for the smallest admissible size
    std::size_t best = items.size() + 1;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) s += items[static_cast<std::size_t>(i)].value;
      if (s >= theta * total * (1.0 - 1e-14)) best = std::min<std::size_t>(best, static_cast<std::size_t>(std::popcount(mask)));
    }
    CHECK(m.size() == best);
  }
}

TEST_CASE("zero data stops with a vanished estimator") {
  const auto p = plain_problem(constant(0.0));
  auto s = initial_state(p, build_structured_mesh(p.domain, 0.2, p.boundary));
  AdaptiveConfig cfg;
  int calls = 0;
  const auto h = run(s, cfg, [&](const AdaptiveState&) { ++calls; });
  CHECK(h.size() == 1);
  CHECK(calls == 1);
  CHECK(s.finished);
  CHECK(s.stop_reason == "estimator vanished");
  CHECK_FALSE(step(s, cfg));
}

TEST_CASE("the loop stops at the dof budget") {
  auto p = plain_problem([](Point2 q) { return std::exp(-10.0 * (q.x + q.y)); });
  auto s = initial_state(p, build_structured_mesh(p.domain, 0.2, p.boundary));
  AdaptiveConfig cfg;
  cfg.max_dofs = 300;
  const auto h = run(s, cfg);
  CHECK(s.stop_reason == "max_dofs");
  CHECK(h.back().N >= 300);
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    CHECK(h[i].N < 300);
    CHECK(h[i + 1].N >= h[i].N);
    CHECK(h[i].iter == static_cast<int>(i));
  }
  CHECK(s.solved_mesh.get() == s.mesh.get());
}

TEST_CASE("small feature of the first preset is included at once") {
  AdaptiveConfig cfg;
  auto s = preset_state("test1", 5000, cfg);
  REQUIRE(s.spec.num_included() == 0);
  REQUIRE(step(s, cfg));
  CHECK(s.history[0].features_marked == std::vector<int>{1});
  CHECK(s.spec.num_included() == 1);
  CHECK(s.history[0].n_included == 0);
  CHECK(s.history[0].eta_def > 0.0);
  REQUIRE(step(s, cfg));
  CHECK(s.history[1].n_included == 1);
  CHECK(s.history[1].eta_def == 0.0);
}

TEST_CASE("included features never leave the included set") {
  AdaptiveConfig cfg;
  auto s = preset_state("test2", 1500, cfg);
  std::vector<int> included;
  run(s, cfg, [&](const AdaptiveState& st) {
    std::vector<int> now;
    for (const auto& f : st.spec.features)
      if (f.included()) now.push_back(f.id);
    CHECK(std::includes(now.begin(), now.end(), included.begin(), included.end()));
    included = now;
  });
  const auto& h = s.history;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    CHECK(h[i + 1].n_included >= h[i].n_included);
    CHECK(h[i + 1].n_included == h[i].n_included + h[i].features_marked.size());
    CHECK(h[i + 1].N >= h[i].N);
  }
  CHECK(h.back().n_included > 0);
}

TEST_CASE("h-only mode never includes features") {
  AdaptiveConfig cfg;
  auto s = preset_state("test2", 1200, cfg, "h_only");
  run(s, cfg);
  for (const auto& r : s.history) {
    CHECK(r.n_included == 0);
    CHECK(r.features_marked.empty());
  }
  CHECK(s.history.back().eta_def > 0.0);
}

TEST_CASE("covering-ratio violations") {
  const auto b = unit_box();
  ProblemSpec p = plain_problem(constant(0.0));
  p.features.push_back(make_feature(4, square(0.5, 0.5, 0.2), b));
  Mesh m = build_structured_mesh(b, 0.1, p.boundary);
  CHECK(covering_violations(m, p, 10.0).empty());
  for (int round = 0; round < 8; ++round) {
    std::vector<int> marked;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
      if (point_in_polygon({0.5, 0.5}, Polygon{{m.triangle(static_cast<int>(t))[0], m.triangle(static_cast<int>(t))[1],
                                                 m.triangle(static_cast<int>(t))[2]}}) != Location::outside)
        marked.push_back(static_cast<int>(t));
    m = refine(m, marked);
  }
  CHECK(covering_violations(m, p, 10.0) == std::vector<int>{4});
  CHECK(covering_violations(m, p, 1e6).empty());
  p.features[0].status = FeatureStatus::included;
  CHECK(covering_violations(m, p, 10.0).empty());
}

TEST_CASE("reference error needs a level") {
  const auto p = plain_problem([](Point2 q) { return q.x * q.y; });
  auto s = initial_state(p, build_structured_mesh(p.domain, 0.3, p.boundary));
  AdaptiveConfig cfg;
  cfg.reference_levels = 1;
  step(s, cfg);
  REQUIRE(s.history[0].error.has_value());
  CHECK(*s.history[0].error > 0.0);
  CHECK_THROWS_AS(reference_error(s, 0), std::invalid_argument);
}
