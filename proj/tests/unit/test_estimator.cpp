#include <doctest.h>

#include <numbers>

#include "defeat/estimator.hpp"
#include "support.hpp"

using namespace defeat;
using namespace testing;

namespace {

struct Pipeline {
  Mesh mesh;
  ActiveClassification cls;
  DiscreteSolution u;
  GlobalFlux flux;
  EstimatorReport report;
};

Pipeline run(const ProblemSpec& p, double h, Stabilization st = Stabilization::discard) {
  Pipeline r;
  r.mesh = build_structured_mesh(p.domain, h, p.boundary);
  r.cls = classify_active(r.mesh, p.features);
  r.u = solve_primal(p, r.mesh, r.cls);
  FluxOptions opt;
  opt.stabilization = st;
  r.flux = reconstruct_flux(r.mesh, r.cls, r.u, p, opt);
  r.report = estimate(r.mesh, r.cls, r.u, r.flux, p);
  return r;
}

ProblemSpec small_feature_problem(double scale, FeatureStatus status) {
  auto p = plain_problem([scale](Point2 q) { return scale * std::exp(-8.0 * (q.x + q.y)); }, {"left", "bottom"});
  p.source = [scale](Point2 q) { return scale * (1.0 + q.x); };
  p.feature_flux = [scale](Point2 q) { return scale * q.y; };
  p.features.push_back(make_feature(1, regular_polygon({0.55, 0.45}, 0.09, 9, 7.0), p.domain, status));
  return p;
}

}  // namespace

TEST_CASE("constant of the boundary weight") {
  const double zeta = zeta_constant();
  CHECK(zeta == doctest::Approx(0.5671432904097838).epsilon(1e-15));
  CHECK(zeta == doctest::Approx(-std::log(zeta)).epsilon(1e-15));
  CHECK(c_omega(1.0) == doctest::Approx(0.753089).epsilon(1e-6));
  CHECK(c_omega(std::exp(-4.0)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(c_omega(std::exp(-zeta)) == doctest::Approx(std::sqrt(zeta)).epsilon(1e-14));
  CHECK(c_omega(10.0) == doctest::Approx(std::sqrt(zeta)).epsilon(1e-14));
  CHECK_THROWS_AS(c_omega(0.0), std::invalid_argument);
  CHECK_THROWS_AS(c_omega(-1.0), std::invalid_argument);
}

TEST_CASE("feature indicator with a vanishing flux") {
  // zero data in the domain: u = 0 and the reconstructed flux is 0
  auto p = plain_problem(constant(0.0));
  p.features.push_back(make_feature(1, regular_polygon({0.5, 0.5}, 0.1, 12, 0.0), p.domain));
  const auto r = run(p, 0.1);
  REQUIRE(r.flux.coeffs.cwiseAbs().maxCoeff() == 0.0);
  const Feature& f = p.features[0];
  const double len = f.gamma_tilde_length();
  const double c = c_omega(len);

  auto with_g = p;
  with_g.feature_flux = constant(1.0);
  const auto b = feature_boundary_data(f, r.flux, r.cls, with_g);
  CHECK(b.length == doctest::Approx(len));
  CHECK(b.mean_mismatch == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(b.oscillation_sq < 1e-26);
  CHECK(eta_feature(f, r.flux, r.cls, with_g) == doctest::Approx(c * len).epsilon(1e-13));

  // a source inside the feature shifts the data mean by -|F| f / |gamma~|
  auto with_f = with_g;
  with_f.source = constant(2.0);
  const double expect = c * std::abs(len - 2.0 * polygon_area(f.shape));
  CHECK(eta_feature(f, r.flux, r.cls, with_f) == doctest::Approx(expect).epsilon(1e-12));

  // a non-constant datum adds its oscillation
  auto osc = p;
  osc.feature_flux = [](Point2 q) { return q.x - 0.5; };
  const auto bo = feature_boundary_data(f, r.flux, r.cls, osc);
  CHECK(std::abs(bo.data_mean) < 1e-14);
  CHECK(bo.oscillation_sq > 0.0);
  CHECK(eta_feature(f, r.flux, r.cls, osc) == doctest::Approx(std::sqrt(len * bo.oscillation_sq)).epsilon(1e-13));
}

TEST_CASE("boundary feature data includes the outer boundary part") {
  auto p = plain_problem(constant(0.0), {"left"});
  p.features.push_back(make_feature(1, regular_polygon({0.5, 0.0}, 0.1, 8, 22.5), p.domain));
  p.feature_flux = constant(1.0);
  p.feature_zero = constant(3.0);
  const auto r = run(p, 0.1);
  const Feature& f = p.features[0];
  REQUIRE_FALSE(f.gamma_zero.empty());
  double zero_len = 0.0;
  for (const auto& s : f.gamma_zero) zero_len += s.length();
  const auto b = feature_boundary_data(f, r.flux, r.cls, p);
  CHECK(b.data_mean == doctest::Approx((f.gamma_tilde_length() - 3.0 * zero_len) / f.gamma_tilde_length()).epsilon(1e-12));
}

TEST_CASE("included features have no defeaturing indicator") {
  const auto p = small_feature_problem(1.0, FeatureStatus::included);
  const auto r = run(p, 0.1);
  CHECK_THROWS_AS(eta_feature(p.features[0], r.flux, r.cls, p), std::invalid_argument);
  CHECK(r.report.eta_F[0] == 0.0);
  CHECK(r.report.eta_def == 0.0);
}

TEST_CASE("uncut elements carry only the flux indicator") {
  const auto p = small_feature_problem(1.0, FeatureStatus::included);
  const auto r = run(p, 0.1);
  int uncut = 0, cut = 0;
  for (int t : r.cls.active) {
    const auto e = eta_element(t, r.flux, r.u, p, r.cls);
    if (r.cls.is_cut(t)) {
      ++cut;
      CHECK(e.g >= 0.0);
    } else {
      ++uncut;
      CHECK(e.div == 0.0);
      CHECK(e.g == 0.0);
    }
    CHECK(e.sigma > 0.0);
  }
  CHECK(cut > 0);
  CHECK(uncut > 0);
}

TEST_CASE("exact affine flux gives vanishing numerical indicators") {
  const double x0 = 0.34, x1 = 0.6;
  auto p = plain_problem([](Point2 q) { return q.x; }, {"left"}, [](Point2 q) { return q.x > 1.0 - 1e-12 ? 1.0 : 0.0; });
  p.feature_flux = [=](Point2 q) {
    if (std::abs(q.x - x0) < 1e-12) return 1.0;
    if (std::abs(q.x - x1) < 1e-12) return -1.0;
    return 0.0;
  };
  p.features.push_back(make_feature(1, square(0.47, 0.53, 0.13), p.domain, FeatureStatus::included));
  const auto r = run(p, 0.1, Stabilization::none);
  CHECK(r.report.eta_num < 1e-9);
}

TEST_CASE("totals combine indicators with the weights") {
  const auto z = totals({0, 0}, {0, 0}, {0, 0}, {});
  CHECK(z.eta_total == 0.0);
  CHECK(z.eta_num == 0.0);

  EstimatorWeights w;
  w.alpha1 = 4.0;
  w.alpha2 = 9.0;
  w.alpha3 = 16.0;
  const auto r = totals({1.0, 0.0}, {0.0, 2.0}, {3.0, 4.0}, {0.5}, w);
  CHECK(r.eta_div_total == doctest::Approx(2.0));
  CHECK(r.eta_g_total == doctest::Approx(6.0));
  CHECK(r.eta_sigma_total == doctest::Approx(5.0));
  CHECK(r.eta_num == doctest::Approx(13.0));
  CHECK(r.eta_def == doctest::Approx(2.0));
  CHECK(r.eta_total == doctest::Approx(15.0));
  CHECK(r.element_indicator_sq(0) == doctest::Approx(4.0 + 9.0));
  CHECK(r.element_indicator_sq(1) == doctest::Approx(36.0 + 16.0));
  CHECK(r.feature_indicator_sq(0) == doctest::Approx(4.0));

  EstimatorWeights bad;
  bad.alpha3 = -1.0;
  CHECK_THROWS_AS(totals({}, {}, {}, {1.0}, bad), std::invalid_argument);
  CHECK_THROWS_AS(totals({1.0}, {}, {1.0}, {}), std::invalid_argument);
}

TEST_CASE("indicators scale linearly with the data") {
  const auto a = run(small_feature_problem(1.0, FeatureStatus::neglected), 0.1);
  const auto b = run(small_feature_problem(3.0, FeatureStatus::neglected), 0.1);
  CHECK(a.report.eta_def > 0.0);
  CHECK(b.report.eta_def == doctest::Approx(3.0 * a.report.eta_def).epsilon(1e-10));
  CHECK(b.report.eta_sigma_total == doctest::Approx(3.0 * a.report.eta_sigma_total).epsilon(1e-10));
  CHECK(b.report.eta_total == doctest::Approx(3.0 * a.report.eta_total).epsilon(1e-10));
}

TEST_CASE("unit coefficient matches an unset coefficient") {
  auto p = small_feature_problem(1.0, FeatureStatus::included);
  const auto a = run(p, 0.1);
  p.kappa = nullptr;
  const auto b = run(p, 0.1);
  CHECK(a.report.eta_total == b.report.eta_total);
  CHECK(a.report.eta_div == b.report.eta_div);
}

TEST_CASE("flux indicator carries the inverse coefficient weight") {
  // a constant coefficient k rescales the flux by k and eta_sigma by sqrt(k)
  auto p = small_feature_problem(1.0, FeatureStatus::included);
  const auto a = run(p, 0.1);
  p.kappa = constant(25.0);
  p.feature_flux = [](Point2 q) { return 25.0 * q.y; };
  p.source = [](Point2 q) { return 25.0 * (1.0 + q.x); };
  const auto b = run(p, 0.1);
  CHECK(b.report.eta_sigma_total == doctest::Approx(5.0 * a.report.eta_sigma_total).epsilon(1e-9));
  CHECK(b.report.eta_div_total == doctest::Approx(25.0 * a.report.eta_div_total).epsilon(1e-9));
}
