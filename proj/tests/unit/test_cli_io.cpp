#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "defeat/io.hpp"
#include "support.hpp"

using namespace defeat;
using namespace testing;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "defeat_unit";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST_CASE("empty custom configuration gives the defaults") {
  const RunConfig c = parse_config("");
  CHECK(c == RunConfig{});
  CHECK(c.theta == 0.3);
  CHECK(c.stabilization == "discard");
  CHECK(c.mode == "combined");
}

TEST_CASE("presets supply their defaults and settings override them") {
  const RunConfig c = parse_config("# comment line\npreset = test3\n");
  CHECK(c.theta == 0.5);
  CHECK(c.max_dofs == 6000);
  CHECK(c.x0 == -1.0);
  CHECK(c.kappa == "chessboard");
  CHECK_FALSE(c.features.empty());

  const RunConfig d = parse_config("preset=test1\ntheta=0.4", {{"max_dofs", "700"}});
  CHECK(d.theta == 0.4);
  CHECK(d.max_dofs == 700);
  CHECK(d.h0 == 7.07e-2);

  // the preset named in the overrides wins over the one in the text
  const RunConfig e = parse_config("preset=test1", {{"preset", "test2"}});
  CHECK(e.preset == "test2");
  CHECK(e.dirichlet_sides == std::vector<std::string>{"bottom", "top"});
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(parse_config("theta=1.5"), ConfigError);
  CHECK_THROWS_AS(parse_config("theta=0"), ConfigError);
  CHECK_THROWS_AS(parse_config("bogus=1"), ConfigError);
  CHECK_THROWS_AS(parse_config("theta=abc"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha1=-1"), ConfigError);
  CHECK_THROWS_AS(parse_config("stabilization=magic"), ConfigError);
  CHECK_THROWS_AS(parse_config("mode=p_only"), ConfigError);
  CHECK_THROWS_AS(parse_config("max_dofs=0"), ConfigError);
  CHECK_THROWS_AS(parse_config("discard_fraction=1"), ConfigError);
  CHECK_THROWS_AS(parse_config("preset=test9"), ConfigError);
  CHECK_THROWS_AS(parse_config("source=no_such_field"), ConfigError);
  CHECK_THROWS_AS(preset_config("test4"), ConfigError);
}

TEST_CASE("emitted configurations read back unchanged") {
  for (const std::string preset : {"custom", "test1", "test2", "test3"}) {
    RunConfig c = preset_config(preset);
    c.theta = 0.123456789;
    c.beta2 = 1e-7;
    c.snapshot_every = 3;
    const RunConfig back = parse_config(emit_config(c));
    CHECK(back == c);
  }
  for (const auto& key : config_keys()) CHECK(emit_config(RunConfig{}).find(key + "=") != std::string::npos);
}

TEST_CASE("feature tables") {
  const RunConfig two = preset_config("test2");
  const Box unit = unit_box();
  const auto f2 = load_features(two.features, unit);
  REQUIRE(f2.size() == 37);
  CHECK(f2[0].id == 1);
  CHECK(f2[0].gamma_zero.empty());
  const auto boundary = std::find_if(f2.begin(), f2.end(), [](const Feature& f) { return f.id == 28; });
  REQUIRE(boundary != f2.end());
  CHECK_FALSE(boundary->gamma_zero.empty());
  for (const auto& f : f2) CHECK(f.status == FeatureStatus::neglected);

  const RunConfig three = preset_config("test3");
  const auto f3 = load_features(three.features, Box{-1, -1, 1, 1});
  REQUIRE(f3.size() == 19);
  const auto centre = std::find_if(f3.begin(), f3.end(), [](const Feature& f) { return f.id == 5; });
  REQUIRE(centre != f3.end());
  // vertex average of a regular polygon is its centre
  Point2 mean{0, 0};
  for (const auto& v : centre->shape.vertices) mean = mean + (1.0 / static_cast<double>(centre->shape.size())) * v;
  CHECK(std::abs(mean.x) < 1e-14);
  CHECK(std::abs(mean.y) < 1e-14);

  const auto bad_header = temp_file("bad_header.csv", "id,eps,xc,yc,n,theta\n1,0.1,0.5,0.5,6,0\n");
  CHECK_THROWS_AS(load_features(bad_header.string(), unit), ConfigError);
  const auto overlap = temp_file("overlap.csv", "i,eps,xc,yc,n_e,theta_deg\n1,0.1,0.5,0.5,6,0\n2,0.1,0.55,0.5,6,0\n");
  CHECK_THROWS_AS(load_features(overlap.string(), unit), ConfigError);
  const auto good = temp_file("good.csv", "i,eps,xc,yc,n_e,theta_deg\n7,0.1,0.5,0.5,6,30\n");
  const auto g = load_features(good.string(), unit);
  REQUIRE(g.size() == 1);
  CHECK(g[0].id == 7);
  CHECK(g[0].shape.size() == 6);
}

TEST_CASE("problems built from presets") {
  const auto p1 = make_problem(preset_config("test1"));
  REQUIRE(p1.features.size() == 1);
  CHECK(polygon_area(p1.features[0].shape) == doctest::Approx(4.9443e-3).epsilon(1e-4));
  const auto p3 = make_problem(preset_config("test3"));
  CHECK(p3.features.size() == 19);
  CHECK(p3.domain.x0 == -1.0);
  const auto a = adaptive_config(preset_config("test3"));
  CHECK(a.theta == 0.5);
  CHECK(a.max_dofs == 6000);
  CHECK(a.flux.stabilization == Stabilization::discard);
  CHECK(parse_mode("h_only") == AdaptMode::h_only);
  CHECK(parse_stabilization("ghost") == Stabilization::ghost);
}

TEST_CASE("history table") {
  CHECK(history_csv({}) == "iter,N,eta_div,eta_g,eta_sigma,eta_num,eta_def,eta_total,n_included,error\n");
  HistoryRow r;
  r.iter = 2;
  r.N = 361;
  r.eta_sigma = 0.5;
  r.eta_num = 0.5;
  r.eta_total = 0.75;
  r.eta_def = 0.25;
  r.n_included = 1;
  const std::string one = history_csv({r});
  CHECK(one.substr(one.find('\n') + 1) == "2,361,0,0,0.5,0.5,0.25,0.75,1,\n");
  r.error = 0.1;
  const std::string two = history_csv({r});
  CHECK(two.substr(two.find('\n') + 1) == "2,361,0,0,0.5,0.5,0.25,0.75,1,0.1\n");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("snapshot and mesh dumps") {
  const auto p = make_problem(preset_config("test1"));
  const Mesh m = build_structured_mesh(p.domain, 7.07e-2, p.boundary);
  REQUIRE(m.num_triangles() == 800);
  const std::string svg = snapshot_svg(m, p);
  CHECK(count_of(svg, "class=\"tri\"") == 800);
  CHECK(count_of(svg, "class=\"feature-neglected\"") == 1);
  CHECK(count_of(svg, "class=\"feature-included\"") == 0);
  auto q = p;
  q.features[0].status = FeatureStatus::included;
  CHECK(count_of(snapshot_svg(m, q), "class=\"feature-included\"") == 1);

  const Mesh r = refine(m, std::vector<int>{0});
  std::istringstream in(mesh_text(r));
  std::string line;
  std::size_t nv = 0, nt = 0;
  int max_gen = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "v") {
      double x, y;
      CHECK(static_cast<bool>(ls >> x >> y));
      ++nv;
    } else {
      REQUIRE(kind == "t");
      int i, j, k, tag;
      CHECK(static_cast<bool>(ls >> i >> j >> k >> tag));
      max_gen = std::max(max_gen, tag);
      ++nt;
    }
  }
  CHECK(nv == r.num_vertices());
  CHECK(nt == r.num_triangles());
  CHECK(max_gen >= 1);
}
