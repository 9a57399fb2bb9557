// Command-line driver for the adaptive defeaturing loop.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "defeat/adaptive.hpp"
#include "defeat/io.hpp"
#include "defeat/linalg.hpp"
#include "defeat/parallel.hpp"

int main(int argc, char** argv) {
  using namespace defeat;
  CLI::App app{"Adaptive CutFEM solver with geometric refinement of negative features"};

  std::string config_path;
  defeat::Settings flags;
  app.add_option("--config", config_path, "key=value configuration file");
  auto flag = [&](const char* name, const char* key, const char* help) {
    app.add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };
  flag("--preset", "preset", "test1 | test2 | test3 | custom");
  flag("--theta", "theta", "Doerfler fraction in (0,1]");
  flag("--alpha1", "alpha1", "weight of the divergence residual");
  flag("--alpha2", "alpha2", "weight of the feature-boundary residual");
  flag("--alpha3", "alpha3", "weight of the defeaturing term");
  flag("--beta1", "beta1", "ghost penalty on the flux");
  flag("--beta2", "beta2", "ghost penalty on the multiplier");
  flag("--stabilization", "stabilization", "none | ghost | discard");
  flag("--discard-fraction", "discard_fraction", "active fraction below which cut elements and patches are dropped");
  flag("--mode", "mode", "h_only | combined");
  flag("--max-dofs", "max_dofs", "stop once this many unknowns are reached");
  flag("--h0", "h0", "initial mesh size");
  flag("--features", "features", "feature table (CSV)");
  flag("--out", "out", "output directory");
  flag("--reference-levels", "reference_levels", "uniform refinements of the reference solve (0 = none)");
  flag("--snapshot-every", "snapshot_every", "write an SVG every n iterations (0 = first and last only)");
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware)");
  bool dump = false;
  app.add_flag("--dump", dump, "also write the final mesh and flux coefficients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (threads > 0) set_worker_count(static_cast<unsigned>(threads));

  RunConfig config;
  ProblemSpec spec;
  AdaptiveConfig acfg;
  AdaptiveState state;
  try {
    config = config_path.empty() ? parse_config("", flags) : parse_config_file(config_path, flags);
    spec = make_problem(config);
    acfg = adaptive_config(config);
    Mesh mesh = build_structured_mesh(spec.domain, config.h0, spec.boundary);
    state = initial_state(spec, std::move(mesh));
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }

  const std::filesystem::path out(config.out);
  try {
    write_text((out / "config.txt").string(), emit_config(config));
    std::size_t warned = 0;
    run(state, acfg, [&](const AdaptiveState& s) {
      const auto& r = s.history.back();
      if (r.iter == 0 && r.N >= config.max_dofs)
        std::cerr << "warning: the initial mesh already has " << r.N << " unknowns (max_dofs = " << config.max_dofs << ")\n";
      std::cout << "iter " << r.iter << "  N=" << r.N << "  eta=" << format_double(r.eta_total)
                << "  eta_num=" << format_double(r.eta_num) << "  eta_def=" << format_double(r.eta_def)
                << "  included=" << r.n_included;
      if (r.error) std::cout << "  error=" << format_double(*r.error);
      std::cout << '\n';
      for (; warned < s.warnings.size(); ++warned) std::cerr << "warning: " << s.warnings[warned] << '\n';
      const bool snap = r.iter == 0 || s.finished ||
                        (config.snapshot_every > 0 && r.iter % config.snapshot_every == 0);
      if (snap) emit_snapshot(s, (out / ("mesh_" + std::to_string(r.iter) + ".svg")).string());
    });
    emit_history(state.history, (out / "history.csv").string());
    if (dump) {
      write_text((out / "mesh.txt").string(), mesh_text(*state.solved_mesh));
      write_text((out / "flux.txt").string(), flux_text(state.flux, state.cls));
    }
    std::cout << "stopped: " << state.stop_reason << '\n';
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
