#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gvoco/errors.hpp"
#include "gvoco/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitNumeric = 4;

int run_command(const gvoco::ExperimentConfig& cfg,
                const std::filesystem::path& dir) {
  for (std::uint64_t seed : cfg.seeds) {
    try {
      gvoco::WrittenRun w = gvoco::write_run(cfg, seed, dir);
      std::cout << "run " << gvoco::run_stem(cfg, seed);
      if (w.summary_json.contains("final_regret") &&
          !w.summary_json["final_regret"].is_null())
        std::cout << ": final_regret="
                  << w.summary_json["final_regret"].get<double>();
      if (w.summary_json.contains("duality_gap"))
        std::cout << ": duality_gap="
                  << w.summary_json["duality_gap"].get<double>();
      std::cout << " -> " << w.csv.string() << '\n';
    } catch (const gvoco::InvariantError& e) {
      gvoco::write_violation_report(cfg, seed, dir, e);
      std::cerr << "run " << gvoco::run_stem(cfg, seed) << ": " << e.what()
                << '\n';
      return kExitInvariant;
    }
  }
  return 0;
}

int sweep_command(const gvoco::ExperimentConfig& cfg, const std::string& axis,
                  const std::vector<double>& values,
                  const std::filesystem::path& dir) {
  const std::filesystem::path out =
      gvoco::run_sweep(cfg, gvoco::sweep_axis_from_token(axis), values, dir);
  std::cout << "sweep " << cfg.name << " -> " << out.string() << '\n';
  return 0;
}

int verify_command(const gvoco::ExperimentConfig& cfg, const std::string& kind_token,
                   const std::filesystem::path& dir) {
  const gvoco::BoundKind kind = kind_token.empty()
                                    ? gvoco::default_bound_kind(cfg)
                                    : gvoco::bound_kind_from_token(kind_token);
  bool all_hold = true;
  for (std::uint64_t seed : cfg.seeds) {
    gvoco::VerifyOutcome out = gvoco::verify_run(cfg, seed, kind, dir);
    std::cout << "verify " << gvoco::run_stem(cfg, seed) << ": "
              << gvoco::bound_kind_name(kind)
              << (out.report.holds ? " holds" : " FAILS")
              << " lhs=" << out.report.lhs << " rhs=" << out.report.rhs
              << " ratio=" << out.report.ratio << '\n';
    all_hold = all_hold && out.report.holds;
  }
  return all_hold ? 0 : 1;
}

int audit_command(const gvoco::ExperimentConfig& cfg,
                  const std::filesystem::path& dir) {
  bool all_ok = true;
  for (std::uint64_t seed : cfg.seeds) {
    gvoco::AuditOutcome out = gvoco::audit_run(cfg, seed, dir);
    std::cout << "audit " << gvoco::run_stem(cfg, seed) << ": "
              << (out.ok ? "ok" : "FAILED") << " -> " << out.path.string()
              << '\n';
    all_ok = all_ok && out.ok;
  }
  return all_ok ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-variation online learning: batch runs, sweeps, "
               "bound verification, artifact audits"};
  app.require_subcommand(1);

  std::string config_path, out_override, kind_token, axis_token;
  std::vector<double> values;
  std::int64_t seed_override = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required();
    sub->add_option("--seed", seed_override,
                    "run a single seed instead of the config list");
    sub->add_option("--out", out_override,
                    "output directory (overrides the config)");
  };

  CLI::App* run = app.add_subcommand("run", "execute the experiment per seed");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one axis over values");
  add_common(sweep);
  sweep->add_option("--axis", axis_token, "vt_level | sigma_level | horizon")
      ->required();
  sweep->add_option("--values", values, "comma-separated axis values")
      ->required()
      ->delimiter(',');
  CLI::App* verify =
      app.add_subcommand("verify", "check a regret bound against artifacts");
  add_common(verify);
  verify->add_option("--kind", kind_token,
                     "convex_variation | strongly_convex_variation | "
                     "clipped_explicit | meta_second_order | game_rate");
  CLI::App* audit =
      app.add_subcommand("audit", "replay deterministically and cross-check artifacts");
  add_common(audit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    gvoco::ExperimentConfig cfg = gvoco::load_experiment_config(config_path);
    if (seed_override >= 0)
      cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
    const std::filesystem::path dir =
        gvoco::resolve_output_dir(cfg.output, out_override);

    if (run->parsed()) return run_command(cfg, dir);
    if (sweep->parsed()) return sweep_command(cfg, axis_token, values, dir);
    if (verify->parsed()) return verify_command(cfg, kind_token, dir);
    return audit_command(cfg, dir);
  } catch (const gvoco::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gvoco::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const gvoco::NumericError& e) {
    std::cerr << "numerical diagnostic: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
