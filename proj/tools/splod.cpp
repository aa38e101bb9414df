// Command-line driver: convergence and localization studies, field
// export, coefficient generation, and one-shot solves.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "splod/errors.hpp"
#include "splod/experiment.hpp"
#include "splod/method.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::int64_t seed = -1;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--seed", flags.seed, "coefficient seed override");
  cmd->add_option("--threads", flags.threads, "worker threads override");
  cmd->add_option("--out", flags.out, "output path override");
}

splod::ExperimentConfig resolve_config(const CommonFlags& flags) {
  splod::ExperimentConfig config;
  if (!flags.config_path.empty()) {
    config = splod::load_config(flags.config_path);
  }
  splod::apply_env_overrides(config);
  if (flags.seed >= 0) {
    config.seed = std::uint64_t(flags.seed);
  }
  if (flags.threads > 0) {
    config.threads = flags.threads;
  }
  if (!flags.out.empty()) {
    config.out_dir = flags.out;
  }
  return config;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out) {
    throw splod::ArgumentError("cannot open output file " + path);
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilized high-order LOD solver for 2D elliptic problems "
               "with rough coefficients"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* conv = app.add_subcommand(
      "convergence", "error sweep over coarse levels; writes CSV");
  add_common(conv, flags);

  auto* decay = app.add_subcommand(
      "decay", "localization error vs patch order at fixed H; writes CSV");
  add_common(decay, flags);

  auto* expo = app.add_subcommand("export", "binary field dump");
  add_common(expo, flags);
  std::string what = "solution";
  int ti = 0, tj = 0, jj = 0;
  std::string expo_path = "field.bin";
  expo->add_option("--what", what, "basis | bubble | coefficient | solution");
  expo->add_option("--ti", ti, "element x index");
  expo->add_option("--tj", tj, "element y index");
  expo->add_option("--j", jj, "Legendre index within the element (0-based)");
  expo->add_option("--path", expo_path, "output file");

  auto* gen = app.add_subcommand("gen-coefficient",
                                 "generate and store a coefficient field");
  add_common(gen, flags);
  std::string family = "a1";
  int level = 5;
  std::string gen_path = "coefficient.bin";
  gen->add_option("--family", family, "a1 | a2");
  gen->add_option("--level", level, "coefficient grid level");
  gen->add_option("--path", gen_path, "output file");

  auto* solve = app.add_subcommand("solve", "single multiscale solve");
  add_common(solve, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e); // --help
    }
    app.exit(e);
    return 2;
  }

  try {
    if (conv->parsed()) {
      const auto config = resolve_config(flags);
      config.validate();
      auto csv = open_output(config.out_dir, "convergence.csv");
      splod::run_convergence(config, csv);
      std::cout << "wrote " << config.out_dir << "/convergence.csv\n";
    } else if (decay->parsed()) {
      const auto config = resolve_config(flags);
      auto csv = open_output(config.out_dir, "decay.csv");
      splod::run_decay(config, csv);
      std::cout << "wrote " << config.out_dir << "/decay.csv\n";
    } else if (expo->parsed()) {
      const auto config = resolve_config(flags);
      splod::run_export(config, what, {ti, tj}, jj, expo_path);
      std::cout << "wrote " << expo_path << "\n";
    } else if (gen->parsed()) {
      auto config = resolve_config(flags);
      config.coef_family = family;
      config.coef_level = level;
      splod::CoefficientField field;
      if (family == "a1") {
        field = splod::gen_a1(config.seed, level);
      } else if (family == "a2") {
        field = splod::gen_a2(config.seed, level);
      } else {
        throw splod::ArgumentError("unknown coefficient family '" + family +
                                   "'");
      }
      splod::save_coefficient(field, gen_path);
      const auto [lo, hi] =
          std::minmax_element(field.cells.begin(), field.cells.end());
      std::printf("family=%s level=%d seed=%llu alpha=%g beta=%g min=%.6g "
                  "max=%.6g -> %s\n",
                  family.c_str(), level,
                  static_cast<unsigned long long>(field.seed), field.alpha,
                  field.beta, *lo, *hi, gen_path.c_str());
    } else if (solve->parsed()) {
      const auto config = resolve_config(flags);
      config.validate();
      const int p = config.p_list.front();
      const int coarse_level = config.coarse_levels.front();
      const int ell = config.ell_rule ? -1 : config.ells.front();
      const splod::ResultRow row = splod::run_single_solve(
          config, p, coarse_level,
          ell < 0 ? splod::ell_rule(p, coarse_level) : ell);
      std::cout << splod::kConvergenceHeader << "\n"
                << splod::format_result_row(row) << "\n";
    }
  } catch (const splod::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const splod::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const splod::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
