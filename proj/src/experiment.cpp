#include "splod/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "splod/errors.hpp"
#include "splod/fem.hpp"
#include "splod/fielddump.hpp"
#include "splod/method.hpp"

namespace splod {

const char* kConvergenceHeader =
    "method,p,ell,H,fine_h,err_energy_rel,err_l2_rel,coarse_dofs,"
    "corrector_solves,wall_ms,seed";
const char* kDecayHeader = "p,ell,err_energy_rel";

namespace {

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ArgumentError("config: bad integer '" + item + "' for " + key);
    }
  }
  if (out.empty()) {
    throw ArgumentError("config: empty list for " + key);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

void ExperimentConfig::validate() const {
  if (method != "splod" && method != "plod" && method != "prototype" &&
      method != "fem") {
    throw ArgumentError("config: unknown method '" + method + "'");
  }
  if (p_list.empty()) {
    throw ArgumentError("config: empty p list");
  }
  for (int p : p_list) {
    if (p < 0 || p > 6) {
      throw ArgumentError("config: p out of range 0..6");
    }
  }
  if (coarse_levels.empty()) {
    throw ArgumentError("config: empty coarse level list");
  }
  const int max_coarse =
      *std::max_element(coarse_levels.begin(), coarse_levels.end());
  const int min_coarse =
      *std::min_element(coarse_levels.begin(), coarse_levels.end());
  if (min_coarse < 1) {
    throw ArgumentError("config: coarse levels must be >= 1");
  }
  if (fine_level < max_coarse + 2) {
    throw ArgumentError(
        "config: fine level must exceed every coarse level by at least 2");
  }
  if (coef_family != "a1" && coef_family != "a2" && coef_family != "file") {
    throw ArgumentError("config: unknown coefficient family '" + coef_family +
                        "'");
  }
  if (coef_family == "file" && coef_file.empty()) {
    throw ArgumentError("config: coef_family=file needs coef_file");
  }
  if (coef_family != "file" && coef_level > fine_level) {
    throw ArgumentError("config: coefficient level above fine level");
  }
  if (rhs != "default" && rhs != "one" && rhs != "sine") {
    throw ArgumentError("config: unknown rhs selector '" + rhs + "'");
  }
  if (!ell_rule) {
    if (ells.empty()) {
      throw ArgumentError("config: need ell list or ell=rule");
    }
    for (int ell : ells) {
      if (ell < 1) {
        throw ArgumentError("config: ell must be positive");
      }
    }
  }
  if (threads < 1 || threads > 256) {
    throw ArgumentError("config: threads out of range 1..256");
  }
}

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
  if (key == "method") {
    config.method = value;
  } else if (key == "p") {
    config.p_list = parse_int_list(value, key);
  } else if (key == "ell") {
    if (value == "rule") {
      config.ell_rule = true;
      config.ells.clear();
    } else {
      config.ell_rule = false;
      config.ells = parse_int_list(value, key);
    }
  } else if (key == "coarse_levels") {
    config.coarse_levels = parse_int_list(value, key);
  } else if (key == "fine_level") {
    config.fine_level = parse_int_list(value, key).at(0);
  } else if (key == "coef_family") {
    config.coef_family = value;
  } else if (key == "coef_level") {
    config.coef_level = parse_int_list(value, key).at(0);
  } else if (key == "coef_file") {
    config.coef_file = value;
  } else if (key == "seed") {
    try {
      config.seed = std::stoull(value);
    } catch (const std::exception&) {
      throw ArgumentError("config: bad seed '" + value + "'");
    }
  } else if (key == "rhs") {
    config.rhs = value;
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else if (key == "threads") {
    config.threads = parse_int_list(value, key).at(0);
  } else {
    throw ArgumentError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ArgumentError("config: cannot open '" + path + "'");
  }
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("config: line " + std::to_string(lineno) +
                          " is not key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    apply_override(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void apply_env_overrides(ExperimentConfig& config) {
  static const char* keys[] = {"method",      "p",         "ell",
                               "coarse_levels", "fine_level", "coef_family",
                               "coef_level",  "coef_file", "seed",
                               "rhs",         "out_dir",   "threads"};
  for (const char* key : keys) {
    std::string env = "SPLOD_";
    for (const char* c = key; *c; ++c) {
      env += char(std::toupper(*c));
    }
    if (const char* value = std::getenv(env.c_str())) {
      apply_override(config, key, value);
    }
  }
}

double rhs_value(const std::string& selector, double x, double y) {
  if (selector == "default") {
    return (x + std::cos(3.0 * M_PI * x)) * y * y * y;
  }
  if (selector == "one") {
    return 1.0;
  }
  if (selector == "sine") {
    return std::sin(M_PI * x) * std::sin(M_PI * y);
  }
  throw ArgumentError("unknown rhs selector '" + selector + "'");
}

CoefficientField make_coefficient(const ExperimentConfig& config) {
  if (config.coef_family == "a1") {
    return gen_a1(config.seed, config.coef_level);
  }
  if (config.coef_family == "a2") {
    return gen_a2(config.seed, config.coef_level);
  }
  return load_coefficient(config.coef_file);
}

std::string format_result_row(const ResultRow& row) {
  std::string out = row.method;
  out += ',' + std::to_string(row.p);
  out += ',' + std::to_string(row.ell);
  out += ',' + fmt(row.H);
  out += ',' + fmt(row.fine_h);
  out += ',' + fmt(row.err_energy_rel);
  out += ',' + fmt(row.err_l2_rel);
  out += ',' + std::to_string(row.coarse_dofs);
  out += ',' + std::to_string(row.corrector_solves);
  out += ',' + fmt(row.wall_ms);
  out += ',' + std::to_string(row.seed);
  return out;
}

namespace {

struct RunContext {
  CoefficientField A;
  CartesianMesh fine;
  FineSystem system;
  FineField f;
  FineField u_ref;

  static RunContext create(const ExperimentConfig& config) {
    CoefficientField A = make_coefficient(config);
    CartesianMesh fine = build_mesh(config.fine_level);
    if (A.level > fine.level()) {
      throw ArgumentError("coefficient level above fine level");
    }
    FineSystem system = FineSystem::create(fine, A);
    FineField f = interpolate(fine, [&](double x, double y) {
      return rhs_value(config.rhs, x, y);
    });
    FineField u_ref = reference_solve(A, f, fine);
    return {std::move(A), fine, std::move(system), std::move(f),
            std::move(u_ref)};
  }
};

MultiscaleSolution solve_with_method(const ExperimentConfig& config,
                                     const RunContext& ctx,
                                     const Spaces& spaces, int ell) {
  MultiscaleBasis basis;
  if (config.method == "splod") {
    basis = build_basis_splod(spaces, ctx.A, ell, config.threads);
  } else if (config.method == "plod") {
    basis = build_basis_plod(spaces, ctx.A, ell, config.threads);
  } else if (config.method == "prototype") {
    basis = build_basis_prototype(spaces, ctx.A, config.threads);
  } else {
    throw ArgumentError("method '" + config.method +
                        "' has no multiscale basis");
  }
  return coarse_solve(spaces, ctx.system, basis, ctx.f);
}

ResultRow make_row(const ExperimentConfig& config, const RunContext& ctx,
                   int p, int coarse_level, int ell) {
  ResultRow row;
  row.method = config.method;
  row.p = p;
  row.ell = ell;
  row.H = std::pow(2.0, -coarse_level);
  row.fine_h = ctx.fine.h();
  row.coarse_dofs = (std::int64_t(1) << (2 * coarse_level)) *
                    std::int64_t((p + 1) * (p + 1));
  row.seed = config.seed;
  if (config.method == "fem") {
    // Coarse Q1 Galerkin on the unresolved mesh, for comparison runs.
    const CartesianMesh coarse = build_mesh(coarse_level);
    const auto t0 = std::chrono::steady_clock::now();
    FineField f_coarse = interpolate(coarse, [&](double x, double y) {
      return rhs_value(config.rhs, x, y);
    });
    // Coefficient may be finer than the coarse mesh; use cell means.
    CoefficientField averaged;
    averaged.level = std::min(ctx.A.level, coarse_level);
    const int n = 1 << averaged.level;
    averaged.cells.assign(std::size_t(n) * n, 0.0);
    const int r = ctx.A.cells_per_side() / n;
    for (int j = 0; j < ctx.A.cells_per_side(); ++j) {
      for (int i = 0; i < ctx.A.cells_per_side(); ++i) {
        averaged.cells[std::size_t(j / r) * n + i / r] +=
            ctx.A.value({i, j}) / double(r) / double(r);
      }
    }
    averaged.alpha = *std::min_element(averaged.cells.begin(),
                                       averaged.cells.end());
    averaged.beta = *std::max_element(averaged.cells.begin(),
                                      averaged.cells.end());
    const FineField u_coarse = reference_solve(averaged, f_coarse, coarse);
    const auto t1 = std::chrono::steady_clock::now();
    // Prolongate to the fine mesh for the error.
    const int gap = ctx.fine.level() - coarse_level;
    FineField u_up = zero_field(ctx.fine);
    const int mm = 1 << gap;
    const int ncs = coarse.nodes_per_side();
    for (int gy = 0; gy < ctx.fine.nodes_per_side(); ++gy) {
      for (int gx = 0; gx < ctx.fine.nodes_per_side(); ++gx) {
        const int ci = std::min(gx / mm, ncs - 2);
        const int cj = std::min(gy / mm, ncs - 2);
        const double xi = double(gx) / mm - ci;
        const double eta = double(gy) / mm - cj;
        const auto v = [&](int a, int b) {
          return u_coarse.values[coarse.node_index(ci + a, cj + b)];
        };
        u_up.values[ctx.fine.node_index(gx, gy)] =
            (1 - xi) * (1 - eta) * v(0, 0) + xi * (1 - eta) * v(1, 0) +
            (1 - xi) * eta * v(0, 1) + xi * eta * v(1, 1);
      }
    }
    const ErrorRecord rec = evaluate_errors(u_up, ctx.u_ref, ctx.system);
    row.err_energy_rel = rec.energy_rel;
    row.err_l2_rel = rec.l2_rel;
    row.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    return row;
  }
  const Spaces spaces = Spaces::create(coarse_level, config.fine_level, p);
  const auto t0 = std::chrono::steady_clock::now();
  const MultiscaleSolution sol = solve_with_method(config, ctx, spaces, ell);
  const auto t1 = std::chrono::steady_clock::now();
  const ErrorRecord rec = evaluate_errors(sol.u, ctx.u_ref, ctx.system);
  row.err_energy_rel = rec.energy_rel;
  row.err_l2_rel = rec.l2_rel;
  row.corrector_solves = sol.corrector_solves;
  row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

} // namespace

ResultRow run_single_solve(const ExperimentConfig& config, int p,
                           int coarse_level, int ell,
                           FineField* solution_out) {
  config.validate();
  const RunContext ctx = RunContext::create(config);
  if (solution_out && config.method != "fem") {
    const Spaces spaces = Spaces::create(coarse_level, config.fine_level, p);
    const MultiscaleSolution sol = solve_with_method(config, ctx, spaces, ell);
    const ErrorRecord rec = evaluate_errors(sol.u, ctx.u_ref, ctx.system);
    ResultRow row;
    row.method = config.method;
    row.p = p;
    row.ell = ell;
    row.H = std::pow(2.0, -coarse_level);
    row.fine_h = ctx.fine.h();
    row.err_energy_rel = rec.energy_rel;
    row.err_l2_rel = rec.l2_rel;
    row.coarse_dofs = (std::int64_t(1) << (2 * coarse_level)) *
                      std::int64_t((p + 1) * (p + 1));
    row.corrector_solves = sol.corrector_solves;
    row.seed = config.seed;
    *solution_out = sol.u;
    return row;
  }
  return make_row(config, ctx, p, coarse_level, ell);
}

void run_convergence(const ExperimentConfig& config, std::ostream& csv) {
  config.validate();
  csv << kConvergenceHeader << '\n';
  const RunContext ctx = RunContext::create(config);
  for (int p : config.p_list) {
    for (int coarse_level : config.coarse_levels) {
      std::vector<int> ells = config.ells;
      if (config.ell_rule) {
        ells = {ell_rule(p, coarse_level)};
      }
      for (int ell : ells) {
        try {
          const ResultRow row = make_row(config, ctx, p, coarse_level, ell);
          csv << format_result_row(row) << '\n';
          csv.flush();
        } catch (const std::exception& e) {
          ResultRow failure;
          failure.method = config.method;
          failure.p = p;
          failure.ell = ell;
          failure.H = std::pow(2.0, -coarse_level);
          failure.fine_h = ctx.fine.h();
          failure.err_energy_rel = std::nan("");
          failure.err_l2_rel = std::nan("");
          failure.seed = config.seed;
          csv << format_result_row(failure) << '\n';
          csv.flush();
          throw;
        }
      }
    }
  }
}

void run_decay(const ExperimentConfig& config, std::ostream& csv) {
  ExperimentConfig cfg = config;
  cfg.rhs = "one"; // localization study fixes f = 1
  cfg.validate();
  if (cfg.coarse_levels.size() != 1) {
    throw ArgumentError("decay: exactly one coarse level expected");
  }
  const int coarse_level = cfg.coarse_levels.front();
  csv << kDecayHeader << '\n';
  const RunContext ctx = RunContext::create(cfg);
  for (int p : cfg.p_list) {
    const Spaces spaces = Spaces::create(coarse_level, cfg.fine_level, p);
    const int ell_full = full_patch_order(spaces.coarse);
    const MultiscaleBasis basis_full =
        build_basis_splod(spaces, ctx.A, ell_full, cfg.threads);
    const MultiscaleSolution sol_full =
        coarse_solve(spaces, ctx.system, basis_full, ctx.f);
    const double full_energy = energy_norm(sol_full.u, ctx.system.K);
    std::vector<int> ells = cfg.ells;
    if (cfg.ell_rule) {
      ells = {1, 2, 3, 4};
    }
    for (int ell : ells) {
      const MultiscaleBasis basis =
          build_basis_splod(spaces, ctx.A, ell, cfg.threads);
      const MultiscaleSolution sol =
          coarse_solve(spaces, ctx.system, basis, ctx.f);
      const FineField diff{sol.u.level, sol.u.values - sol_full.u.values};
      const double err = energy_norm(diff, ctx.system.K) / full_energy;
      csv << p << ',' << ell << ',' << fmt(err) << '\n';
      csv.flush();
    }
  }
}

void run_export(const ExperimentConfig& config, const std::string& what,
                ElementId T, int j, const std::string& path) {
  config.validate();
  FieldDump dump;
  dump.fine_level = config.fine_level;
  const int coarse_level = config.coarse_levels.front();
  dump.coarse_level = coarse_level;
  const int p = config.p_list.front();
  dump.p = p;
  dump.ti = T.i;
  dump.tj = T.j;
  dump.j = j;
  if (what == "coefficient") {
    const CoefficientField A = make_coefficient(config);
    dump.kind = FieldDump::kCoefficient;
    dump.coarse_level = A.level;
    dump.fine_level = A.level;
    dump.p = -1;
    dump.values = A.cells;
  } else if (what == "bubble") {
    const Spaces spaces = Spaces::create(coarse_level, config.fine_level, p);
    if (!spaces.coarse.contains(T)) {
      throw ArgumentError("export: element outside coarse mesh");
    }
    if (j < 0 || j >= spaces.basis.size()) {
      throw ArgumentError("export: basis index out of range");
    }
    dump.kind = FieldDump::kBubble;
    const FineField b = spaces.bubbles.field(T, j, spaces.coarse, spaces.fine);
    dump.values.assign(b.values.data(), b.values.data() + b.values.size());
  } else if (what == "basis") {
    const CoefficientField A = make_coefficient(config);
    const Spaces spaces = Spaces::create(coarse_level, config.fine_level, p);
    if (!spaces.coarse.contains(T)) {
      throw ArgumentError("export: element outside coarse mesh");
    }
    if (j < 0 || j >= spaces.basis.size()) {
      throw ArgumentError("export: basis index out of range");
    }
    const int ell =
        config.ell_rule ? ell_rule(p, coarse_level) : config.ells.front();
    MultiscaleBasis basis;
    if (config.method == "plod") {
      basis = build_basis_plod(spaces, A, ell, config.threads);
    } else if (config.method == "prototype") {
      basis = build_basis_prototype(spaces, A, config.threads);
    } else {
      basis = build_basis_splod(spaces, A, ell, config.threads);
    }
    dump.kind = FieldDump::kBasis;
    dump.ell = basis.ell;
    const Eigen::VectorXd col =
        basis.phi.col(spaces.coarse.cell_index(T) * spaces.basis.size() + j);
    dump.values.assign(col.data(), col.data() + col.size());
  } else if (what == "solution") {
    if (config.method == "fem") {
      throw ArgumentError("export: solution export needs a multiscale method");
    }
    const int ell =
        config.ell_rule ? ell_rule(p, coarse_level) : config.ells.front();
    FineField u;
    run_single_solve(config, p, coarse_level, ell, &u);
    dump.kind = FieldDump::kSolution;
    dump.ell = ell;
    dump.values.assign(u.values.data(), u.values.data() + u.values.size());
  } else {
    throw ArgumentError("export: unknown selector '" + what + "'");
  }
  write_field_dump(dump, path);
}

} // namespace splod
