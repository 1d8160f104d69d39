// SPDX-License-Identifier: Apache-2.0
//
// affinelab: check, classify, materialize and scan locally strongly convex
// hypersurfaces.
#include <affinelab/affinelab.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace affinelab;

// Options shared by every subcommand.
struct Cli {
  std::string spec_path;
  std::string inline_text;
  std::string family;
  std::optional<int> n;
  std::optional<double> c;
  std::vector<std::string> constants;
  std::vector<std::string> tol;
  std::string t_range;
  std::string k_mode = "auto";
  std::string grid;
  int points = 25;
  std::string point_list;
  std::uint64_t seed = 1;
  int order = 5;
  std::string report;
  std::string format = "json";
  int threads = 0;
  bool no_derivatives = false;
  std::string emit;
  bool classify = false;
};

std::pair<std::string, double> key_value(const std::string& item, const char* what) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::parameter, std::string("expected key=value for ") + what + ", got '" + item + "'");
  try {
    std::size_t used = 0;
    const std::string rhs = item.substr(eq + 1);
    const double v = std::stod(rhs, &used);
    if (used != rhs.size()) throw std::invalid_argument(rhs);
    return {item.substr(0, eq), v};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::parameter, std::string("bad number in ") + what + " '" + item + "'");
  }
}

std::vector<double> numbers(const std::string& text, char sep, const char* what) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string cell;
  while (std::getline(s, cell, sep)) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::parameter, std::string("bad number in ") + what + " '" + text + "'");
    }
  }
  return out;
}

void set_tolerance(Tolerances& tol, const std::string& item) {
  const auto [k, v] = key_value(item, "--tol");
  if (!(v > 0)) throw Error(ErrorCode::parameter, "tolerance '" + k + "' must be positive");
  if (k == "identity") tol.identity = v;
  else if (k == "zero") tol.zero = v;
  else if (k == "nonzero") tol.nonzero = v;
  else if (k == "eigen_rel") tol.eigen_rel = v;
  else if (k == "eigen_floor") tol.eigen_floor = v;
  else if (k == "gap_factor") tol.gap_factor = v;
  else if (k == "fd_step") tol.fd_step = v;
  else if (k == "derivative") tol.derivative = v;
  else throw Error(ErrorCode::parameter, "unknown tolerance '" + k + "'");
}

RunConfig to_config(const Cli& cli, Command command) {
  RunConfig cfg;
  cfg.command = command;
  cfg.spec_path = cli.spec_path;
  cfg.spec_text = cli.inline_text;
  cfg.points = cli.points;
  cfg.point_list = cli.point_list;
  cfg.seed = cli.seed;
  cfg.order = cli.order;
  cfg.report_path = cli.report;
  cfg.format = cli.format == "text" ? Format::text : Format::json;
  cfg.threads = cli.threads;
  cfg.derivative_checks = !cli.no_derivatives;
  cfg.emit_path = cli.emit;
  cfg.classify_family = cli.classify;
  for (const auto& t : cli.tol) set_tolerance(cfg.tol, t);

  if (!cli.family.empty()) {
    FamilyParams p;
    std::string name = cli.family;
    for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (name.rfind("lorentz_1_", 0) == 0 && name.size() > 10) {
      try {
        p.n = std::stoi(name.substr(10));
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::parameter, "unknown family '" + cli.family + "'");
      }
      name = "lorentz";
    }
    p.id = parse_family_id(name);
    if (cli.n) p.n = *cli.n;
    p.c = cli.c;
    for (const auto& item : cli.constants) {
      const auto [k, v] = key_value(item, "--const");
      p.constants[k] = v;
    }
    if (!cli.t_range.empty()) {
      const auto r = numbers(cli.t_range, ':', "--t-range");
      if (r.size() != 2) throw Error(ErrorCode::parameter, "--t-range expects lo:hi");
      p.t_range = {r[0], r[1]};
    }
    p.k_mode = cli.k_mode == "numeric" ? KMode::numeric : cli.k_mode == "closed" ? KMode::closed_form : KMode::automatic;
    cfg.family = p;
  } else if (cli.n || cli.c || !cli.constants.empty()) {
    throw Error(ErrorCode::parameter, "--n, --c and --const need --family");
  }
  if (!cli.grid.empty()) {
    const auto eq = cli.grid.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::parameter, "--grid expects key=lo:hi:count");
    const auto r = numbers(cli.grid.substr(eq + 1), ':', "--grid");
    if (r.size() != 3 || r[2] < 1 || r[2] != std::floor(r[2]))
      throw Error(ErrorCode::parameter, "--grid expects key=lo:hi:count");
    cfg.grid = ScanGrid{cli.grid.substr(0, eq), r[0], r[1], static_cast<int>(r[2])};
  }
  if (command != Command::family && command != Command::scan && cfg.spec_path.empty() && cfg.spec_text.empty() &&
      !cfg.family)
    throw Error(ErrorCode::parameter, "no surface given (use a spec file, --inline or --family)");
  return cfg;
}

void add_common(CLI::App* app, Cli& cli, bool sampling) {
  app->add_option("--family,--id", cli.family, "Family id: W1..W6, lorentz_1_<n>, calabi, ellipsoid, hyperboloid, paraboloid");
  app->add_option("--n", cli.n, "Dimension of the hypersurface")->check(CLI::Range(2, 12));
  app->add_option("--c", cli.c, "Fiber curvature / family parameter");
  app->add_option("--const", cli.constants, "Family constant key=value (repeatable)");
  app->add_option("--t-range", cli.t_range, "Range of the warping coordinate lo:hi");
  app->add_option("--k-mode", cli.k_mode, "Warping solution: auto, closed or numeric")
      ->check(CLI::IsMember({"auto", "closed", "numeric"}));
  if (sampling) {
    app->add_option("--points", cli.points, "Number of quasi-random sample points")->check(CLI::PositiveNumber);
    app->add_option("--at", cli.point_list, "Explicit points 'x1,x2,..;y1,y2,..'");
    app->add_option("--seed", cli.seed, "Seed of the sample shift");
    app->add_option("--order", cli.order, "Jet order (4..8)")->check(CLI::Range(4, 8));
    app->add_option("--tol", cli.tol, "Tolerance override key=value (repeatable)");
    app->add_option("--threads", cli.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    app->add_flag("--no-derivatives", cli.no_derivatives, "Skip the finite-difference structure checks");
  }
  app->add_option("--report", cli.report, "Write the report to this file instead of stdout");
  app->add_option("--format", cli.format, "Report format")->check(CLI::IsMember({"json", "text"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blaschke geometry of locally strongly convex hypersurfaces"};
  app.set_version_flag("--version", std::string(AFFINELAB_VERSION));
  app.require_subcommand(1);
  Cli cli;

  auto* check = app.add_subcommand("check", "Evaluate general identities and the semi-parallel residual");
  auto* classify = app.add_subcommand("classify", "Check and classify a surface");
  auto* family = app.add_subcommand("family", "Materialize a family member as surface text");
  auto* scan = app.add_subcommand("scan", "Classify a family over a parameter grid");
  for (auto* sub : {check, classify}) {
    sub->add_option("spec,--spec", cli.spec_path, "Surface file (.sdl)")->check(CLI::ExistingFile);
    sub->add_option("--inline", cli.inline_text, "Surface text given inline");
    add_common(sub, cli, true);
  }
  add_common(family, cli, true);
  family->add_option("--emit", cli.emit, "Write the surface text to this file");
  family->add_flag("--classify", cli.classify, "Classify the materialized surface");
  add_common(scan, cli, true);
  scan->add_option("--grid", cli.grid, "Sweep key=lo:hi:count (key is c or a constant)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(Exit::input_error);
  }

  Command command = Command::check;
  if (classify->parsed()) command = Command::classify;
  else if (family->parsed()) command = Command::family;
  else if (scan->parsed()) command = Command::scan;

  RunResult res;
  try {
    res = run(to_config(cli, command));
  } catch (const Error& e) {
    std::cerr << "affinelab: " << to_string(e.code()) << ": " << e.what() << "\n";
    return static_cast<int>(exit_for(e.code()));
  }

  const std::string text = render(res);
  if (res.config.report_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(res.config.report_path);
    if (!out) {
      std::cerr << "affinelab: cannot write '" << res.config.report_path << "'\n";
      return static_cast<int>(Exit::input_error);
    }
    out << text;
  }
  if (res.error) std::cerr << "affinelab: " << to_string(*res.error_code) << ": " << *res.error << "\n";
  return static_cast<int>(res.exit);
}
