// SPDX-License-Identifier: Apache-2.0
//
// Runs: sample a spec, analyse every point on a worker pool, fold the records
// into checks and a verdict, and render the result as JSON or text.
#pragma once

#include <affinelab/classify.hpp>
#include <affinelab/families.hpp>
#include <affinelab/sampling.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef AFFINELAB_VERSION
#define AFFINELAB_VERSION "dev"
#endif

namespace affinelab {

using Json = nlohmann::ordered_json;

enum class Command { check, classify, family, scan };
enum class Format { json, text };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::check: return "check";
    case Command::classify: return "classify";
    case Command::family: return "family";
    case Command::scan: return "scan";
  }
  return "?";
}

/// A one-parameter sweep `key` over [lo, hi] in `count` steps; key is "c" or
/// one of the family constants.
struct ScanGrid {
  std::string key = "c";
  double lo = 0, hi = 0;
  int count = 1;

  double value(int i) const { return count == 1 ? lo : lo + (hi - lo) * i / (count - 1.0); }
};

struct RunConfig {
  Command command = Command::classify;
  std::string spec_path;                 // .sdl file
  std::string spec_text;                 // inline surface text
  std::optional<FamilyParams> family;
  int points = 25;
  std::string point_list;                // explicit points override the quasi-random set
  std::uint64_t seed = 1;
  int order = 5;
  Tolerances tol;
  bool derivative_checks = true;
  std::string report_path;
  Format format = Format::json;
  int threads = 0;                       // 0: hardware concurrency
  std::string emit_path;                 // family: write the surface text here
  bool classify_family = false;          // family: also classify
  std::optional<ScanGrid> grid;          // scan
};

/// Exit codes of a run.
enum class Exit { ok = 0, check_failed = 1, input_error = 2, numerical_failure = 3 };

inline Exit exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::degenerate_frame:
    case ErrorCode::convexity:
    case ErrorCode::evaluation: return Exit::numerical_failure;
    default: return Exit::input_error;
  }
}

/// One row of the pass/fail table.
struct CheckRow {
  std::string name;
  double value = 0;
  double tol = 0;
  bool pass = true;
};

// ---------------------------------------------------------------------------
// Evaluation

/// Analyses every point; the result is ordered by point index regardless of
/// the number of workers.
inline std::vector<PointRecord> analyze_all(const ImmersionSpec& spec, const std::vector<ChartPoint>& pts,
                                            const AnalysisOptions& opt, int threads = 0) {
  std::vector<PointRecord> out(pts.size());
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int workers = std::clamp(threads > 0 ? threads : hw, 1, std::max(1, static_cast<int>(pts.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < pts.size(); i = next++) {
      try {
        out[i] = analyze_point(spec, pts[i], opt);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Residual checks gating the exit status: every general identity against the
/// identity tolerance and the semi-parallel residual against the zero
/// tolerance.
inline std::vector<CheckRow> residual_checks(const std::vector<PointRecord>& recs, const Tolerances& tol) {
  std::map<std::string, double> worst;
  double rc = 0.0;
  for (const auto& r : recs) {
    detail::merge_max(worst, r.identities);
    rc = std::max(rc, r.rc_action);
  }
  std::vector<CheckRow> rows;
  for (const auto& [k, v] : worst) rows.push_back({k, v, tol.identity, v < tol.identity});
  rows.push_back({"semiparallel", rc, tol.zero, rc < tol.zero});
  return rows;
}

struct RunResult {
  RunConfig config;
  std::optional<ImmersionSpec> spec;
  std::optional<FamilyInstance> family;
  std::vector<ChartPoint> points;
  std::vector<PointRecord> records;
  std::vector<CheckRow> checks;
  std::optional<StructureReport> report;
  Json scan;                             // rows of a scan
  std::optional<std::string> error;
  std::optional<ErrorCode> error_code;
  Exit exit = Exit::ok;
};

namespace report_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read '" + path + "'");
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Exit exit_from(const std::vector<PointRecord>& recs, const std::vector<CheckRow>& checks) {
  for (const auto& r : recs)
    if (r.error) return Exit::numerical_failure;
  for (const auto& c : checks)
    if (!c.pass) return Exit::check_failed;
  return Exit::ok;
}

inline AnalysisOptions options(const RunConfig& cfg) {
  AnalysisOptions opt;
  opt.order = cfg.order;
  opt.tol = cfg.tol;
  opt.derivative_checks = cfg.derivative_checks && cfg.command != Command::check;
  return opt;
}

inline void validate(const RunConfig& cfg) {
  if (cfg.order < 4) throw Error(ErrorCode::order, "jet order must be at least 4");
  if (cfg.order > 8) throw Error(ErrorCode::order, "jet order above 8 is not supported");
  if (cfg.points < 1) throw Error(ErrorCode::parameter, "at least one sample point is required");
  if (cfg.command == Command::scan && (!cfg.family || !cfg.grid))
    throw Error(ErrorCode::parameter, "scan needs --family and --grid");
  if (cfg.command == Command::family && !cfg.family) throw Error(ErrorCode::parameter, "family needs --family");
  if (cfg.grid && cfg.grid->count < 1) throw Error(ErrorCode::parameter, "grid needs at least one value");
}

/// Samples and analyses one spec; fills points, records, checks and, for
/// classification, the structure report.
inline void evaluate(RunResult& res, const ImmersionSpec& spec, bool classify) {
  const RunConfig& cfg = res.config;
  res.points = cfg.point_list.empty() ? sobol_points(sample_box(spec), cfg.points, cfg.seed)
                                      : parse_points(cfg.point_list, spec.chart_dim);
  res.records = analyze_all(spec, res.points, options(cfg), cfg.threads);
  res.checks = residual_checks(res.records, cfg.tol);
  if (classify) res.report = verdict(res.records, spec.chart_dim, cfg.tol);
  res.exit = exit_from(res.records, res.checks);
}

}  // namespace report_detail

inline ImmersionSpec load_spec(const RunConfig& cfg) {
  if (!cfg.spec_text.empty()) return parse_immersion(cfg.spec_text);
  if (!cfg.spec_path.empty()) return parse_immersion(report_detail::read_file(cfg.spec_path));
  if (cfg.family) return make_family(*cfg.family).spec;
  throw Error(ErrorCode::parameter, "no surface given (use --spec, --inline or --family)");
}

inline RunResult run(const RunConfig& cfg) {
  RunResult res;
  res.config = cfg;
  try {
    report_detail::validate(cfg);
    switch (cfg.command) {
      case Command::check:
      case Command::classify: {
        res.spec = load_spec(cfg);
        if (cfg.family && cfg.spec_path.empty() && cfg.spec_text.empty()) res.family = make_family(*cfg.family);
        report_detail::evaluate(res, *res.spec, cfg.command == Command::classify);
        break;
      }
      case Command::family: {
        res.family = make_family(*cfg.family);
        res.spec = res.family->spec;
        if (!cfg.emit_path.empty()) {
          std::ofstream out(cfg.emit_path);
          if (!out) throw Error(ErrorCode::io, "cannot write '" + cfg.emit_path + "'");
          out << res.family->sdl;
        }
        if (cfg.classify_family) report_detail::evaluate(res, *res.spec, true);
        break;
      }
      case Command::scan: {
        res.scan = Json::array();
        const ScanGrid& g = *cfg.grid;
        for (int i = 0; i < g.count; ++i) {
          FamilyParams p = *cfg.family;
          const double v = g.value(i);
          if (g.key == "c") p.c = v;
          else p.constants[g.key] = v;
          Json row;
          row[g.key] = v;
          try {
            const auto inst = make_family(p);
            RunResult cell;
            cell.config = cfg;
            report_detail::evaluate(cell, inst.spec, true);
            row["verdict"] = to_string(cell.report->verdict);
            row["expected"] = to_string(expected_verdict(p.id));
            row["c_measured"] = cell.report->c ? Json(*cell.report->c) : Json(nullptr);
            row["semiparallel_residual"] = cell.report->semiparallel_residual;
            row["m"] = cell.report->m;
            row["sigma"] = cell.report->sigma;
            row["exit"] = static_cast<int>(cell.exit);
            if (cell.exit != Exit::ok && res.exit == Exit::ok) res.exit = cell.exit;
          } catch (const Error& e) {
            row["verdict"] = nullptr;
            row["error"] = to_string(e.code());
            row["message"] = e.what();
          }
          res.scan.push_back(std::move(row));
        }
        break;
      }
    }
  } catch (const Error& e) {
    res.error = e.what();
    res.error_code = e.code();
    res.exit = exit_for(e.code());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Rendering

namespace report_detail {

inline Json partition_json(const EigenPartition& p) {
  Json j;
  j["values"] = p.values;
  j["multiplicities"] = p.multiplicities;
  j["m_min"] = p.m_min;
  j["m_max"] = p.m_max;
  return j;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json point_json(std::size_t index, const PointRecord& r) {
  Json j;
  j["index"] = index;
  j["point"] = r.point;
  if (r.error) {
    j["status"] = to_string(*r.error_code);
    j["error"] = *r.error;
    return j;
  }
  j["status"] = "ok";
  j["H"] = r.H;
  j["J"] = r.J;
  j["r"] = r.r;
  j["chi"] = r.chi;
  j["C_norm"] = r.C_norm;
  j["riem_norm"] = r.riem_norm;
  j["weyl_norm"] = r.weyl_norm;
  j["rc_action"] = r.rc_action;
  j["rc_commutator"] = optional_json(r.rc_commutator);
  j["rc_discrepancy"] = optional_json(r.rc_discrepancy);
  j["umbilicity"] = r.umbilicity;
  j["identities"] = r.identities;
  j["schouten"] = partition_json(r.P_part);
  j["shape_operator"] = partition_json(r.S_part);
  if (r.frame) {
    const auto& f = *r.frame;
    j["frame"] = {{"lambda1", f.lambda1}, {"lambda2", f.lambda2}, {"mu1", f.mu1},
                  {"mu2", f.mu2},         {"nu1", f.nu1},         {"nu2", f.nu2}};
  }
  if (!r.lemma.empty()) j["lemma"] = r.lemma;
  if (r.warp) j["alpha"] = r.warp->alpha;
  if (r.c) j["c"] = *r.c;
  if (!r.warped.empty()) j["warped"] = r.warped;
  return j;
}

inline Json config_json(const RunConfig& cfg) {
  Json j;
  j["command"] = to_string(cfg.command);
  if (!cfg.spec_path.empty()) j["spec"] = cfg.spec_path;
  if (!cfg.spec_text.empty()) j["inline"] = cfg.spec_text;
  if (cfg.family) {
    const auto& p = *cfg.family;
    Json f;
    f["id"] = to_string(p.id);
    f["n"] = p.n;
    f["c"] = optional_json(p.c);
    f["constants"] = p.constants;
    f["t_range"] = {p.t_range.lo, p.t_range.hi};
    f["k_mode"] = p.k_mode == KMode::automatic ? "auto" : p.k_mode == KMode::numeric ? "numeric" : "closed_form";
    j["family"] = f;
  }
  if (cfg.point_list.empty()) {
    j["sample"] = {{"kind", "sobol"}, {"points", cfg.points}, {"seed", cfg.seed}};
  } else {
    j["sample"] = {{"kind", "list"}, {"points", cfg.point_list}};
  }
  j["order"] = cfg.order;
  j["tol"] = {{"identity", cfg.tol.identity}, {"zero", cfg.tol.zero},         {"nonzero", cfg.tol.nonzero},
              {"eigen_rel", cfg.tol.eigen_rel}, {"eigen_floor", cfg.tol.eigen_floor},
              {"gap_factor", cfg.tol.gap_factor}, {"fd_step", cfg.tol.fd_step}, {"derivative", cfg.tol.derivative}};
  if (cfg.grid) j["grid"] = {{"key", cfg.grid->key}, {"lo", cfg.grid->lo}, {"hi", cfg.grid->hi}, {"count", cfg.grid->count}};
  return j;
}

inline Json versions_json() {
  char eigen[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  return {{"affinelab", AFFINELAB_VERSION},
          {"eigen", eigen},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"schema", 1}};
}

}  // namespace report_detail

inline Json to_json(const RunResult& res) {
  using namespace report_detail;
  Json j;
  j["config"] = config_json(res.config);
  if (res.error) {
    j["error"] = {{"code", to_string(*res.error_code)}, {"message", *res.error}};
  }
  if (res.spec) {
    j["surface"] = {{"name", res.spec->name}, {"n", res.spec->chart_dim}};
  }
  if (res.family) {
    Json f;
    f["id"] = to_string(res.family->params.id);
    f["c"] = res.family->c;
    f["sdl"] = res.family->sdl;
    if (res.family->profiles && res.family->profiles->k) {
      const auto& k = *res.family->profiles->k;
      f["k"] = {{"branch", k.branch}, {"residual", k.residual}, {"positive", {k.positive.lo, k.positive.hi}}};
    }
    j["family"] = f;
  }
  Json pts = Json::array();
  for (std::size_t i = 0; i < res.records.size(); ++i) pts.push_back(point_json(i, res.records[i]));
  j["per_point"] = pts;

  Json agg;
  Json checks = Json::array();
  for (const auto& c : res.checks) checks.push_back({{"name", c.name}, {"max", c.value}, {"tol", c.tol}, {"pass", c.pass}});
  agg["checks"] = checks;
  if (!res.records.empty()) {
    double hlo = std::numeric_limits<double>::infinity(), hhi = -hlo, jlo = hlo, jhi = -hlo;
    int failed = 0;
    for (const auto& r : res.records) {
      if (r.error) {
        ++failed;
        continue;
      }
      hlo = std::min(hlo, r.H), hhi = std::max(hhi, r.H);
      jlo = std::min(jlo, r.J), jhi = std::max(jhi, r.J);
    }
    agg["failed_points"] = failed;
    if (failed < static_cast<int>(res.records.size())) {
      agg["H"] = {{"min", hlo}, {"max", hhi}};
      agg["J"] = {{"min", jlo}, {"max", jhi}};
    }
  }
  if (res.report) {
    const auto& r = *res.report;
    agg["C_norm_max"] = r.C_norm_max;
    agg["semiparallel_residual"] = r.semiparallel_residual;
    agg["weyl_norm"] = r.weyl_norm;
    agg["schouten_eigenvalues"] = {{"m", r.m}, {"m_min", r.m_min}};
    agg["shape_eigenvalues"] = {{"sigma", r.sigma}, {"sigma_min", r.sigma_min}};
    agg["residual_max"] = r.identity_residuals;
  }
  if (res.config.command == Command::scan) agg["scan"] = res.scan;
  j["aggregate"] = agg;

  if (res.report) {
    const auto& r = *res.report;
    Json v;
    v["verdict"] = to_string(r.verdict);
    v["evidence"] = r.verdict_evidence;
    v["is_affine_sphere"] = r.is_affine_sphere;
    v["mean_curvature"] = r.mean_curvature;
    v["f"] = r.f_tag.empty() ? Json(nullptr) : Json(r.f_tag);
    v["c"] = optional_json(r.c);
    v["alpha_max"] = optional_json(r.alpha_max);
    v["identities_ok"] = r.identities_ok;
    v["convexity_ok"] = r.convexity_ok;
    j["verdict"] = v;
  } else {
    j["verdict"] = nullptr;
  }
  j["exit"] = static_cast<int>(res.exit);
  j["versions"] = versions_json();
  return j;
}

inline std::string to_text(const RunResult& res) {
  std::ostringstream out;
  auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(6) << std::scientific << v;
    return s.str();
  };
  out << "command  " << to_string(res.config.command) << "\n";
  if (res.spec) out << "surface  " << (res.spec->name.empty() ? "(unnamed)" : res.spec->name) << ", n = " << res.spec->chart_dim << "\n";
  if (res.error) out << "error    " << to_string(*res.error_code) << ": " << *res.error << "\n";
  if (res.family && !res.config.emit_path.empty()) out << "emitted  " << res.config.emit_path << "\n";

  if (!res.records.empty()) {
    out << "\n" << std::left << std::setw(5) << "#" << std::right << std::setw(15) << "H" << std::setw(15) << "J"
        << std::setw(15) << "|C|" << std::setw(15) << "|R.C|" << std::setw(15) << "|W|" << std::setw(15)
        << "max identity" << std::setw(4) << "m" << std::setw(6) << "sigma" << "\n";
    for (std::size_t i = 0; i < res.records.size(); ++i) {
      const auto& r = res.records[i];
      out << std::left << std::setw(5) << i << std::right;
      if (r.error) {
        out << "  " << to_string(*r.error_code) << ": " << *r.error << "\n";
        continue;
      }
      double worst = 0.0;
      for (const auto& [k, v] : r.identities) worst = std::max(worst, v);
      out << std::setw(15) << num(r.H) << std::setw(15) << num(r.J) << std::setw(15) << num(r.C_norm) << std::setw(15)
          << num(r.rc_action) << std::setw(15) << num(r.weyl_norm) << std::setw(15) << num(worst) << std::setw(4)
          << r.P_part.m() << std::setw(6) << r.S_part.m() << "\n";
    }
  }
  if (!res.checks.empty()) {
    out << "\n" << std::left << std::setw(20) << "check" << std::right << std::setw(15) << "max" << std::setw(15)
        << "tol" << "  result\n";
    for (const auto& c : res.checks)
      out << std::left << std::setw(20) << c.name << std::right << std::setw(15) << num(c.value) << std::setw(15)
          << num(c.tol) << "  " << (c.pass ? "pass" : "FAIL") << "\n";
  }
  if (res.config.command == Command::scan) {
    out << "\n";
    for (const auto& row : res.scan) {
      const std::string key = res.config.grid->key;
      out << key << " = " << std::setw(14) << num(row[key].get<double>()) << "  ";
      if (row["verdict"].is_null()) out << row["error"].get<std::string>() << ": " << row["message"].get<std::string>();
      else out << row["verdict"].get<std::string>();
      out << "\n";
    }
  }
  if (res.report) {
    out << "\nverdict  " << to_string(res.report->verdict) << "\n";
    out << "evidence " << res.report->verdict_evidence << "\n";
  }
  out << "exit     " << static_cast<int>(res.exit) << "\n";
  return out.str();
}

inline std::string render(const RunResult& res) {
  return res.config.format == Format::json ? to_json(res).dump(2) + "\n" : to_text(res);
}

}  // namespace affinelab
