#include "commands.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "io.h"
#include "tcd/bounds.h"
#include "tcd/codesign.h"
#include "tcd/model.h"
#include "tcd/reduction.h"
#include "tcd/statespace.h"
#include "tcd/sweep.h"

namespace tcd {
namespace cli {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Writes to a file, or to `out` when the path is "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string resolve(const std::string& path, const std::string& relative_to) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(relative_to).parent_path() / p).string();
}

int cmd_model(const std::string& name, const std::string& out_path, std::ostream& out) {
  TensegrityModel m;
  if (name == "desk_arm") {
    m = desk_arm();
  } else if (name == "desk_beam") {
    m = desk_beam();
  } else {
    throw InputError("unknown built-in model '" + name + "' (desk_arm, desk_beam)");
  }
  emit(out_path, dump_json(model_to_json(m)), out);
  return kSuccess;
}

int cmd_linearize(const std::string& model_path, const std::string& out_path, std::ostream& out) {
  const Json mj = read_json_file(model_path);
  const TensegrityModel model = model_from_json(mj);
  const LinearizedStructure ls = linearize(model);
  const Class1Model& c = ls.class1;
  Json j;
  j["_meta"] = metadata("linearize", config_hash({mj}));
  j["name"] = model.name;
  j["dimension"] = model.topology.dimension;
  j["expanded_nodes"] = model.topology.node_count;
  j["strings"] = model.topology.strings.size();
  j["equilibrium_residual"] = ls.statics.residual;
  j["M"] = matrix_to_json(c.M);
  j["D"] = matrix_to_json(c.D);
  j["K"] = matrix_to_json(c.K);
  j["P"] = matrix_to_json(c.P);
  j["B"] = matrix_to_json(c.B);
  j["K_s"] = matrix_to_json(c.K_s);
  j["K_gamma"] = matrix_to_json(c.K_gamma);
  emit(out_path, dump_json(j), out);
  return kSuccess;
}

int cmd_reduce(const std::string& model_path, const std::string& out_path, std::ostream& out) {
  const Json mj = read_json_file(model_path);
  const TensegrityModel model = model_from_json(mj);
  const LinearizedStructure ls = linearize(model);
  const MinimalModel& mm = ls.minimal;
  const Topology& t = model.topology;
  const int point_masses = static_cast<int>(t.point_mass_nodes.size());
  const double a_res = model.constraints.empty()
                           ? 0.0
                           : (model.constraints.A * mm.P_tot).cwiseAbs().maxCoeff();
  const double phi_res = (ls.modes.Phi1.transpose() * mm.P_tot).cwiseAbs().maxCoeff();
  Json j;
  j["_meta"] = metadata("reduce", config_hash({mj}));
  j["name"] = model.name;
  j["full_order"] = t.dimension * t.node_count;
  j["constraint_rows"] = model.constraints.rows();
  j["constraint_rank"] = mm.constraint_rank;
  j["minimal_order"] = mm.size();
  j["formula_order"] =
      minimal_mode_count(t.dimension, static_cast<int>(t.bars.size()), point_masses, mm.constraint_rank);
  j["constraint_residual"] = a_res;
  j["bar_stretch_residual"] = phi_res;
  j["M"] = matrix_to_json(mm.M);
  j["D"] = matrix_to_json(mm.D);
  j["K"] = matrix_to_json(mm.K);
  j["P"] = matrix_to_json(mm.P);
  j["B"] = matrix_to_json(mm.B);
  j["P_tot"] = matrix_to_json(mm.P_tot);
  emit(out_path, dump_json(j), out);
  out << "minimal order " << mm.size() << " of " << t.dimension * t.node_count << "\n";
  return kSuccess;
}

int cmd_bounds(const std::string& model_path, const std::string& kind_name, const std::vector<double>& scales,
               const std::string& synthesis_path, int jobs, const std::string& out_path, std::ostream& out) {
  const Json mj = read_json_file(model_path);
  const TensegrityModel model = model_from_json(mj);
  BoundKind kind;
  try {
    kind = parse_bound_kind(kind_name);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (scales.empty()) throw InputError("--prestress-scales needs at least one value");
  for (double s : scales) {
    if (!(s > 0.0)) throw InputError("prestress scales must be positive");
  }
  const Json sj = synthesis_path.empty() ? Json::object() : read_json_file(synthesis_path);
  const SynthesisConfig config = synthesis_from_json(sj, tensegrity_descriptor(model));
  const Json flags{{"kind", to_string(kind)}, {"scales", scales}};

  const std::vector<SweepRow> rows = prestress_sweep(model, scales, kind, config, {}, jobs);
  std::ostringstream csv;
  csv << csv_metadata_line("bounds", config_hash({mj, sj, flags})) << "\n";
  csv << "scale,bound,status,iterations\n";
  bool all_ok = true;
  for (const auto& r : rows) {
    const bool failed = r.synthesis_status == "infeasible" || !std::isfinite(r.bound.value);
    const std::string status = r.synthesis_status == "infeasible" ? "infeasible" : sdp::to_string(r.bound.status);
    all_ok = all_ok && !failed && r.bound.ok();
    csv << format_double(r.scale) << "," << format_double(r.bound.value) << "," << status << ","
        << r.bound.iterations << "\n";
  }
  emit(out_path, csv.str(), out);
  return all_ok ? kSuccess : kInfeasible;
}

struct CellResult {
  CodesignSolution solution;
  CodesignProblem problem;
  std::string status;  // pass, fail or infeasible
  std::string message;
};

CellResult solve_cell(const ProblemFile& f, Target target) {
  CellResult r;
  r.problem = f.problem;
  try {
    r.solution = f.state_feedback ? extremize_state_feedback(f.problem, target, f.options)
                                  : extremize(f.problem, target, f.options);
  } catch (const std::runtime_error& e) {
    r.status = "infeasible";
    r.message = e.what();
    return r;
  }
  r.status = r.solution.verification.passed ? "pass" : "fail";
  return r;
}

Target target_from(const std::string& name) {
  try {
    return parse_target(name);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

int cmd_codesign(const std::string& model_path, const std::string& problem_path, const std::string& target_name,
                 const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Json mj = read_json_file(model_path);
  const Json pj = read_json_file(problem_path);
  const TensegrityModel model = model_from_json(mj);
  const ProblemFile f = problem_from_json(pj, model);
  const Target target = target_from(target_name);
  if (f.problem.fixed_parameters && target != Target::kOutputBound && target != Target::kControlBound) {
    throw InputError("with fixed parameters the target must be ybar or ubar");
  }
  const CellResult r = solve_cell(f, target);
  if (r.status == "infeasible") {
    err << "infeasible: " << r.message << "\n";
    return kInfeasible;
  }
  Json j = solution_to_json(r.solution, f.problem);
  j["_meta"] = metadata("codesign", config_hash({mj, pj, Json{{"target", to_string(target)}}}));
  emit(out_path, dump_json(j), out);
  out << "target " << to_string(target) << " z " << format_double(r.solution.z) << " iterations "
      << r.solution.iterations << " " << r.solution.status << " verification " << r.status << "\n";
  for (const auto& msg : r.solution.verification.failures) err << "verification: " << msg << "\n";
  return r.status == "pass" ? kSuccess : kVerificationFailure;
}

int cmd_verify(const std::string& model_path, const std::string& problem_path, const std::string& solution_path,
               const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Json mj = read_json_file(model_path);
  const Json pj = read_json_file(problem_path);
  const Json sj = read_json_file(solution_path);
  const TensegrityModel model = model_from_json(mj);
  const ProblemFile f = problem_from_json(pj, model);
  const StoredSolution s = solution_from_json(sj);
  VerificationReport rep;
  try {
    rep = verify_solution(f.problem, s.design, s.target, s.z, s.state_feedback);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("solution: ") + e.what());
  }
  if (!out_path.empty()) {
    Json j = verification_to_json(rep);
    j["_meta"] = metadata("verify", config_hash({mj, pj, sj}));
    emit(out_path, dump_json(j), out);
  }
  out << "verification " << (rep.passed ? "pass" : "fail") << "\n";
  for (const auto& msg : rep.failures) err << "verification: " << msg << "\n";
  return rep.passed ? kSuccess : kVerificationFailure;
}

struct Axis {
  std::string parameter;
  std::vector<double> values;
};

int cmd_sweep(const std::string& model_path, const std::string& sweep_path, int jobs, const std::string& out_dir,
              std::ostream& out, std::ostream& err) {
  const Json mj = read_json_file(model_path);
  const Json sj = read_json_file(sweep_path);
  const TensegrityModel model = model_from_json(mj);
  if (!sj.is_object()) throw InputError("sweep: expected an object");
  if (!sj.contains("problem")) throw InputError("sweep: missing field 'problem'");
  const Json pj = sj["problem"].is_string() ? read_json_file(resolve(sj["problem"].get<std::string>(), sweep_path))
                                            : sj["problem"];
  const Target target = target_from(sj.value("target", std::string("budget")));
  if (!sj.contains("axes") || !sj["axes"].is_array() || sj["axes"].empty()) {
    throw InputError("sweep: 'axes' must be a non-empty list");
  }
  std::vector<Axis> axes;
  for (const auto& a : sj["axes"]) {
    Axis axis;
    axis.parameter = a.value("parameter", std::string());
    if (axis.parameter != "Ubar_scale" && axis.parameter != "Ybar_scale" && axis.parameter != "budget" &&
        axis.parameter != "prestress_scale") {
      throw InputError("sweep: unknown axis parameter '" + axis.parameter + "'");
    }
    if (!a.contains("values")) throw InputError("sweep: axis '" + axis.parameter + "' has no values");
    const VectorXd v = vector_from_json(a["values"], -1, "values");
    if (v.size() == 0 || (v.array() <= 0.0).any()) throw InputError("sweep: axis values must be positive");
    axis.values.assign(v.data(), v.data() + v.size());
    axes.push_back(axis);
  }
  if (jobs <= 0) jobs = sj.value("jobs", 0);

  // Cells in row-major order, first axis slowest.
  int cells = 1;
  for (const auto& a : axes) cells *= static_cast<int>(a.values.size());
  std::vector<std::vector<double>> coords(cells);
  for (int c = 0; c < cells; ++c) {
    int rest = c;
    coords[c].resize(axes.size());
    for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
      const int n = static_cast<int>(axes[k].values.size());
      coords[c][k] = axes[k].values[rest % n];
      rest /= n;
    }
  }
  // Parse every cell up front so input errors surface before any solve.
  std::vector<ProblemFile> problems(cells);
  for (int c = 0; c < cells; ++c) {
    TensegrityModel cell_model = model;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      if (axes[k].parameter == "prestress_scale") cell_model = scaled_prestress(cell_model, coords[c][k]);
    }
    ProblemFile f = problem_from_json(pj, cell_model);
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const double v = coords[c][k];
      if (axes[k].parameter == "Ubar_scale") f.problem.U_bar *= v;
      if (axes[k].parameter == "Ybar_scale") f.problem.Y_bar *= v;
      if (axes[k].parameter == "budget") f.problem.budget = v;
    }
    problems[c] = std::move(f);
  }

  std::vector<CellResult> results(cells);
  parallel_for(cells, jobs, [&](int c) { results[c] = solve_cell(problems[c], target); });

  std::ostringstream csv;
  csv << csv_metadata_line("sweep", config_hash({mj, sj, pj})) << "\n";
  for (const auto& a : axes) csv << a.parameter << ",";
  csv << "z,sum_gamma_a,sum_gamma_s,sum_alpha,status\n";
  int code = kSuccess;
  for (int c = 0; c < cells; ++c) {
    const CellResult& r = results[c];
    for (double v : coords[c]) csv << format_double(v) << ",";
    if (r.status == "infeasible") {
      const std::string nan = format_double(std::nan(""));
      csv << nan << "," << nan << "," << nan << "," << nan << ",infeasible\n";
      err << "cell " << c << " infeasible: " << r.message << "\n";
      code = std::max<int>(code, kInfeasible);
      continue;
    }
    const DesignPoint& d = r.solution.design;
    csv << format_double(r.solution.z) << "," << format_double(d.gamma_a.sum()) << ","
        << format_double(d.gamma_s.sum()) << "," << format_double(d.alpha.sum()) << "," << r.status << "\n";
    if (r.status == "fail") code = code == kInfeasible ? code : kVerificationFailure;
  }
  std::filesystem::create_directories(out_dir);
  const std::string path = (std::filesystem::path(out_dir) / "sweep.csv").string();
  write_text_file(path, csv.str());
  out << cells << " cells written to " << path << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tensegrity control co-design"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  std::string model_path, problem_path, solution_path, sweep_path, synthesis_path, name;
  std::string out_path = "-", target = "budget", kind = "cov";
  std::vector<double> scales;
  int jobs = 0;

  auto* model_cmd = app.add_subcommand("model", "Write a built-in desk model as JSON");
  model_cmd->add_option("name", name, "desk_arm or desk_beam")->required();
  model_cmd->add_option("--out", out_path, "Output file, - for stdout");

  auto* lin = app.add_subcommand("linearize", "Class-1 linearized matrices of a model");
  lin->add_option("model", model_path)->required();
  lin->add_option("--out", out_path, "Output JSON, - for stdout");

  auto* red = app.add_subcommand("reduce", "Minimal-coordinate model and mode counts");
  red->add_option("model", model_path)->required();
  red->add_option("--out", out_path, "Output JSON, - for stdout");

  auto* bnd = app.add_subcommand("bounds", "System-gain bounds across prestress scales");
  bnd->add_option("model", model_path)->required();
  bnd->add_option("--kind", kind, "cov, ep, ie or ee");
  bnd->add_option("--prestress-scales", scales, "Comma-separated scales")->delimiter(',')->required();
  bnd->add_option("--synthesis", synthesis_path, "Synthesis settings JSON");
  bnd->add_option("--jobs", jobs, "Worker threads (default TCD_JOBS or all cores)");
  bnd->add_option("--out", out_path, "Output CSV, - for stdout");

  auto* cd = app.add_subcommand("codesign", "Extremize one co-design target and verify");
  cd->add_option("model", model_path)->required();
  cd->add_option("problem", problem_path)->required();
  cd->add_option("--target", target, "budget, ybar, ubar, alpha_upper or alpha_lower");
  cd->add_option("--out", out_path, "Output solution JSON, - for stdout");

  auto* ver = app.add_subcommand("verify", "Re-verify a stored solution");
  ver->add_option("model", model_path)->required();
  ver->add_option("problem", problem_path)->required();
  ver->add_option("solution", solution_path)->required();
  std::string report_path;
  ver->add_option("--out", report_path, "Optional report JSON");

  auto* sw = app.add_subcommand("sweep", "Grid of co-design runs");
  sw->add_option("model", model_path)->required();
  sw->add_option("sweep", sweep_path)->required();
  sw->add_option("--jobs", jobs, "Worker threads (default TCD_JOBS or all cores)");
  std::string out_dir;
  sw->add_option("--out", out_dir, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForVersion& e) {
    out << version() << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kInputError;
  }

  try {
    if (*model_cmd) return cmd_model(name, out_path, out);
    if (*lin) return cmd_linearize(model_path, out_path, out);
    if (*red) return cmd_reduce(model_path, out_path, out);
    if (*bnd) return cmd_bounds(model_path, kind, scales, synthesis_path, jobs, out_path, out);
    if (*cd) return cmd_codesign(model_path, problem_path, target, out_path, out, err);
    if (*ver) return cmd_verify(model_path, problem_path, solution_path, report_path, out, err);
    if (*sw) return cmd_sweep(model_path, sweep_path, jobs, out_dir, out, err);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const Json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::runtime_error& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  }
  return kInputError;
}

}  // namespace cli
}  // namespace tcd
