#include "io.h"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace tcd {
namespace cli {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

#ifndef TCD_VERSION
#define TCD_VERSION "0.0.0"
#endif

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw InputError(what + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw InputError(what + ": expected an integer");
  return j.get<int>();
}

std::vector<int> int_list(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected a list of integers");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(integer(v, what));
  return out;
}

std::vector<NodePair> pair_list(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected a list of [i, j] pairs");
  std::vector<NodePair> out;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2) throw InputError(what + ": every entry must be [i, j]");
    out.push_back({integer(v[0], what), integer(v[1], what)});
  }
  return out;
}

// Flat list, or a list of per-node vectors of length d.
VectorXd nodal_vector(const Json& j, int d, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected a list");
  std::vector<double> flat;
  for (const auto& v : j) {
    if (v.is_array()) {
      if (static_cast<int>(v.size()) != d) throw InputError(what + ": every entry must have d components");
      for (const auto& c : v) flat.push_back(number(c, what));
    } else {
      flat.push_back(number(v, what));
    }
  }
  return Eigen::Map<VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

Json nodal_to_json(const VectorXd& v, int d) {
  Json out = Json::array();
  for (int i = 0; i + d <= v.size(); i += d) {
    Json node = Json::array();
    for (int k = 0; k < d; ++k) node.push_back(v(i + k));
    out.push_back(node);
  }
  return out;
}

Json pairs_to_json(const std::vector<NodePair>& pairs) {
  Json out = Json::array();
  for (const auto& p : pairs) out.push_back({p[0], p[1]});
  return out;
}

}  // namespace

const char* version() { return TCD_VERSION; }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const std::vector<Json>& inputs) {
  std::string all;
  for (const auto& j : inputs) all += j.dump() + '\n';
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(all)));
  return buf;
}

Json metadata(const std::string& command, const std::string& hash) {
  return Json{{"tool", "tcd"}, {"version", version()}, {"command", command}, {"config_hash", hash}};
}

std::string csv_metadata_line(const std::string& command, const std::string& hash) {
  return std::string("# tcd ") + version() + " command=" + command + " config_hash=" + hash;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write to '" + path + "' failed");
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json matrix_to_json(const MatrixXd& m) {
  Json data = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    for (int k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const Json& j, const std::string& what) {
  if (j.is_array()) {
    // Nested rows.
    const int rows = static_cast<int>(j.size());
    const int cols = rows ? static_cast<int>(j[0].size()) : 0;
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols) throw InputError(what + ": ragged rows");
      for (int k = 0; k < cols; ++k) m(i, k) = number(j[i][k], what);
    }
    return m;
  }
  const int rows = integer(require(j, "rows", what), what), cols = integer(require(j, "cols", what), what);
  const Json& data = require(j, "data", what);
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<int>(data.size()) != rows * cols) {
    throw InputError(what + ": data must hold rows * cols entries");
  }
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) m(i, k) = number(data[i * cols + k], what);
  }
  return m;
}

Json vector_to_json(const VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VectorXd vector_from_json(const Json& j, int size, const std::string& what) {
  if (j.is_number()) {
    if (size < 0) throw InputError(what + ": expected a list");
    return VectorXd::Constant(size, j.get<double>());
  }
  if (!j.is_array()) throw InputError(what + ": expected a number or a list");
  VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = number(j[i], what);
  if (size >= 0 && v.size() != size) {
    throw InputError(what + ": expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

MatrixXd square_from_json(const Json& j, int n, const std::string& what) {
  MatrixXd m;
  if (j.is_number()) {
    m = j.get<double>() * MatrixXd::Identity(n, n);
  } else if (j.is_array() && (j.empty() || j[0].is_number())) {
    m = vector_from_json(j, n, what).asDiagonal();
  } else {
    m = matrix_from_json(j, what);
  }
  if (m.rows() != n || m.cols() != n) throw InputError(what + ": expected a " + std::to_string(n) + " square matrix");
  return m;
}

TensegrityModel model_from_json(const Json& j) {
  const std::string w = "model";
  if (!j.is_object()) throw InputError("model: expected an object");
  TensegrityModel m;
  m.name = j.value("name", std::string("model"));
  const int d = integer(require(j, "dimension", w), "dimension");
  if (d != 2 && d != 3) throw InputError("dimension must be 2 or 3");
  m.spec.dimension = d;
  const Json& nodes = require(j, "nodes", w);
  m.user_positions = nodal_vector(nodes, d, "nodes");
  if (m.user_positions.size() % d != 0) throw InputError("nodes: length is not a multiple of the dimension");
  m.spec.node_count = static_cast<int>(m.user_positions.size() / d);
  m.spec.bars = pair_list(require(j, "bars", w), "bars");
  m.spec.strings = pair_list(require(j, "strings", w), "strings");
  if (j.contains("point_mass_nodes")) m.spec.point_mass_nodes = int_list(j["point_mass_nodes"], "point_mass_nodes");
  if (j.contains("bar_mass")) m.params.bar_mass = number(j["bar_mass"], "bar_mass");
  if (j.contains("point_mass")) m.params.point_mass = number(j["point_mass"], "point_mass");
  if (j.contains("string_stiffness")) m.params.string_stiffness = number(j["string_stiffness"], "string_stiffness");
  if (j.contains("string_damping")) m.params.string_damping = number(j["string_damping"], "string_damping");
  if (j.contains("bar_inertia")) m.params.bar_inertia = number(j["bar_inertia"], "bar_inertia");
  m.prestress = vector_from_json(require(j, "prestress", w), static_cast<int>(m.spec.strings.size()), "prestress");
  if (j.contains("fixed_nodes")) m.fixed_nodes = int_list(j["fixed_nodes"], "fixed_nodes");
  if (j.contains("external_force") && !j["external_force"].empty()) {
    m.external_force = nodal_vector(j["external_force"], d, "external_force");
  }
  if (j.contains("output_nodes")) m.output_nodes = int_list(j["output_nodes"], "output_nodes");
  if (j.contains("measured_nodes")) m.measured_nodes = int_list(j["measured_nodes"], "measured_nodes");
  try {
    finalize(&m);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("model: ") + e.what());
  }
  return m;
}

Json model_to_json(const TensegrityModel& m) {
  const int d = m.spec.dimension;
  Json j;
  j["name"] = m.name;
  j["dimension"] = d;
  j["nodes"] = nodal_to_json(m.user_positions, d);
  j["bars"] = pairs_to_json(m.spec.bars);
  j["strings"] = pairs_to_json(m.spec.strings);
  j["point_mass_nodes"] = m.spec.point_mass_nodes;
  j["bar_mass"] = m.params.bar_mass;
  j["point_mass"] = m.params.point_mass;
  j["string_stiffness"] = m.params.string_stiffness;
  j["string_damping"] = m.params.string_damping;
  if (m.params.bar_inertia >= 0.0) j["bar_inertia"] = m.params.bar_inertia;
  j["prestress"] = vector_to_json(m.prestress);
  j["fixed_nodes"] = m.fixed_nodes;
  j["external_force"] = nodal_to_json(m.external_force, d);
  j["output_nodes"] = m.output_nodes;
  j["measured_nodes"] = m.measured_nodes;
  return j;
}

ProblemFile problem_from_json(const Json& j, const TensegrityModel& model) {
  const std::string w = "problem";
  if (!j.is_object()) throw InputError("problem: expected an object");
  ProblemFile f;
  f.state_feedback = j.value("state_feedback", false);
  CodesignProblem& p = f.problem;
  try {
    p.system = tensegrity_descriptor(model, j.value("measure_velocity", true));
  } catch (const std::exception& e) {
    throw InputError(std::string("model: ") + e.what());
  }
  const DescriptorSystem& s = p.system;
  const int nw = s.disturbance_count(), ny = s.output_count(), m = s.input_count();
  const int l = s.measurement_count(), np = s.parameter_count();
  p.W_p = square_from_json(require(j, "W_p", w), nw, "W_p");
  p.Y_bar = square_from_json(require(j, "Y_bar", w), ny, "Y_bar");
  p.U_bar = square_from_json(require(j, "U_bar", w), m, "U_bar");

  if (j.contains("fixed")) {
    const Json& fx = j["fixed"];
    p.fixed_parameters = true;
    p.fixed_alpha = fx.contains("alpha") ? vector_from_json(fx["alpha"], np, "fixed.alpha") : VectorXd(model.prestress);
    if (fx.contains("prestress_scale")) p.fixed_alpha *= number(fx["prestress_scale"], "fixed.prestress_scale");
    p.fixed_gamma_a = vector_from_json(require(fx, "gamma_a", "fixed"), m, "fixed.gamma_a");
    p.fixed_gamma_s = vector_from_json(require(fx, "gamma_s", "fixed"), l, "fixed.gamma_s");
  } else {
    p.budget = number(require(j, "budget", w), "budget");
    p.gamma_a_cap = vector_from_json(require(j, "gamma_a_cap", w), m, "gamma_a_cap");
    if (!f.state_feedback) p.gamma_s_cap = vector_from_json(require(j, "gamma_s_cap", w), l, "gamma_s_cap");
    if (j.contains("alpha_scale")) {
      const VectorXd sc = vector_from_json(j["alpha_scale"], 2, "alpha_scale");
      p.alpha_lower = sc(0) * model.prestress;
      p.alpha_upper = sc(1) * model.prestress;
    } else {
      p.alpha_lower = vector_from_json(require(j, "alpha_lower", w), np, "alpha_lower");
      p.alpha_upper = vector_from_json(require(j, "alpha_upper", w), np, "alpha_upper");
    }
    const Json& pr = require(j, "prices", w);
    p.prices.actuator = vector_from_json(require(pr, "actuator", "prices"), m, "prices.actuator");
    if (!f.state_feedback) p.prices.sensor = vector_from_json(require(pr, "sensor", "prices"), l, "prices.sensor");
    p.prices.structure = vector_from_json(require(pr, "structure", "prices"), np, "prices.structure");
  }

  if (j.contains("options")) {
    const Json& o = j["options"];
    f.options.max_iterations = o.value("max_iterations", f.options.max_iterations);
    f.options.relative_tolerance = o.value("relative_tolerance", f.options.relative_tolerance);
    f.options.max_phase_one_iterations = o.value("max_phase_one_iterations", f.options.max_phase_one_iterations);
  }
  try {
    p.validate(f.state_feedback);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("problem: ") + e.what());
  }
  return f;
}

Json verification_to_json(const VerificationReport& r) {
  return Json{{"passed", r.passed},
              {"stable", r.stable},
              {"spectral_abscissa", r.spectral_abscissa},
              {"price", r.price},
              {"output_excess", r.output_excess},
              {"control_excess", r.control_excess},
              {"Y", matrix_to_json(r.Y)},
              {"U", matrix_to_json(r.U)},
              {"failures", r.failures}};
}

Json solution_to_json(const CodesignSolution& s, const CodesignProblem& p) {
  const DesignPoint& d = s.design;
  Json j;
  j["target"] = to_string(s.target);
  j["z"] = s.z;
  j["status"] = s.status;
  j["message"] = s.message;
  j["converged"] = s.converged;
  j["iterations"] = s.iterations;
  j["phase_one_iterations"] = s.phase_one_iterations;
  j["state_feedback"] = s.state_feedback;
  j["alpha"] = vector_to_json(d.alpha);
  j["gamma_a"] = vector_to_json(d.gamma_a);
  j["gamma_s"] = vector_to_json(d.gamma_s);
  j["price"] = p.fixed_parameters ? 0.0 : price(d.gamma_a, d.gamma_s, d.alpha, p.prices);
  if (s.state_feedback) {
    j["K"] = matrix_to_json(d.K);
  } else {
    j["controller"] = Json{{"A_c", matrix_to_json(d.controller.A_c)},
                           {"B_c", matrix_to_json(d.controller.B_c)},
                           {"C_c", matrix_to_json(d.controller.C_c)}};
  }
  j["Q"] = matrix_to_json(d.Q);
  j["history"] = s.history;
  j["residuals"] = s.residuals;
  j["verification"] = verification_to_json(s.verification);
  return j;
}

StoredSolution solution_from_json(const Json& j) {
  const std::string w = "solution";
  StoredSolution out;
  try {
    out.target = parse_target(require(j, "target", w).get<std::string>());
  } catch (const std::exception& e) {
    throw InputError(std::string("solution: ") + e.what());
  }
  out.z = number(require(j, "z", w), "z");
  out.state_feedback = j.value("state_feedback", false);
  DesignPoint& d = out.design;
  d.alpha = vector_from_json(require(j, "alpha", w), -1, "alpha");
  d.gamma_a = vector_from_json(require(j, "gamma_a", w), -1, "gamma_a");
  d.gamma_s = vector_from_json(require(j, "gamma_s", w), -1, "gamma_s");
  if (out.state_feedback) {
    d.K = matrix_from_json(require(j, "K", w), "K");
  } else {
    const Json& c = require(j, "controller", w);
    d.controller.A_c = matrix_from_json(require(c, "A_c", "controller"), "A_c");
    d.controller.B_c = matrix_from_json(require(c, "B_c", "controller"), "B_c");
    d.controller.C_c = matrix_from_json(require(c, "C_c", "controller"), "C_c");
  }
  if (j.contains("Q")) d.Q = matrix_from_json(j["Q"], "Q");
  return out;
}

SynthesisConfig synthesis_from_json(const Json& j, const DescriptorSystem& ds) {
  const int nw = ds.disturbance_count(), ny = ds.output_count(), m = ds.input_count();
  const int l = ds.measurement_count();
  const Json empty = Json::object();
  const Json& c = j.is_object() ? j : empty;
  SynthesisConfig s;
  s.W_p = square_from_json(c.value("W_p", Json(0.1)), nw, "W_p");
  s.Y_bar = square_from_json(c.value("Y_bar", Json(0.02)), ny, "Y_bar");
  s.U_bar = square_from_json(c.value("U_bar", Json(1.2)), m, "U_bar");
  s.gamma_a = vector_from_json(c.value("gamma_a", Json(1e3)), m, "gamma_a");
  s.gamma_s = vector_from_json(c.value("gamma_s", Json(1e3)), l, "gamma_s");
  try {
    s.target = parse_target(c.value("target", std::string("ybar")));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("synthesis: ") + e.what());
  }
  if (s.target == Target::kBudget || s.target == Target::kAlphaUpper || s.target == Target::kAlphaLower) {
    throw InputError("synthesis: target must be ybar or ubar with frozen structure");
  }
  return s;
}

}  // namespace cli
}  // namespace tcd
