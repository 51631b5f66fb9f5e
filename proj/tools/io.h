#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tcd/codesign.h"
#include "tcd/model.h"
#include "tcd/sweep.h"

namespace tcd {
namespace cli {

using Json = nlohmann::json;

/// Malformed or inconsistent input; maps to exit code 4.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode { kSuccess = 0, kInfeasible = 2, kVerificationFailure = 3, kInputError = 4 };

const char* version();

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a(const std::string& bytes);
/// Hex FNV-1a of the concatenated canonical dumps of the given documents.
std::string config_hash(const std::vector<Json>& inputs);
/// {"tool", "version", "command", "config_hash"}.
Json metadata(const std::string& command, const std::string& hash);
/// "# tcd <version> command=<command> config_hash=<hash>".
std::string csv_metadata_line(const std::string& command, const std::string& hash);

/// %.17g.
std::string format_double(double v);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
/// Pretty JSON; doubles are written in their shortest round-trip form.
std::string dump_json(const Json& j);

/// {"rows", "cols", "data"} with data row-major.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Eigen::VectorXd& v);
/// A list, or a number broadcast to `size` (size < 0: a list is required).
Eigen::VectorXd vector_from_json(const Json& j, int size, const std::string& what);
/// A number s (s I), a list (diagonal) or a matrix object/nested list.
Eigen::MatrixXd square_from_json(const Json& j, int n, const std::string& what);

/// Model file: dimension, nodes, bars, strings, point_mass_nodes, bar_mass,
/// string_stiffness, string_damping, point_mass, prestress, fixed_nodes,
/// external_force, and optionally name, bar_inertia, output_nodes,
/// measured_nodes.
TensegrityModel model_from_json(const Json& j);
Json model_to_json(const TensegrityModel& m);

/// Co-design problem for a descriptor system built from `model`. Fields:
/// W_p, Y_bar, U_bar, budget, gamma_a_cap, gamma_s_cap, alpha_lower,
/// alpha_upper (or alpha_scale = [lo, hi] times the prestress), prices
/// {actuator, sensor, structure}, optional fixed {alpha, gamma_a, gamma_s},
/// state_feedback and measure_velocity flags, and options.
struct ProblemFile {
  CodesignProblem problem;
  bool state_feedback = false;
  CodesignOptions options;
};
ProblemFile problem_from_json(const Json& j, const TensegrityModel& model);

Json solution_to_json(const CodesignSolution& s, const CodesignProblem& p);
/// Design point and claimed target value of a stored solution.
struct StoredSolution {
  DesignPoint design;
  Target target = Target::kBudget;
  double z = 0.0;
  bool state_feedback = false;
};
StoredSolution solution_from_json(const Json& j);
Json verification_to_json(const VerificationReport& r);

/// Synthesis settings of the bounds command; every field is optional.
SynthesisConfig synthesis_from_json(const Json& j, const DescriptorSystem& ds);

}  // namespace cli
}  // namespace tcd
