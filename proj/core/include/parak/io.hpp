#pragma once

#include "parak/classify.hpp"
#include "parak/dynamics.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace parak {

// One CLI invocation. Inputs accept a file path or inline JSON (anything
// starting with '{' or '[' is inline).
struct JobSpec {
  std::string command;  // classify | recognize | construct | decompose |
                        // limits | scan | witness | lattice-analyze
  std::string gens;     // group file
  std::string matrix;   // single 3x3 matrix
  std::string tag;      // family tag
  std::string values;   // scalar list for lattice-analyze
  std::string mode = "float";  // exact requires Gaussian-rational inputs
  Tol tol;
  double delta = 1e-3;         // scan: identity-approach threshold
  double deltaCluster = 1e-2;  // limits: chordal cluster radius
  int L = 8;                   // word-ball radius
  int n = 100;                 // export: points per curve
  int count = 100;             // witness: requested distinct elements
  std::string chart = "z1";
  std::string outPath;  // CSV destination for limits
  bool dual = false;    // limits: sample the dual action
  std::uint64_t seed = 20260815;
};

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInconclusive = 2;

// Group file schema:
//   {"mode": "exact"|"float", "tolerance": t | {"eps":..,"kappa":..},
//    "generators": [{"name":.., "matrix": [[e,e,e],[e,e,e],[e,e,e]]}]}
// An entry e is a number, an [re, im] pair, or an exact string like
// "1/2+3/4i". Throws ParseError (with line and column) and Singular.
MarkedGroup load_group(const std::string& path);
MarkedGroup parse_group(const std::string& text, const std::string& source = "<inline>");

Mat3 parse_matrix_text(const std::string& text, bool exactMode,
                       const std::string& source = "<inline>");

std::string tag_to_json(const FamilyTag& tag);
FamilyTag tag_from_json(const std::string& text, const std::string& source = "<inline>");

std::string group_to_json(const MarkedGroup& G);

// Exact-string and numeric scalar codecs shared by the schemas above.
Scalar parse_scalar_text(const std::string& text, bool exactMode);
std::string scalar_to_text(const Scalar& s);

// Dispatches one job, writes the report JSON (byte-identical for a fixed
// spec and seed) to `out`, and returns the exit code. Input errors raise
// Error; the CLI maps them to exit 1.
int run_job(const JobSpec& spec, std::ostream& out);

std::uint64_t seed_from_env(std::uint64_t fallback = 20260815);

extern const char* const kVersion;

}  // namespace parak
