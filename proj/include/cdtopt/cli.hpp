#ifndef CDTOPT_CLI_HPP
#define CDTOPT_CLI_HPP

// Command-line front end: `run` optimizes a benchmark, `demo` evaluates one of
// the analytic examples, `probe` times the binary methods over a mesh sweep.
// Exit codes: 0 success, 1 usage error, 2 solver or I/O failure.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cdtopt/baselines.hpp"
#include "cdtopt/problems.hpp"

namespace cdtopt::cli {

inline constexpr const char* kOutDirEnv = "CDTOPT_OUT_DIR";

enum class Subcommand { Run, Demo, Probe };
enum class Method { Cdt, Simp, Beso };

Method parse_method(const std::string& name);
const char* to_string(Method method);

struct RunOptions {
  problems::ProblemSpec problem;
  fem::Material material;
  Method method = Method::Cdt;
  driver::CdtConfig cdt;  // volfrac, mu, tau0, omegas, gains and limits
  baselines::SimpConfig simp;
  bool ascii_pgm = false;
};

struct DemoOptions {
  std::string name = "double-well";  // buridan, truss, counterexample, double-well
  double beta = 1.0;
  double lambda = 2.0;
  std::vector<double> load{0.5};
  double w_base = 2.0;
  std::optional<double> epsilon;  // buridan 0.05, truss 0.01
  int favoured = 0;
  double a = 0.0;  // 0 selects (2 - sqrt 2) / 2
  double penal = 3.0;
  bool perturb = true;
};

struct ProbeOptions {
  std::vector<std::string> methods{"cdt", "beso"};
  std::vector<std::pair<int, int>> meshes{{20, 8}, {40, 15}, {80, 30}};
  baselines::ProbeSettings settings;
};

struct CliInvocation {
  Subcommand subcommand = Subcommand::Run;
  RunOptions run;
  DemoOptions demo;
  ProbeOptions probe;
  std::string out_dir = "out";
  std::string help;  // non-empty when help was requested
};

// Parses and validates every flag; throws Error(Usage) with the valid flags
// listed. A `--config FILE` of `key = value` lines supplies flags that the
// command line does not set. The output directory comes from --out, then
// CDTOPT_OUT_DIR, then "out".
CliInvocation parse_cli(const std::vector<std::string>& args);

// "80x30" -> (80, 30)
std::pair<int, int> parse_mesh(const std::string& text);

// Parses, executes and maps failures to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cdtopt::cli

#endif  // CDTOPT_CLI_HPP
