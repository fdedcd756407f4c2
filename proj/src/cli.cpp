#include "cdtopt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cdtopt/analytic.hpp"
#include "cdtopt/error.hpp"
#include "cdtopt/io.hpp"

namespace cdtopt::cli {

namespace fs = std::filesystem;

Method parse_method(const std::string& name) {
  if (name == "cdt") return Method::Cdt;
  if (name == "simp") return Method::Simp;
  if (name == "beso") return Method::Beso;
  throw Error(ErrorCode::Usage, "unknown method '" + name + "' (cdt, simp, beso)");
}

const char* to_string(Method method) {
  switch (method) {
    case Method::Cdt: return "cdt";
    case Method::Simp: return "simp";
    case Method::Beso: return "beso";
  }
  return "unknown";
}

std::pair<int, int> parse_mesh(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x != std::string::npos) {
      std::size_t used_a = 0, used_b = 0;
      const int nx = std::stoi(text.substr(0, x), &used_a);
      const int ny = std::stoi(text.substr(x + 1), &used_b);
      if (used_a == x && used_b == text.size() - x - 1 && nx > 0 && ny > 0) return {nx, ny};
    }
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::Usage, "mesh must look like 80x30, got '" + text + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// `key = value` lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Usage, "cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Usage, path + ":" + std::to_string(number) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

struct Parser {
  CLI::App app{"Binary topology optimization by a canonical dual knapsack solver", "cdtopt"};
  CLI::App* run = nullptr;
  CLI::App* demo = nullptr;
  CLI::App* probe = nullptr;
  CliInvocation inv;
  std::string problem = "mbb", method = "cdt", gains = "current", filter = "sensitivity";
  std::string pgm = "p5", out_dir;
  std::vector<std::string> meshes{"20x8", "40x15", "80x30"};
  double beta = 0.0;  // run: initial knapsack beta when > 0
  std::string config;

  Parser() {
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    run = app.add_subcommand("run", "Optimize a benchmark structure");
    auto& r = inv.run;
    run->add_option("--problem", problem, "mbb, cantilever or cantilever3d")->capture_default_str();
    run->add_option("--nelx", r.problem.nelx, "Elements along x")->capture_default_str();
    run->add_option("--nely", r.problem.nely, "Elements along y")->capture_default_str();
    run->add_option("--nelz", r.problem.nelz, "Elements along z (3-D)")->capture_default_str();
    run->add_option("--volfrac", r.cdt.volfrac, "Target volume fraction in (0, 1]")->capture_default_str();
    run->add_option("--mu", r.cdt.mu, "Volume reduction rate per step")->capture_default_str();
    run->add_option("--method", method, "cdt, simp or beso")->capture_default_str();
    run->add_option("--E", r.material.E, "Young's modulus")->capture_default_str();
    run->add_option("--nu", r.material.nu, "Poisson ratio")->capture_default_str();
    run->add_option("--E-min", r.material.E_min, "Void modulus")->capture_default_str();
    run->add_option("--load", r.problem.load, "Load magnitude")->capture_default_str();
    run->add_option("--tau0", r.cdt.tau0, "Initial volume multiplier")->capture_default_str();
    run->add_option("--omega1", r.cdt.omega1, "Inner tolerance")->capture_default_str();
    run->add_option("--omega2", r.cdt.omega2, "Outer tolerance")->capture_default_str();
    run->add_option("--max-outer", r.cdt.max_outer, "Outer iteration limit")->capture_default_str();
    run->add_option("--max-inner", r.cdt.max_inner, "Inner iteration limit")->capture_default_str();
    run->add_option("--beta", beta, "Initial knapsack beta (default from the gains)");
    run->add_option("--gains", gains, "current or full element modulus in the gains")->capture_default_str();
    run->add_option("--penal", r.simp.penal, "SIMP penalty")->capture_default_str();
    run->add_option("--rmin", r.simp.rmin, "SIMP filter radius")->capture_default_str();
    run->add_option("--filter", filter, "SIMP filter: sensitivity or density")->capture_default_str();
    run->add_option("--max-iters", r.simp.max_iters, "SIMP iteration limit")->capture_default_str();
    run->add_option("--pgm", pgm, "Image format: p5 or p2")->capture_default_str();
    common(run);

    demo = app.add_subcommand("demo", "Evaluate an analytic example");
    auto& d = inv.demo;
    demo->add_option("--name", d.name, "buridan, truss, counterexample or double-well")->capture_default_str();
    demo->add_option("--beta", d.beta, "double-well beta")->capture_default_str();
    demo->add_option("--lambda", d.lambda, "double-well lambda")->capture_default_str();
    demo->add_option("--f", d.load, "double-well load vector")->capture_default_str();
    demo->add_option("--w-base", d.w_base, "buridan base gain")->capture_default_str();
    demo->add_option("--epsilon", d.epsilon, "buridan gain offset or truss load offset");
    demo->add_option("--favoured", d.favoured, "buridan element receiving epsilon (0 or 1)")->capture_default_str();
    demo->add_option("--a", d.a, "counterexample soft stiffness (default (2 - sqrt 2) / 2)");
    demo->add_option("--p", d.penal, "counterexample penalty exponent")->capture_default_str();
    demo->add_flag("--perturb,!--no-perturb", d.perturb, "truss: break exact ties")->capture_default_str();
    common(demo);

    probe = app.add_subcommand("probe", "Time CDT and BESO over a mesh sweep");
    auto& p = inv.probe;
    probe->add_option("--methods", p.methods, "Methods (cdt, beso, simp)")->delimiter(',')->capture_default_str();
    probe->add_option("--meshes", meshes, "Meshes such as 20x8,40x15")->delimiter(',')->capture_default_str();
    probe->add_option("--volfrac", p.settings.volfrac, "Target volume fraction")->capture_default_str();
    probe->add_option("--mu", p.settings.mu, "Volume reduction rate")->capture_default_str();
    probe->add_option("--max-outer", p.settings.max_outer, "Outer iteration limit")->capture_default_str();
    common(probe);
  }

  void common(CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory (default $CDTOPT_OUT_DIR or ./out)");
    sub->add_option("--config", config, "File of key = value lines; flags override it");
  }

  CLI::App* find_sub(const std::string& name) const {
    for (auto* s : {run, demo, probe})
      if (s->get_name() == name) return s;
    return nullptr;
  }

  // Inserts the config file's settings ahead of the user's flags.
  std::vector<std::string> expand(const std::vector<std::string>& args) {
    if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
    CLI::App* sub = find_sub(args[0]);
    if (!sub) return args;
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::vector<std::string> out{args[0]};
    for (const auto& [key, value] : read_config(path)) {
      const std::string flag = "--" + key;
      const CLI::Option* opt = sub->get_option_no_throw(flag);
      if (!opt || key == "config")
        throw Error(ErrorCode::Usage, "unknown key '" + key + "' in " + path);
      if (given_on_command_line(args, flag)) continue;
      if (opt->get_type_size() == 0) {
        out.push_back(flag + "=" + value);
      } else {
        out.push_back(flag);
        std::istringstream tokens(value);
        for (std::string t; tokens >> t;) out.push_back(t);
      }
    }
    out.insert(out.end(), args.begin() + 1, args.end());
    return out;
  }
};

// Validation failures become usage errors that list the subcommand's flags.
void as_usage(const CLI::App& sub, const std::function<void()>& check) {
  try {
    check();
  } catch (const Error& e) {
    throw Error(ErrorCode::Usage, std::string(e.what()) + "\n\n" + sub.help());
  }
}

}  // namespace

CliInvocation parse_cli(const std::vector<std::string>& args) {
  Parser p;
  const std::vector<std::string> full = p.expand(args);
  std::vector<const char*> argv{"cdtopt"};
  for (const auto& a : full) argv.push_back(a.c_str());
  try {
    p.app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    auto* sub = p.app.get_subcommands().empty() ? nullptr : p.app.get_subcommands().front();
    p.inv.help = sub ? sub->help() : p.app.help();
    return p.inv;
  } catch (const CLI::CallForAllHelp&) {
    p.inv.help = p.app.help("", CLI::AppFormatMode::All);
    return p.inv;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    msg += "\n\n" + p.app.help("", CLI::AppFormatMode::All);
    throw Error(ErrorCode::Usage, msg);
  }

  CliInvocation inv = p.inv;
  if (p.run->parsed()) inv.subcommand = Subcommand::Run;
  if (p.demo->parsed()) inv.subcommand = Subcommand::Demo;
  if (p.probe->parsed()) inv.subcommand = Subcommand::Probe;

  if (!p.out_dir.empty()) {
    inv.out_dir = p.out_dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    inv.out_dir = env;
  }

  const CLI::App* sub = inv.subcommand == Subcommand::Run    ? p.run
                        : inv.subcommand == Subcommand::Demo ? p.demo
                                                             : p.probe;
  as_usage(*sub, [&] {
    switch (inv.subcommand) {
      case Subcommand::Run: {
        auto& r = inv.run;
        r.problem.kind = problems::parse_kind(p.problem);
        if (r.problem.kind != problems::ProblemKind::Cantilever3d) r.problem.nelz = 0;
        r.method = parse_method(p.method);
        r.cdt.gains = driver::parse_gain_model(p.gains);
        if (p.beta > 0.0) r.cdt.beta = p.beta;
        if (p.filter == "sensitivity") r.simp.filter = baselines::FilterType::Sensitivity;
        else if (p.filter == "density") r.simp.filter = baselines::FilterType::Density;
        else throw Error(ErrorCode::Usage, "filter must be sensitivity or density");
        if (p.pgm != "p5" && p.pgm != "p2") throw Error(ErrorCode::Usage, "pgm must be p5 or p2");
        r.ascii_pgm = p.pgm == "p2";
        r.problem.validate();
        r.material.validate();
        r.cdt.validate();
        if (r.method == Method::Simp) r.simp.validate();
        break;
      }
      case Subcommand::Demo: {
        auto& d = inv.demo;
        if (d.name != "buridan" && d.name != "truss" && d.name != "counterexample" &&
            d.name != "double-well")
          throw Error(ErrorCode::Usage,
                      "unknown demo '" + d.name + "' (buridan, truss, counterexample, double-well)");
        if (!(d.beta > 0.0) || !(d.lambda > 0.0)) throw Error(ErrorCode::Usage, "beta and lambda must be > 0");
        if (d.load.empty()) throw Error(ErrorCode::Usage, "--f needs at least one value");
        if (!(d.w_base > 0.0)) throw Error(ErrorCode::Usage, "w-base must be > 0");
        if (d.favoured != 0 && d.favoured != 1) throw Error(ErrorCode::Usage, "favoured must be 0 or 1");
        if (d.a < 0.0 || !(d.penal >= 1.0)) throw Error(ErrorCode::Usage, "need a > 0 and p >= 1");
        break;
      }
      case Subcommand::Probe: {
        auto& pr = inv.probe;
        pr.meshes.clear();
        for (const auto& m : p.meshes) pr.meshes.push_back(parse_mesh(m));
        for (const auto& m : pr.methods) parse_method(m);
        driver::CdtConfig check;
        check.volfrac = pr.settings.volfrac;
        check.mu = pr.settings.mu;
        check.max_outer = pr.settings.max_outer;
        check.validate();
        break;
      }
    }
  });
  return inv;
}

namespace {

using io::format_number;

void run_command(const CliInvocation& inv, std::ostream& out) {
  const auto& r = inv.run;
  const fem::StructuralModel model = problems::build(r.problem, r.material);
  driver::TopOptResult result;
  bool ok = true;
  switch (r.method) {
    case Method::Cdt:
      result = driver::run_cdt(model, r.cdt);
      break;
    case Method::Beso: {
      baselines::BesoConfig c;
      c.mu = r.cdt.mu;
      c.omega2 = r.cdt.omega2;
      c.max_outer = r.cdt.max_outer;
      c.gains = r.cdt.gains;
      result = baselines::run_beso(model, r.cdt.volfrac, c);
      break;
    }
    case Method::Simp: {
      auto s = baselines::run_simp(model, r.cdt.volfrac, r.simp);
      ok = s.status == baselines::SimpStatus::Converged;
      result = std::move(s.run);
      break;
    }
  }

  fs::create_directories(inv.out_dir);
  const auto images = io::write_density_pgm(result.rho, model.mesh(), fs::path(inv.out_dir) / "density.pgm",
                                            r.ascii_pgm ? io::PgmFormat::Ascii : io::PgmFormat::Binary);
  io::write_runrecord_csv(result.record, fs::path(inv.out_dir) / "history.csv");

  const double n = static_cast<double>(result.rho.size());
  out << "method " << to_string(r.method) << '\n'
      << "problem " << problems::to_string(r.problem.kind) << ' ' << r.problem.nelx << 'x' << r.problem.nely;
  if (r.problem.nelz > 0) out << 'x' << r.problem.nelz;
  out << '\n'
      << "iterations " << result.record.entries.size() << '\n'
      << "converged " << (result.converged ? "yes" : "no") << '\n'
      << "compliance " << format_number(result.compliance) << '\n'
      << "volume " << format_number(result.rho.sum() / n) << '\n'
      << "gray_fraction " << format_number(baselines::gray_fraction(result.rho)) << '\n'
      << "residual " << format_number(result.displacement.relative_residual) << '\n';
  for (const auto& p : images) out << "wrote " << p.string() << '\n';
  out << "wrote " << (fs::path(inv.out_dir) / "history.csv").string() << '\n';
  if (!ok) throw Error(ErrorCode::MaxOuterExceeded, "SIMP stopped at the iteration limit");
}

void demo_command(const CliInvocation& inv, std::ostream& out) {
  const auto& d = inv.demo;
  const fs::path dir(inv.out_dir);
  fs::create_directories(dir);

  if (d.name == "buridan") {
    const auto r = analytic::buridan(d.w_base, d.epsilon.value_or(0.05), d.favoured);
    out << "gains " << format_number(r.instance.gains[0]) << ' ' << format_number(r.instance.gains[1]) << '\n'
        << "tau_c " << format_number(r.report.tau_c) << " in [" << format_number(r.report.tau_lower) << ", "
        << format_number(r.report.tau_upper) << "]\n"
        << "unique " << (r.report.unique ? "yes" : "no") << '\n'
        << "rho " << r.solution.density.rho[0] << ' ' << r.solution.density.rho[1] << '\n'
        << "perturbed " << (r.solution.certificate.perturbed ? "yes" : "no") << '\n'
        << "brute_force_optima " << r.brute.optimal_subsets.size() << '\n';
    return;
  }

  if (d.name == "truss") {
    analytic::TrussSpec spec;
    spec.epsilon = d.epsilon.value_or(0.01);
    spec.perturb_ties = d.perturb;
    const auto r = analytic::symmetric_truss(spec);
    out << "rho " << r.rho[0] << ' ' << r.rho[1] << '\n'
        << "potential " << format_number(r.potential) << '\n'
        << "perturbed_potential " << format_number(r.perturbed_potential) << '\n'
        << "steps " << r.steps << '\n'
        << "cycled " << (r.cycled ? "yes" : "no") << '\n';
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(r.history.size()), 3);
    for (std::size_t i = 0; i < r.history.size(); ++i)
      rows.row(static_cast<Eigen::Index>(i)) << static_cast<double>(i), r.history[i][0], r.history[i][1];
    io::write_table_csv({"step", "rho1", "rho2"}, rows, dir / "truss_history.csv");
    out << "wrote " << (dir / "truss_history.csv").string() << '\n';
    return;
  }

  if (d.name == "counterexample") {
    analytic::CounterexampleSpec spec;
    if (d.a > 0.0) spec.a = d.a;
    spec.penal = d.penal;
    const auto r = analytic::simp_counterexample(spec);
    for (const auto& m : r.local_minima) {
      const bool global = std::any_of(r.global_minima.begin(), r.global_minima.end(),
                                      [&](const auto& g) { return g.rho == m.rho; });
      out << (global ? "global_min " : "local_min ") << format_number(m.rho[0]) << ' '
          << format_number(m.rho[1]) << " value " << format_number(m.value) << '\n';
    }
    io::write_table_csv({"rho1", "rho2", "P"}, r.surface, dir / "surface.csv");
    io::write_table_csv({"t", "P"}, r.boundary, dir / "boundary.csv");
    out << "wrote " << (dir / "surface.csv").string() << '\n'
        << "wrote " << (dir / "boundary.csv").string() << '\n';
    return;
  }

  analytic::DoubleWellSpec spec;
  spec.beta = d.beta;
  spec.lambda = d.lambda;
  spec.load = Eigen::Map<const Eigen::VectorXd>(d.load.data(), static_cast<Eigen::Index>(d.load.size()));
  const auto r = analytic::double_well_triality(spec);
  const Eigen::Index n = spec.dimension();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(r.criticals.size()), 4 + n);
  std::vector<std::string> header{"dual", "kind", "primal", "dual_value"};
  for (Eigen::Index k = 0; k < n; ++k) header.push_back("x" + std::to_string(k));
  for (std::size_t i = 0; i < r.criticals.size(); ++i) {
    const auto& c = r.criticals[i];
    out << analytic::to_string(c.kind) << " dual " << format_number(c.dual) << " x";
    for (Eigen::Index k = 0; k < n; ++k) out << ' ' << format_number(c.x[k]);
    out << " primal " << format_number(c.primal_value) << " dual_value " << format_number(c.dual_value) << '\n';
    const auto row = static_cast<Eigen::Index>(i);
    rows(row, 0) = c.dual;
    rows(row, 1) = static_cast<double>(c.kind);
    rows(row, 2) = c.primal_value;
    rows(row, 3) = c.dual_value;
    rows.row(row).tail(n) = c.x.transpose();
  }
  for (const auto& x : r.perturbed_minimizers) {
    out << "perturbed_minimizer";
    for (Eigen::Index k = 0; k < n; ++k) out << ' ' << format_number(x[k]);
    out << '\n';
  }
  io::write_table_csv(header, rows, dir / "double_well_roots.csv");
  out << "wrote " << (dir / "double_well_roots.csv").string() << '\n';
}

void probe_command(const CliInvocation& inv, std::ostream& out) {
  const auto& p = inv.probe;
  const auto rows = baselines::per_iteration_cost_probe(p.methods, p.meshes, p.settings);
  baselines::write_cost_csv(out, rows);
  fs::create_directories(inv.out_dir);
  const fs::path path = fs::path(inv.out_dir) / "cost.csv";
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  baselines::write_cost_csv(file, rows);
  if (!file) throw Error(ErrorCode::Io, "write failed: " + path.string());
  out << "wrote " << path.string() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliInvocation inv;
  try {
    inv = parse_cli(args);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
  if (!inv.help.empty()) {
    out << inv.help;
    return 0;
  }
  try {
    switch (inv.subcommand) {
      case Subcommand::Run: run_command(inv, out); break;
      case Subcommand::Demo: demo_command(inv, out); break;
      case Subcommand::Probe: probe_command(inv, out); break;
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.code() == ErrorCode::Usage ? 1 : 2;
  } catch (const fs::filesystem_error& e) {
    err << "Io: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace cdtopt::cli
