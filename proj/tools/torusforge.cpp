#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "torusforge/cohomology.hpp"
#include "torusforge/errors.hpp"
#include "torusforge/log.hpp"
#include "torusforge/newton.hpp"
#include "torusforge/serialize.hpp"
#include "torusforge/spinorbit.hpp"
#include "torusforge/verify.hpp"

namespace tf = torusforge;
using tf::cli::json;
using tf::cli::UsageError;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

// A finished command: the document to emit and its exit code.
struct Outcome {
  json document;
  int code = kExitOk;
  std::string text;  // raw output (CSV) when not empty
};

// Sinks to the configured path, or stdout when it is null.
void emit(const json& output_path, const std::string& body) {
  if (output_path.is_null()) {
    std::cout << body;
    return;
  }
  std::ofstream out(output_path.get<std::string>());
  if (!out) throw UsageError("cannot write '" + output_path.get<std::string>() + "'");
  out << body;
}

json error_json(std::string_view kind, const std::string& message) {
  return {{"kind", std::string(kind)}, {"message", message}};
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

tf::NewtonConfig newton_config(const json& j, bool trace) {
  tf::NewtonConfig c;
  c.max_iters = j.at("max_iters").get<int>();
  c.residual_tol = j.at("residual_tol").get<double>();
  c.divergence_guard = j.at("divergence_guard").get<double>();
  c.tail_tol = j.at("tail_tol").get<double>();
  c.eps0 = j.at("eps0").get<double>();
  c.pin_translation = j.at("pin_translation").get<bool>();
  c.active = j.at("active").get<std::vector<int>>();
  c.s = j.at("s").get<double>();
  c.sigma = j.at("sigma").get<double>();
  c.trace = trace;
  return c;
}

tf::SpinOrbitProblem spin_orbit_problem(const json& j, bool trace) {
  tf::SpinOrbitProblem p;
  p.alpha = j.at("alpha").get<double>();
  p.eta = j.at("eta").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.order = j.at("order").get<int>();
  p.nu = p.alpha;
  if (!j.at("potential").is_null()) {
    p.potential = tf::series_from_json(tf::cli::inline_or_file(j["potential"], "spin_orbit.potential"));
    if (p.potential.dim() != 2) throw UsageError("spin_orbit.potential must be a series on T^2");
    if (p.potential.order() != p.order) p.potential = p.potential.with_order(p.order);
  }
  p.newton = newton_config(j.at("newton"), trace);
  return p;
}

json point_json(const tf::AttractorCurvePoint& pt) {
  json out{{"eta", pt.eta},
           {"epsilon", pt.epsilon},
           {"nu_star", number_or_null(pt.nu_star)},
           {"b_residual", number_or_null(pt.b_residual)},
           {"newton_iters", pt.newton_iters},
           {"certificate_exponent", number_or_null(pt.certificate_exponent)}};
  if (pt.error) out["error"] = error_json(tf::to_string(*pt.error), pt.message);
  if (pt.embedding) out["embedding"] = tf::to_json(*pt.embedding);
  return out;
}

// ---- check-dio -------------------------------------------------------------------------------

Outcome cmd_check_dio(const json& cfg) {
  const json& c = cfg.at("check_dio");
  tf::DiophantineParams p;
  p.alpha = c.at("alpha").get<std::vector<double>>();
  p.gamma = c.at("gamma").get<double>();
  p.tau = c.at("tau").get<double>();
  if (!c.at("A").is_null()) {
    const Eigen::MatrixXd A = tf::matrix_from_json(c["A"]);
    if (A.rows() != A.cols()) throw UsageError("check_dio.A must be square");
    const Eigen::VectorXcd eigs = A.eigenvalues();
    p.eigs.assign(eigs.data(), eigs.data() + eigs.size());
  }
  const auto report = tf::check_diophantine(p, c.at("kmax").get<int>());
  Outcome out;
  out.document = {{"kind", "diophantine_report"}, {"config", cfg}, {"report", tf::to_json(report)}};
  if (!report.ok()) {
    bool exact = false;
    for (const auto* cond : {&report.dio1, &report.dio2, &report.dio3})
      exact = exact || (!cond->ok && cond->worst_divisor <= tf::kDivisorFloor);
    out.document["error"] =
        error_json(tf::to_string(exact ? tf::ErrorKind::ExactResonance : tf::ErrorKind::SmallDivisor),
                   exact ? "exact resonance within the scan" : "a divisor falls below gamma / |k|^tau within the scan");
    out.code = kExitNumerical;
  }
  return out;
}

// ---- solve -----------------------------------------------------------------------------------

Outcome cmd_solve(const json& cfg) {
  const json& c = cfg.at("solve");
  const auto variant = tf::variant_from_string(c.at("variant").get<std::string>());
  tf::Flavor flavor = variant == tf::Variant::moser                ? tf::Flavor::general
                      : variant == tf::Variant::herman_dissipative ? tf::Flavor::exact_symplectic
                                                                   : tf::Flavor::symplectic;
  if (!c.at("flavor").is_null()) flavor = tf::flavor_from_string(c["flavor"].get<std::string>());
  const json v_json = tf::cli::inline_or_file(c.at("v"), "solve.v");
  const auto v = tf::field_from_json(v_json);
  const auto u0 = tf::field_from_json(tf::cli::inline_or_file(c.at("u0"), "solve.u0"));
  const auto ncfg = newton_config(c.at("newton"), cfg.at("trace").get<bool>());

  json doc{{"kind", "newton_result"}, {"config", cfg}, {"v", v_json}};
  const json& twist = c.at("twist");
  if (twist.at("eliminate").get<bool>()) {
    if (variant != tf::Variant::moser) throw UsageError("solve.twist.eliminate needs the moser variant");
    auto r = tf::eliminate_twist_matrix(v, tf::NewtonState::initial(u0, flavor), ncfg, twist.at("b_tol").get<double>(),
                                        twist.at("max_outer").get<int>());
    doc["result"] = tf::to_json(r.result);
    doc["twist"] = {{"A", tf::to_json(r.A)}, {"min_gap", r.min_gap}, {"outer_iterations", r.outer_iterations}};
  } else {
    doc["result"] = tf::to_json(tf::newton_solve(variant, v, tf::NewtonState::initial(u0, flavor), ncfg));
  }
  return {std::move(doc), kExitOk, {}};
}

// ---- spin-orbit ------------------------------------------------------------------------------

Outcome cmd_spin_orbit(const json& cfg, bool sweep) {
  const json& c = cfg.at("spin_orbit");
  const bool trace = cfg.at("trace").get<bool>();
  const bool emit_torus = cfg.at("emit_torus").get<bool>();
  const tf::SpinOrbitProblem p = spin_orbit_problem(c, trace);
  sweep = sweep || !c.at("eta_grid").is_null() || !c.at("epsilon_grid").is_null();
  Outcome out;
  if (!sweep) {
    auto r = tf::eliminate_nu(p);
    tf::SpinOrbitProblem solved = p;
    solved.nu = r.nu_star;
    const auto& res = r.torus.result;
    out.document = {{"kind", "spin_orbit_point"},
                    {"config", cfg},
                    {"point",
                     {{"eta", p.eta},
                      {"epsilon", p.epsilon},
                      {"nu_star", r.nu_star},
                      {"b_residual", r.b_residual},
                      {"newton_iters", res.iterations},
                      {"certificate_exponent", res.certificate ? json(res.certificate->exponent) : json(nullptr)},
                      {"evaluations", r.evaluations}}}};
    if (emit_torus) {
      out.document["result"] = tf::to_json(res);
      out.document["v"] = tf::to_json(tf::build_extended_field(solved));
    }
    return out;
  }
  auto grid = [&](const char* key, double fallback) {
    return c.at(key).is_null() ? std::vector<double>{fallback} : c[key].get<std::vector<double>>();
  };
  const auto eta_grid = grid("eta_grid", p.eta);
  const auto eps_grid = grid("epsilon_grid", p.epsilon);
  const auto points = tf::sweep_surface(p, eps_grid, eta_grid, cfg.at("jobs").get<int>(), emit_torus);
  const std::string format = c.at("format").get<std::string>();
  if (format == "csv") {
    std::ostringstream os;
    os << "# config: " << cfg.dump() << '\n';
    tf::write_sweep_csv(os, points);
    out.text = os.str();
  } else if (format == "json") {
    json pts = json::array();
    for (const auto& pt : points) pts.push_back(point_json(pt));
    out.document = {{"kind", "spin_orbit_sweep"}, {"config", cfg}, {"points", std::move(pts)}};
  } else {
    throw UsageError("spin_orbit.format must be csv or json");
  }
  return out;
}

// ---- verify ----------------------------------------------------------------------------------

struct Checks {
  json list = json::array();
  bool pass = true;

  void add(const std::string& name, double value, double tolerance, bool ok, json extra = json::object()) {
    extra["name"] = name;
    extra["value"] = number_or_null(value);
    extra["tolerance"] = tolerance;
    extra["pass"] = ok;
    list.push_back(std::move(extra));
    pass = pass && ok;
  }
  void below(const std::string& name, double value, double tolerance, json extra = json::object()) {
    add(name, value, tolerance, std::isfinite(value) && value <= tolerance, std::move(extra));
  }
};

void verify_state(Checks& checks, const tf::NewtonResult& r, const tf::VectorFieldJet& v, const json& c,
                  std::uint64_t seed) {
  const auto& x = r.x;
  checks.below("conjugacy_residual",
               tf::conjugacy_residual(x.g, x.u, x.lambda, v, c.at("samples").get<int>(), seed,
                                      c.at("r_max").get<double>()),
               c.at("tolerance").get<double>());
  if (!r.residuals.empty())
    checks.below("residual_drift", std::abs(tf::relative_residual(x, v) - r.residuals.back()),
                 c.at("drift_tol").get<double>());
}

void verify_rotation(Checks& checks, const tf::SpinOrbitProblem& p, const json& ode, const std::string& label,
                     std::optional<tf::TorusEmbedding> W) {
  // Repulsive tori (eta < 0) attract in reversed time.
  const double dt = ode.at("dt").get<double>();
  const double T = ode.at("T").get<double>() * (p.eta < 0.0 ? -1.0 : 1.0);
  const double th0 = W ? W->at(0.0, 0.0).first : 0.0;
  const double v0 = W ? W->at(0.0, 0.0).second : p.alpha;
  const int stride = std::max(1, static_cast<int>(std::abs(T) / dt / 20000));
  const auto traj = tf::integrate_spin_orbit(p, th0, v0, T, dt, 0.0, stride);
  const auto rn = tf::rotation_number(traj);
  checks.below("rotation_number" + label, std::abs(rn.value - p.alpha), ode.at("rotation_tol").get<double>(),
               {{"rotation_number", rn.value}, {"window_error", rn.error}});
  if (!W) return;
  const auto fl = tf::floquet_exponent(p, *W, ode.at("offset").get<double>(), 0.0, dt);
  const double rel = std::abs(fl.exponent + p.eta) / std::abs(p.eta);
  checks.below("floquet_exponent" + label, rel, ode.at("floquet_rel_tol").get<double>(),
               {{"exponent", fl.exponent},
                {"initial_distance", fl.initial_distance},
                {"final_distance", fl.final_distance}});
}

// Rows of a sweep CSV together with the config echoed in its first line.
json read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::string line;
  json cfg, points = json::array();
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# config: ", 0) == 0) {
      cfg = json::parse(line.substr(10));
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      continue;
    }
    if (cells.size() != header.size()) throw UsageError("ragged row in '" + path + "'");
    json row;
    for (std::size_t i = 0; i < cells.size(); ++i) row[header[i]] = number_or_null(std::stod(cells[i]));
    points.push_back(std::move(row));
  }
  if (cfg.is_null()) throw UsageError("'" + path + "' carries no config line");
  return {{"kind", "spin_orbit_sweep"}, {"config", cfg}, {"points", points}};
}

Outcome cmd_verify(const json& cfg) {
  const json& c = cfg.at("verify");
  if (c.at("input").is_null()) throw UsageError("missing required input 'verify.input'");
  const std::string input = c["input"].get<std::string>();
  const bool is_csv = input.size() >= 4 && input.substr(input.size() - 4) == ".csv";
  const json doc = is_csv ? read_sweep_csv(input) : tf::cli::load_json_file(input);
  const std::string kind = doc.value("kind", "");
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const json& ode = c.at("ode");
  const bool run_ode = ode.at("enabled").get<bool>();
  Checks checks;

  if (kind == "newton_result") {
    const auto r = tf::result_from_json(doc.at("result"));
    const json v_json = c.at("v").is_null() ? doc.at("v") : tf::cli::inline_or_file(c["v"], "verify.v");
    verify_state(checks, r, tf::field_from_json(v_json), c, seed);
  } else if (kind == "spin_orbit_point") {
    // The problem is rebuilt from the echoed config; ODE checks never touch the stored series.
    auto p = spin_orbit_problem(tf::cli::resolve_config(doc.at("config")).at("spin_orbit"), false);
    p.nu = doc.at("point").at("nu_star").get<double>();
    std::optional<tf::TorusEmbedding> W;
    if (doc.contains("result")) {
      const auto r = tf::result_from_json(doc["result"]);
      verify_state(checks, r, tf::build_extended_field(p), c, seed);
      W = tf::TorusEmbedding{r.x.g, p.alpha};
    }
    if (run_ode) verify_rotation(checks, p, ode, "", W);
  } else if (kind == "spin_orbit_sweep") {
    auto p = spin_orbit_problem(tf::cli::resolve_config(doc.at("config")).at("spin_orbit"), false);
    const int max_rows = ode.at("max_rows").get<int>();
    int done = 0;
    for (const auto& row : doc.at("points")) {
      if (!run_ode || done >= max_rows) break;
      if (row.at("nu_star").is_null() || row.contains("error")) continue;
      p.eta = row.at("eta").get<double>();
      p.epsilon = row.at("epsilon").get<double>();
      p.nu = row.at("nu_star").get<double>();
      std::ostringstream label;
      label.precision(6);
      label << "[eta=" << p.eta << ",epsilon=" << p.epsilon << "]";
      std::optional<tf::TorusEmbedding> W;
      if (row.contains("embedding")) W = tf::TorusEmbedding{tf::conjugacy_from_json(row["embedding"]), p.alpha};
      verify_rotation(checks, p, ode, label.str(), W);
      ++done;
    }
  } else {
    throw UsageError("'" + input + "' is not a torusforge artifact (kind '" + kind + "')");
  }
  Outcome out;
  out.document = {{"kind", "verification"}, {"config", cfg}, {"input", input}, {"checks", checks.list},
                  {"pass", checks.pass}};
  if (!checks.pass) {
    out.document["error"] = error_json("VerificationFailed", "at least one check exceeded its tolerance");
    out.code = kExitNumerical;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torusforge: KAM normal forms for dissipative vector fields on T^n x R^m"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  bool trace = false, emit_torus = false, sweep = false;
  std::string output;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--jobs", jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for randomized checks");
  app.add_flag("--trace", trace, "record per-iteration counter-terms");
  app.add_flag("--emit-torus", emit_torus, "attach the torus embedding to spin-orbit output");
  app.add_option("-o,--output", output, "output path (default stdout)");
  auto* check_dio = app.add_subcommand("check-dio", "check the Diophantine conditions of a frequency");
  auto* solve = app.add_subcommand("solve", "run the Newton scheme on a stored field");
  auto* spin = app.add_subcommand("spin-orbit", "eliminate nu for the dissipative spin-orbit problem");
  spin->add_flag("--sweep", sweep, "sweep the (epsilon, eta) grid and write CSV");
  auto* verify = app.add_subcommand("verify", "re-check a stored artifact against brute-force oracles");
  CLI11_PARSE(app, argc, argv);

  std::string section;
  json cfg;
  try {
    json user = config_path.empty() ? json::object() : tf::cli::load_json_file(config_path);
    cfg = tf::cli::resolve_config(user);
    if (jobs) cfg["jobs"] = *jobs;
    if (seed) cfg["seed"] = *seed;
    if (trace) cfg["trace"] = true;
    if (emit_torus) cfg["emit_torus"] = true;
    section = check_dio->parsed() ? "check_dio" : solve->parsed() ? "solve" : spin->parsed() ? "spin_orbit" : "verify";
    if (!output.empty()) cfg[section]["output"] = output;
    cfg["command"] = section;
    // Echo only the globals and the running command's section.
    for (const char* other : {"check_dio", "solve", "spin_orbit", "verify"})
      if (section != other) cfg.erase(other);
  } catch (const std::exception& e) {
    std::cerr << "torusforge: " << e.what() << '\n';
    return kExitUsage;
  }

  const json& output_path = cfg[section]["output"];
  try {
    Outcome out = check_dio->parsed() ? cmd_check_dio(cfg)
                  : solve->parsed()   ? cmd_solve(cfg)
                  : spin->parsed()    ? cmd_spin_orbit(cfg, sweep)
                                      : cmd_verify(cfg);
    (void)verify;
    emit(output_path, out.text.empty() ? out.document.dump(2) + "\n" : out.text);
    return out.code;
  } catch (const tf::NumericalError& e) {
    json doc{{"kind", "error"}, {"config", cfg}, {"error", error_json(tf::to_string(e.kind()), e.what())}};
    try {
      emit(output_path, doc.dump(2) + "\n");
    } catch (const std::exception&) {
      std::cout << doc.dump(2) << '\n';
    }
    return kExitNumerical;
  } catch (const UsageError& e) {
    std::cerr << "torusforge: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "torusforge: malformed input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "torusforge: " << e.what() << '\n';
    return kExitUsage;
  }
}
