#include "gapbump/config.hpp"
#include "gapbump/errors.hpp"
#include "gapbump/io.hpp"
#include "gapbump/multibump.hpp"
#include "gapbump/reduction.hpp"
#include "gapbump/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

using namespace gapbump;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumeric = 3, kVerify = 4 };

class Clock {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct Run {
  RunConfig config;
  fs::path out;
  Manifest manifest;
  Clock clock;

  void artifact(const std::string& name) { manifest.artifacts.push_back(name); }
  void time(const std::string& phase) { manifest.timings.emplace_back(phase, clock.lap()); }
  void finish() {
    manifest.config_hash = config_hash(config);
    write_text(out / "config.json", dump_config(config));
    artifact("config.json");
    write_manifest(out, manifest);
  }
};

fs::path output_dir() {
  const char* env = std::getenv("GAPBUMP_OUT");
  return env && *env ? fs::path(env) : fs::path("gapbump_out");
}

std::string json_number(double v) {
  return std::isfinite(v) ? ojson(v).dump() : "null";
}

/// "b1;b2;..." with each b a comma separated integer vector.
std::vector<LatticeVector> parse_centers(const std::string& text, int dim) {
  std::vector<LatticeVector> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    LatticeVector b;
    std::stringstream is(item);
    std::string part;
    while (std::getline(is, part, ',')) {
      std::size_t used = 0;
      const int v = std::stoi(part, &used);
      if (used != part.size()) throw ConfigError("--centers", 0, "bad integer '" + part + "'");
      b.push_back(v);
    }
    if (static_cast<int>(b.size()) != dim)
      throw ConfigError("--centers", 0, "each center needs " + std::to_string(dim) + " coordinates");
    out.push_back(b);
  }
  if (out.empty()) throw ConfigError("--centers", 0, "no centers given");
  return out;
}

std::vector<int> parse_ints(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ConfigError(flag, 0, "bad integer '" + part + "'");
    }
  }
  return out;
}

/// A stored solution re-described (and polished if needed) under the
/// configured potential and nonlinearity on its own torus.
std::pair<Problem, SolutionRecord> load_base(const RunConfig& cfg, const fs::path& file) {
  const StoredSolution s = read_solution(file);
  RunConfig c = cfg;
  c.domain = s.domain;
  Problem p = c.problem();
  SolutionRecord rec = describe(s.field, p, cfg.solver);
  if (rec.residual > cfg.solver.newton_tol) rec = find_critical_point(s.field, p, cfg.solver);
  return {p, rec};
}

int cmd_bands(Run& run, int bands, int quasimomenta) {
  if (run.config.domain.dim != 1) throw ConfigError("domain.dim", 0, "bands needs dim 1");
  const PeriodicPotential v = run.config.resolved_potential();
  const BandStructure bs = band_structure(v, bands, quasimomenta, run.config.domain.samples_per_cell);
  run.time("bands");
  std::vector<std::vector<double>> rows;
  for (Eigen::Index q = 0; q < bs.values.rows(); ++q)
    for (Eigen::Index b = 0; b < bs.values.cols(); ++b)
      rows.push_back({bs.thetas[static_cast<std::size_t>(q)], static_cast<double>(b), bs.values(q, b)});
  write_csv(run.out / "bands.csv", {"theta", "band_index", "lambda"}, rows);
  run.artifact("bands.csv");
  return kOk;
}

int cmd_spectrum(Run& run) {
  const SpectralDecomposition s = diagonalize(run.config.resolved_potential(), run.config.torus());
  run.time("diagonalize");
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < s.eigenvalues().size(); ++i) rows.push_back({static_cast<double>(i), s.eigenvalues()[i]});
  write_csv(run.out / "spectrum.csv", {"i", "lambda"}, rows);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream os;
  os << "{\n  \"alpha\": " << json_number(s.gap() ? s.gap()->alpha : nan)
     << ",\n  \"beta\": " << json_number(s.gap() ? s.gap()->beta : nan) << ",\n  \"j\": " << s.negative_count()
     << "\n}\n";
  write_text(run.out / "gap.json", os.str());
  run.artifact("spectrum.csv");
  run.artifact("gap.json");
  return kOk;
}

int cmd_solve(Run& run, std::vector<double> center, double width, double amplitude, int tries) {
  const Problem p = run.config.problem();
  run.time("diagonalize");
  if (center.empty()) center.assign(static_cast<std::size_t>(run.config.domain.dim), 0.0);
  if (static_cast<int>(center.size()) != run.config.domain.dim)
    throw ConfigError("--center", 0, "needs one value per dimension");
  std::mt19937_64 rng(run.config.seed);
  const SolutionRecord rec = find_critical_point(initial_ansatz(center, width, amplitude, p.S()), p, run.config.solver);
  const ValidationReport report = validate_solution(rec, Thresholds{}, p, rng, run.config.solver);
  run.time("newton");
  write_solution(rec, run.out / "solution.json");
  run.artifact("solution.json");
  run.artifact("solution.csv");

  ojson v;
  v["passed"] = report.passed();
  v["checks"] = ojson::array();
  for (const auto& c : report.checks)
    v["checks"].push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
  write_text(run.out / "validation.json", v.dump(2) + "\n");
  run.artifact("validation.json");

  if (tries > 0) {
    const auto found = deflated_search({rec}, tries, p, rng, run.config.solver);
    run.time("deflated_search");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < found.size(); ++i) {
      const std::string name = "found_" + std::to_string(i) + ".json";
      write_solution(found[i], run.out / name);
      run.artifact(name);
      run.artifact("found_" + std::to_string(i) + ".csv");
      rows.push_back({static_cast<double>(i), found[i].energy, found[i].norm_k, found[i].residual,
                      static_cast<double>(found[i].negative_hessian_count)});
    }
    write_csv(run.out / "deflation.csv", {"index", "energy", "norm_k", "residual", "morse_index"}, rows);
    run.artifact("deflation.csv");
  }
  return kOk;
}

int cmd_reduce(Run& run, const fs::path& solution, double tau, double radius, int stencil, int forced_dim) {
  auto [p, base] = load_base(run.config, solution);
  const KernelBasis kb = detect_kernel(base, p, tau, forced_dim > 0 ? std::optional<int>(forced_dim) : std::nullopt);
  run.time("kernel");

  ojson j;
  j["l"] = kb.dim();
  j["eta"] = kb.eta;
  j["delta0"] = kb.delta0;
  j["kernel_values"] = std::vector<double>(kb.kernel_values.data(), kb.kernel_values.data() + kb.dim());
  std::vector<std::vector<double>> rows;
  if (kb.dim() > 0) {
    const double r = radius > 0 ? radius : 0.5 * kb.delta0;
    const OriginClassification oc = classify_origin(kb, r, stencil, run.config.solver);
    j["morse_index"] = oc.morse_index;
    j["degenerate"] = oc.degenerate;
    j["reduced_eigenvalues"] =
        std::vector<double>(oc.reduced_eigenvalues.data(), oc.reduced_eigenvalues.data() + oc.reduced_eigenvalues.size());
    std::vector<Eigen::VectorXd> xs;
    std::vector<std::pair<int, double>> where;
    for (int a = 0; a < kb.dim(); ++a)
      for (int i = -10; i <= 10; ++i) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(kb.dim());
        x[a] = r * i / 10.0;
        xs.push_back(x);
        where.emplace_back(a, x[a]);
      }
    const auto samples = solve_w_batch(kb, xs, run.config.solver);
    for (std::size_t i = 0; i < samples.size(); ++i)
      rows.push_back({static_cast<double>(where[i].first), where[i].second, samples[i].I, samples[i].dI.norm()});
    run.time("classify");
  } else {
    j["morse_index"] = nullptr;
    j["degenerate"] = false;
    j["reduced_eigenvalues"] = ojson::array();
  }
  write_text(run.out / "reduce.json", j.dump(2) + "\n");
  write_csv(run.out / "reduce_samples.csv", {"axis", "h", "I", "abs_dI"}, rows);
  run.artifact("reduce.json");
  run.artifact("reduce_samples.csv");
  return kOk;
}

KernelBasis base_kernel(Run& run, const fs::path& base_file, int forced_dim) {
  auto [p, base] = load_base(run.config, base_file);
  return detect_kernel(base, p, run.config.solver.kernel_tau,
                       forced_dim > 0 ? std::optional<int>(forced_dim) : std::nullopt);
}

int cmd_multibump(Run& run, const fs::path& base_file, const std::string& centers, int forced_dim,
                  const MultibumpOptions& mo) {
  const KernelBasis kb = base_kernel(run, base_file, forced_dim);
  const Problem target = run.config.problem();
  run.time("setup");
  const auto cs = parse_centers(centers, run.config.domain.dim);
  const MultibumpResult r = solve_multibump(make_multibump(kb, cs, target), mo);
  run.time("solve");

  ojson j;
  j["centers"] = cs;
  j["residual"] = r.residual;
  j["energy"] = r.energy;
  j["correction_norm"] = r.correction_norm;
  j["reduced_coords_norm"] = r.reduced_coords_norm;
  j["phase1_residual"] = r.phase1_residual;
  j["drift"] = r.drift;
  j["bump_energies"] = r.bump_energies;
  j["base_energy"] = kb.base.energy;
  j["reduced_iters"] = r.reduced_iters;
  j["polish_iters"] = r.polish_iters;
  j["field"] = "multibump.csv";
  write_text(run.out / "multibump.json", j.dump(2) + "\n");
  write_field_csv(r.field, run.out / "multibump.csv");
  run.artifact("multibump.json");
  run.artifact("multibump.csv");
  return kOk;
}

int cmd_sweep(Run& run, const fs::path& base_file, int m, const std::string& separations, int forced_dim,
              const MultibumpOptions& mo) {
  const KernelBasis kb = base_kernel(run, base_file, forced_dim);
  const Problem target = run.config.problem();
  run.time("setup");
  const auto rows = separation_sweep(kb, m, parse_ints(separations, "--separations"), target, mo);
  run.time("sweep");

  std::vector<std::vector<double>> table;
  ojson j;
  j["m"] = m;
  j["cells"] = run.config.domain.cells;
  j["rows"] = ojson::array();
  bool all_ok = true, w_dec = true, x_dec = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    table.push_back({static_cast<double>(r.separation), r.ok ? 1.0 : 0.0, r.correction_norm,
                     r.reduced_coords_norm, r.residual, r.energy_gap});
    ojson row{{"separation", r.separation}, {"ok", r.ok}};
    if (!r.ok) row["error"] = r.error;
    j["rows"].push_back(row);
    all_ok = all_ok && r.ok;
    if (i > 0) {
      w_dec = w_dec && r.correction_norm < rows[i - 1].correction_norm;
      x_dec = x_dec && r.reduced_coords_norm < rows[i - 1].reduced_coords_norm;
    }
  }
  j["all_converged"] = all_ok;
  j["correction_decreasing"] = all_ok && w_dec;
  j["reduced_coords_decreasing"] = all_ok && x_dec;
  write_csv(run.out / "sweep.csv",
            {"separation", "ok", "correction_norm", "reduced_coords_norm", "residual", "energy_gap"}, table);
  write_text(run.out / "sweep.json", j.dump(2) + "\n");
  run.artifact("sweep.csv");
  run.artifact("sweep.json");
  return kOk;
}

int cmd_verify(Run& run) {
  const LemmaReport report = run_verify(run.config);
  run.time("verify");
  write_text(run.out / "lemma_report.json", report.to_json());
  run.artifact("lemma_report.json");
  for (const auto& e : report.entries)
    std::cout << (e.passed ? "PASS " : "FAIL ") << e.name << "\n";
  return report.passed() ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gapbump: gap solitons and multi-bump solutions on periodic tori"};
  app.require_subcommand(0, 1);
  std::string config_file;
  bool dump = false;
  app.add_option("-c,--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_flag("--dump-config", dump, "print the effective configuration and exit");

  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  auto add_k = [&](CLI::App* sub) { sub->add_option("--k", k, "number of cells per axis"); };

  auto* bands = app.add_subcommand("bands", "Floquet band structure (theta, band_index, lambda)");
  int n_bands = 4, quasimomenta = 64;
  bands->add_option("--bands", n_bands, "number of bands")->check(CLI::PositiveNumber);
  bands->add_option("--quasimomenta", quasimomenta, "quasimomentum samples")->check(CLI::PositiveNumber);

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of L_k and the gap around 0");
  add_k(spectrum);

  auto* solve = app.add_subcommand("solve", "Newton from a Gaussian ansatz, optional deflated search");
  add_k(solve);
  std::vector<double> center;
  double width = 0.7, amplitude = 6.0;
  int tries = 0;
  solve->add_option("--seed", seed, "random seed");
  solve->add_option("--tries", tries, "extra randomised starts for deflated search");
  solve->add_option("--center", center, "ansatz center, one value per axis");
  solve->add_option("--width", width, "ansatz width");
  solve->add_option("--amplitude", amplitude, "ansatz amplitude");

  auto* reduce = app.add_subcommand("reduce", "kernel detection and reduced-function classification");
  std::string solution_file;
  double tau = -1.0, radius = 0.0;
  int stencil = 3, forced_dim = 0;
  reduce->add_option("--solution", solution_file, "solution JSON written by solve")->required();
  reduce->add_option("--tau", tau, "relative kernel threshold (default: solver.kernel_tau)");
  reduce->add_option("--radius", radius, "stencil spacing (default: delta0 / 2)");
  reduce->add_option("--stencil", stencil, "3 or 5")->check(CLI::IsMember({3, 5}));
  reduce->add_option("--forced-dim", forced_dim, "take this many softest directions as the kernel");

  MultibumpOptions mo;
  std::string base_file, centers, separations = "4,8,16";
  int m = 2;
  auto add_glue = [&](CLI::App* sub) {
    add_k(sub);
    sub->add_option("--base", base_file, "base solution JSON")->required();
    sub->add_option("--forced-dim", forced_dim, "take this many softest directions as the kernel");
    sub->add_option("--min-separation", mo.min_separation, "separation floor");
  };
  auto* multibump = app.add_subcommand("multibump", "glue translates of a base solution");
  add_glue(multibump);
  multibump->add_option("--centers", centers, "lattice centers, e.g. \"-8;8\" or \"0,0;6,0\"")->required();

  auto* sweep = app.add_subcommand("sweep", "multi-bump solves over a list of separations");
  add_glue(sweep);
  sweep->add_option("--m", m, "number of bumps")->check(CLI::PositiveNumber);
  sweep->add_option("--separations", separations, "comma separated separations");

  auto* verify = app.add_subcommand("verify", "run every desk-scale check and write a lemma report");
  verify->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  Run run;
  try {
    if (!config_file.empty()) run.config = load_config(config_file);
    if (k) run.config.domain.cells = *k;
    if (seed) run.config.seed = *seed;
    run.config = parse_config(dump_config(run.config));
    mo.solver = run.config.solver;
    if (dump) {
      std::cout << dump_config(run.config);
      return kOk;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kConfig;
    }
    run.out = output_dir();
    fs::create_directories(run.out);

    CLI::App* sub = app.get_subcommands().front();
    run.manifest.command = sub->get_name();
    int rc = kOk;
    if (sub == bands) rc = cmd_bands(run, n_bands, quasimomenta);
    if (sub == spectrum) rc = cmd_spectrum(run);
    if (sub == solve) rc = cmd_solve(run, center, width, amplitude, tries);
    if (sub == reduce)
      rc = cmd_reduce(run, solution_file, tau > 0 ? tau : run.config.solver.kernel_tau, radius, stencil, forced_dim);
    if (sub == multibump) rc = cmd_multibump(run, base_file, centers, forced_dim, mo);
    if (sub == sweep) rc = cmd_sweep(run, base_file, m, separations, forced_dim, mo);
    if (sub == verify) rc = cmd_verify(run);
    run.finish();
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
}
