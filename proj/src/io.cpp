#include "gapbump/io.hpp"

#include "gapbump/errors.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gapbump {

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

void write_field_csv(const GridField& u, const std::filesystem::path& path) {
  const TorusDomain& d = u.domain();
  std::ostringstream os;
  os << (d.dim == 1 ? "x1,value\n" : "x1,x2,value\n");
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto x = d.point(i);
    os << fmt(x[0]) << ',';
    if (d.dim == 2) os << fmt(x[1]) << ',';
    os << fmt(u[i]) << '\n';
  }
  write_text(path, os.str());
}

GridField read_field_csv(const std::filesystem::path& path, const TorusDomain& domain) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const int columns = domain.dim + 1;
  Eigen::VectorXd v(static_cast<Eigen::Index>(domain.size()));
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= domain.size()) throw DomainMismatch(path.string() + ": more rows than grid points");
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != columns)
      throw DomainMismatch(path.string() + ": row " + std::to_string(row + 2) + " has the wrong column count");
    const auto x = domain.point(row);
    for (int a = 0; a < domain.dim; ++a)
      if (std::abs(vals[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(a)]) > 1e-9)
        throw DomainMismatch(path.string() + ": coordinates do not match the domain");
    v[static_cast<Eigen::Index>(row)] = vals.back();
    ++row;
  }
  if (row != domain.size()) throw DomainMismatch(path.string() + ": fewer rows than grid points");
  return GridField(domain, v);
}

std::string solution_json(const SolutionRecord& rec, const std::string& field_file) {
  const TorusDomain& d = rec.field.domain();
  ojson j;
  j["domain"] = ojson{{"dim", d.dim}, {"cells", d.cells}, {"samples_per_cell", d.samples_per_cell}};
  j["energy"] = rec.energy;
  j["residual"] = rec.residual;
  j["norm_k"] = rec.norm_k;
  j["negative_hessian_count"] = rec.negative_hessian_count;
  j["kernel_dim_estimate"] = rec.kernel_dim_estimate;
  j["iterations"] = rec.iterations;
  j["residual_history"] = rec.residual_history;
  j["domain_fingerprint"] = rec.domain_fingerprint;
  j["potential_fingerprint"] = rec.potential_fingerprint;
  j["nonlinearity_fingerprint"] = rec.nonlinearity_fingerprint;
  j["field"] = field_file;
  return j.dump(2) + "\n";
}

void write_solution(const SolutionRecord& rec, const std::filesystem::path& json_path) {
  std::filesystem::path csv = json_path;
  csv.replace_extension(".csv");
  write_field_csv(rec.field, csv);
  write_text(json_path, solution_json(rec, csv.filename().string()));
}

StoredSolution read_solution(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot open " + json_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    StoredSolution s;
    const auto& d = j.at("domain");
    s.domain = {d.at("dim").get<int>(), d.at("cells").get<int>(), d.at("samples_per_cell").get<int>()};
    s.energy = j.at("energy").get<double>();
    const TorusDomain domain(s.domain.dim, s.domain.cells, s.domain.samples_per_cell);
    s.field = read_field_csv(json_path.parent_path() / j.at("field").get<std::string>(), domain);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(json_path.string() + ": " + e.what());
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt(r[i]);
    os << '\n';
  }
  write_text(path, os.str());
}

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
  for (const auto& a : m.artifacts)
    if (!std::filesystem::exists(dir / a)) throw std::runtime_error("manifest: missing artifact " + a);
  ojson j;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["versions"] = ojson{{"gapbump", kVersion},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"compiler", __VERSION__}};
  ojson t = ojson::object();
  for (const auto& [name, seconds] : m.timings) t[name] = seconds;
  j["timings"] = t;
  j["artifacts"] = m.artifacts;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace gapbump
