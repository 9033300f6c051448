#include "gapbump/config.hpp"

#include "gapbump/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gapbump {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the last key on a dotted path, found by scanning for each quoted
/// key in turn. Array indices are skipped.
int locate(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty() || part.front() == '[') continue;
    const std::size_t at = text.find('"' + part + '"', pos);
    if (at == std::string::npos) break;
    found = at;
    pos = at + part.size() + 2;
  }
  return found == std::string::npos ? 0 : line_of_offset(text, found);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(field, locate(text_, field), what);
  }

  void only(const json& obj, const std::string& path, std::set<std::string> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) fail(join(path, it.key()), "unknown key");
  }

  double number(const json& obj, const std::string& path, const std::string& key, double fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    return v.get<double>();
  }

  int integer(const json& obj, const std::string& path, const std::string& key, int fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
    return v.get<int>();
  }

  bool boolean(const json& obj, const std::string& path, const std::string& key, bool fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false");
    return v.get<bool>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  PotentialConfig potential(const json& obj, const std::string& path, bool allow_auto) const {
    only(obj, path, {"kind", "amplitude", "shift", "terms", "value", "dim", "samples_per_cell", "table"});
    PotentialConfig c;
    if (!obj.contains("kind") || !obj.at("kind").is_string()) fail(join(path, "kind"), "expected a string");
    c.kind = obj.at("kind").get<std::string>();
    if (c.kind != "cosine" && c.kind != "terms" && c.kind != "constant" && c.kind != "tabulated")
      fail(join(path, "kind"), "must be one of cosine, terms, constant, tabulated");

    if (c.kind == "constant") {
      c.value = number(obj, path, "value", 0.0);
      c.shift = 0.0;
      return c;
    }
    if (obj.contains("shift") && obj.at("shift").is_string()) {
      if (!allow_auto || obj.at("shift").get<std::string>() != "auto-midgap")
        fail(join(path, "shift"), allow_auto ? "expected a number or \"auto-midgap\"" : "expected a number");
      c.shift.reset();
    } else {
      c.shift = number(obj, path, "shift", 0.0);
    }
    if (c.kind == "cosine") {
      c.amplitude = number(obj, path, "amplitude", 30.0);
    } else if (c.kind == "terms") {
      if (!obj.contains("terms") || !obj.at("terms").is_array()) fail(join(path, "terms"), "expected an array");
      const json& arr = obj.at("terms");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string tp = join(path, "terms");
        only(arr[i], tp, {"axis", "harmonic", "amplitude"});
        CosineTerm t;
        t.axis = integer(arr[i], tp, "axis", 0);
        t.harmonic = integer(arr[i], tp, "harmonic", 1);
        t.amplitude = number(arr[i], tp, "amplitude", 0.0);
        if (t.axis < 0 || t.axis > 1) fail(join(tp, "axis"), "must be 0 or 1");
        c.terms.push_back(t);
      }
    } else {
      c.table_dim = integer(obj, path, "dim", 1);
      c.table_samples = integer(obj, path, "samples_per_cell", 0);
      if (!obj.contains("table") || !obj.at("table").is_array()) fail(join(path, "table"), "expected an array");
      for (const auto& v : obj.at("table")) {
        if (!v.is_number()) fail(join(path, "table"), "expected numbers");
        c.table.push_back(v.get<double>());
      }
      std::size_t expect = static_cast<std::size_t>(c.table_samples);
      if (c.table_dim == 2) expect *= expect;
      if (c.table_dim < 1 || c.table_dim > 2 || c.table_samples < 1 || c.table.size() != expect)
        fail(join(path, "table"), "needs samples_per_cell^dim entries");
    }
    return c;
  }

 private:
  const std::string& text_;
};

ojson potential_json(const PotentialConfig& c) {
  ojson j;
  j["kind"] = c.kind;
  if (c.kind == "constant") {
    j["value"] = c.value;
    return j;
  }
  if (c.kind == "cosine") j["amplitude"] = c.amplitude;
  if (c.kind == "terms") {
    j["terms"] = ojson::array();
    for (const auto& t : c.terms)
      j["terms"].push_back(ojson{{"axis", t.axis}, {"harmonic", t.harmonic}, {"amplitude", t.amplitude}});
  }
  if (c.kind == "tabulated") {
    j["dim"] = c.table_dim;
    j["samples_per_cell"] = c.table_samples;
    j["table"] = c.table;
  }
  if (c.shift)
    j["shift"] = *c.shift;
  else
    j["shift"] = "auto-midgap";
  return j;
}

PeriodicPotential build(const PotentialConfig& c, double shift, int dim) {
  if (c.kind == "constant") return PeriodicPotential::constant(c.value);
  if (c.kind == "cosine") return PeriodicPotential::cosine(c.amplitude, shift, dim);
  if (c.kind == "terms") return PeriodicPotential::from_terms(c.terms, shift);
  return PeriodicPotential::tabulated(c.table_dim, c.table_samples, c.table, shift);
}

}  // namespace

bool PotentialConfig::operator==(const PotentialConfig& o) const {
  if (kind != o.kind) return false;
  if (kind == "constant") return value == o.value;
  if (shift != o.shift) return false;
  if (kind == "cosine") return amplitude == o.amplitude;
  if (kind == "terms") return terms == o.terms;
  return table_dim == o.table_dim && table_samples == o.table_samples && table == o.table;
}

bool RunConfig::operator==(const RunConfig& o) const {
  const SolverOptions& a = solver;
  const SolverOptions& b = o.solver;
  return domain == o.domain && potential == o.potential && nonlinearity == o.nonlinearity && seed == o.seed &&
         a.newton_tol == b.newton_tol && a.max_iters == b.max_iters && a.backtrack == b.backtrack &&
         a.armijo == b.armijo && a.tikhonov == b.tikhonov && a.tikhonov_max == b.tikhonov_max &&
         a.deflation_radius == b.deflation_radius && a.collapse_norm == b.collapse_norm &&
         a.kernel_tau == b.kernel_tau;
}

TorusDomain RunConfig::torus() const { return TorusDomain(domain.dim, domain.cells, domain.samples_per_cell); }

PeriodicPotential RunConfig::resolved_potential() const {
  double shift = potential.shift.value_or(0.0);
  if (!potential.shift) shift = first_gap_midpoint(build(potential, 0.0, 1), domain.samples_per_cell);
  return build(potential, shift, domain.dim);
}

Nonlinearity RunConfig::resolved_nonlinearity() const {
  Nonlinearity nl;
  nl.p = nonlinearity.p;
  nl.q = nonlinearity.q;
  nl.gamma = nonlinearity.gamma;
  nl.dealias = nonlinearity.dealias;
  nl.weight = build(nonlinearity.h, nonlinearity.h.shift.value_or(0.0), domain.dim);
  nl.validate();
  return nl;
}

Problem RunConfig::problem(std::optional<int> cells) const {
  const TorusDomain d(domain.dim, cells.value_or(domain.cells), domain.samples_per_cell);
  return make_problem(d, resolved_potential(), resolved_nonlinearity());
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  const Reader r(text);
  r.only(root, "", {"domain", "potential", "nonlinearity", "solver", "seed"});

  RunConfig c;
  if (root.contains("domain")) {
    const json& d = root.at("domain");
    r.only(d, "domain", {"dim", "cells", "samples_per_cell"});
    c.domain.dim = r.integer(d, "domain", "dim", c.domain.dim);
    c.domain.cells = r.integer(d, "domain", "cells", c.domain.cells);
    c.domain.samples_per_cell = r.integer(d, "domain", "samples_per_cell", c.domain.samples_per_cell);
    try {
      (void)c.torus();
    } catch (const std::invalid_argument& e) {
      r.fail("domain", e.what());
    }
  }
  if (root.contains("potential")) c.potential = r.potential(root.at("potential"), "potential", true);
  if (!c.potential.shift && c.domain.dim != 1) r.fail("potential.shift", "auto-midgap needs dim 1");
  if (c.potential.kind == "tabulated" && c.potential.table_dim != c.domain.dim)
    r.fail("potential.dim", "table dimension differs from the domain");

  if (root.contains("nonlinearity")) {
    const json& n = root.at("nonlinearity");
    r.only(n, "nonlinearity", {"p", "q", "gamma", "dealias", "h"});
    c.nonlinearity.p = r.number(n, "nonlinearity", "p", c.nonlinearity.p);
    c.nonlinearity.q = r.number(n, "nonlinearity", "q", c.nonlinearity.q);
    c.nonlinearity.gamma = r.number(n, "nonlinearity", "gamma", c.nonlinearity.gamma);
    c.nonlinearity.dealias = r.boolean(n, "nonlinearity", "dealias", c.nonlinearity.dealias);
    if (n.contains("h")) c.nonlinearity.h = r.potential(n.at("h"), "nonlinearity.h", false);
  }
  try {
    (void)c.resolved_nonlinearity();
  } catch (const std::invalid_argument& e) {
    r.fail("nonlinearity", e.what());
  }

  if (root.contains("solver")) {
    const json& s = root.at("solver");
    const std::string p = "solver";
    r.only(s, p, {"newton_tol", "max_iters", "backtrack", "armijo", "tikhonov", "tikhonov_max",
                  "deflation_radius", "collapse_norm", "kernel_tau"});
    SolverOptions& o = c.solver;
    o.newton_tol = r.number(s, p, "newton_tol", o.newton_tol);
    o.max_iters = r.integer(s, p, "max_iters", o.max_iters);
    o.backtrack = r.number(s, p, "backtrack", o.backtrack);
    o.armijo = r.number(s, p, "armijo", o.armijo);
    o.tikhonov = r.number(s, p, "tikhonov", o.tikhonov);
    o.tikhonov_max = r.number(s, p, "tikhonov_max", o.tikhonov_max);
    o.deflation_radius = r.number(s, p, "deflation_radius", o.deflation_radius);
    o.collapse_norm = r.number(s, p, "collapse_norm", o.collapse_norm);
    o.kernel_tau = r.number(s, p, "kernel_tau", o.kernel_tau);
    try {
      o.validate();
    } catch (const std::invalid_argument& e) {
      r.fail("solver", e.what());
    }
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned()) r.fail("seed", "expected a non-negative integer");
    c.seed = root.at("seed").get<std::uint64_t>();
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  ojson j;
  j["domain"] = ojson{{"dim", c.domain.dim}, {"cells", c.domain.cells},
                      {"samples_per_cell", c.domain.samples_per_cell}};
  j["potential"] = potential_json(c.potential);
  ojson n;
  n["p"] = c.nonlinearity.p;
  n["q"] = c.nonlinearity.q;
  n["gamma"] = c.nonlinearity.gamma;
  n["dealias"] = c.nonlinearity.dealias;
  n["h"] = potential_json(c.nonlinearity.h);
  j["nonlinearity"] = n;
  const SolverOptions& o = c.solver;
  j["solver"] = ojson{{"newton_tol", o.newton_tol},
                      {"max_iters", o.max_iters},
                      {"backtrack", o.backtrack},
                      {"armijo", o.armijo},
                      {"tikhonov", o.tikhonov},
                      {"tikhonov_max", o.tikhonov_max},
                      {"deflation_radius", o.deflation_radius},
                      {"collapse_norm", o.collapse_norm},
                      {"kernel_tau", o.kernel_tau}};
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : dump_config(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gapbump
