#pragma once

#include "gapbump/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gapbump {

struct DomainConfig {
  int dim = 1;
  int cells = 8;
  int samples_per_cell = 16;

  bool operator==(const DomainConfig&) const = default;
};

/// A periodic function given by kind:
///   cosine    amplitude·Σ_axes cos(2πx_i) - shift
///   terms     Σ a cos(2πn x_axis) - shift
///   constant  value
///   tabulated one unit cell of samples, minus shift
/// An empty shift means "auto-midgap": the midpoint of the first Bloch gap.
struct PotentialConfig {
  std::string kind = "cosine";
  double amplitude = 30.0;
  std::optional<double> shift;
  std::vector<CosineTerm> terms;
  double value = 0.0;
  int table_dim = 1;
  int table_samples = 0;
  std::vector<double> table;

  /// Compares only the fields the kind uses.
  bool operator==(const PotentialConfig& o) const;
};

struct NonlinearityConfig {
  double p = 4.0;
  double q = 3.0;
  double gamma = 4.0;
  bool dealias = false;
  PotentialConfig h{"constant", 0.0, 0.0, {}, 1.0, 1, 0, {}};

  bool operator==(const NonlinearityConfig&) const = default;
};

struct RunConfig {
  DomainConfig domain;
  PotentialConfig potential;
  NonlinearityConfig nonlinearity;
  SolverOptions solver;
  std::uint64_t seed = 7;

  bool operator==(const RunConfig& o) const;

  TorusDomain torus() const;
  /// Resolves auto-midgap through the band structure.
  PeriodicPotential resolved_potential() const;
  Nonlinearity resolved_nonlinearity() const;
  /// Problem on the configured domain, or on `cells` cells if given.
  Problem problem(std::optional<int> cells = std::nullopt) const;
};

/// Throws ConfigError naming the line and field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON text; parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& config);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace gapbump
