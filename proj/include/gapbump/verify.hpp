#pragma once

#include "gapbump/config.hpp"
#include "gapbump/solver.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gapbump {

struct LemmaEntry {
  std::string name;
  std::string anchor;     // the statement being checked
  std::string operation;  // module operation exercised
  std::vector<std::pair<std::string, double>> values;
  double tolerance = 0.0;
  bool passed = false;
};

struct LemmaReport {
  std::uint64_t seed = 0;
  std::vector<LemmaEntry> entries;

  bool passed() const;
  /// Deterministic JSON text (no timings).
  std::string to_json() const;
};

/// Problems and base solutions shared between checks. Every check draws
/// from its own generator seeded by (seed, check id), so results do not
/// depend on which checks ran before.
class VerifyContext {
 public:
  explicit VerifyContext(RunConfig config);

  const RunConfig& config() const { return config_; }
  const Problem& problem(int cells);
  /// Newton from a Gaussian of amplitude 6 and width 0.7 at the origin.
  const SolutionRecord& ground(int cells);
  std::mt19937_64 rng(int id) const;

 private:
  RunConfig config_;
  std::map<int, Problem> problems_;
  std::map<int, SolutionRecord> grounds_;
};

struct Criterion {
  int id = 0;
  std::string title;
  double time_limit = 0.0;  // seconds
  std::vector<LemmaEntry> (*run)(VerifyContext&) = nullptr;
};

/// The desk-scale checks, numbered 1..11. They use the configured potential,
/// nonlinearity, solver options and seed on fixed 1D tori.
const std::vector<Criterion>& criteria();

/// Runs every check; throws ConfigError unless the domain is 1D.
LemmaReport run_verify(const RunConfig& config);

}  // namespace gapbump
