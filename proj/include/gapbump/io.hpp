#pragma once

#include "gapbump/config.hpp"
#include "gapbump/solver.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace gapbump {

/// One row per grid point: x1[,x2],value, written with 17 significant digits.
void write_field_csv(const GridField& u, const std::filesystem::path& path);
/// Reads a field written by write_field_csv and checks the coordinates
/// against `domain`.
GridField read_field_csv(const std::filesystem::path& path, const TorusDomain& domain);

/// SolutionRecord as JSON. The field itself lives in a CSV whose file name
/// (relative to the JSON) is stored under "field".
std::string solution_json(const SolutionRecord& rec, const std::string& field_file);
void write_solution(const SolutionRecord& rec, const std::filesystem::path& json_path);

struct StoredSolution {
  DomainConfig domain;
  GridField field;
  double energy = 0.0;
};
/// Reads back what write_solution produced.
StoredSolution read_solution(const std::filesystem::path& json_path);

/// Plain CSV table writer.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

struct Manifest {
  std::string command;
  std::string config_hash;
  std::vector<std::pair<std::string, double>> timings;  // seconds
  std::vector<std::string> artifacts;                   // relative to the output directory
};

inline constexpr const char* kVersion = "0.1.0";

/// Writes manifest.json into `dir` after checking every artifact exists.
void write_manifest(const std::filesystem::path& dir, const Manifest& m);

}  // namespace gapbump
