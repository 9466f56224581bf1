#pragma once

// Declarative scenario files (JSON) and the run artifacts written by the
// command-line front end.

#include "evnet/allocation.hpp"
#include "evnet/economics.hpp"
#include "evnet/metamodel.hpp"
#include "evnet/traffic.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evnet {

inline constexpr int kSchemaVersion = 1;

/// Inclusive arithmetic range "lo:hi:step".
struct Range {
  double lower = 0.0;
  double upper = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
  static Range parse(std::string_view text);
};

struct ScenarioStation {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> arrival_rate;
  std::optional<double> share;  ///< relative weight, scaled to total_arrivals
  std::vector<std::string> classes;
  std::vector<double> mix;
  int slots = 0;  ///< fixed deployment, 0 when not given
  std::optional<double> arrival_min;
  std::optional<double> arrival_max;
  std::optional<int> slot_cap;
};

struct SolveSection {
  std::vector<int> slots{5};
  std::vector<std::string> classes;  ///< empty means every class
  Range lambda{1, 7, 0.25};
};

struct PartitionSection {
  int slots = 10;
  std::vector<std::string> classes;
  std::vector<std::vector<double>> mixes;
  std::vector<std::vector<int>> fixed_slots;  ///< optional, one per mix
  Range lambda{1, 7, 0.5};
  double epsilon = 1.0;
};

struct AllocationSection {
  std::string case_name = "2a";  ///< 1 | 2a | 2b | 3
  Objective objective = Objective::unweighted;
  std::optional<int> budget;
  double epsilon = 1.0;
  std::optional<double> box_fraction;
  bool conserve_arrivals = true;
  int lattice_divisions = 20;
  std::optional<double> lattice_step;
  std::vector<int> small_area;
  ClassSplit baseline_split = ClassSplit::offered_load;
  PenaltyMode penalty = PenaltyMode::state_weighted;
  std::vector<double> sweep_epsilon;
  std::vector<double> sweep_total;
};

struct SimulationSection {
  long horizon = 100000;
  int replications = 30;
  std::uint64_t seed = 1;
  double warmup_fraction = 0.05;
  long vehicles = 100000;
  double x_weight = 0.5;
  double y_weight = 0.5;
  std::vector<double> target_shares;  ///< defaults to the station shares
  std::string class_name;             ///< class used at every station
};

struct MetamodelSection {
  std::array<int, 4> stride{1, 1, 4, 1};
  std::string coefficients = "published";  ///< "published" or a coefficient CSV path
  double service_rate = 2.0;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  std::vector<ServiceClass> classes;
  std::vector<ScenarioStation> stations;
  std::optional<double> total_arrivals;
  std::optional<CostModel> cost;
  std::optional<SolveSection> solve;
  std::optional<PartitionSection> partition;
  std::optional<AllocationSection> allocation;
  std::optional<SimulationSection> simulation;
  std::optional<MetamodelSection> metamodel;
  std::string canonical;  ///< normalized JSON text of the source
  std::filesystem::path source_dir;

  const ServiceClass& find_class(std::string_view name) const;
  /// Base arrival rate of every station, with shares scaled to `total`.
  std::vector<double> base_rates(std::optional<double> total = std::nullopt) const;
  NetworkSpec network(std::optional<double> total = std::nullopt) const;
  std::vector<int> baseline_slots() const;
  ComparisonInput comparison() const;
  SimConfig sim_config() const;
  IntensityConfig intensity_config() const;
  std::vector<double> target_shares() const;
  RsmCoefficients coefficients() const;

  const AllocationSection& require_allocation() const;
  const SimulationSection& require_simulation() const;
  const CostModel& require_cost() const;
};

/// Parses and validates a scenario. Errors are config_error with the field
/// path (e.g. /stations/2/mix) or the line and column of a syntax error.
Scenario parse_scenario(std::string_view text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_path;
  std::string config_hash;  ///< FNV-1a of the canonical config text, hex
  std::uint64_t seed = 0;
  std::string tool_version;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  std::string config;  ///< canonical config text, so the run can be replayed

  std::string to_json() const;
};

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Comma-separated table with a header row.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::size_t width_;
  std::string text_;
};

/// Shortest round-trip decimal form, locale independent.
std::string fmt(double v);
std::string fmt(long long v);
std::string fmt(int v);

}  // namespace evnet
