#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "pinvar/integrate.hpp"
#include "pinvar/metrics.hpp"
#include "pinvar/nvar.hpp"
#include "pinvar/ode_systems.hpp"
#include "pinvar/state_function.hpp"
#include "pinvar/train.hpp"

namespace pinvar {

// Where reference data comes from. An empty `path` means generate: the
// spring samples its exact solution at step h, the other systems run RK4
// at fine_h keeping every `downsample`-th state. Defaults: spring h = 1e-3;
// Lotka-Volterra 1e-5 x 10000 (h = 0.1); Lorenz 1e-5 x 100 (h = 1e-3).
struct DatasetConfig {
  std::string path;
  std::string generator;  // "exact" or "rk4"; empty picks the system default
  double h = 1e-3;
  double fine_h = 1e-5;
  std::size_t downsample = 100;
  std::size_t n_points = 100000;
};

DatasetConfig default_dataset_config(const std::string& system);

struct ExperimentConfig {
  std::string system = "spring";
  OdeSystem::Params system_params;
  DatasetConfig dataset = default_dataset_config("spring");
  std::vector<Basis> bases{Basis::h1, Basis::h2, Basis::h3};
  std::size_t p = 10;
  std::size_t s = 1;
  std::size_t train_start = 2001;  // 1-based index of the first input
  std::size_t train_len = 1500;
  // 1-based index of the newest seed point of each test interval.
  std::vector<std::size_t> interval_starts{10001, 20001, 30001, 40001, 50001};
  std::size_t test_len = 10000;
  std::vector<double> r_values{1e-12, 1e-8, 1e-4, 1e-2, 1e-1};
  std::vector<double> wo_values{0.0, 1e-4, 1e-2, 1e-1, 0.5, 1.0};
  double w_d = 1.0;
  double threshold = 1e-4;  // valid-time M
  std::string radii_source = "training";  // or "all"

  // Checks grid and index sets; with n_points also checks dataset bounds.
  void validate(std::optional<std::size_t> n_points = std::nullopt) const;
  EmbeddingSpec embedding(std::size_t d) const { return {p, s, d}; }
};

nlohmann::json config_to_json(const ExperimentConfig& c);
// Missing keys keep their defaults; the dataset defaults follow `system`.
ExperimentConfig config_from_json(const nlohmann::json& j);

Dataset load_or_generate_dataset(const ExperimentConfig& c, const OdeSystem& system);

struct CellKey {
  Basis basis = Basis::h1;
  double r = 0.0;
  double w_o = 0.0;
  auto operator<=>(const CellKey&) const = default;
};

struct TrialRecord {
  std::string problem;
  CellKey cell;
  std::size_t interval = 0;  // 1-based interval id
  MetricReport report;
};

struct CellError {
  CellKey cell;
  std::string message;
};

// Seeds a rollout at reference index `seed_index` (newest seed point),
// predicts `steps` points and scores them against indices seed_index+1...
MetricReport evaluate_interval(const NvarModel& model, const OdeSystem& system, const Dataset& data,
                               std::size_t seed_index, std::size_t steps, double threshold);

// Trains each (basis, r, w_o) model once and reuses it across intervals.
class TrialRunner {
 public:
  TrialRunner(ExperimentConfig config, std::shared_ptr<const Dataset> data);

  const ExperimentConfig& config() const { return config_; }
  const OdeSystem& system() const { return system_; }
  const std::vector<double>& radii() const { return radii_; }

  std::shared_ptr<const NvarModel> model(const CellKey& cell);
  MetricReport run_trial(const CellKey& cell, std::size_t interval);

 private:
  ExperimentConfig config_;
  std::shared_ptr<const Dataset> data_;
  OdeSystem system_;
  std::vector<double> radii_;
  std::mutex mutex_;
  std::map<CellKey, std::shared_ptr<std::once_flag>> once_;
  std::map<CellKey, std::shared_ptr<const NvarModel>> models_;
};

struct SweepOptions {
  std::filesystem::path out_dir;  // empty: keep results in memory only
  std::size_t jobs = 1;
  std::function<void(const std::string&)> log;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // grid order
  std::vector<CellError> errors;
};

// Full basis x r x w_o x interval grid. With an output directory, each
// finished cell is appended to results.csv and cells already present are
// skipped, so an interrupted sweep resumes. The final results.csv,
// aggregate.csv and tables.md are rewritten in grid order.
SweepResult sweep(const ExperimentConfig& config, std::shared_ptr<const Dataset> data,
                  const SweepOptions& options = {});

struct CellAggregate {
  std::string problem;
  CellKey cell;
  std::size_t count = 0;
  bool complete = false;
  std::size_t median_valid_time = 0;
  double median_energy = 0.0;
};

// Lower median ((n-1)/2-th order statistic); the third of five values.
// NaN sorts last. Throws on an empty input.
template <typename T>
T median_of(std::vector<T> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end(), [](const T& a, const T& b) {
    if constexpr (std::is_floating_point_v<T>) {
      if (std::isnan(a)) return false;
      if (std::isnan(b)) return true;
    }
    return a < b;
  });
  return values[(values.size() - 1) / 2];
}

// Groups by (problem, basis, r, w_o). Cells with a count other than
// `expected_intervals` are kept but marked incomplete.
std::vector<CellAggregate> aggregate_median(const std::vector<TrialRecord>& records,
                                            std::size_t expected_intervals);

std::string results_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_results_csv(const std::string& text);
std::string aggregate_csv(const std::vector<CellAggregate>& cells);
// Tables with rows r and columns w_o, one block per basis; incomplete
// cells are left out.
std::string markdown_tables(const std::vector<CellAggregate>& cells);

}  // namespace pinvar
