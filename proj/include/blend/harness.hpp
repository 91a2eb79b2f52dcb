#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blend/de.hpp"
#include "blend/fitness.hpp"
#include "blend/model.hpp"
#include "blend/uncertainty.hpp"

namespace blend {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Sampling ranges for random benchmark instances. Every draw is uniform.
struct GeneratorRanges {
    std::vector<std::size_t> parcel_counts{3, 4, 5};
    std::size_t stockpiles = 7;
    std::vector<double> month_durations{29, 30, 31};
    double delta = 0.98;
    Interval phi_base{1000, 2000};
    Interval phi_au{200, 300};
    Interval phi_u{300, 400};
    Interval phi_fe{560000, 570000};
    Interval phi_cu{6000000, 7000000};
    Interval gamma1{5, 10};
    Interval gamma2{30, 40};
    Interval mu_fl{0.05, 0.15};
    Interval mu_u{0.5, 0.9};
    Interval mu_cu1{1.5, 3.5};
    Interval mu_cu2{0, 10};
    Interval haul_tonnage{5000, 1000000};
    Interval grade_cu{0.05, 2.5};
    Interval grade_ag{1.0, 4.0};
    Interval grade_fe{10.0, 30.0};
    Interval grade_au{0.3, 2.0};
    Interval grade_u{30.0, 400.0};
    Interval grade_fl{1200, 4500};
    Interval grade_s{0.15, 1.0};
    Interval k_target{10000, 800000};
    Interval r_fl_max{1300, 1500};
    Interval cu_min{0.5, 1.5};
    double rel_std = 0.01;
};

/// A single-month instance; `parcels` overrides the sampled parcel count.
Instance generate_instance(const GeneratorRanges& ranges, std::uint64_t seed,
                           std::optional<std::size_t> parcels = std::nullopt);

enum class SuccessRule { BestMember, WholePopulation };

struct ExperimentSpec {
    std::vector<std::filesystem::path> instances;
    std::vector<FitnessMode> modes{FitnessMode::Deterministic, FitnessMode::ChanceCu, FitnessMode::ChanceFl,
                                   FitnessMode::ChanceBoth};
    std::vector<double> alpha_cu{0.999, 0.99, 0.9};
    std::vector<double> alpha_fl{0.999, 0.99, 0.9};
    std::size_t runs = 30;
    DeConfig de;  // seed is the experiment base seed
    SuccessRule success = SuccessRule::BestMember;

    void validate() const;
};

/// Relative instance paths resolve against `base_dir`.
ExperimentSpec parse_experiment_spec(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

struct CellKey {
    std::string instance;
    FitnessMode mode = FitnessMode::Deterministic;
    std::optional<double> alpha_cu;
    std::optional<double> alpha_fl;

    bool operator==(const CellKey&) const = default;
};

struct RunRecord {
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    FitnessVector fitness;
    bool feasible = false;
    bool population_feasible = false;
};

struct CellSummary {
    std::optional<double> mean;
    std::optional<double> best;
    std::optional<double> worst;
    double success_rate = 0.0;
    std::size_t runs = 0;
    std::size_t successes = 0;
};

struct Cell {
    CellKey key;
    std::vector<RunRecord> records;
    CellSummary summary;
};

/// The cells an experiment covers, in report order. The deterministic mode
/// ignores both alpha grids.
std::vector<CellKey> experiment_cells(const ExperimentSpec& spec, const std::vector<Instance>& instances);

CellSummary summarize(const std::vector<RunRecord>& records, SuccessRule rule);

/// Runs every cell with `runs` seeded DE runs; run r uses child_seed(spec.de.seed, r).
std::vector<Cell> run_experiment(const ExperimentSpec& spec, std::size_t jobs = 1);

/// JSON lines, one record per run.
std::string run_log_jsonl(const std::vector<Cell>& cells);
/// Rebuilds cells from a run log and recomputes every summary.
std::vector<Cell> cells_from_run_log(std::string_view jsonl, SuccessRule rule);

std::string report_csv(const std::vector<Cell>& cells);
std::string report_table(const std::vector<Cell>& cells);

/// Writes runs.jsonl, summary.csv, summary.txt and spec.json into `dir`.
void write_experiment(const std::vector<Cell>& cells, const ExperimentSpec& spec, const std::filesystem::path& dir);

struct ParcelValidation {
    std::size_t parcel = 0;
    double bound_cu = 0.0;
    double bound_fl = 0.0;
    double violation_cu = 0.0;
    double violation_fl = 0.0;
    McEstimate estimate;
    double margin_cu = 0.0;  // 3 binomial standard deviations at alpha_cu
    double margin_fl = 0.0;
    bool pass_cu = false;
    bool pass_fl = false;
};

/// Parcel p is sampled with seed child_seed(seed, p).
std::vector<ParcelValidation> validate_solution(const Instance& instance, const Genome& genome,
                                                const ChanceConfig& chance, std::size_t samples,
                                                std::uint64_t seed);

struct Solution {
    std::string instance;
    FitnessMode mode = FitnessMode::Deterministic;
    ChanceConfig chance;
    std::uint64_t seed = 0;
    Genome genome;
    std::vector<double> durations;
    FitnessVector fitness;
    bool feasible = false;
};

Solution make_solution(const Instance& instance, const DeConfig& config, const RunResult& result);
std::string solution_to_json(const Solution& solution);
Solution parse_solution(std::string_view json_text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace blend
