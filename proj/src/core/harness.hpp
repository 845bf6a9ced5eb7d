// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "emodrl.hpp"

namespace dcbleo::harness {

inline constexpr double kNoisePsdDbmPerHz = -157.0;

/// n terminals uniform over the square [-side/2, side/2]^2. Prefixes are stable: the first m of
/// place_terminals(n) equal place_terminals(m) for m <= n.
std::vector<GroundPoint> place_terminals(double side, std::size_t n, std::uint64_t seed);

/// Lowest altitude in the constellation.
double reference_distance(const Scenario& scenario);

/// Sets rf.rho0 and the reward scales from the scenario geometry and RF constants.
void calibrate(Scenario& scenario);

/// 110 satellites (80 at 500 km, 30 at 1000 km), 10 terminals, 60 one-minute slots.
Scenario default_scenario();

/// 12 satellites (8 at 500 km, 4 at 1000 km), 10 terminals, 30 slots.
Scenario desk_scenario();

// Scenario files are JSON. Missing keys take the defaults of an empty scenario, rf gain/noise fall back to
// free-space and -157 dBm/Hz, and a missing rho0 or reward block is calibrated. Unknown keys are rejected.
Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Applies one "key=value" style override (`p`, `terminals`, `seed`, `slots`, `rate_threshold`, `num_schemes`).
/// Changing the terminal count recalibrates.
void override_scenario(Scenario& scenario, const std::string& key, const std::string& value);

/// Algorithm configuration; its JSON form lists every EmodrlConfig and AgentConfig field flat.
/// Baselines and tendency picks are evaluated on the same seeds as the archive.
struct ExperimentConfig {
    emodrl::EmodrlConfig emodrl;

    static ExperimentConfig paper();
    static ExperimentConfig desk();
};
ExperimentConfig experiment_from_json(const std::string& text, const ExperimentConfig& base);
std::string experiment_to_json(const ExperimentConfig& config);

enum class Tendency { FavorRate, FavorEnergy, FavorSwitching, Balanced };
std::string_view to_string(Tendency t);
Weight3 tendency_weight(Tendency t);
inline constexpr Tendency kTendencies[] = {Tendency::FavorRate, Tendency::FavorEnergy, Tendency::FavorSwitching,
                                           Tendency::Balanced};

/// Parses a named tendency or "w1,w2,w3".
Weight3 parse_preference(const std::string& text);

/// Archive row as exported.
struct ArchiveEntry {
    Objectives objectives{};  // sign-adjusted (f1, -f2, -f3)
    Objectives scores{};
    Weight3 weight{};
    int generation = 0;
    std::string checkpoint;  // relative to the archive directory
};

/// Index of argmax w . scores (ties to the lowest index). Throws StateError on an empty list.
std::size_t select_index(const std::vector<Objectives>& scores, const Weight3& preference);
std::size_t select_policy(const std::vector<ArchiveEntry>& archive, const Weight3& preference);

void write_archive_csv(const std::filesystem::path& path, const std::vector<ArchiveEntry>& entries);
std::vector<ArchiveEntry> read_archive_csv(const std::filesystem::path& path);

void write_generations_csv(const std::filesystem::path& path, const std::vector<emodrl::GenerationLog>& log);
void write_trace_csv(const std::filesystem::path& path, const env::EpisodeLedger& ledger);

struct ReplayOverrides {
    std::optional<double> unavailability;
    std::optional<std::size_t> terminals;
};

/// Scenario with the overrides applied; extra terminals continue the scenario's placement stream.
Scenario apply_overrides(const Scenario& scenario, const ReplayOverrides& overrides);

/// Evaluates a frozen policy under modified p or terminal count, averaging over seeds.
agent::PolicyEvaluation replay_policy(const agent::PolicySnapshot& policy, const Scenario& scenario,
                                      const ReplayOverrides& overrides, const std::vector<std::uint64_t>& seeds);

agent::PolicySnapshot load_policy(const std::filesystem::path& path);
void save_policy(const agent::PolicySnapshot& policy, const std::filesystem::path& path);

struct NamedObjectives {
    std::string name;
    Objectives objectives{};  // (f1 bps, f2 J, f3) as reported, all non-negative
};

struct RunReport {
    std::vector<NamedObjectives> policies;
    std::filesystem::path archive_csv;
    std::filesystem::path generations_csv;
    std::filesystem::path objectives_csv;
    std::vector<std::filesystem::path> traces;
    std::vector<std::filesystem::path> svgs;
    std::vector<std::filesystem::path> checkpoints;
    std::filesystem::path report_json;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::size_t archive_size = 0;

    [[nodiscard]] std::vector<std::filesystem::path> files() const;
};

/// Runs the evolutionary optimiser and the baselines on matched seeds and writes every artifact into out_dir.
RunReport run_experiment(const Scenario& scenario, const ExperimentConfig& config, const std::filesystem::path& out_dir,
                         const emodrl::RunHooks& hooks = {});

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "DCBLEO_OUT_DIR";
std::filesystem::path default_out_dir();

// SVG figures.
struct RateSeries {
    std::string label;
    std::vector<double> rates;  // bps per slot; idle slots are 0
};
std::string rate_svg(const std::vector<RateSeries>& series, double threshold);
std::string pareto_svg(const std::vector<Objectives>& objectives);  // (f1, f2, f3) non-negative
std::string objectives_svg(const std::vector<NamedObjectives>& rows);

}  // namespace dcbleo::harness
