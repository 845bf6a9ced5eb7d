// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "agent.hpp"

namespace dcbleo::emodrl {

/// N evenly spread points of the open 3-simplex (Das-Dennis lattice, clamped to 1e-3 and renormalised).
std::vector<Weight3> generate_weights(int n);

/// Pareto dominance under maximisation.
bool dominates(const Objectives& a, const Objectives& b);

struct LearningTask {
    Weight3 weight{};
    std::shared_ptr<agent::D3qnAgent> agent;
    Objectives objectives{};  // raw, sign-adjusted
    Objectives scores{};      // normalised; drives every comparison
    bool evaluated = false;
};

struct ArchiveMember {
    agent::PolicySnapshot policy;
    Weight3 weight{};
    Objectives objectives{};
    Objectives scores{};
    int generation = 0;  // 0 is the warm-up stage
};

/// Mutually nondominated policy set. Dominance is judged on `scores`.
class ParetoArchive {
public:
    /// Inserts `m` unless an existing member dominates it or has identical scores; evicts members it dominates.
    bool insert(ArchiveMember m);

    [[nodiscard]] const std::vector<ArchiveMember>& members() const { return members_; }
    [[nodiscard]] std::size_t size() const { return members_.size(); }
    [[nodiscard]] bool empty() const { return members_.empty(); }

private:
    std::vector<ArchiveMember> members_;
};

/// Exact dominated volume of `points` above `reference` (maximisation).
/// Throws DomainError if some point fails to weakly dominate the reference.
double hypervolume(const std::vector<Objectives>& points, const Objectives& reference);
double hypervolume(const ParetoArchive& archive, const Objectives& reference);

/// Direction bank, running nadir and per-buffer capacity of the task population update.
struct PerformanceBufferBank {
    std::vector<Weight3> directions;
    Objectives nadir{};
    bool has_nadir = false;
    int capacity = 2;

    static PerformanceBufferBank make(int count, int capacity);
};

/// Buffered population update: each task goes to the buffer whose direction maximises w . (F - Z_ref);
/// every buffer keeps its `capacity` tasks farthest from Z_ref.
std::vector<LearningTask> tpu(const std::vector<LearningTask>& population, const std::vector<LearningTask>& offspring,
                              PerformanceBufferBank& bank);

/// For every w_n picks the population task maximising w_n . F and returns a deep copy carrying w_n.
std::vector<LearningTask> task_selection(const std::vector<Weight3>& weights, const std::vector<LearningTask>& population);

struct EmodrlConfig {
    int num_tasks = 10;
    int warmup_iterations = 80;
    int task_iterations = 20;
    int generations = 300;
    int buffer_count = 50;
    int buffer_size = 2;
    double epsilon_decay_fraction = 0.5;  // of the per-lineage iteration budget
    int eval_episodes = 3;
    int threads = 0;  // 0 means hardware concurrency
    Objectives hv_reference{-0.01, -1.01, -1.01};
    agent::AgentConfig agent;

    void validate() const;
    [[nodiscard]] int lineage_iterations() const { return warmup_iterations + generations * task_iterations; }
};

struct GenerationLog {
    int generation = 0;
    std::size_t population = 0;
    std::size_t archive = 0;
    double hypervolume = 0.0;
};

struct RunHooks {
    /// Called after each completed generation (0 = warm-up).
    std::function<void(const GenerationLog&)> on_generation;
    /// Called before each evolutionary generation starts; may throw to simulate a failure.
    std::function<void(int)> before_generation;
    /// Where the resumable state is written when a generation fails. Empty disables checkpointing.
    std::string checkpoint_path;
};

struct RunResult {
    ParetoArchive archive;
    std::vector<GenerationLog> log;
    std::vector<LearningTask> population;
};

/// Raised when a generation fails; the run state preceding the generation has been checkpointed.
class GenerationError : public std::runtime_error {
public:
    GenerationError(int generation, std::string checkpoint, const std::string& cause);
    [[nodiscard]] int generation() const { return generation_; }
    [[nodiscard]] const std::string& checkpoint() const { return checkpoint_; }

private:
    int generation_;
    std::string checkpoint_;
};

/// Evaluation seeds used for every task: derived from the scenario master seed.
std::vector<std::uint64_t> evaluation_seeds(const Scenario& scenario, int episodes);

/// Warm-up plus T_evo generations of population update, task selection, training and archiving.
RunResult run(const Scenario& scenario, const EmodrlConfig& config, const RunHooks& hooks = {});

/// Continues a run from a checkpoint written after a failed generation.
RunResult resume(const Scenario& scenario, const EmodrlConfig& config, const std::string& checkpoint_path,
                 const RunHooks& hooks = {});

}  // namespace dcbleo::emodrl
