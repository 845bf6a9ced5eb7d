// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "scenario.hpp"

namespace dcbleo::env {

inline constexpr int kNoSatellite = -1;  // previous satellite before the first selection
inline constexpr int kIdle = -1;         // satellite field of the idle action

/// Observable state (t, s_{t-1}). Satellite indices are 0-based.
struct MomdpState {
    int slot = 0;
    int previous_satellite = kNoSatellite;

    friend bool operator==(const MomdpState&, const MomdpState&) = default;
};

/// (k_t, s_t): 1-based scheme index and 0-based satellite index, or the idle action.
struct MomdpAction {
    int scheme = 1;
    int satellite = kIdle;

    [[nodiscard]] bool is_idle() const { return satellite == kIdle; }
    static MomdpAction idle() { return {1, kIdle}; }
    friend bool operator==(const MomdpAction&, const MomdpAction&) = default;
};

struct RewardVector {
    double rate = 0.0;       // r1 = rho1 * R_hat
    double energy = 0.0;     // r2 = -rho2 * sum P dt
    double switching = 0.0;  // r3 = -rho3 * kappa

    [[nodiscard]] Objectives as_array() const { return {rate, energy, switching}; }
};

struct AvailabilityMask {
    std::vector<std::uint8_t> available;

    [[nodiscard]] bool operator[](std::size_t sat) const { return available[sat] != 0; }
    [[nodiscard]] std::size_t size() const { return available.size(); }
    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool any() const { return count() > 0; }
};

struct SlotRecord {
    int slot = 0;
    int satellite = kIdle;
    int scheme = 0;  // 0 when the allocation bypassed the scheme set
    double rate = 0.0;         // R(t), bps
    double total_power = 0.0;  // sum_i P_i, W
    int switched = 0;          // kappa_t
    int available_count = 0;
};

/// Objective accounting over one episode.
struct EpisodeLedger {
    double rate_integral = 0.0;  // f1, bit; slots with R(t) <= threshold add nothing
    double energy = 0.0;         // f2, J
    int switches = 0;            // N_T
    std::vector<SlotRecord> trace;
};

struct LinkOutcome {
    double total_power = 0.0;
    double snr = 0.0;
    double rate = 0.0;
};

struct StepResult {
    MomdpState state;
    RewardVector reward;
    bool done = false;
};

/// Independent per-slot Bernoulli draw: a satellite is available iff it is visible and the draw
/// (success probability 1 - p) succeeds. One uniform is consumed per satellite regardless of visibility.
AvailabilityMask draw_availability(const ScenarioGeometry& geometry, int slot, double unavailability, Rng& rng);

/// {1..K} x {available satellites}, or just the idle action when nothing is available.
std::vector<MomdpAction> legitimate_actions(const AvailabilityMask& mask, int num_schemes);

/// (f1 / (T dt) in bps, f2 / T in J, N_T / T). Throws StateError unless the ledger covers all T slots.
Objectives episode_objectives(const EpisodeLedger& ledger, int slots, double slot_duration);

class Environment {
public:
    Environment(std::shared_ptr<const Scenario> scenario, std::shared_ptr<const ScenarioGeometry> geometry);
    explicit Environment(const Scenario& scenario);

    MomdpState reset(std::uint64_t seed);

    [[nodiscard]] const MomdpState& state() const { return state_; }
    [[nodiscard]] const AvailabilityMask& mask() const { return mask_; }
    [[nodiscard]] const EpisodeLedger& ledger() const { return ledger_; }
    [[nodiscard]] bool done() const { return state_.slot >= scenario_->slots; }
    [[nodiscard]] const Scenario& scenario() const { return *scenario_; }
    [[nodiscard]] const ScenarioGeometry& geometry() const { return *geometry_; }
    [[nodiscard]] std::shared_ptr<const Scenario> scenario_ptr() const { return scenario_; }
    [[nodiscard]] std::shared_ptr<const ScenarioGeometry> geometry_ptr() const { return geometry_; }

    [[nodiscard]] std::vector<MomdpAction> legitimate_actions() const;

    /// Applies (k_t, s_t). Throws IllegalActionError for an unavailable satellite or a bad scheme index.
    StepResult step(const MomdpAction& action);

    /// Transmits to `satellite` with an explicit allocation instead of a scheme (used by baselines).
    StepResult step_with_allocation(int satellite, const channel::PowerAllocation& alloc);

    /// Memoised outcome of the power subproblem for (slot, satellite, scheme).
    const LinkOutcome& link(int slot, int satellite, int scheme);

    /// Fills the link cache for every visible (slot, satellite, scheme). Copies of the environment share the work.
    void precompute_links();

    /// Outcome of an explicit allocation at (slot, satellite).
    [[nodiscard]] LinkOutcome link_with(int slot, int satellite, const channel::PowerAllocation& alloc) const;

private:
    StepResult apply(int satellite, int scheme, const LinkOutcome& outcome);
    void check_satellite(int satellite) const;

    std::shared_ptr<const Scenario> scenario_;
    std::shared_ptr<const ScenarioGeometry> geometry_;
    std::vector<channel::WeightScheme> schemes_;
    std::vector<std::optional<LinkOutcome>> cache_;
    Rng rng_;
    MomdpState state_;
    AvailabilityMask mask_;
    EpisodeLedger ledger_;
};

}  // namespace dcbleo::env
