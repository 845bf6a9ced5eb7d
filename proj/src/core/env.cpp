// SPDX-License-Identifier: Apache-2.0
#include "env.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace dcbleo::env {

std::size_t AvailabilityMask::count() const {
    return static_cast<std::size_t>(std::count(available.begin(), available.end(), std::uint8_t{1}));
}

AvailabilityMask draw_availability(const ScenarioGeometry& geometry, int slot, double unavailability, Rng& rng) {
    AvailabilityMask mask;
    mask.available.resize(geometry.num_satellites());
    for (std::size_t s = 0; s < geometry.num_satellites(); ++s) {
        const double u = uniform01(rng);
        mask.available[s] = (geometry.visible(slot, s) && u >= unavailability) ? 1 : 0;
    }
    return mask;
}

std::vector<MomdpAction> legitimate_actions(const AvailabilityMask& mask, int num_schemes) {
    std::vector<MomdpAction> out;
    for (std::size_t s = 0; s < mask.size(); ++s) {
        if (!mask[s]) continue;
        for (int k = 1; k <= num_schemes; ++k) out.push_back({k, static_cast<int>(s)});
    }
    if (out.empty()) out.push_back(MomdpAction::idle());
    return out;
}

Objectives episode_objectives(const EpisodeLedger& ledger, int slots, double slot_duration) {
    if (static_cast<int>(ledger.trace.size()) != slots)
        throw StateError(fmt::format("episode incomplete: {} of {} slots recorded", ledger.trace.size(), slots));
    const double t = static_cast<double>(slots);
    return {ledger.rate_integral / (t * slot_duration), ledger.energy / t, static_cast<double>(ledger.switches) / t};
}

Environment::Environment(std::shared_ptr<const Scenario> scenario, std::shared_ptr<const ScenarioGeometry> geometry)
    : scenario_(std::move(scenario)), geometry_(std::move(geometry)) {
    scenario_->validate();
    if (!geometry_) geometry_ = std::make_shared<const ScenarioGeometry>(*scenario_);
    if (geometry_->slots() != scenario_->slots || geometry_->num_satellites() != scenario_->num_satellites() ||
        geometry_->num_terminals() != scenario_->num_terminals())
        throw ConfigError("geometry does not match scenario");
    schemes_ = channel::weight_set(scenario_->num_schemes);
    cache_.resize(static_cast<std::size_t>(scenario_->slots) * scenario_->num_satellites() * schemes_.size());
    reset(scenario_->seed);
}

Environment::Environment(const Scenario& scenario)
    : Environment(std::make_shared<const Scenario>(scenario), nullptr) {}

MomdpState Environment::reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_ = {};
    ledger_ = {};
    ledger_.trace.reserve(static_cast<std::size_t>(scenario_->slots));
    mask_ = draw_availability(*geometry_, 0, scenario_->unavailability, rng_);
    return state_;
}

std::vector<MomdpAction> Environment::legitimate_actions() const {
    return env::legitimate_actions(mask_, scenario_->num_schemes);
}

void Environment::check_satellite(int satellite) const {
    if (satellite < 0 || static_cast<std::size_t>(satellite) >= mask_.size())
        throw IllegalActionError(fmt::format("satellite index {} out of range", satellite));
    if (!mask_[static_cast<std::size_t>(satellite)])
        throw IllegalActionError(
            fmt::format("satellite {} is unavailable in slot {}", satellite, state_.slot));
}

const LinkOutcome& Environment::link(int slot, int satellite, int scheme) {
    const std::size_t key =
        (static_cast<std::size_t>(slot) * scenario_->num_satellites() + static_cast<std::size_t>(satellite)) *
            schemes_.size() +
        static_cast<std::size_t>(scheme - 1);
    auto& entry = cache_[key];
    if (!entry) {
        const auto d = geometry_->distances(slot, static_cast<std::size_t>(satellite));
        const auto alloc =
            channel::solve_p2(d, scenario_->rf, schemes_[static_cast<std::size_t>(scheme - 1)], scenario_->slot_duration);
        entry = link_with(slot, satellite, alloc);
    }
    return *entry;
}

void Environment::precompute_links() {
    for (int t = 0; t < scenario_->slots; ++t)
        for (std::size_t s = 0; s < geometry_->num_satellites(); ++s)
            if (geometry_->visible(t, s))
                for (int k = 1; k <= scenario_->num_schemes; ++k) (void)link(t, static_cast<int>(s), k);
}

LinkOutcome Environment::link_with(int slot, int satellite, const channel::PowerAllocation& alloc) const {
    const auto d = geometry_->distances(slot, static_cast<std::size_t>(satellite));
    LinkOutcome out;
    out.total_power = alloc.total();
    out.snr = channel::snr(alloc, d, scenario_->rf);
    out.rate = channel::achievable_rate(out.snr, scenario_->rf);
    return out;
}

StepResult Environment::step(const MomdpAction& action) {
    if (done()) throw StateError("step called on a finished episode");
    if (action.is_idle()) return apply(kIdle, 0, {});
    if (action.scheme < 1 || action.scheme > scenario_->num_schemes)
        throw IllegalActionError(fmt::format("scheme index {} outside 1..{}", action.scheme, scenario_->num_schemes));
    check_satellite(action.satellite);
    return apply(action.satellite, action.scheme, link(state_.slot, action.satellite, action.scheme));
}

StepResult Environment::step_with_allocation(int satellite, const channel::PowerAllocation& alloc) {
    if (done()) throw StateError("step called on a finished episode");
    check_satellite(satellite);
    if (alloc.size() != scenario_->num_terminals()) throw ShapeError("allocation size must equal terminal count");
    for (double p : alloc.powers) {
        if (p < scenario_->rf.p_min || p > scenario_->rf.p_max)
            throw DomainError("allocation outside [p_min, p_max]");
    }
    return apply(satellite, 0, link_with(state_.slot, satellite, alloc));
}

StepResult Environment::apply(int satellite, int scheme, const LinkOutcome& outcome) {
    const auto& sc = *scenario_;
    SlotRecord rec;
    rec.slot = state_.slot;
    rec.available_count = static_cast<int>(mask_.count());
    RewardVector r;
    MomdpState next{state_.slot + 1, state_.previous_satellite};
    if (satellite != kIdle) {
        const int kappa = (state_.previous_satellite != kNoSatellite && satellite != state_.previous_satellite) ? 1 : 0;
        const double energy = outcome.total_power * sc.slot_duration;
        const double r_hat = outcome.rate > sc.rate_threshold ? outcome.rate : 0.0;
        r.rate = sc.rewards.rate * r_hat;
        r.energy = -sc.rewards.energy * energy;
        r.switching = -sc.rewards.switching * kappa;
        ledger_.rate_integral += r_hat * sc.slot_duration;
        ledger_.energy += energy;
        ledger_.switches += kappa;
        rec.satellite = satellite;
        rec.scheme = scheme;
        rec.rate = outcome.rate;
        rec.total_power = outcome.total_power;
        rec.switched = kappa;
        next.previous_satellite = satellite;
    }
    ledger_.trace.push_back(rec);
    state_ = next;
    if (!done()) mask_ = draw_availability(*geometry_, state_.slot, sc.unavailability, rng_);
    return {state_, r, done()};
}

}  // namespace dcbleo::env
