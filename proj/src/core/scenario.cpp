// SPDX-License-Identifier: Apache-2.0
#include "scenario.hpp"

#include <fmt/format.h>

namespace dcbleo {

void Scenario::validate() const {
    constants.validate();
    rf.validate();
    if (terminals.empty()) throw ConfigError("scenario: need at least one terminal (N_I >= 1)");
    if (constellation.empty()) throw ConfigError("scenario: need at least one satellite (N_L >= 1)");
    if (!(unavailability >= 0.0 && unavailability <= 1.0))
        throw ConfigError(fmt::format("scenario: unavailability must satisfy 0 <= p <= 1, got {}", unavailability));
    if (slots < 1) throw ConfigError("scenario: slots must satisfy T >= 1");
    if (!(slot_duration > 0.0)) throw ConfigError("scenario: slot_duration must be > 0");
    if (num_schemes < 1) throw ConfigError("scenario: num_schemes must be >= 1");
    if (!(rate_threshold >= 0.0)) throw ConfigError("scenario: rate_threshold must be >= 0");
    if (!(area_side > 0.0)) throw ConfigError("scenario: area_side must be > 0");
    if (!(min_elevation >= -std::numbers::pi / 2 && min_elevation <= std::numbers::pi / 2))
        throw ConfigError("scenario: min_elevation must lie in [-pi/2, pi/2]");
    if (!(rewards.rate > 0.0 && rewards.energy > 0.0 && rewards.switching > 0.0))
        throw ConfigError("scenario: reward scales must be > 0");
    for (std::size_t i = 0; i < constellation.size(); ++i) {
        try {
            constellation[i].validate(constants);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("scenario: satellite {}: {}", i, e.what()));
        }
    }
    const double half = 0.5 * area_side;
    for (std::size_t i = 0; i < terminals.size(); ++i) {
        if (std::abs(terminals[i].x) > half || std::abs(terminals[i].y) > half)
            throw ConfigError(fmt::format("scenario: terminal {} lies outside the terminal area", i));
    }
}

ScenarioGeometry::ScenarioGeometry(const Scenario& scenario)
    : slots_(scenario.slots), num_sats_(scenario.num_satellites()), num_terms_(scenario.num_terminals()) {
    const auto frame = scenario.frame();
    const std::size_t cells = static_cast<std::size_t>(slots_) * num_sats_;
    local_.resize(cells);
    elevation_.resize(cells);
    visible_.resize(cells);
    distances_.resize(cells * num_terms_);
    const GroundPoint reference{0.0, 0.0};
    for (int t = 0; t < slots_; ++t) {
        for (std::size_t s = 0; s < num_sats_; ++s) {
            const auto pos =
                orbits::position_at(scenario.constellation[s], scenario.constants, t, scenario.slot_duration);
            const std::size_t c = index(t, s);
            local_[c] = frame.to_local(pos.position);
            // Visibility is judged at the cluster reference point; the area is tiny next to slant ranges.
            elevation_[c] = orbits::elevation_angle(local_[c], reference);
            visible_[c] = elevation_[c] >= scenario.min_elevation ? 1 : 0;
            for (std::size_t i = 0; i < num_terms_; ++i)
                distances_[c * num_terms_ + i] = channel::link_distance(scenario.terminals[i], local_[c]);
        }
    }
}

}  // namespace dcbleo
