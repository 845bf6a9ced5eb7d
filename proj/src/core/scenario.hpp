// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "channel.hpp"
#include "orbits.hpp"

namespace dcbleo {

/// Normalisers rho1..rho3 that bring the three reward components onto a common scale.
struct RewardScales {
    double rate = 1.0;
    double energy = 1.0;
    double switching = 1.0;
};

/// Full experiment configuration.
struct Scenario {
    orbits::PhysicalConstants constants;
    std::vector<orbits::OrbitalElements> constellation;
    std::vector<GroundPoint> terminals;  // local ground frame, m
    double area_side = 100.0;            // side of the square terminal area, m
    double site_longitude = 0.0;         // longitude of the local frame origin, rad
    channel::RfConstants rf;
    int slots = 60;
    double slot_duration = 60.0;  // s
    double rate_threshold = 7.5e3;  // bps
    double unavailability = 0.1;    // Bernoulli probability that a visible satellite is unavailable
    double min_elevation = deg2rad(10.0);
    int num_schemes = 10;
    std::uint64_t seed = 1;
    RewardScales rewards;

    [[nodiscard]] std::size_t num_satellites() const { return constellation.size(); }
    [[nodiscard]] std::size_t num_terminals() const { return terminals.size(); }
    [[nodiscard]] orbits::LocalFrame frame() const { return {site_longitude, constants.earth_radius}; }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
};

/// Slot-start geometry for every (slot, satellite) pair, computed once per scenario.
class ScenarioGeometry {
public:
    explicit ScenarioGeometry(const Scenario& scenario);

    [[nodiscard]] int slots() const { return slots_; }
    [[nodiscard]] std::size_t num_satellites() const { return num_sats_; }
    [[nodiscard]] std::size_t num_terminals() const { return num_terms_; }

    [[nodiscard]] const Vec3& local_position(int slot, std::size_t sat) const { return local_[index(slot, sat)]; }
    [[nodiscard]] double elevation(int slot, std::size_t sat) const { return elevation_[index(slot, sat)]; }
    [[nodiscard]] bool visible(int slot, std::size_t sat) const { return visible_[index(slot, sat)] != 0; }
    /// Distances from every terminal to `sat` at the start of `slot`.
    [[nodiscard]] std::span<const double> distances(int slot, std::size_t sat) const {
        return {distances_.data() + index(slot, sat) * num_terms_, num_terms_};
    }

private:
    [[nodiscard]] std::size_t index(int slot, std::size_t sat) const {
        return static_cast<std::size_t>(slot) * num_sats_ + sat;
    }

    int slots_;
    std::size_t num_sats_;
    std::size_t num_terms_;
    std::vector<Vec3> local_;
    std::vector<double> elevation_;
    std::vector<std::uint8_t> visible_;
    std::vector<double> distances_;
};

}  // namespace dcbleo
