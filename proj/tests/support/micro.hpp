// SPDX-License-Identifier: Apache-2.0
// Two-slot, two-satellite, two-scheme problem with an exhaustive optimum, shared by the test binaries.
#pragma once

#include <algorithm>
#include <functional>
#include <limits>

#include "agent.hpp"
#include "harness.hpp"

namespace dcbleo::testing {

inline Scenario micro_scenario() {
    auto s = harness::desk_scenario();
    const auto& c = s.constants;
    s.constellation = {orbits::OrbitalElements::circular(0.0, 0.0, deg2rad(6.0), 0.0, 5e5, c),
                       orbits::OrbitalElements::circular(0.0, 0.0, deg2rad(-9.0), 0.0, 5e5, c)};
    s.slots = 2;
    s.num_schemes = 2;
    s.unavailability = 0.0;
    s.terminals.resize(3);
    harness::calibrate(s);
    // A weaker energy term so the two schemes allocate differently.
    s.rf.rho0 *= 0.1;
    return s;
}

inline constexpr Weight3 kMicroWeight{0.7, 0.2, 0.1};

/// Discounted scalarised return of a rollout.
inline double scalarised_return(env::Environment& env, std::uint64_t seed, const Weight3& w, double gamma,
                                const std::function<env::MomdpAction(const env::Environment&)>& policy) {
    env.reset(seed);
    double g = 0.0, disc = 1.0;
    while (!env.done()) {
        const auto r = env.step(policy(env)).reward;
        g += disc * dot3(w, r.as_array());
        disc *= gamma;
    }
    return g;
}

/// Exact optimum by enumerating every action sequence; the environment must be deterministic.
inline double dp_optimum(const env::Environment& start, const Weight3& w, double gamma) {
    std::function<double(const env::Environment&)> value = [&](const env::Environment& e) {
        if (e.done()) return 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : e.legitimate_actions()) {
            env::Environment next = e;
            const auto r = next.step(a).reward;
            best = std::max(best, dot3(w, r.as_array()) + gamma * value(next));
        }
        return best;
    };
    return value(start);
}

}  // namespace dcbleo::testing
