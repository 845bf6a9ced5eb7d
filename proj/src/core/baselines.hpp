// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "env.hpp"

namespace dcbleo::baselines {

enum class BaselineKind { Argp, NonDcb, Random };

std::string_view to_string(BaselineKind kind);
/// Accepts "argp", "non-dcb" and "random". Throws ConfigError otherwise.
BaselineKind parse_kind(std::string_view name);

/// All terminals at P_max.
channel::PowerAllocation max_power(const Scenario& scenario);

/// Available satellite with the highest rate under the all-P_max allocation (ties to the lowest index),
/// or the idle action when nothing is available. Only the satellite field is meaningful.
env::MomdpAction argp_action(const env::Environment& env);

/// Uniform draw over the legitimate actions of the current slot.
env::MomdpAction random_policy_action(const env::Environment& env, Rng& rng);

/// The scenario with the terminal array reduced to its first terminal.
Scenario non_dcb_scenario(const Scenario& scenario);

/// One full episode of `kind` after env.reset(seed). NonDcb expects an environment built from
/// non_dcb_scenario(). Random draws its choices from a stream derived from `seed`.
env::EpisodeLedger run_episode(BaselineKind kind, env::Environment& env, std::uint64_t seed);

/// Convenience wrapper that builds the right environment for `kind`.
env::EpisodeLedger run_episode(BaselineKind kind, const Scenario& scenario, std::uint64_t seed);

/// Non-DCB episode on the first terminal alone.
env::EpisodeLedger non_dcb_episode(const Scenario& scenario, std::uint64_t seed);

}  // namespace dcbleo::baselines
