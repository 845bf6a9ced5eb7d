// SPDX-License-Identifier: Apache-2.0
#include "baselines.hpp"

#include <fmt/format.h>

namespace dcbleo::baselines {

std::string_view to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::Argp: return "argp";
        case BaselineKind::NonDcb: return "non-dcb";
        case BaselineKind::Random: return "random";
    }
    return "unknown";
}

BaselineKind parse_kind(std::string_view name) {
    if (name == "argp") return BaselineKind::Argp;
    if (name == "non-dcb") return BaselineKind::NonDcb;
    if (name == "random") return BaselineKind::Random;
    throw ConfigError(fmt::format("unknown baseline '{}' (expected argp, non-dcb or random)", name));
}

channel::PowerAllocation max_power(const Scenario& scenario) {
    return {std::vector<double>(scenario.num_terminals(), scenario.rf.p_max)};
}

env::MomdpAction argp_action(const env::Environment& env) {
    const auto alloc = max_power(env.scenario());
    const auto& mask = env.mask();
    env::MomdpAction best = env::MomdpAction::idle();
    double best_rate = -1.0;
    for (std::size_t s = 0; s < mask.size(); ++s) {
        if (!mask[s]) continue;
        const double r = env.link_with(env.state().slot, static_cast<int>(s), alloc).rate;
        if (r > best_rate) {
            best_rate = r;
            best = {1, static_cast<int>(s)};
        }
    }
    return best;
}

env::MomdpAction random_policy_action(const env::Environment& env, Rng& rng) {
    const auto legit = env.legitimate_actions();
    return legit[uniform_index(rng, legit.size())];
}

Scenario non_dcb_scenario(const Scenario& scenario) {
    if (scenario.terminals.empty()) throw ConfigError("non-DCB baseline needs at least one terminal");
    Scenario s = scenario;
    s.terminals.resize(1);
    return s;
}

env::EpisodeLedger run_episode(BaselineKind kind, env::Environment& env, std::uint64_t seed) {
    env.reset(seed);
    Rng rng(derive_seed(seed, "random-policy"));
    const auto alloc = max_power(env.scenario());
    while (!env.done()) {
        if (kind == BaselineKind::Random) {
            env.step(random_policy_action(env, rng));
            continue;
        }
        const auto a = argp_action(env);
        if (a.is_idle())
            env.step(a);
        else
            env.step_with_allocation(a.satellite, alloc);
    }
    return env.ledger();
}

env::EpisodeLedger run_episode(BaselineKind kind, const Scenario& scenario, std::uint64_t seed) {
    env::Environment env(kind == BaselineKind::NonDcb ? non_dcb_scenario(scenario) : scenario);
    return run_episode(kind, env, seed);
}

env::EpisodeLedger non_dcb_episode(const Scenario& scenario, std::uint64_t seed) {
    return run_episode(BaselineKind::NonDcb, scenario, seed);
}

}  // namespace dcbleo::baselines
