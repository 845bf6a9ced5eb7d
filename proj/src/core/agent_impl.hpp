// SPDX-License-Identifier: Apache-2.0
#pragma once

// Template definitions for agent.hpp.

namespace dcbleo::agent {

template <class Policy>
PolicyEvaluation evaluate_with(env::Environment& env, const std::vector<std::uint64_t>& seeds, Policy&& policy) {
    if (seeds.empty()) throw ConfigError("evaluation needs at least one seed");
    const auto& sc = env.scenario();
    PolicyEvaluation out;
    Objectives sum{};
    for (auto seed : seeds) {
        env.reset(seed);
        while (!env.done()) {
            const auto legit = env.legitimate_actions();
            env.step(policy(env.state(), legit));
        }
        const auto f = env::episode_objectives(env.ledger(), sc.slots, sc.slot_duration);
        sum[0] += f[0];
        sum[1] += f[1];
        sum[2] += f[2];
        out.ledgers.push_back(env.ledger());
    }
    const double n = static_cast<double>(seeds.size());
    out.objectives = {sum[0] / n, -sum[1] / n, -sum[2] / n};
    out.scores = score_objectives(out.objectives, sc);
    return out;
}

}  // namespace dcbleo::agent
