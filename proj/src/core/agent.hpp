// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

#include "env.hpp"
#include "neural.hpp"

namespace dcbleo::agent {

/// Flat indexing of (scheme, satellite) pairs plus a trailing idle action:
/// index = satellite * K + (scheme - 1), idle = K * N_L.
class ActionSpace {
public:
    ActionSpace(int num_schemes, int num_satellites);

    [[nodiscard]] int size() const { return schemes_ * satellites_ + 1; }
    [[nodiscard]] int num_schemes() const { return schemes_; }
    [[nodiscard]] int num_satellites() const { return satellites_; }
    [[nodiscard]] int idle_index() const { return schemes_ * satellites_; }
    [[nodiscard]] int index(const env::MomdpAction& action) const;
    [[nodiscard]] env::MomdpAction action(int index) const;

private:
    int schemes_;
    int satellites_;
};

inline constexpr int kStateDim = 2;
using StateEncoding = std::array<double, kStateDim>;

/// (t / T, (s_{t-1} + 1) / N_L); no previous satellite encodes as 0.
StateEncoding encode_state(const env::MomdpState& state, int slots, int num_satellites);

struct AgentConfig {
    double gamma = 0.96;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int epsilon_decay_iterations = 0;  // linear decay horizon; 0 means epsilon_end from the start
    std::size_t replay_capacity = 100000;
    std::size_t batch_size = 256;
    int target_sync_steps = 100;
    int gradient_steps = 16;
    double learning_rate = 1e-4;
    double gradient_clip = 10.0;
    std::vector<int> hidden = {2048, 2048};

    void validate() const;
};

/// Availability bitset over satellites.
class SatelliteSet {
public:
    SatelliteSet() = default;
    explicit SatelliteSet(const env::AvailabilityMask& mask);
    explicit SatelliteSet(std::vector<std::uint64_t> words);

    [[nodiscard]] bool contains(std::size_t sat) const { return (words_[sat / 64] >> (sat % 64)) & 1U; }
    [[nodiscard]] bool empty() const;
    [[nodiscard]] std::size_t size() const { return count_; }
    [[nodiscard]] const std::vector<std::uint64_t>& words() const { return words_; }

private:
    std::vector<std::uint64_t> words_;
    std::size_t count_ = 0;
};

struct Transition {
    env::MomdpState state;
    int action = 0;
    env::RewardVector reward;
    env::MomdpState next_state;
    SatelliteSet next_available;  // legitimate set of the next state
    bool terminal = false;
};

/// Fixed-capacity FIFO experience store.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }
    /// i = 0 is the oldest retained transition.
    [[nodiscard]] const Transition& at(std::size_t i) const;
    [[nodiscard]] std::vector<std::size_t> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // position of the oldest element once full
    std::vector<Transition> data_;
};

/// Masked epsilon-greedy: uniform over `legit` with probability epsilon, otherwise the legitimate
/// argmax of Q with ties going to the lowest action index. Throws StateError on an empty set.
env::MomdpAction select_action(const neural::QNetworkParams& params, const StateEncoding& encoding,
                               const std::vector<env::MomdpAction>& legit, const ActionSpace& space, double epsilon,
                               Rng& rng);

/// Greedy value over the legitimate actions of a state with availability `available`.
double masked_max(const Eigen::Ref<const Eigen::VectorXd>& q, const SatelliteSet& available, const ActionSpace& space);

/// w . r + gamma * masked max of Q_target(s', .), or w . r for a terminal transition.
double td_target(const Transition& t, const neural::QNetworkParams& target, const Weight3& weight, double gamma,
                 const ActionSpace& space, int slots);

/// Shape of the problem an agent is built for.
struct ProblemShape {
    int num_schemes = 0;
    int num_satellites = 0;
    int slots = 0;

    static ProblemShape of(const Scenario& scenario);
    friend bool operator==(const ProblemShape&, const ProblemShape&) = default;
};

class D3qnAgent {
public:
    D3qnAgent(const ProblemShape& shape, AgentConfig config, const Weight3& weight, std::uint64_t seed);

    [[nodiscard]] const neural::QNetworkParams& params() const { return online_; }
    [[nodiscard]] neural::QNetworkParams& params() { return online_; }
    [[nodiscard]] const neural::QNetworkParams& target_params() const { return target_; }
    [[nodiscard]] const neural::AdamState& optimizer() const { return adam_; }
    [[nodiscard]] const ReplayBuffer& replay() const { return replay_; }
    [[nodiscard]] const AgentConfig& config() const { return config_; }
    [[nodiscard]] AgentConfig& config() { return config_; }
    [[nodiscard]] const ProblemShape& shape() const { return shape_; }
    [[nodiscard]] const ActionSpace& space() const { return space_; }
    [[nodiscard]] const Weight3& weight() const { return weight_; }
    void set_weight(const Weight3& w) { weight_ = w; }
    void reseed(std::uint64_t seed) { rng_.seed(seed); }

    [[nodiscard]] int iterations() const { return iterations_; }
    [[nodiscard]] long gradient_steps() const { return gradient_steps_; }
    /// Exploration rate for the next iteration.
    [[nodiscard]] double epsilon() const;

    /// One episode of masked epsilon-greedy collection followed by the configured gradient steps.
    void train_iteration(env::Environment& env);

    // Agent checkpoint: weight, counters, epsilon, online/target params, Adam moments and replay contents.
    void save(std::ostream& os) const;
    static D3qnAgent load(std::istream& is, AgentConfig config, std::uint64_t seed);

private:
    void gradient_step();

    ProblemShape shape_;
    ActionSpace space_;
    AgentConfig config_;
    Weight3 weight_;
    Rng rng_;
    neural::QNetworkParams online_;
    neural::QNetworkParams target_;
    neural::AdamState adam_;
    ReplayBuffer replay_;
    int iterations_ = 0;
    long gradient_steps_ = 0;
};

/// A frozen greedy policy.
struct PolicySnapshot {
    ProblemShape shape;
    Weight3 weight{};
    std::shared_ptr<const neural::QNetworkParams> params;

    [[nodiscard]] env::MomdpAction act(const env::MomdpState& state, const std::vector<env::MomdpAction>& legit) const;
};

PolicySnapshot snapshot(const D3qnAgent& agent);
void write_policy(std::ostream& os, const PolicySnapshot& policy);
PolicySnapshot read_policy(std::istream& is);

/// Greedy-rollout evaluation.
struct PolicyEvaluation {
    Objectives objectives{};  // (f1_bar bps, -f2_bar J, -f3_bar): every component maximised
    Objectives scores{};      // objectives scaled by (rho1, rho2, rho3)
    std::vector<env::EpisodeLedger> ledgers;
};

/// Scales raw objectives by the scenario reward normalisers.
Objectives score_objectives(const Objectives& objectives, const Scenario& scenario);

/// Runs one episode per seed and averages the episode objectives.
template <class Policy>
PolicyEvaluation evaluate_with(env::Environment& env, const std::vector<std::uint64_t>& seeds, Policy&& policy);

PolicyEvaluation evaluate_policy(const PolicySnapshot& policy, env::Environment& env,
                                 const std::vector<std::uint64_t>& seeds);

}  // namespace dcbleo::agent

#include "agent_impl.hpp"
