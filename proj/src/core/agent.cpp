// SPDX-License-Identifier: Apache-2.0
#include "agent.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include <fmt/format.h>

#include "binio.hpp"

namespace dcbleo::agent {

namespace {

constexpr char kAgentMagic[9] = "DCBAGNT1";
constexpr char kPolicyMagic[9] = "DCBPOL01";
constexpr std::uint64_t kFormatVersion = 1;

void write_shape(std::ostream& os, const ProblemShape& s) {
    binio::put_u64(os, static_cast<std::uint64_t>(s.num_schemes));
    binio::put_u64(os, static_cast<std::uint64_t>(s.num_satellites));
    binio::put_u64(os, static_cast<std::uint64_t>(s.slots));
}

ProblemShape read_shape(std::istream& is) {
    ProblemShape s;
    s.num_schemes = static_cast<int>(binio::get_u64(is));
    s.num_satellites = static_cast<int>(binio::get_u64(is));
    s.slots = static_cast<int>(binio::get_u64(is));
    if (s.num_schemes < 1 || s.num_satellites < 1 || s.slots < 1) throw IoError("corrupt problem shape in checkpoint");
    return s;
}

void check_network(const neural::QNetworkParams& p, const ProblemShape& shape) {
    if (p.input_dim() != kStateDim || p.num_actions() != shape.num_schemes * shape.num_satellites + 1)
        throw IoError("network shape does not match the stored problem shape");
}

void write_transition(std::ostream& os, const Transition& t) {
    binio::put_i64(os, t.state.slot);
    binio::put_i64(os, t.state.previous_satellite);
    binio::put_i64(os, t.action);
    binio::put_f64(os, t.reward.rate);
    binio::put_f64(os, t.reward.energy);
    binio::put_f64(os, t.reward.switching);
    binio::put_i64(os, t.next_state.slot);
    binio::put_i64(os, t.next_state.previous_satellite);
    binio::put_u64(os, t.terminal ? 1 : 0);
    binio::put_u64(os, t.next_available.words().size());
    for (auto w : t.next_available.words()) binio::put_u64(os, w);
}

Transition read_transition(std::istream& is) {
    Transition t;
    t.state.slot = static_cast<int>(binio::get_i64(is));
    t.state.previous_satellite = static_cast<int>(binio::get_i64(is));
    t.action = static_cast<int>(binio::get_i64(is));
    t.reward.rate = binio::get_f64(is);
    t.reward.energy = binio::get_f64(is);
    t.reward.switching = binio::get_f64(is);
    t.next_state.slot = static_cast<int>(binio::get_i64(is));
    t.next_state.previous_satellite = static_cast<int>(binio::get_i64(is));
    t.terminal = binio::get_u64(is) != 0;
    const auto n = binio::get_u64(is);
    if (n > (1U << 20)) throw IoError("corrupt transition in checkpoint");
    std::vector<std::uint64_t> words(n);
    for (auto& w : words) w = binio::get_u64(is);
    t.next_available = SatelliteSet(std::move(words));
    return t;
}

}  // namespace

ActionSpace::ActionSpace(int num_schemes, int num_satellites) : schemes_(num_schemes), satellites_(num_satellites) {
    if (num_schemes < 1 || num_satellites < 1) throw ConfigError("action space needs K >= 1 and N_L >= 1");
}

int ActionSpace::index(const env::MomdpAction& action) const {
    if (action.is_idle()) return idle_index();
    if (action.scheme < 1 || action.scheme > schemes_ || action.satellite < 0 || action.satellite >= satellites_)
        throw IllegalActionError(fmt::format("action (k={}, s={}) outside the action space", action.scheme,
                                             action.satellite));
    return action.satellite * schemes_ + (action.scheme - 1);
}

env::MomdpAction ActionSpace::action(int index) const {
    if (index < 0 || index >= size()) throw IllegalActionError(fmt::format("action index {} out of range", index));
    if (index == idle_index()) return env::MomdpAction::idle();
    return {index % schemes_ + 1, index / schemes_};
}

StateEncoding encode_state(const env::MomdpState& state, int slots, int num_satellites) {
    return {static_cast<double>(state.slot) / static_cast<double>(slots),
            static_cast<double>(state.previous_satellite + 1) / static_cast<double>(num_satellites)};
}

void AgentConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
        throw ConfigError("epsilon bounds must lie in [0, 1]");
    if (epsilon_decay_iterations < 0) throw ConfigError("epsilon_decay_iterations must be >= 0");
    if (replay_capacity < 1) throw ConfigError("replay_capacity must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (target_sync_steps < 1) throw ConfigError("target_sync_steps must be >= 1");
    if (gradient_steps < 0) throw ConfigError("gradient_steps must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(gradient_clip > 0.0)) throw ConfigError("gradient_clip must be > 0");
    if (hidden.empty()) throw ConfigError("hidden must list at least one layer width");
    for (int w : hidden)
        if (w < 1) throw ConfigError("hidden widths must be >= 1");
}

SatelliteSet::SatelliteSet(const env::AvailabilityMask& mask) : words_((mask.size() + 63) / 64, 0) {
    for (std::size_t s = 0; s < mask.size(); ++s) {
        if (mask[s]) {
            words_[s / 64] |= std::uint64_t{1} << (s % 64);
            ++count_;
        }
    }
}

SatelliteSet::SatelliteSet(std::vector<std::uint64_t> words) : words_(std::move(words)) {
    for (auto w : words_) count_ += static_cast<std::size_t>(std::popcount(w));
}

bool SatelliteSet::empty() const { return count_ == 0; }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
        return;
    }
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= data_.size()) throw ShapeError("replay index out of range");
    return data_[(head_ + i) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (data_.empty()) throw StateError("cannot sample from an empty replay buffer");
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = uniform_index(rng, data_.size());
    return idx;
}

env::MomdpAction select_action(const neural::QNetworkParams& params, const StateEncoding& encoding,
                               const std::vector<env::MomdpAction>& legit, const ActionSpace& space, double epsilon,
                               Rng& rng) {
    if (legit.empty()) throw StateError("no legitimate action to choose from");
    const double u = uniform01(rng);
    if (u < epsilon) return legit[uniform_index(rng, legit.size())];
    const auto q = neural::forward(params, encoding).q;
    int best = -1;
    double best_q = 0.0;
    for (const auto& a : legit) {
        const int i = space.index(a);
        if (best < 0 || q(i) > best_q || (q(i) == best_q && i < best)) {
            best = i;
            best_q = q(i);
        }
    }
    return space.action(best);
}

double masked_max(const Eigen::Ref<const Eigen::VectorXd>& q, const SatelliteSet& available, const ActionSpace& space) {
    if (available.empty()) return q(space.idle_index());
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < space.num_satellites(); ++s) {
        if (!available.contains(static_cast<std::size_t>(s))) continue;
        for (int k = 0; k < space.num_schemes(); ++k) best = std::max(best, q(s * space.num_schemes() + k));
    }
    return best;
}

double td_target(const Transition& t, const neural::QNetworkParams& target, const Weight3& weight, double gamma,
                 const ActionSpace& space, int slots) {
    const double r = dot3(weight, t.reward.as_array());
    if (t.terminal) return r;
    const auto q = neural::forward(target, encode_state(t.next_state, slots, space.num_satellites())).q;
    return r + gamma * masked_max(q, t.next_available, space);
}

ProblemShape ProblemShape::of(const Scenario& scenario) {
    return {scenario.num_schemes, static_cast<int>(scenario.num_satellites()), scenario.slots};
}

D3qnAgent::D3qnAgent(const ProblemShape& shape, AgentConfig config, const Weight3& weight, std::uint64_t seed)
    : shape_(shape),
      space_(shape.num_schemes, shape.num_satellites),
      config_(std::move(config)),
      weight_(weight),
      rng_(seed),
      replay_(std::max<std::size_t>(config_.replay_capacity, 1)) {
    config_.validate();
    if (shape.slots < 1) throw ConfigError("problem shape needs T >= 1");
    online_ = neural::QNetworkParams::random(kStateDim, config_.hidden, space_.size(), rng_);
    target_ = online_;
    adam_ = neural::AdamState::for_params(online_);
}

double D3qnAgent::epsilon() const {
    if (config_.epsilon_decay_iterations == 0) return config_.epsilon_end;
    const double frac =
        std::min(1.0, static_cast<double>(iterations_) / static_cast<double>(config_.epsilon_decay_iterations));
    return config_.epsilon_start + (config_.epsilon_end - config_.epsilon_start) * frac;
}

void D3qnAgent::train_iteration(env::Environment& env) {
    if (ProblemShape::of(env.scenario()) != shape_) throw ConfigError("environment does not match the agent shape");
    const double eps = epsilon();
    env.reset(rng_());
    while (!env.done()) {
        Transition tr;
        tr.state = env.state();
        const auto legit = env.legitimate_actions();
        const auto a = select_action(online_, encode_state(tr.state, shape_.slots, shape_.num_satellites), legit,
                                     space_, eps, rng_);
        tr.action = space_.index(a);
        const auto res = env.step(a);
        tr.reward = res.reward;
        tr.next_state = res.state;
        tr.terminal = res.done;
        if (!res.done) tr.next_available = SatelliteSet(env.mask());
        replay_.push(std::move(tr));
    }
    if (replay_.size() >= config_.batch_size)
        for (int g = 0; g < config_.gradient_steps; ++g) gradient_step();
    ++iterations_;
}

void D3qnAgent::gradient_step() {
    const auto idx = replay_.sample(config_.batch_size, rng_);
    const auto n = static_cast<Eigen::Index>(idx.size());
    neural::TdBatch batch;
    batch.inputs.resize(kStateDim, n);
    batch.actions.resize(idx.size());
    batch.targets.resize(idx.size());
    Eigen::MatrixXd next(kStateDim, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto& t = replay_.at(idx[static_cast<std::size_t>(b)]);
        const auto s = encode_state(t.state, shape_.slots, shape_.num_satellites);
        const auto s2 = encode_state(t.next_state, shape_.slots, shape_.num_satellites);
        batch.inputs(0, b) = s[0];
        batch.inputs(1, b) = s[1];
        next(0, b) = s2[0];
        next(1, b) = s2[1];
        batch.actions[static_cast<std::size_t>(b)] = t.action;
    }
    const Eigen::MatrixXd q_next = neural::forward_batch(target_, next);
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto& t = replay_.at(idx[static_cast<std::size_t>(b)]);
        double y = dot3(weight_, t.reward.as_array());
        if (!t.terminal) y += config_.gamma * masked_max(q_next.col(b), t.next_available, space_);
        batch.targets[static_cast<std::size_t>(b)] = y;
    }
    auto grad = neural::backward(online_, batch);
    neural::clip_gradient_norm(grad.grad, config_.gradient_clip);
    neural::adam_step(online_, grad.grad, adam_, config_.learning_rate);
    ++gradient_steps_;
    if (gradient_steps_ % config_.target_sync_steps == 0) target_ = online_;
}

void D3qnAgent::save(std::ostream& os) const {
    binio::put_magic(os, kAgentMagic);
    binio::put_u64(os, kFormatVersion);
    write_shape(os, shape_);
    for (double w : weight_) binio::put_f64(os, w);
    binio::put_i64(os, iterations_);
    binio::put_i64(os, gradient_steps_);
    binio::put_f64(os, epsilon());
    neural::write_params(os, online_);
    neural::write_params(os, target_);
    neural::write_params(os, adam_.first);
    neural::write_params(os, adam_.second);
    binio::put_i64(os, adam_.step);
    binio::put_u64(os, replay_.size());
    for (std::size_t i = 0; i < replay_.size(); ++i) write_transition(os, replay_.at(i));
    if (!os) throw IoError("failed writing agent checkpoint");
}

D3qnAgent D3qnAgent::load(std::istream& is, AgentConfig config, std::uint64_t seed) {
    binio::expect_magic(is, kAgentMagic);
    if (binio::get_u64(is) != kFormatVersion) throw IoError("unsupported agent checkpoint version");
    const auto shape = read_shape(is);
    Weight3 w{};
    for (double& x : w) x = binio::get_f64(is);
    const auto iterations = binio::get_i64(is);
    const auto steps = binio::get_i64(is);
    (void)binio::get_f64(is);  // epsilon is derived from the iteration counter
    auto online = neural::read_params(is);
    auto target = neural::read_params(is);
    auto m1 = neural::read_params(is);
    auto m2 = neural::read_params(is);
    const auto adam_steps = binio::get_i64(is);
    const auto stored = binio::get_u64(is);
    std::vector<Transition> transitions;
    transitions.reserve(std::min<std::uint64_t>(stored, 1U << 20));
    for (std::uint64_t i = 0; i < stored; ++i) transitions.push_back(read_transition(is));
    check_network(online, shape);
    if (!online.same_shape(target) || !online.same_shape(m1) || !online.same_shape(m2))
        throw IoError("agent checkpoint tensors disagree in shape");
    config.hidden = online.hidden_widths();
    D3qnAgent agent(shape, std::move(config), w, seed);
    agent.online_ = std::move(online);
    agent.target_ = std::move(target);
    agent.adam_.first = std::move(m1);
    agent.adam_.second = std::move(m2);
    agent.adam_.step = adam_steps;
    agent.iterations_ = static_cast<int>(iterations);
    agent.gradient_steps_ = steps;
    for (auto& t : transitions) agent.replay_.push(std::move(t));
    return agent;
}

env::MomdpAction PolicySnapshot::act(const env::MomdpState& state, const std::vector<env::MomdpAction>& legit) const {
    if (!params) throw StateError("policy has no parameters");
    Rng unused(0);
    return select_action(*params, encode_state(state, shape.slots, shape.num_satellites), legit,
                         ActionSpace(shape.num_schemes, shape.num_satellites), 0.0, unused);
}

PolicySnapshot snapshot(const D3qnAgent& agent) {
    return {agent.shape(), agent.weight(), std::make_shared<const neural::QNetworkParams>(agent.params())};
}

void write_policy(std::ostream& os, const PolicySnapshot& policy) {
    if (!policy.params) throw StateError("policy has no parameters");
    binio::put_magic(os, kPolicyMagic);
    binio::put_u64(os, kFormatVersion);
    write_shape(os, policy.shape);
    for (double w : policy.weight) binio::put_f64(os, w);
    neural::write_params(os, *policy.params);
    if (!os) throw IoError("failed writing policy");
}

PolicySnapshot read_policy(std::istream& is) {
    binio::expect_magic(is, kPolicyMagic);
    if (binio::get_u64(is) != kFormatVersion) throw IoError("unsupported policy format version");
    PolicySnapshot p;
    p.shape = read_shape(is);
    for (double& x : p.weight) x = binio::get_f64(is);
    auto params = neural::read_params(is);
    check_network(params, p.shape);
    p.params = std::make_shared<const neural::QNetworkParams>(std::move(params));
    return p;
}

Objectives score_objectives(const Objectives& objectives, const Scenario& scenario) {
    return {scenario.rewards.rate * objectives[0], scenario.rewards.energy * objectives[1],
            scenario.rewards.switching * objectives[2]};
}

PolicyEvaluation evaluate_policy(const PolicySnapshot& policy, env::Environment& env,
                                 const std::vector<std::uint64_t>& seeds) {
    const auto& sc = env.scenario();
    if (policy.shape.num_schemes != sc.num_schemes ||
        policy.shape.num_satellites != static_cast<int>(sc.num_satellites()))
        throw ConfigError("policy was trained for a different action space");
    // Time is encoded relative to the policy horizon so a different T still maps into [0, 1).
    return evaluate_with(env, seeds, [&](const env::MomdpState& s, const std::vector<env::MomdpAction>& legit) {
        return policy.act(s, legit);
    });
}

}  // namespace dcbleo::agent
