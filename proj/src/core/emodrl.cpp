// SPDX-License-Identifier: Apache-2.0
#include "emodrl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "binio.hpp"

namespace dcbleo::emodrl {

namespace {

constexpr char kRunMagic[9] = "DCBEVO01";
constexpr std::uint64_t kRunVersion = 1;
constexpr double kWeightFloor = 1e-3;

std::vector<Weight3> das_dennis(int h) {
    std::vector<Weight3> out;
    const double hd = static_cast<double>(h);
    for (int i = h; i >= 0; --i)
        for (int j = h - i; j >= 0; --j) out.push_back({i / hd, j / hd, (h - i - j) / hd});
    return out;
}

double norm3(const Objectives& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Objectives minus(const Objectives& a, const Objectives& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// Area dominated in the first two coordinates (all non-negative).
double area2d(std::vector<std::pair<double, double>> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double area = 0.0;
    double ymax = 0.0;
    for (const auto& [x, y] : pts) {
        if (y > ymax) {
            area += x * (y - ymax);
            ymax = y;
        }
    }
    return area;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct RunState {
    int next_generation = 1;
    PerformanceBufferBank bank;
    ParetoArchive archive;
    std::vector<GenerationLog> log;
    std::vector<LearningTask> population;
    std::vector<LearningTask> offspring;
};

struct Context {
    const Scenario& scenario;
    const EmodrlConfig& config;
    agent::AgentConfig agent_config;
    std::vector<Weight3> weights;
    std::vector<std::uint64_t> eval_seeds;
    env::Environment prototype;
};

agent::AgentConfig lineage_agent_config(const EmodrlConfig& config) {
    auto a = config.agent;
    a.epsilon_decay_iterations =
        static_cast<int>(std::lround(config.epsilon_decay_fraction * static_cast<double>(config.lineage_iterations())));
    return a;
}

// Trains every task for `iterations` episodes and re-evaluates it, in parallel.
void train_and_evaluate(std::vector<LearningTask>& tasks, int iterations, const Context& ctx) {
    parallel_for(tasks.size(), ctx.config.threads, [&](std::size_t i) {
        auto env = ctx.prototype;
        auto& task = tasks[i];
        for (int it = 0; it < iterations; ++it) task.agent->train_iteration(env);
        const auto eval = agent::evaluate_policy(agent::snapshot(*task.agent), env, ctx.eval_seeds);
        task.objectives = eval.objectives;
        task.scores = eval.scores;
        task.evaluated = true;
    });
}

void archive_tasks(RunState& st, const std::vector<LearningTask>& tasks, int generation) {
    for (const auto& t : tasks)
        st.archive.insert({agent::snapshot(*t.agent), t.weight, t.objectives, t.scores, generation});
}

GenerationLog log_entry(const RunState& st, int generation, std::size_t population, const Objectives& ref) {
    return {generation, population, st.archive.size(), hypervolume(st.archive, ref)};
}

void put_obj(std::ostream& os, const Objectives& v) {
    for (double x : v) binio::put_f64(os, x);
}
Objectives get_obj(std::istream& is) {
    Objectives v{};
    for (double& x : v) x = binio::get_f64(is);
    return v;
}

void put_tasks(std::ostream& os, const std::vector<LearningTask>& tasks) {
    binio::put_u64(os, tasks.size());
    for (const auto& t : tasks) {
        put_obj(os, t.weight);
        put_obj(os, t.objectives);
        put_obj(os, t.scores);
        binio::put_u64(os, t.evaluated ? 1 : 0);
        t.agent->save(os);
    }
}

std::vector<LearningTask> get_tasks(std::istream& is, const agent::AgentConfig& cfg) {
    const auto n = binio::get_u64(is);
    if (n > 100000) throw IoError("corrupt task count in run checkpoint");
    std::vector<LearningTask> tasks;
    for (std::uint64_t i = 0; i < n; ++i) {
        LearningTask t;
        t.weight = get_obj(is);
        t.objectives = get_obj(is);
        t.scores = get_obj(is);
        t.evaluated = binio::get_u64(is) != 0;
        t.agent = std::make_shared<agent::D3qnAgent>(agent::D3qnAgent::load(is, cfg, 0));
        tasks.push_back(std::move(t));
    }
    return tasks;
}

std::uint64_t fingerprint(const Scenario& sc, const EmodrlConfig& c) {
    std::uint64_t h = derive_seed(sc.seed, "fingerprint");
    for (int v : {c.num_tasks, c.warmup_iterations, c.task_iterations, c.generations, c.buffer_count, c.buffer_size,
                  sc.slots, sc.num_schemes, static_cast<int>(sc.num_satellites())})
        h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return h;
}

void write_checkpoint(const std::string& path, const RunState& st, const Scenario& sc, const EmodrlConfig& c) {
    const auto tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError(fmt::format("cannot open {} for writing", tmp));
        binio::put_magic(os, kRunMagic);
        binio::put_u64(os, kRunVersion);
        binio::put_u64(os, fingerprint(sc, c));
        binio::put_i64(os, st.next_generation);
        put_obj(os, st.bank.nadir);
        binio::put_u64(os, st.bank.has_nadir ? 1 : 0);
        binio::put_u64(os, st.log.size());
        for (const auto& g : st.log) {
            binio::put_i64(os, g.generation);
            binio::put_u64(os, g.population);
            binio::put_u64(os, g.archive);
            binio::put_f64(os, g.hypervolume);
        }
        put_tasks(os, st.population);
        put_tasks(os, st.offspring);
        binio::put_u64(os, st.archive.size());
        for (const auto& m : st.archive.members()) {
            put_obj(os, m.weight);
            put_obj(os, m.objectives);
            put_obj(os, m.scores);
            binio::put_i64(os, m.generation);
            agent::write_policy(os, m.policy);
        }
        if (!os) throw IoError(fmt::format("failed writing {}", tmp));
    }
    std::filesystem::rename(tmp, path);
}

RunState read_checkpoint(const std::string& path, const Scenario& sc, const EmodrlConfig& c,
                         const agent::AgentConfig& agent_cfg) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(fmt::format("cannot open run checkpoint {}", path));
    binio::expect_magic(is, kRunMagic);
    if (binio::get_u64(is) != kRunVersion) throw IoError("unsupported run checkpoint version");
    if (binio::get_u64(is) != fingerprint(sc, c))
        throw ConfigError("run checkpoint was written for a different scenario or configuration");
    RunState st;
    st.bank = PerformanceBufferBank::make(c.buffer_count, c.buffer_size);
    st.next_generation = static_cast<int>(binio::get_i64(is));
    st.bank.nadir = get_obj(is);
    st.bank.has_nadir = binio::get_u64(is) != 0;
    const auto logs = binio::get_u64(is);
    for (std::uint64_t i = 0; i < logs; ++i) {
        GenerationLog g;
        g.generation = static_cast<int>(binio::get_i64(is));
        g.population = binio::get_u64(is);
        g.archive = binio::get_u64(is);
        g.hypervolume = binio::get_f64(is);
        st.log.push_back(g);
    }
    st.population = get_tasks(is, agent_cfg);
    st.offspring = get_tasks(is, agent_cfg);
    const auto members = binio::get_u64(is);
    std::vector<ArchiveMember> ms;
    for (std::uint64_t i = 0; i < members; ++i) {
        ArchiveMember m;
        m.weight = get_obj(is);
        m.objectives = get_obj(is);
        m.scores = get_obj(is);
        m.generation = static_cast<int>(binio::get_i64(is));
        m.policy = agent::read_policy(is);
        ms.push_back(std::move(m));
    }
    for (auto& m : ms) st.archive.insert(std::move(m));
    return st;
}

env::Environment make_prototype(const Scenario& scenario) {
    env::Environment env(scenario);
    env.precompute_links();
    return env;
}

RunResult evolve(RunState st, const Context& ctx, const RunHooks& hooks) {
    const auto& c = ctx.config;
    for (int g = st.next_generation; g <= c.generations; ++g) {
        const RunState before = st;
        try {
            if (hooks.before_generation) hooks.before_generation(g);
            st.population = tpu(st.population, st.offspring, st.bank);
            st.offspring = task_selection(ctx.weights, st.population);
            for (std::size_t n = 0; n < st.offspring.size(); ++n)
                st.offspring[n].agent->reseed(derive_seed(
                    ctx.scenario.seed, "offspring", static_cast<std::uint64_t>(g) * st.offspring.size() + n));
            train_and_evaluate(st.offspring, c.task_iterations, ctx);
            archive_tasks(st, st.offspring, g);
            st.next_generation = g + 1;
            st.log.push_back(log_entry(st, g, st.population.size(), c.hv_reference));
        } catch (const std::exception& e) {
            std::string where;
            if (!hooks.checkpoint_path.empty()) {
                write_checkpoint(hooks.checkpoint_path, before, ctx.scenario, c);
                where = hooks.checkpoint_path;
            }
            throw GenerationError(g, where, e.what());
        }
        if (hooks.on_generation) hooks.on_generation(st.log.back());
    }
    RunResult out;
    out.population = tpu(st.population, st.offspring, st.bank);
    out.archive = std::move(st.archive);
    out.log = std::move(st.log);
    return out;
}

}  // namespace

std::vector<Weight3> generate_weights(int n) {
    if (n < 1) throw DomainError("generate_weights needs N >= 1");
    if (n == 1) return {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    int h = 1;
    while ((h + 1) * (h + 2) / 2 < n) ++h;
    const auto lattice = das_dennis(h);
    const auto m = lattice.size();
    std::vector<Weight3> out;
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(
            std::lround(static_cast<double>(i) * static_cast<double>(m - 1) / static_cast<double>(n - 1)));
        Weight3 w = lattice[idx];
        double sum = 0.0;
        for (double& x : w) {
            x = std::max(x, kWeightFloor);
            sum += x;
        }
        for (double& x : w) x /= sum;
        out.push_back(w);
    }
    return out;
}

bool dominates(const Objectives& a, const Objectives& b) {
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return false;
        if (a[i] > b[i]) strict = true;
    }
    return strict;
}

bool ParetoArchive::insert(ArchiveMember m) {
    for (const auto& x : members_)
        if (dominates(x.scores, m.scores) || x.scores == m.scores) return false;
    std::erase_if(members_, [&](const ArchiveMember& x) { return dominates(m.scores, x.scores); });
    members_.push_back(std::move(m));
    return true;
}

double hypervolume(const std::vector<Objectives>& points, const Objectives& reference) {
    std::vector<Objectives> q;
    q.reserve(points.size());
    for (const auto& p : points) {
        for (std::size_t i = 0; i < 3; ++i)
            if (!(p[i] >= reference[i]))
                throw DomainError("hypervolume reference point is not dominated by every member");
        q.push_back(minus(p, reference));
    }
    std::vector<double> levels;
    for (const auto& p : q) levels.push_back(p[2]);
    std::sort(levels.begin(), levels.end(), std::greater<>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    double volume = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const double lower = k + 1 < levels.size() ? levels[k + 1] : 0.0;
        std::vector<std::pair<double, double>> slice;
        for (const auto& p : q)
            if (p[2] >= levels[k]) slice.emplace_back(p[0], p[1]);
        volume += area2d(std::move(slice)) * (levels[k] - lower);
    }
    return volume;
}

double hypervolume(const ParetoArchive& archive, const Objectives& reference) {
    std::vector<Objectives> pts;
    for (const auto& m : archive.members()) pts.push_back(m.scores);
    return hypervolume(pts, reference);
}

PerformanceBufferBank PerformanceBufferBank::make(int count, int capacity) {
    if (count < 1 || capacity < 1) throw ConfigError("buffer bank needs B_num >= 1 and B_size >= 1");
    PerformanceBufferBank bank;
    bank.directions = generate_weights(count);
    bank.capacity = capacity;
    return bank;
}

std::vector<LearningTask> tpu(const std::vector<LearningTask>& population, const std::vector<LearningTask>& offspring,
                              PerformanceBufferBank& bank) {
    std::vector<const LearningTask*> all;
    for (const auto& t : population) all.push_back(&t);
    for (const auto& t : offspring) all.push_back(&t);
    for (const auto* t : all) {
        if (!bank.has_nadir) {
            bank.nadir = t->scores;
            bank.has_nadir = true;
        }
        for (std::size_t i = 0; i < 3; ++i) bank.nadir[i] = std::min(bank.nadir[i], t->scores[i]);
    }
    std::vector<std::vector<std::pair<double, const LearningTask*>>> buffers(bank.directions.size());
    for (const auto* t : all) {
        const auto f = minus(t->scores, bank.nadir);
        std::size_t best = 0;
        for (std::size_t n = 1; n < bank.directions.size(); ++n)
            if (dot3(bank.directions[n], f) > dot3(bank.directions[best], f)) best = n;
        buffers[best].emplace_back(norm3(f), t);
    }
    std::vector<LearningTask> out;
    for (auto& b : buffers) {
        std::stable_sort(b.begin(), b.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        for (std::size_t i = 0; i < b.size() && i < static_cast<std::size_t>(bank.capacity); ++i)
            out.push_back(*b[i].second);
    }
    return out;
}

std::vector<LearningTask> task_selection(const std::vector<Weight3>& weights, const std::vector<LearningTask>& population) {
    if (population.empty()) throw StateError("task selection needs a nonempty population");
    std::vector<LearningTask> out;
    for (const auto& w : weights) {
        std::size_t best = 0;
        for (std::size_t q = 1; q < population.size(); ++q)
            if (dot3(w, population[q].scores) > dot3(w, population[best].scores)) best = q;
        LearningTask t = population[best];
        t.agent = std::make_shared<agent::D3qnAgent>(*population[best].agent);
        t.agent->set_weight(w);
        t.weight = w;
        out.push_back(std::move(t));
    }
    return out;
}

void EmodrlConfig::validate() const {
    if (num_tasks < 1) throw ConfigError("num_tasks must be >= 1");
    if (warmup_iterations < 0 || task_iterations < 0 || generations < 0)
        throw ConfigError("iteration counts must be >= 0");
    if (buffer_count < 1 || buffer_size < 1) throw ConfigError("buffer_count and buffer_size must be >= 1");
    if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
        throw ConfigError("epsilon_decay_fraction must lie in [0, 1]");
    if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    agent.validate();
}

GenerationError::GenerationError(int generation, std::string checkpoint, const std::string& cause)
    : std::runtime_error(checkpoint.empty()
                             ? fmt::format("generation {} failed: {}", generation, cause)
                             : fmt::format("generation {} failed: {} (resumable state in {})", generation, cause,
                                           checkpoint)),
      generation_(generation),
      checkpoint_(std::move(checkpoint)) {}

std::vector<std::uint64_t> evaluation_seeds(const Scenario& scenario, int episodes) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < episodes; ++i) seeds.push_back(derive_seed(scenario.seed, "eval", static_cast<std::uint64_t>(i)));
    return seeds;
}

RunResult run(const Scenario& scenario, const EmodrlConfig& config, const RunHooks& hooks) {
    config.validate();
    const Context ctx{scenario, config, lineage_agent_config(config), generate_weights(config.num_tasks),
                      evaluation_seeds(scenario, config.eval_episodes), make_prototype(scenario)};
    const auto shape = agent::ProblemShape::of(scenario);

    RunState st;
    st.bank = PerformanceBufferBank::make(config.buffer_count, config.buffer_size);
    for (std::size_t n = 0; n < ctx.weights.size(); ++n) {
        LearningTask t;
        t.weight = ctx.weights[n];
        t.agent = std::make_shared<agent::D3qnAgent>(shape, ctx.agent_config, t.weight,
                                                     derive_seed(scenario.seed, "agent", n));
        st.population.push_back(std::move(t));
    }
    train_and_evaluate(st.population, config.warmup_iterations, ctx);
    archive_tasks(st, st.population, 0);
    st.log.push_back(log_entry(st, 0, st.population.size(), config.hv_reference));
    if (hooks.on_generation) hooks.on_generation(st.log.back());
    return evolve(std::move(st), ctx, hooks);
}

RunResult resume(const Scenario& scenario, const EmodrlConfig& config, const std::string& checkpoint_path,
                 const RunHooks& hooks) {
    config.validate();
    const Context ctx{scenario, config, lineage_agent_config(config), generate_weights(config.num_tasks),
                      evaluation_seeds(scenario, config.eval_episodes), make_prototype(scenario)};
    auto st = read_checkpoint(checkpoint_path, scenario, config, ctx.agent_config);
    return evolve(std::move(st), ctx, hooks);
}

}  // namespace dcbleo::emodrl
