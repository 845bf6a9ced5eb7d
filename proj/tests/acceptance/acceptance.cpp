// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
// A criterion passes only when its metric is within tolerance and it finishes inside its time budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "../support/micro.hpp"
#include "baselines.hpp"
#include "emodrl.hpp"
#include "harness.hpp"

using namespace dcbleo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
};

// ---- 1: orbit oracle ----

constexpr double kPeriodTarget = 5676.9;  // s, published hand derivation at h = 500 km
constexpr double kPeriodTolerance = 1e-3;

Outcome orbit_oracle() {
    const orbits::PhysicalConstants c{};
    const auto e = orbits::OrbitalElements::circular(0.0, 0.0, 0.3, 0.0, 5e5, c);
    const double period = orbits::orbital_period(e, c);
    const double rel = std::abs(period - kPeriodTarget) / kPeriodTarget;
    // Independent recomputation from the same constants.
    const double H = c.earth_radius + 5e5;
    const double oracle = kTwoPi / std::sqrt(c.gravitational_constant * c.earth_mass / (H * H * H));
    const double oracle_rel = std::abs(period - oracle) / oracle;
    // Periodicity: with dt = period / 10, slot s and slot s + 10 coincide.
    const double dt = period / 10.0;
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto a = orbits::position_at(e, c, s, dt).position;
        const auto b = orbits::position_at(e, c, s + 10, dt).position;
        worst = std::max(worst, (a - b).norm());
    }
    const bool periodic = worst < 1e-6 * H;
    std::printf("  info: period %.4f s; recomputed from the constants %.4f s (rel %.2e); target %.1f s (rel %.3f%%)\n",
                period, oracle, oracle_rel, kPeriodTarget, 100.0 * rel);
    return {rel <= kPeriodTolerance && periodic,
            fmt::format("period {:.2f} s vs {:.1f} s: rel {:.3f}% (tol 0.1%); periodicity error {:.2e} m (tol {:.2e} m)",
                        period, kPeriodTarget, 100.0 * rel, worst, 1e-6 * H)};
}

// ---- 2: coherent gain ----

Outcome coherent_gain() {
    const auto sc = harness::default_scenario();
    const std::vector<double> d10(10, 7.3e5), d1(1, 7.3e5);
    const double ratio = channel::snr({std::vector<double>(10, 1.7)}, d10, sc.rf) /
                         channel::snr({std::vector<double>(1, 1.7)}, d1, sc.rf);
    const double rel = std::abs(ratio - 100.0) / 100.0;
    return {rel <= 1e-9, fmt::format("ratio {:.12f}, rel error {:.2e} (tol 1e-9)", ratio, rel)};
}

// ---- 3: power subproblem against a grid ----

Outcome p2_grid() {
    constexpr int kGrid = 201;
    auto rf = harness::default_scenario().rf;
    const double dt = 60.0;
    Rng rng(derive_seed(7, "p2-grid"));
    const auto schemes = channel::weight_set(10);
    double worst = 0.0;
    int cases = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::vector<double> d{5e5 + 1.5e6 * uniform01(rng), 5e5 + 1.5e6 * uniform01(rng),
                                    5e5 + 1.5e6 * uniform01(rng)};
        channel::RfConstants r = rf;
        r.rho0 = channel::balanced_rho0(rf, 3, 5e5, dt) * std::pow(10.0, -1.5 + 2.0 * uniform01(rng));
        // Amplitudes sqrt(P beta0 d^-alpha) per terminal and grid power.
        std::vector<double> powers(kGrid);
        std::vector<std::array<double, 3>> amp(kGrid);
        for (int g = 0; g < kGrid; ++g) {
            powers[static_cast<std::size_t>(g)] = r.p_min + (r.p_max - r.p_min) * g / (kGrid - 1.0);
            for (int i = 0; i < 3; ++i)
                amp[static_cast<std::size_t>(g)][static_cast<std::size_t>(i)] =
                    std::sqrt(powers[static_cast<std::size_t>(g)] * r.channel_power_gain *
                              std::pow(d[static_cast<std::size_t>(i)], -r.path_loss_exponent));
        }
        std::vector<double> grid_best(schemes.size(), std::numeric_limits<double>::infinity());
        for (int a = 0; a < kGrid; ++a)
            for (int b = 0; b < kGrid; ++b)
                for (int c = 0; c < kGrid; ++c) {
                    const double s = amp[static_cast<std::size_t>(a)][0] + amp[static_cast<std::size_t>(b)][1] +
                                     amp[static_cast<std::size_t>(c)][2];
                    const double snr = s * s / r.noise_power;
                    const double energy = r.rho0 * dt *
                                          (powers[static_cast<std::size_t>(a)] + powers[static_cast<std::size_t>(b)] +
                                           powers[static_cast<std::size_t>(c)]);
                    for (std::size_t k = 0; k < schemes.size(); ++k)
                        grid_best[k] = std::min(grid_best[k], schemes[k].a * energy - schemes[k].b * snr);
                }
        for (std::size_t k = 0; k < schemes.size(); ++k) {
            const double got = channel::solve_p2_detailed(d, r, schemes[k], dt).objective;
            worst = std::max(worst, std::abs(got - grid_best[k]) / std::max(std::abs(grid_best[k]), 1e-300));
            ++cases;
        }
    }
    return {worst <= 1e-4, fmt::format("{} instance-scheme pairs, worst relative gap to the 201^3 grid {:.2e} (tol 1e-4)",
                                       cases, worst)};
}

// ---- 4: gradients against finite differences ----

double batch_loss(const neural::QNetworkParams& p, const neural::TdBatch& b) {
    const Eigen::MatrixXd q = neural::forward_batch(p, b.inputs);
    double l = 0.0;
    for (std::size_t i = 0; i < b.actions.size(); ++i) {
        const double e = q(b.actions[i], static_cast<Eigen::Index>(i)) - b.targets[i];
        l += 0.5 * e * e;
    }
    return l / static_cast<double>(b.actions.size());
}

Outcome gradients() {
    Rng rng(derive_seed(7, "gradients"));
    double worst = 0.0;
    for (int net = 0; net < 100; ++net) {
        const int in = 2;
        std::vector<int> hidden;
        const int depth = 1 + static_cast<int>(uniform_index(rng, 2));
        for (int l = 0; l < depth; ++l) hidden.push_back(2 + static_cast<int>(uniform_index(rng, 6)));
        const int actions = 2 + static_cast<int>(uniform_index(rng, 6));
        auto p = neural::QNetworkParams::random(in, hidden, actions, rng);
        neural::TdBatch b;
        const int n = 1 + static_cast<int>(uniform_index(rng, 6));
        b.inputs.resize(in, n);
        for (int i = 0; i < n; ++i) {
            for (int r = 0; r < in; ++r) b.inputs(r, i) = 2.0 * uniform01(rng) - 1.0;
            b.actions.push_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(actions))));
            b.targets.push_back(2.0 * uniform01(rng) - 1.0);
        }
        const auto g = neural::backward(p, b);
        auto pt = p.tensors();
        const auto gt = g.grad.tensors();
        double diff2 = 0.0, ref2 = 0.0;
        const double h = 1e-6;
        for (std::size_t t = 0; t < pt.size(); ++t)
            for (std::size_t i = 0; i < pt[t].size(); ++i) {
                const double keep = pt[t][i];
                pt[t][i] = keep + h;
                const double up = batch_loss(p, b);
                pt[t][i] = keep - h;
                const double down = batch_loss(p, b);
                pt[t][i] = keep;
                const double fd = (up - down) / (2.0 * h);
                diff2 += (gt[t][i] - fd) * (gt[t][i] - fd);
                ref2 += fd * fd;
            }
        worst = std::max(worst, std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-12));
    }
    return {worst <= 1e-4, fmt::format("100 nets, worst relative L2 gradient error {:.2e} (tol 1e-4)", worst)};
}

// ---- 5: mask safety ----

Outcome mask_safety() {
    auto sc = harness::desk_scenario();
    sc.unavailability = 0.5;
    env::Environment env(sc);
    const auto shape = agent::ProblemShape::of(sc);
    const agent::ActionSpace space(shape.num_schemes, shape.num_satellites);
    Rng rng(derive_seed(7, "mask-safety"));
    const auto params = neural::QNetworkParams::random(agent::kStateDim, {32}, space.size(), rng);
    long steps = 0, violations = 0, idle = 0;
    for (std::uint64_t ep = 0; steps < 100000; ++ep) {
        env.reset(derive_seed(7, "mask-episode", ep));
        while (!env.done()) {
            const double eps = uniform01(rng);
            const auto a = agent::select_action(params, agent::encode_state(env.state(), shape.slots, shape.num_satellites),
                                                env.legitimate_actions(), space, eps, rng);
            if (a.is_idle()) {
                ++idle;
            } else if (!env.mask()[static_cast<std::size_t>(a.satellite)]) {
                ++violations;
                env.step(env::MomdpAction::idle());
                ++steps;
                continue;
            }
            try {
                env.step(a);
            } catch (const IllegalActionError&) {
                ++violations;
            }
            ++steps;
        }
    }
    return {violations == 0 && steps >= 100000,
            fmt::format("{} steps ({} idle), {} selections of unavailable satellites", steps, idle, violations)};
}

// ---- 6: micro problem optimality ----

Outcome micro_optimality() {
    const auto sc = testing::micro_scenario();
    env::Environment env(sc);
    agent::AgentConfig cfg;
    cfg.hidden = {32, 32};
    cfg.batch_size = 32;
    cfg.learning_rate = 1e-3;
    cfg.target_sync_steps = 20;
    cfg.epsilon_decay_iterations = 100;
    env.reset(0);
    const double best = testing::dp_optimum(env, testing::kMicroWeight, cfg.gamma);
    std::string detail = fmt::format("optimum {:.6f};", best);
    bool all = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        agent::D3qnAgent a(agent::ProblemShape::of(sc), cfg, testing::kMicroWeight, derive_seed(seed, "micro-agent"));
        for (int i = 0; i < 200; ++i) a.train_iteration(env);
        const auto pol = agent::snapshot(a);
        const double got = testing::scalarised_return(env, 0, testing::kMicroWeight, cfg.gamma,
                                                      [&](const env::Environment& e) {
                                                          return pol.act(e.state(), e.legitimate_actions());
                                                      });
        const double gap = (best - got) / std::abs(best);
        all = all && gap <= 0.01;
        detail += fmt::format(" seed {} gap {:.2e}", seed, gap);
    }
    return {all, detail + " (tol 1% after 200 iterations, every seed)"};
}

// ---- 7, 9, 10: desk-scale runs ----

struct DeskRun {
    std::uint64_t seed = 0;
    harness::RunReport report;
    std::vector<harness::ArchiveEntry> archive;
    std::vector<emodrl::GenerationLog> log;
    fs::path dir;
};

DeskRun desk_run(std::uint64_t seed, const fs::path& root) {
    auto sc = harness::desk_scenario();
    sc.seed = seed;
    DeskRun r;
    r.seed = seed;
    r.dir = root / fmt::format("desk_seed{}", seed);
    fs::remove_all(r.dir);
    emodrl::RunHooks hooks;
    hooks.on_generation = [&](const emodrl::GenerationLog& g) { r.log.push_back(g); };
    r.report = harness::run_experiment(sc, harness::ExperimentConfig::desk(), r.dir, hooks);
    r.archive = harness::read_archive_csv(r.report.archive_csv);
    return r;
}

const Objectives& row(const harness::RunReport& r, std::string_view name) {
    for (const auto& p : r.policies)
        if (p.name == name) return p.objectives;
    throw StateError(fmt::format("no '{}' row in the run report", name));
}

std::vector<DeskRun> g_desk;  // seed 1 is shared by criteria 7, 9 and 10

Outcome archive_soundness(const fs::path& root) {
    g_desk.push_back(desk_run(1, root));
    const auto& r = g_desk.front();
    int dominated = 0;
    for (std::size_t i = 0; i < r.archive.size(); ++i)
        for (std::size_t j = 0; j < r.archive.size(); ++j)
            if (i != j && emodrl::dominates(r.archive[i].scores, r.archive[j].scores)) ++dominated;
    int drops = 0;
    for (std::size_t g = 1; g < r.log.size(); ++g) drops += r.log[g].hypervolume < r.log[g - 1].hypervolume ? 1 : 0;
    const bool shape_ok = r.log.size() == 21;
    return {dominated == 0 && drops == 0 && shape_ok,
            fmt::format("archive {} members, {} dominated pairs; {} generations logged, hypervolume {:.6f} -> {:.6f}, "
                        "{} decreases",
                        r.archive.size(), dominated, r.log.size(), r.log.front().hypervolume, r.log.back().hypervolume,
                        drops)};
}

Outcome table_direction(const fs::path& root) {
    for (std::uint64_t seed : {2, 3}) g_desk.push_back(desk_run(seed, root));
    int passed = 0;
    std::string detail;
    for (const auto& r : g_desk) {
        const auto& argp = row(r.report, "argp");
        const auto& fav = row(r.report, "favor-rate");
        const bool ok = fav[0] >= 0.7 * argp[0] && fav[2] <= argp[2];
        passed += ok ? 1 : 0;
        detail += fmt::format("seed {}: favor-rate f1 {:.0f} vs 0.7*ARGP {:.0f}, f3 {:.4f} vs ARGP {:.4f} -> {}; ",
                              r.seed, fav[0], 0.7 * argp[0], fav[2], argp[2], ok ? "ok" : "miss");
    }
    return {passed >= 2, detail + fmt::format("{}/3 seeds (need 2)", passed)};
}

Outcome portability() {
    const auto& r = g_desk.front();
    auto sc = harness::desk_scenario();
    sc.seed = r.seed;
    const auto seeds = emodrl::evaluation_seeds(sc, harness::ExperimentConfig::desk().emodrl.eval_episodes);
    bool ok = true;
    std::vector<std::string> parts;
    for (std::size_t n : {8, 12}) {
        std::vector<double> f1;
        for (auto t : harness::kTendencies) {
            const auto idx = harness::select_policy(r.archive, harness::tendency_weight(t));
            const auto pol = harness::load_policy(r.dir / r.archive[idx].checkpoint);
            const auto eval = harness::replay_policy(pol, sc, {std::nullopt, n}, seeds);
            f1.push_back(eval.objectives[0]);
        }
        const bool top = f1[0] >= *std::max_element(f1.begin(), f1.end());
        ok = ok && top;
        parts.push_back(fmt::format("N_I={}: f1 rate/energy/switching/balanced = {:.0f}/{:.0f}/{:.0f}/{:.0f}, {}", n,
                                    f1[0], f1[1], f1[2], f1[3],
                                    top ? "favor-rate highest" : "favor-rate NOT highest"));
    }
    return {ok, fmt::format("{}", fmt::join(parts, "; "))};
}

// ---- 8: rate regimes on the default scenario ----

Outcome rate_regimes(const fs::path& root) {
    const auto sc = harness::default_scenario();
    auto cfg = harness::ExperimentConfig::desk();
    cfg.emodrl.generations = 5;
    const auto dir = root / "default_reduced";
    fs::remove_all(dir);
    const auto report = harness::run_experiment(sc, cfg, dir);
    const auto archive = harness::read_archive_csv(report.archive_csv);
    const auto idx = harness::select_policy(archive, harness::tendency_weight(harness::Tendency::FavorRate));
    const auto pol = harness::load_policy(dir / archive[idx].checkpoint);
    const auto seeds = emodrl::evaluation_seeds(sc, cfg.emodrl.eval_episodes);
    env::Environment env(sc);
    const auto fav = agent::evaluate_policy(pol, env, seeds);
    env::Environment single_env(baselines::non_dcb_scenario(sc));
    int single_above = 0, argp_below = 0, fav_below = 0, argp_tx = 0, fav_tx = 0;
    double single_max = 0.0, argp_min = std::numeric_limits<double>::infinity(), fav_min = argp_min;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (const auto& rec : baselines::run_episode(baselines::BaselineKind::NonDcb, single_env, seeds[i]).trace) {
            single_max = std::max(single_max, rec.rate);
            single_above += rec.rate >= sc.rate_threshold ? 1 : 0;
        }
        for (const auto& rec : baselines::run_episode(baselines::BaselineKind::Argp, env, seeds[i]).trace) {
            if (rec.satellite < 0) continue;
            ++argp_tx;
            argp_min = std::min(argp_min, rec.rate);
            argp_below += rec.rate <= sc.rate_threshold ? 1 : 0;
        }
        for (const auto& rec : fav.ledgers[i].trace) {
            if (rec.satellite < 0) continue;
            ++fav_tx;
            fav_min = std::min(fav_min, rec.rate);
            fav_below += rec.rate <= sc.rate_threshold ? 1 : 0;
        }
    }
    const bool ok = single_above == 0 && argp_below == 0 && fav_below == 0 && fav_tx > 0;
    return {ok, fmt::format("threshold {:.0f} bps; non-DCB max {:.0f} bps ({} slots at or above); ARGP min {:.0f} bps over "
                            "{} transmitting slots ({} at or below); favor-rate min {:.0f} bps over {} transmitting "
                            "slots ({} at or below)",
                            sc.rate_threshold, single_max, single_above, argp_min, argp_tx, argp_below, fav_min,
                            fav_tx, fav_below)};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "dcbleo_acceptance";
    fs::create_directories(root);
    const std::vector<Criterion> criteria{
        {1, "orbit oracle", 1.0, orbit_oracle},
        {2, "coherent-gain law", 1.0, coherent_gain},
        {3, "power subproblem vs grid", 60.0, p2_grid},
        {4, "gradient correctness", 30.0, gradients},
        {5, "mask safety", 60.0, mask_safety},
        {6, "micro-problem optimality", 120.0, micro_optimality},
        {7, "archive soundness and monotonicity", 900.0, [&] { return archive_soundness(root); }},
        {8, "rate regimes on the default scenario", 300.0, [&] { return rate_regimes(root); }},
        {9, "rate and switching direction vs ARGP", 2700.0, [&] { return table_direction(root); }},
        {10, "portability across terminal counts", 300.0, portability},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = s <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("criterion %d %s: %s | %s | %.2f s (budget %.0f s%s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), s, c.budget_s, in_time ? "" : ", exceeded");
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu criteria, %d passed, %d failed\n", criteria.size(),
                static_cast<int>(criteria.size()) - failed, failed);
    return failed == 0 ? 0 : 1;
}
