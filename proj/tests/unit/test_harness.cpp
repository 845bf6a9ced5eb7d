// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "harness.hpp"

using namespace dcbleo;
using namespace dcbleo::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

ExperimentConfig tiny_experiment() {
    auto c = ExperimentConfig::desk();
    c.emodrl.num_tasks = 2;
    c.emodrl.warmup_iterations = 3;
    c.emodrl.task_iterations = 2;
    c.emodrl.generations = 2;
    c.emodrl.eval_episodes = 2;
    c.emodrl.threads = 1;
    c.emodrl.agent.hidden = {16};
    c.emodrl.agent.batch_size = 8;
    c.emodrl.agent.gradient_steps = 2;
    return c;
}

Scenario tiny_scenario() {
    auto s = desk_scenario();
    s.slots = 8;
    return s;
}

}  // namespace

TEST_CASE("default scenario layout") {
    const auto s = default_scenario();
    CHECK(s.num_satellites() == 110);
    CHECK(s.num_terminals() == 10);
    int low = 0, high = 0;
    for (const auto& e : s.constellation) {
        low += e.altitude == 5e5 ? 1 : 0;
        high += e.altitude == 1e6 ? 1 : 0;
    }
    CHECK(low == 80);
    CHECK(high == 30);
    CHECK(s.rf.p_min == 1.0);
    CHECK(s.rf.p_max == 2.0);
    CHECK(s.rf.path_loss_exponent == 2.0);
    CHECK(s.rf.carrier_frequency == 2.4e9);
    CHECK(s.slots == 60);
    CHECK(s.slot_duration == 60.0);
    for (const auto& t : s.terminals) {
        CHECK(std::abs(t.x) <= 50.0);
        CHECK(std::abs(t.y) <= 50.0);
    }
}

TEST_CASE("terminal placement is prefix-stable") {
    const auto a = place_terminals(100.0, 12, 9);
    const auto b = place_terminals(100.0, 8, 9);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("calibration puts each reward component in [0, 1]") {
    const auto s = default_scenario();
    const double d = reference_distance(s);
    CHECK(d == 5e5);
    const double snr_max = 100.0 * 2.0 * s.rf.channel_power_gain / (d * d) / s.rf.noise_power;
    CHECK(s.rewards.rate == doctest::Approx(1.0 / (1e7 * std::log2(1.0 + snr_max))));
    CHECK(s.rewards.energy == doctest::Approx(1.0 / (10 * 2.0 * 60.0)));
    CHECK(s.rewards.switching == 1.0);
}

TEST_CASE("scenario JSON round-trips byte for byte") {
    for (const auto& s : {default_scenario(), desk_scenario()}) {
        const auto text = scenario_to_json(s);
        const auto back = scenario_from_json(text);
        CHECK(scenario_to_json(back) == text);
        CHECK(back.rf.rho0 == s.rf.rho0);
        CHECK(back.rewards.rate == s.rewards.rate);
        CHECK(back.terminals == s.terminals);
    }
    const auto path = fs::temp_directory_path() / "dcbleo_unit_scenario.json";
    save_scenario(desk_scenario(), path);
    CHECK(scenario_to_json(load_scenario(path)) == scenario_to_json(desk_scenario()));
    fs::remove(path);
}

TEST_CASE("bundled scenario files parse") {
    const fs::path dir = DCBLEO_SCENARIO_DIR;
    const auto s = load_scenario(dir / "default.json");
    CHECK(s.num_satellites() == 110);
    CHECK(s.num_terminals() == 10);
    CHECK(scenario_to_json(s) == slurp(dir / "default.json"));
}

TEST_CASE("scenario diagnostics") {
    auto text = scenario_to_json(desk_scenario());
    const auto bad_p = text;
    const auto pos = bad_p.find("\"unavailability\": 0.1");
    REQUIRE(pos != std::string::npos);
    auto p15 = bad_p;
    p15.replace(pos, 21, "\"unavailability\": 1.5");
    CHECK_THROWS_AS(scenario_from_json(p15), ConfigError);
    CHECK(message_of([&] { (void)scenario_from_json(p15); }).find("unavailability") != std::string::npos);

    auto unknown = text;
    unknown.replace(unknown.find('{'), 1, "{\"colour\": 1,");
    CHECK(message_of([&] { (void)scenario_from_json(unknown); }).find("unknown key 'colour'") != std::string::npos);

    const auto parse = message_of([] { (void)scenario_from_json("{\n  \"slots\": 4,\n  oops\n}"); });
    CHECK(parse.find("line 3") != std::string::npos);

    const auto typed = message_of([] { (void)scenario_from_json(R"({"rf": {"p_max": "two"}})"); });
    CHECK(typed.find("scenario.rf.p_max") != std::string::npos);
}

TEST_CASE("missing RF and reward blocks fall back to defaults and calibration") {
    const auto full = desk_scenario();
    // A document without rf or rewards blocks.
    std::string minimal = "{\"slots\": 30, \"terminals\": [";
    for (std::size_t i = 0; i < full.terminals.size(); ++i)
        minimal += fmt::format("{}[{}, {}]", i ? ", " : "", full.terminals[i].x, full.terminals[i].y);
    minimal += "], \"constellation\": [";
    for (std::size_t i = 0; i < full.constellation.size(); ++i) {
        const auto& e = full.constellation[i];
        minimal += fmt::format("{}{{\"inclination\": {}, \"argument_of_perigee\": {}, \"altitude\": {}}}", i ? ", " : "",
                               e.inclination, e.argument_of_perigee, e.altitude);
    }
    minimal += "]}";
    const auto s = scenario_from_json(minimal);
    CHECK(s.rf.channel_power_gain == full.rf.channel_power_gain);
    CHECK(s.rf.noise_power == full.rf.noise_power);
    CHECK(s.rf.rho0 == full.rf.rho0);
    CHECK(s.rewards.rate == full.rewards.rate);
}

TEST_CASE("overrides") {
    auto s = desk_scenario();
    override_scenario(s, "p", "0.25");
    CHECK(s.unavailability == 0.25);
    CHECK_THROWS_AS(override_scenario(s, "p", "1.5"), ConfigError);
    CHECK_THROWS_AS(override_scenario(s, "p", "abc"), ConfigError);
    CHECK_THROWS_AS(override_scenario(s, "colour", "1"), ConfigError);
    const auto before = s.terminals;
    override_scenario(s, "terminals", "12");
    REQUIRE(s.num_terminals() == 12);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(s.terminals[i] == before[i]);
    CHECK(s.rewards.energy == doctest::Approx(1.0 / (12 * 2.0 * 60.0)));
    override_scenario(s, "terminals", "8");
    CHECK(s.num_terminals() == 8);
    CHECK_THROWS_AS(override_scenario(s, "terminals", "0"), ConfigError);
}

TEST_CASE("experiment JSON") {
    const auto base = ExperimentConfig::desk();
    const auto text = experiment_to_json(base);
    CHECK(experiment_to_json(experiment_from_json(text, ExperimentConfig::paper())) == text);
    const auto c = experiment_from_json(R"({"generations": 7, "hidden": [8, 4]})", base);
    CHECK(c.emodrl.generations == 7);
    CHECK(c.emodrl.agent.hidden == std::vector<int>{8, 4});
    CHECK(c.emodrl.num_tasks == 4);
    CHECK_THROWS_AS(experiment_from_json(R"({"generation": 7})", base), ConfigError);
    CHECK_THROWS_AS(experiment_from_json(R"({"gamma": 1.0})", base), ConfigError);
    const auto paper = ExperimentConfig::paper().emodrl;
    CHECK(paper.num_tasks == 10);
    CHECK(paper.warmup_iterations == 80);
    CHECK(paper.task_iterations == 20);
    CHECK(paper.generations == 300);
    CHECK(paper.buffer_count == 50);
    CHECK(paper.buffer_size == 2);
    CHECK(paper.agent.gamma == 0.96);
}

TEST_CASE("preferences and selection") {
    CHECK(parse_preference("favor-rate") == Weight3{1, 0, 0});
    CHECK(parse_preference("favor-energy") == Weight3{0, 1, 0});
    CHECK(parse_preference("favor-switching") == Weight3{0, 0, 1});
    CHECK(parse_preference("balanced")[0] == doctest::Approx(1.0 / 3));
    CHECK(parse_preference("0.5,0.25,0.25") == Weight3{0.5, 0.25, 0.25});
    CHECK_THROWS_AS(parse_preference("fast"), ConfigError);
    CHECK_THROWS_AS(parse_preference("0,0,0"), ConfigError);
    CHECK_THROWS_AS(parse_preference("-1,1,1"), ConfigError);

    const std::vector<Objectives> s{{0.2, -0.9, -0.1}, {0.9, -0.95, -0.3}, {0.1, -0.5, -0.2}, {0.9, -0.95, -0.3}};
    CHECK(select_index(s, {1, 0, 0}) == 1);
    CHECK(select_index(s, {0, 1, 0}) == 2);
    CHECK(select_index(s, {0, 0, 1}) == 0);
    const Weight3 bal{1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::vector<Objectives> scaled = s;
    for (auto& f : scaled)
        for (double& x : f) x *= 4.0;
    CHECK(select_index(s, bal) == select_index(scaled, bal));
    for (auto t : kTendencies) CHECK(select_index({s[2]}, tendency_weight(t)) == 0);
    CHECK_THROWS_AS(select_index({}, bal), StateError);
}

TEST_CASE("archive CSV round-trips") {
    std::vector<ArchiveEntry> rows{{{2.5e5, -1000.0, -0.25}, {0.6, -0.8, -0.25}, {0.5, 0.3, 0.2}, 3, "policies/a.bin"},
                                   {{1.0e5, -650.5, -0.1}, {0.2, -0.5, -0.1}, {0.1, 0.8, 0.1}, 0, "policies/b.bin"}};
    const auto path = fs::temp_directory_path() / "dcbleo_unit_archive.csv";
    write_archive_csv(path, rows);
    const auto back = read_archive_csv(path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].objectives == rows[i].objectives);
        CHECK(back[i].scores == rows[i].scores);
        CHECK(back[i].weight == rows[i].weight);
        CHECK(back[i].generation == rows[i].generation);
        CHECK(back[i].checkpoint == rows[i].checkpoint);
    }
    CHECK(slurp(path).rfind("member,generation,f1_bps,f2_j,f3,", 0) == 0);
    std::ofstream(path) << "a,b\n";
    CHECK_THROWS_AS(read_archive_csv(path), ConfigError);
    fs::remove(path);
}

TEST_CASE("out-dir default follows the environment") {
    ::setenv(kOutDirEnv, "/tmp/somewhere", 1);
    CHECK(default_out_dir() == fs::path("/tmp/somewhere"));
    ::unsetenv(kOutDirEnv);
    CHECK(default_out_dir() == fs::path("dcbleo-out"));
}

TEST_CASE("svg output is well formed") {
    const auto rate = rate_svg({{"a", {1e4, 0.0, 3e5}}, {"b", {5e3, 5e3, 5e3}}}, 7.5e3);
    CHECK(rate.rfind("<svg", 0) == 0);
    CHECK(rate.find("</svg>") != std::string::npos);
    CHECK(pareto_svg({{1, 2, 3}, {3, 2, 1}}).find("<circle") != std::string::npos);
    CHECK(objectives_svg({{"argp", {1, 2, 3}}}).find("argp") != std::string::npos);
    CHECK(pareto_svg({}).find("</svg>") != std::string::npos);
}

TEST_CASE("replay under overrides") {
    auto sc = tiny_scenario();
    agent::AgentConfig cfg;
    cfg.hidden = {8};
    const agent::D3qnAgent a(agent::ProblemShape::of(sc), cfg, {0.4, 0.3, 0.3}, 2);
    const auto pol = agent::snapshot(a);
    const auto p0a = replay_policy(pol, sc, {0.0, std::nullopt}, {1});
    const auto p0b = replay_policy(pol, sc, {0.0, std::nullopt}, {2});
    CHECK(p0a.objectives == p0b.objectives);
    const auto p1 = replay_policy(pol, sc, {1.0, std::nullopt}, {1, 2, 3});
    CHECK(p1.objectives == Objectives{0.0, 0.0, 0.0});
    const auto twelve = replay_policy(pol, sc, {std::nullopt, 12}, {1, 2});
    CHECK(twelve.ledgers.size() == 2);
    CHECK(std::isfinite(twelve.objectives[0]));
    auto other = sc;
    other.num_schemes = 5;
    CHECK_THROWS_AS(replay_policy(pol, other, {}, {1}), ConfigError);
}

TEST_CASE("run_experiment writes every artifact deterministically") {
    const auto sc = tiny_scenario();
    const auto cfg = tiny_experiment();
    const auto d1 = fresh_dir("dcbleo_unit_run1");
    const auto d2 = fresh_dir("dcbleo_unit_run2");
    const auto r1 = run_experiment(sc, cfg, d1);
    const auto r2 = run_experiment(sc, cfg, d2);
    std::set<std::string> listed;
    for (const auto& f : r1.files()) {
        CHECK(fs::exists(f));
        listed.insert(fs::relative(f, d1).generic_string());
    }
    for (const auto& e : fs::recursive_directory_iterator(d1))
        if (e.is_regular_file()) CHECK(listed.count(fs::relative(e.path(), d1).generic_string()) == 1);
    for (const auto& f : r1.files()) {
        const auto rel = fs::relative(f, d1);
        if (f.extension() == ".csv" || f.extension() == ".svg" || f.extension() == ".bin")
            CHECK_MESSAGE(slurp(f) == slurp(d2 / rel), rel.string());
    }
    CHECK(r1.policies.size() == 7);
    const auto archive = read_archive_csv(r1.archive_csv);
    CHECK(archive.size() == r1.archive_size);
    for (std::size_t i = 0; i < archive.size(); ++i)
        for (std::size_t j = 0; j < archive.size(); ++j)
            if (i != j) CHECK_FALSE(emodrl::dominates(archive[i].scores, archive[j].scores));
    for (const auto& e : archive) CHECK(fs::exists(d1 / e.checkpoint));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("a failed generation leaves a resumable checkpoint in the output directory") {
    const auto sc = tiny_scenario();
    const auto cfg = tiny_experiment();
    const auto d = fresh_dir("dcbleo_unit_fail");
    emodrl::RunHooks hooks;
    hooks.before_generation = [](int g) {
        if (g == 1) throw std::runtime_error("injected");
    };
    CHECK_THROWS_AS(run_experiment(sc, cfg, d, hooks), emodrl::GenerationError);
    CHECK(fs::exists(d / "run.ckpt"));
    const auto resumed = emodrl::resume(sc, cfg.emodrl, (d / "run.ckpt").string());
    CHECK(resumed.log.size() == 3);
    fs::remove_all(d);
}
