// SPDX-License-Identifier: Apache-2.0
// Command-line front end; talks to the library only through the C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcbleo/dcbleo.h"

namespace {

struct ScenarioDeleter {
    void operator()(dcb_scenario* s) const { dcb_scenario_free(s); }
};
struct PolicyDeleter {
    void operator()(dcb_policy* p) const { dcb_policy_free(p); }
};
struct ArchiveDeleter {
    void operator()(dcb_archive* a) const { dcb_archive_free(a); }
};
using ScenarioPtr = std::unique_ptr<dcb_scenario, ScenarioDeleter>;
using PolicyPtr = std::unique_ptr<dcb_policy, PolicyDeleter>;
using ArchivePtr = std::unique_ptr<dcb_archive, ArchiveDeleter>;

class CliError : public std::runtime_error {
public:
    CliError(dcb_status code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    [[nodiscard]] dcb_status code() const { return code_; }

private:
    dcb_status code_;
};

void check(dcb_status st) {
    if (st != DCB_OK) throw CliError(st, dcb_last_error());
}

ScenarioPtr open_scenario(const std::string& spec, const std::vector<std::string>& overrides) {
    dcb_scenario* raw = nullptr;
    if (spec == "builtin:default")
        check(dcb_scenario_default(&raw));
    else if (spec == "builtin:desk")
        check(dcb_scenario_desk(&raw));
    else
        check(dcb_scenario_load(spec.c_str(), &raw));
    ScenarioPtr s(raw);
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw CliError(DCB_ERR_INVALID_ARGUMENT, "override '" + o + "' is not key=value");
        check(dcb_scenario_override(s.get(), o.substr(0, eq).c_str(), o.substr(eq + 1).c_str()));
    }
    return s;
}

std::string read_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CliError(DCB_ERR_IO, "cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void print_objectives(const char* label, const dcb_objectives& o) {
    std::printf("%s f1_bps=%.6g f2_j=%.6g f3=%.6g\n", label, o.rate_bps, o.energy_j, o.switching);
}

std::string default_out_dir() {
    const char* v = std::getenv("DCBLEO_OUT_DIR");
    return (v != nullptr && *v != '\0') ? v : "dcbleo-out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DCB uplink simulator and multi-objective policy optimiser for LEO constellations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dcb_version());

    std::string scenario_spec = "builtin:default";
    std::vector<std::string> overrides;
    auto add_scenario = [&](CLI::App* sub) {
        sub->add_option("-s,--scenario", scenario_spec,
                        "Scenario JSON file, or builtin:default / builtin:desk")
            ->capture_default_str();
        sub->add_option("--set", overrides, "Scenario override key=value (p, terminals, seed, slots, rate_threshold, "
                                            "num_schemes); repeatable");
    };

    // run
    auto* run = app.add_subcommand("run", "Train the Pareto archive and run the baselines on matched seeds");
    add_scenario(run);
    std::string preset = "paper", algo_path, out_dir = default_out_dir();
    std::int64_t seed = -1;
    run->add_option("--preset", preset, "Algorithm defaults: paper or desk")
        ->check(CLI::IsMember({"paper", "desk"}))
        ->capture_default_str();
    run->add_option("--algo", algo_path, "Algorithm config JSON overriding the preset");
    run->add_option("-o,--out", out_dir, "Output directory (default from DCBLEO_OUT_DIR)")->capture_default_str();
    run->add_option("--seed", seed, "Master seed (overrides the scenario seed)");

    // baseline
    auto* base = app.add_subcommand("baseline", "Run one baseline episode");
    add_scenario(base);
    std::string kind = "argp", trace;
    std::uint64_t episode_seed = 1;
    base->add_option("-k,--kind", kind, "argp, non-dcb or random")
        ->check(CLI::IsMember({"argp", "non-dcb", "random"}))
        ->capture_default_str();
    base->add_option("--seed", episode_seed, "Episode seed")->capture_default_str();
    base->add_option("--trace", trace, "Write the per-slot trace CSV here");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Replay a saved policy, optionally under changed p or terminal count");
    add_scenario(eval);
    std::string checkpoint;
    double p_override = -1.0;
    std::size_t terminals = 0;
    int episodes = 3;
    eval->add_option("-c,--checkpoint", checkpoint, "Policy checkpoint (.bin)")->required();
    eval->add_option("--p", p_override, "Unavailability probability override");
    eval->add_option("--terminals", terminals, "Terminal count override");
    eval->add_option("--episodes", episodes, "Evaluation episodes")->capture_default_str();
    eval->add_option("--trace", trace, "Write the first episode's trace CSV here");

    // select
    auto* sel = app.add_subcommand("select", "Pick an archive policy by preference");
    std::string archive_path, preference = "balanced";
    sel->add_option("-a,--archive", archive_path, "archive.csv from a run")->required();
    sel->add_option("-p,--preference", preference,
                    "favor-rate, favor-energy, favor-switching, balanced, or w1,w2,w3")
        ->capture_default_str();

    // scenario
    auto* scen = app.add_subcommand("scenario", "Write a scenario (with overrides applied) as JSON");
    add_scenario(scen);
    std::string scenario_out;
    scen->add_option("-o,--out", scenario_out, "Destination JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (seed >= 0) overrides.push_back("seed=" + std::to_string(seed));
            auto s = open_scenario(scenario_spec, overrides);
            const std::string algo = algo_path.empty() ? std::string() : read_text(algo_path);
            std::size_t size = 0;
            check(dcb_run_experiment(s.get(), preset.c_str(), algo_path.empty() ? nullptr : algo.c_str(),
                                     out_dir.c_str(), &size));
            std::printf("archive_size=%zu out_dir=%s\n", size, out_dir.c_str());
        } else if (*base) {
            auto s = open_scenario(scenario_spec, overrides);
            const dcb_baseline k = kind == "argp"      ? DCB_BASELINE_ARGP
                                   : kind == "non-dcb" ? DCB_BASELINE_NON_DCB
                                                       : DCB_BASELINE_RANDOM;
            dcb_objectives o{};
            check(dcb_baseline_run(s.get(), k, episode_seed, trace.empty() ? nullptr : trace.c_str(), &o));
            print_objectives(kind.c_str(), o);
        } else if (*eval) {
            auto s = open_scenario(scenario_spec, overrides);
            dcb_policy* raw = nullptr;
            check(dcb_policy_load(checkpoint.c_str(), &raw));
            PolicyPtr pol(raw);
            dcb_objectives o{};
            check(dcb_policy_evaluate(pol.get(), s.get(), p_override, terminals, episodes,
                                      trace.empty() ? nullptr : trace.c_str(), &o));
            print_objectives("policy", o);
        } else if (*sel) {
            dcb_archive* raw = nullptr;
            check(dcb_archive_load(archive_path.c_str(), &raw));
            ArchivePtr a(raw);
            std::size_t idx = 0;
            check(dcb_archive_select(a.get(), preference.c_str(), &idx));
            dcb_archive_entry e{};
            check(dcb_archive_get(a.get(), idx, &e));
            const char* path = nullptr;
            check(dcb_archive_checkpoint_path(a.get(), idx, &path));
            std::printf("member=%zu generation=%d weight=%.6g,%.6g,%.6g checkpoint=%s\n", idx, e.generation,
                        e.weight[0], e.weight[1], e.weight[2], path);
            print_objectives("selected", e.objectives);
        } else if (*scen) {
            auto s = open_scenario(scenario_spec, overrides);
            check(dcb_scenario_save(s.get(), scenario_out.c_str()));
            dcb_scenario_info info{};
            check(dcb_scenario_info_get(s.get(), &info));
            std::printf("satellites=%zu terminals=%zu slots=%d wrote=%s\n", info.num_satellites, info.num_terminals,
                        info.slots, scenario_out.c_str());
        }
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 10 + static_cast<int>(e.code());
    }
    return 0;
}
