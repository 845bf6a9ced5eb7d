// SPDX-License-Identifier: Apache-2.0
#include "dcbleo/dcbleo.h"

#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "harness.hpp"

using namespace dcbleo;

struct dcb_scenario {
    Scenario scenario;
};

struct dcb_policy {
    agent::PolicySnapshot policy;
};

struct dcb_archive {
    std::vector<harness::ArchiveEntry> entries;
    std::vector<std::string> checkpoints;  // absolute
};

namespace {

thread_local std::string g_last_error;

dcb_status fail(dcb_status code, const char* message) {
    g_last_error = message;
    return code;
}

template <class F>
dcb_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return DCB_OK;
    } catch (const ConfigError& e) {
        return fail(DCB_ERR_CONFIG, e.what());
    } catch (const IoError& e) {
        return fail(DCB_ERR_IO, e.what());
    } catch (const IllegalActionError& e) {
        return fail(DCB_ERR_ILLEGAL_ACTION, e.what());
    } catch (const DomainError& e) {
        return fail(DCB_ERR_DOMAIN, e.what());
    } catch (const StateError& e) {
        return fail(DCB_ERR_STATE, e.what());
    } catch (const ShapeError& e) {
        return fail(DCB_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(DCB_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(DCB_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(DCB_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(DCB_ERR_INTERNAL, "unknown error");
    }
}

dcb_objectives to_c(const Objectives& reported) { return {reported[0], reported[1], reported[2]}; }

dcb_status scenario_out(dcb_scenario** out, Scenario (*make)()) {
    if (out == nullptr) return fail(DCB_ERR_INVALID_ARGUMENT, "out must not be NULL");
    return guarded([&] { *out = new dcb_scenario{make()}; });
}

}  // namespace

#define DCB_CHECK(ptr)                                                                         \
    do {                                                                                       \
        if ((ptr) == nullptr) return fail(DCB_ERR_INVALID_ARGUMENT, #ptr " must not be NULL"); \
    } while (0)

extern "C" {

const char* dcb_version(void) { return "1.0.0"; }

const char* dcb_last_error(void) { return g_last_error.c_str(); }

dcb_status dcb_scenario_default(dcb_scenario** out) { return scenario_out(out, harness::default_scenario); }

dcb_status dcb_scenario_desk(dcb_scenario** out) { return scenario_out(out, harness::desk_scenario); }

dcb_status dcb_scenario_load(const char* path, dcb_scenario** out) {
    DCB_CHECK(path);
    DCB_CHECK(out);
    return guarded([&] { *out = new dcb_scenario{harness::load_scenario(path)}; });
}

dcb_status dcb_scenario_save(const dcb_scenario* scenario, const char* path) {
    DCB_CHECK(scenario);
    DCB_CHECK(path);
    return guarded([&] { harness::save_scenario(scenario->scenario, path); });
}

dcb_status dcb_scenario_override(dcb_scenario* scenario, const char* key, const char* value) {
    DCB_CHECK(scenario);
    DCB_CHECK(key);
    DCB_CHECK(value);
    return guarded([&] {
        Scenario s = scenario->scenario;
        harness::override_scenario(s, key, value);
        scenario->scenario = std::move(s);
    });
}

dcb_status dcb_scenario_info_get(const dcb_scenario* scenario, dcb_scenario_info* out) {
    DCB_CHECK(scenario);
    DCB_CHECK(out);
    const auto& s = scenario->scenario;
    *out = {s.num_satellites(), s.num_terminals(), s.slots,          s.num_schemes,
            s.slot_duration,    s.rate_threshold,  s.unavailability, s.seed};
    g_last_error.clear();
    return DCB_OK;
}

void dcb_scenario_free(dcb_scenario* scenario) { delete scenario; }

dcb_status dcb_run_experiment(const dcb_scenario* scenario, const char* preset, const char* algo_json,
                              const char* out_dir, size_t* archive_size) {
    DCB_CHECK(scenario);
    DCB_CHECK(out_dir);
    return guarded([&] {
        const std::string p = preset == nullptr ? "paper" : preset;
        harness::ExperimentConfig base;
        if (p == "paper")
            base = harness::ExperimentConfig::paper();
        else if (p == "desk")
            base = harness::ExperimentConfig::desk();
        else
            throw ConfigError("preset must be 'paper' or 'desk'");
        const auto cfg = algo_json == nullptr ? base : harness::experiment_from_json(algo_json, base);
        const auto report = harness::run_experiment(scenario->scenario, cfg, out_dir);
        if (archive_size != nullptr) *archive_size = report.archive_size;
    });
}

dcb_status dcb_baseline_run(const dcb_scenario* scenario, dcb_baseline kind, uint64_t seed, const char* trace_csv,
                            dcb_objectives* out) {
    DCB_CHECK(scenario);
    DCB_CHECK(out);
    baselines::BaselineKind k{};
    switch (kind) {
        case DCB_BASELINE_ARGP: k = baselines::BaselineKind::Argp; break;
        case DCB_BASELINE_NON_DCB: k = baselines::BaselineKind::NonDcb; break;
        case DCB_BASELINE_RANDOM: k = baselines::BaselineKind::Random; break;
        default: return fail(DCB_ERR_INVALID_ARGUMENT, "unknown baseline kind");
    }
    return guarded([&] {
        const auto& s = scenario->scenario;
        const auto ledger = baselines::run_episode(k, s, seed);
        if (trace_csv != nullptr) harness::write_trace_csv(trace_csv, ledger);
        *out = to_c(env::episode_objectives(ledger, s.slots, s.slot_duration));
    });
}

dcb_status dcb_policy_load(const char* path, dcb_policy** out) {
    DCB_CHECK(path);
    DCB_CHECK(out);
    return guarded([&] { *out = new dcb_policy{harness::load_policy(path)}; });
}

void dcb_policy_free(dcb_policy* policy) { delete policy; }

dcb_status dcb_policy_evaluate(const dcb_policy* policy, const dcb_scenario* scenario, double unavailability,
                               size_t terminals, int episodes, const char* trace_csv, dcb_objectives* out) {
    DCB_CHECK(policy);
    DCB_CHECK(scenario);
    DCB_CHECK(out);
    if (episodes < 1) return fail(DCB_ERR_INVALID_ARGUMENT, "episodes must be >= 1");
    return guarded([&] {
        harness::ReplayOverrides o;
        if (unavailability >= 0.0) o.unavailability = unavailability;
        if (terminals > 0) o.terminals = terminals;
        const auto seeds = emodrl::evaluation_seeds(scenario->scenario, episodes);
        const auto eval = harness::replay_policy(policy->policy, scenario->scenario, o, seeds);
        if (trace_csv != nullptr) harness::write_trace_csv(trace_csv, eval.ledgers.front());
        *out = {eval.objectives[0], -eval.objectives[1], -eval.objectives[2]};
    });
}

dcb_status dcb_archive_load(const char* csv_path, dcb_archive** out) {
    DCB_CHECK(csv_path);
    DCB_CHECK(out);
    return guarded([&] {
        auto a = std::make_unique<dcb_archive>();
        a->entries = harness::read_archive_csv(csv_path);
        const auto dir = std::filesystem::absolute(csv_path).parent_path();
        for (const auto& e : a->entries) a->checkpoints.push_back((dir / e.checkpoint).lexically_normal().string());
        *out = a.release();
    });
}

void dcb_archive_free(dcb_archive* archive) { delete archive; }

size_t dcb_archive_size(const dcb_archive* archive) { return archive == nullptr ? 0 : archive->entries.size(); }

dcb_status dcb_archive_get(const dcb_archive* archive, size_t index, dcb_archive_entry* out) {
    DCB_CHECK(archive);
    DCB_CHECK(out);
    if (index >= archive->entries.size()) return fail(DCB_ERR_INVALID_ARGUMENT, "archive index out of range");
    const auto& e = archive->entries[index];
    *out = {{e.objectives[0], -e.objectives[1], -e.objectives[2]},
            {e.scores[0], e.scores[1], e.scores[2]},
            {e.weight[0], e.weight[1], e.weight[2]},
            e.generation};
    g_last_error.clear();
    return DCB_OK;
}

dcb_status dcb_archive_select(const dcb_archive* archive, const char* preference, size_t* index) {
    DCB_CHECK(archive);
    DCB_CHECK(preference);
    DCB_CHECK(index);
    return guarded([&] { *index = harness::select_policy(archive->entries, harness::parse_preference(preference)); });
}

dcb_status dcb_archive_checkpoint_path(const dcb_archive* archive, size_t index, const char** path) {
    DCB_CHECK(archive);
    DCB_CHECK(path);
    if (index >= archive->entries.size()) return fail(DCB_ERR_INVALID_ARGUMENT, "archive index out of range");
    *path = archive->checkpoints[index].c_str();
    g_last_error.clear();
    return DCB_OK;
}

}  // extern "C"
