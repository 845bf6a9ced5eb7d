/* SPDX-License-Identifier: Apache-2.0 */
#ifndef DCBLEO_DCBLEO_H
#define DCBLEO_DCBLEO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DCBLEO_BUILDING)
#    define DCB_API __declspec(dllexport)
#  else
#    define DCB_API __declspec(dllimport)
#  endif
#else
#  define DCB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dcb_status {
    DCB_OK = 0,
    DCB_ERR_INVALID_ARGUMENT = 1, /* null handle, bad enum, malformed string */
    DCB_ERR_CONFIG = 2,           /* scenario or algorithm configuration rejected */
    DCB_ERR_DOMAIN = 3,           /* numeric precondition violated */
    DCB_ERR_STATE = 4,            /* operation not valid in the current state */
    DCB_ERR_IO = 5,               /* file could not be read or written */
    DCB_ERR_ILLEGAL_ACTION = 6,   /* unavailable satellite or bad scheme */
    DCB_ERR_INTERNAL = 7
} dcb_status;

typedef struct dcb_scenario dcb_scenario;
typedef struct dcb_policy dcb_policy;
typedef struct dcb_archive dcb_archive;

typedef enum dcb_baseline { DCB_BASELINE_ARGP = 0, DCB_BASELINE_NON_DCB = 1, DCB_BASELINE_RANDOM = 2 } dcb_baseline;

/* Episode-averaged objectives: f1 in bps, f2 in J per slot, f3 in switches per slot. */
typedef struct dcb_objectives {
    double rate_bps;
    double energy_j;
    double switching;
} dcb_objectives;

typedef struct dcb_scenario_info {
    size_t num_satellites;
    size_t num_terminals;
    int slots;
    int num_schemes;
    double slot_duration;
    double rate_threshold;
    double unavailability;
    uint64_t seed;
} dcb_scenario_info;

typedef struct dcb_archive_entry {
    dcb_objectives objectives;
    double scores[3];
    double weight[3];
    int generation;
} dcb_archive_entry;

DCB_API const char* dcb_version(void);

/* Message for the last failed call on this thread; empty after success. */
DCB_API const char* dcb_last_error(void);

/* Scenarios. Every constructor returns a handle owned by the caller. */
DCB_API dcb_status dcb_scenario_default(dcb_scenario** out);
DCB_API dcb_status dcb_scenario_desk(dcb_scenario** out);
DCB_API dcb_status dcb_scenario_load(const char* path, dcb_scenario** out);
DCB_API dcb_status dcb_scenario_save(const dcb_scenario* scenario, const char* path);
/* Keys: p, terminals, seed, slots, rate_threshold, num_schemes. */
DCB_API dcb_status dcb_scenario_override(dcb_scenario* scenario, const char* key, const char* value);
DCB_API dcb_status dcb_scenario_info_get(const dcb_scenario* scenario, dcb_scenario_info* out);
DCB_API void dcb_scenario_free(dcb_scenario* scenario);

/* Runs the evolutionary optimiser plus baselines and writes all artifacts into out_dir.
 * algo_json may be NULL (paper defaults) or a JSON object; preset is "paper" or "desk" and seeds the
 * defaults that algo_json overrides. */
DCB_API dcb_status dcb_run_experiment(const dcb_scenario* scenario, const char* preset, const char* algo_json,
                                      const char* out_dir, size_t* archive_size);

/* One baseline episode. trace_csv may be NULL. */
DCB_API dcb_status dcb_baseline_run(const dcb_scenario* scenario, dcb_baseline kind, uint64_t seed,
                                    const char* trace_csv, dcb_objectives* out);

/* Frozen policies. */
DCB_API dcb_status dcb_policy_load(const char* path, dcb_policy** out);
DCB_API void dcb_policy_free(dcb_policy* policy);
/* Greedy evaluation averaged over `episodes` seeds derived from the scenario seed.
 * unavailability < 0 and terminals == 0 keep the scenario values. trace_csv (first episode) may be NULL. */
DCB_API dcb_status dcb_policy_evaluate(const dcb_policy* policy, const dcb_scenario* scenario, double unavailability,
                                       size_t terminals, int episodes, const char* trace_csv, dcb_objectives* out);

/* Archives exported by dcb_run_experiment (archive.csv). */
DCB_API dcb_status dcb_archive_load(const char* csv_path, dcb_archive** out);
DCB_API void dcb_archive_free(dcb_archive* archive);
DCB_API size_t dcb_archive_size(const dcb_archive* archive);
DCB_API dcb_status dcb_archive_get(const dcb_archive* archive, size_t index, dcb_archive_entry* out);
/* Preference: favor-rate, favor-energy, favor-switching, balanced, or "w1,w2,w3". */
DCB_API dcb_status dcb_archive_select(const dcb_archive* archive, const char* preference, size_t* index);
/* Absolute path of the policy checkpoint for an entry. The pointer stays valid until the archive is freed. */
DCB_API dcb_status dcb_archive_checkpoint_path(const dcb_archive* archive, size_t index, const char** path);

#ifdef __cplusplus
}
#endif

#endif /* DCBLEO_DCBLEO_H */
