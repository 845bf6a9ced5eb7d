/* SPDX-License-Identifier: Apache-2.0 */
/* Exercises the shared library through its C header only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "dcbleo/dcbleo.h"

static int failures = 0;

#define EXPECT(cond)                                                              \
    do {                                                                          \
        if (!(cond)) {                                                            \
            fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
                    dcb_last_error());                                            \
            ++failures;                                                           \
        }                                                                         \
    } while (0)

static void join(char* buf, size_t n, const char* dir, const char* name) { snprintf(buf, n, "%s/%s", dir, name); }

int main(int argc, char** argv) {
    if (argc < 2) {
        fprintf(stderr, "usage: %s <scratch-dir>\n", argv[0]);
        return 2;
    }
    const char* dir = argv[1];
    char path[4096];

    EXPECT(strcmp(dcb_version(), "1.0.0") == 0);
    EXPECT(dcb_scenario_default(NULL) == DCB_ERR_INVALID_ARGUMENT);
    EXPECT(strstr(dcb_last_error(), "NULL") != NULL);

    dcb_scenario* def = NULL;
    EXPECT(dcb_scenario_default(&def) == DCB_OK);
    EXPECT(dcb_last_error()[0] == '\0');
    dcb_scenario_info info;
    EXPECT(dcb_scenario_info_get(def, &info) == DCB_OK);
    EXPECT(info.num_satellites == 110);
    EXPECT(info.num_terminals == 10);
    EXPECT(info.slots == 60);
    EXPECT(info.num_schemes == 10);
    EXPECT(dcb_scenario_override(def, "p", "1.5") == DCB_ERR_CONFIG);
    EXPECT(strstr(dcb_last_error(), "unavailability") != NULL);
    EXPECT(dcb_scenario_override(def, "bogus", "1") == DCB_ERR_CONFIG);
    dcb_scenario_free(def);

    dcb_scenario* desk = NULL;
    EXPECT(dcb_scenario_desk(&desk) == DCB_OK);
    join(path, sizeof path, dir, "desk.json");
    EXPECT(dcb_scenario_save(desk, path) == DCB_OK);
    dcb_scenario* again = NULL;
    EXPECT(dcb_scenario_load(path, &again) == DCB_OK);
    EXPECT(dcb_scenario_info_get(again, &info) == DCB_OK);
    EXPECT(info.num_satellites == 12 && info.slots == 30);
    dcb_scenario_free(again);
    join(path, sizeof path, dir, "missing.json");
    EXPECT(dcb_scenario_load(path, &again) == DCB_ERR_IO);

    dcb_objectives argp, single;
    join(path, sizeof path, dir, "argp.csv");
    EXPECT(dcb_baseline_run(desk, DCB_BASELINE_ARGP, 1, path, &argp) == DCB_OK);
    EXPECT(dcb_baseline_run(desk, DCB_BASELINE_NON_DCB, 1, NULL, &single) == DCB_OK);
    EXPECT(argp.rate_bps > single.rate_bps);
    EXPECT(argp.energy_j > 0.0);
    EXPECT(dcb_baseline_run(desk, (dcb_baseline)7, 1, NULL, &argp) == DCB_ERR_INVALID_ARGUMENT);

    EXPECT(dcb_scenario_override(desk, "slots", "8") == DCB_OK);
    size_t archive_size = 0;
    const char* algo = "{\"num_tasks\": 2, \"warmup_iterations\": 3, \"task_iterations\": 2, \"generations\": 2,"
                       " \"hidden\": [16], \"batch_size\": 8, \"threads\": 1}";
    join(path, sizeof path, dir, "run");
    EXPECT(dcb_run_experiment(desk, "desk", "{\"generations\": }", path, &archive_size) == DCB_ERR_CONFIG);
    EXPECT(strstr(dcb_last_error(), "line 1") != NULL);
    EXPECT(dcb_run_experiment(desk, "fast", NULL, path, &archive_size) == DCB_ERR_CONFIG);
    EXPECT(dcb_run_experiment(desk, "desk", algo, path, &archive_size) == DCB_OK);
    EXPECT(archive_size >= 1);

    dcb_archive* archive = NULL;
    join(path, sizeof path, dir, "run/archive.csv");
    EXPECT(dcb_archive_load(path, &archive) == DCB_OK);
    EXPECT(dcb_archive_size(archive) == archive_size);
    size_t pick = 99;
    EXPECT(dcb_archive_select(archive, "favor-rate", &pick) == DCB_OK);
    EXPECT(pick < archive_size);
    dcb_archive_entry best, other;
    EXPECT(dcb_archive_get(archive, pick, &best) == DCB_OK);
    for (size_t i = 0; i < archive_size; ++i) {
        EXPECT(dcb_archive_get(archive, i, &other) == DCB_OK);
        EXPECT(other.scores[0] <= best.scores[0]);
    }
    EXPECT(dcb_archive_get(archive, archive_size, &other) == DCB_ERR_INVALID_ARGUMENT);
    EXPECT(dcb_archive_select(archive, "sideways", &pick) == DCB_ERR_CONFIG);

    const char* ckpt = NULL;
    EXPECT(dcb_archive_checkpoint_path(archive, 0, &ckpt) == DCB_OK);
    dcb_policy* policy = NULL;
    EXPECT(dcb_policy_load(ckpt, &policy) == DCB_OK);
    dcb_objectives f10, f12, dark;
    EXPECT(dcb_policy_evaluate(policy, desk, -1.0, 0, 2, NULL, &f10) == DCB_OK);
    EXPECT(dcb_policy_evaluate(policy, desk, -1.0, 12, 2, NULL, &f12) == DCB_OK);
    EXPECT(dcb_policy_evaluate(policy, desk, 1.0, 0, 2, NULL, &dark) == DCB_OK);
    EXPECT(dark.rate_bps == 0.0 && dark.energy_j == 0.0 && dark.switching == 0.0);
    EXPECT(dcb_policy_evaluate(policy, desk, -1.0, 0, 0, NULL, &f10) == DCB_ERR_INVALID_ARGUMENT);
    EXPECT(dcb_policy_evaluate(NULL, desk, -1.0, 0, 1, NULL, &f10) == DCB_ERR_INVALID_ARGUMENT);

    dcb_policy_free(policy);
    dcb_archive_free(archive);
    dcb_scenario_free(desk);
    dcb_scenario_free(NULL);

    if (failures == 0) printf("C API: all checks passed\n");
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
