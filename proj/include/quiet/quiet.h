/* quiet — cascade-constrained cloze scoring pipeline, C API.
 *
 * All functions return quiet_status; QUIET_OK means success. On failure an
 * error message is placed in *err when err is non-NULL; release it with
 * quiet_string_free. Every char* output parameter follows the same ownership
 * rule. Handles are opaque and freed with their matching *_free function.
 *
 * The library is thread-safe for concurrent calls on distinct handles; a
 * quiet_testset is immutable after load and may be shared across threads.
 */
#ifndef QUIET_H
#define QUIET_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define QUIET_API __declspec(dllexport)
#else
#define QUIET_API __attribute__((visibility("default")))
#endif

typedef enum quiet_status {
    QUIET_OK = 0,
    QUIET_ERR_USAGE = 1,      /* bad arguments, malformed input files */
    QUIET_ERR_VALIDATION = 2, /* test set failed invariant validation */
    QUIET_ERR_PROVIDER = 3,   /* transport, credential or cache failure */
    QUIET_ERR_SCORING = 4     /* judging / scoring failure */
} quiet_status;

QUIET_API const char* quiet_version(void);
QUIET_API void quiet_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Test sets                                                           */

typedef struct quiet_testset quiet_testset;

QUIET_API quiet_status quiet_testset_load(const char* path, quiet_testset** out, char** err);
QUIET_API quiet_status quiet_testset_load_json(const char* json_text, quiet_testset** out,
                                               char** err);
QUIET_API void quiet_testset_free(quiet_testset* ts);

QUIET_API int quiet_testset_blank_count(const quiet_testset* ts);
QUIET_API int quiet_testset_group_count(const quiet_testset* ts);

/* Validation findings and (when acyclic) the topological group order as a
 * JSON document: {"findings":[{"code","message"},...],"topo_order":[...]}.
 * Returns QUIET_OK even when findings exist; findings are data. */
QUIET_API quiet_status quiet_testset_validate(const quiet_testset* ts, char** report_json,
                                              char** err);

QUIET_API quiet_status quiet_testset_render_prompt(const quiet_testset* ts,
                                                   int reveal_constraints, char** prompt,
                                                   char** err);

/* ------------------------------------------------------------------ */
/* Pipeline verbs                                                      */

typedef struct quiet_run_options {
    const char* testset_path;
    const char* providers_path;        /* models/judges/embedding config file */
    const char* judges;                /* comma-separated subset, NULL = all  */
    const char* mode;                  /* "live" | "replay" | "record"        */
    const char* cache_dir;
    const char* out_dir;
    const char* configs;               /* "default" or comma-separated ids    */
    int parallelism;
    int reveal_constraints;
    int embed_context;
    const char* exclude_from_centroid; /* comma-separated model ids           */
} quiet_run_options;

QUIET_API void quiet_run_options_init(quiet_run_options* opts);

/* artifacts_json: {"paths":[...],"flagged_models":[...]} */
QUIET_API quiet_status quiet_collect(const quiet_run_options* opts, char** artifacts_json,
                                     char** err);
QUIET_API quiet_status quiet_score(const quiet_run_options* opts, char** artifacts_json,
                                   char** err);
QUIET_API quiet_status quiet_stats(const char* run_dir, char** err);
QUIET_API quiet_status quiet_sensitivity(const char* run_dir, char** err);

/* Recomputes totals from transcribed satisfy/surprise tables and checks both
 * values and ranking against the expected columns. *all_pass is 1/0. */
QUIET_API quiet_status quiet_verify_paper(const char* tables_csv, char** report_text,
                                          int* all_pass, char** err);

/* ------------------------------------------------------------------ */
/* Pure helpers (for bindings and quick checks)                        */

/* scheme: "A" | "B" | "D" | "C<lambda>" e.g. "C1.0" */
QUIET_API quiet_status quiet_composite(double satisfy, double surprise, const char* scheme,
                                       double* out, char** err);
QUIET_API quiet_status quiet_spearman(const double* x, const double* y, size_t n, double* out,
                                      char** err);

#ifdef __cplusplus
}
#endif

#endif /* QUIET_H */
