/* C interface to the hebbdqn engine.
 *
 * Every function returns an hdqn_status. On failure a description is
 * available from hdqn_last_error() on the calling thread until the next call
 * into the library from that thread. Strings returned through char** out
 * parameters are owned by the caller and released with hdqn_string_free.
 * Handles are single-owner and not thread-safe. */
#ifndef HEBBDQN_HEBBDQN_H_
#define HEBBDQN_HEBBDQN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(HDQN_BUILDING_LIBRARY)
#define HDQN_API __attribute__((visibility("default")))
#else
#define HDQN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hdqn_status {
  HDQN_OK = 0,
  HDQN_ERR_VALIDATION = 1,
  HDQN_ERR_PARSE = 2,
  HDQN_ERR_SHAPE = 3,
  HDQN_ERR_STATE = 4,
  HDQN_ERR_IO = 5,
  HDQN_ERR_USAGE = 6,
  HDQN_ERR_RUNTIME = 7,
  HDQN_ERR_NULL_ARGUMENT = 8
} hdqn_status;

HDQN_API const char* hdqn_last_error(void);
HDQN_API const char* hdqn_status_name(hdqn_status status);
HDQN_API const char* hdqn_version(void);
HDQN_API void hdqn_string_free(char* s);

/* ---- tabular MDPs ---------------------------------------------------- */

typedef struct hdqn_mdp hdqn_mdp;

HDQN_API hdqn_status hdqn_mdp_load(const char* path, hdqn_mdp** out);
HDQN_API hdqn_status hdqn_mdp_parse(const char* json, hdqn_mdp** out);
HDQN_API void hdqn_mdp_free(hdqn_mdp* mdp);
HDQN_API hdqn_status hdqn_mdp_dims(const hdqn_mdp* mdp, size_t* n_states, size_t* n_actions,
                                   double* gamma);

typedef struct hdqn_solve_options {
  double tol;               /* vi / qvi stopping tolerance */
  int max_iters;            /* vi / qvi sweep limit */
  uint64_t seed;            /* qlearn */
  double alpha;             /* qlearn learning rate */
  int episodes;             /* qlearn */
  int steps_per_episode;    /* qlearn */
  double epsilon_start;     /* qlearn, linear over all episodes */
  double epsilon_end;
  int random_init;          /* qlearn: nonzero starts Q from uniform noise */
} hdqn_solve_options;

HDQN_API void hdqn_solve_options_default(hdqn_solve_options* options);

/* algo: "vi", "qvi" or "qlearn". Writes a JSON document with "values" (and
 * "q" for the Q algorithms), the greedy "policy" and solver statistics. */
HDQN_API hdqn_status hdqn_mdp_solve(const hdqn_mdp* mdp, const char* algo,
                                    const hdqn_solve_options* options, char** json_out);

/* ---- training configuration ------------------------------------------ */

typedef struct hdqn_config hdqn_config;

HDQN_API hdqn_status hdqn_config_new(hdqn_config** out);
/* Defaults overlaid with the file's keys. */
HDQN_API hdqn_status hdqn_config_load(const char* path, hdqn_config** out);
HDQN_API void hdqn_config_free(hdqn_config* config);
HDQN_API hdqn_status hdqn_config_set(hdqn_config* config, const char* key, const char* value);
/* "key=value" */
HDQN_API hdqn_status hdqn_config_override(hdqn_config* config, const char* assignment);
HDQN_API hdqn_status hdqn_config_get(const hdqn_config* config, const char* key, char** value_out);
HDQN_API hdqn_status hdqn_config_dump(const hdqn_config* config, char** text_out);
HDQN_API hdqn_status hdqn_config_validate(const hdqn_config* config);

/* ---- environments ------------------------------------------------------ */

typedef struct hdqn_env hdqn_env;

HDQN_API hdqn_status hdqn_env_new(const char* name, uint64_t seed, hdqn_env** out);
HDQN_API void hdqn_env_free(hdqn_env* env);
HDQN_API hdqn_status hdqn_env_info(const hdqn_env* env, size_t* n_actions, size_t* width,
                                   size_t* height);
/* frame_out receives width * height * 3 RGB bytes. */
HDQN_API hdqn_status hdqn_env_reset(hdqn_env* env, uint8_t* frame_out, size_t frame_len);
HDQN_API hdqn_status hdqn_env_step(hdqn_env* env, size_t action, uint8_t* frame_out,
                                   size_t frame_len, double* reward, int* terminated);
/* Comma-separated list of accepted environment names. */
HDQN_API hdqn_status hdqn_env_list(char** names_out);

/* ---- training, evaluation, diagnostics -------------------------------- */

typedef struct hdqn_episode_record {
  size_t episode; /* 1-based */
  const char* phase; /* "warmup", "fixed" or "plastic" */
  double reward;
  int has_loss;
  double loss;
  double max_q;
  double epsilon;
  double learning_rate;
} hdqn_episode_record;

typedef void (*hdqn_episode_callback)(const hdqn_episode_record* record, void* user);

/* Runs a full training job writing config.conf, metrics.csv, summary.json
 * and checkpoints into out_dir. callback may be NULL. summary_json_out may be
 * NULL. */
HDQN_API hdqn_status hdqn_train(const hdqn_config* config, const char* out_dir,
                                hdqn_episode_callback callback, void* user,
                                char** summary_json_out);

typedef struct hdqn_eval_options {
  size_t episodes;
  double epsilon;
  uint64_t seed;
  size_t max_steps_per_episode;
  size_t threads;
  const char* dump_frames_dir; /* NULL disables PNG dumps */
} hdqn_eval_options;

HDQN_API void hdqn_eval_options_default(hdqn_eval_options* options);
HDQN_API hdqn_status hdqn_evaluate(const char* checkpoint_path, const char* env_name,
                                   const hdqn_eval_options* options, char** summary_json_out);

/* JSON array of {"name", "max_relative_error", "entries", "skipped", "passed"};
 * "skipped" counts entries at non-differentiable points. */
HDQN_API hdqn_status hdqn_gradcheck(uint64_t seed, char** report_json_out, int* all_passed);

/* JSON array of the written file paths. */
HDQN_API hdqn_status hdqn_export_plots_data(const char* run_dir, const char* out_dir,
                                            char** written_json_out);

#ifdef __cplusplus
}
#endif

#endif /* HEBBDQN_HEBBDQN_H_ */
