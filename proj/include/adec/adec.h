#ifndef ADEC_H
#define ADEC_H

/* C interface to the clustering laboratory. All functions are synchronous.
 * Calls return ADEC_OK on success; on failure adec_last_error() describes
 * the most recent error on the calling thread. */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  ADEC_OK = 0,
  ADEC_ERR_INVALID = 1,   /* bad argument or unknown key */
  ADEC_ERR_FORMAT = 2,    /* unreadable file or malformed content */
  ADEC_ERR_DOMAIN = 3,    /* numeric domain violation (non-finite loss, ...) */
  ADEC_ERR_DIMENSION = 4, /* shape mismatch */
  ADEC_ERR_INTERNAL = 5
} adec_status;

/* Opaque run configuration. Keys follow the config-file names, e.g.
 * "dataset", "mode", "seed", "batch", "gamma". */
typedef struct adec_config adec_config;

adec_config* adec_config_create(void);
void adec_config_destroy(adec_config* cfg);
adec_status adec_config_load_file(adec_config* cfg, const char* path);
adec_status adec_config_set(adec_config* cfg, const char* key,
                            const char* value);

typedef struct {
  double acc;  /* negative when labels were unavailable */
  double nmi;
  unsigned long long iters;
} adec_run_report;

adec_status adec_run_pretrain(adec_config* cfg, adec_run_report* report);
adec_status adec_run_cluster(adec_config* cfg, adec_run_report* report);
adec_status adec_run_evaluate(adec_config* cfg, adec_run_report* report);
adec_status adec_run_diagnose(adec_config* cfg, adec_run_report* report);
adec_status adec_run_sweep_gamma(adec_config* cfg, adec_run_report* report);

/* columns_csv: comma-separated column names from the metrics log header. */
adec_status adec_run_plot(const char* log_path, const char* columns_csv,
                          const char* out_path);

/* Runs the built-in identity and gradient verifications, printing one line
 * per check to stdout. *failures receives 0 when every check passes and a
 * nonzero value otherwise. */
adec_status adec_run_check(int* failures);

const char* adec_status_name(adec_status status);
/* Message for the last failing call on this thread; empty string if none. */
const char* adec_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* ADEC_H */
