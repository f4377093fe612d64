/* C interface to the HoneyMesh simulator. */
#ifndef HONEYMESH_H
#define HONEYMESH_H

#include <stddef.h>
#include <stdint.h>

#if defined(HM_BUILDING_LIBRARY)
#define HM_API __attribute__((visibility("default")))
#else
#define HM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hm_status {
  HM_OK = 0,
  HM_ERR_INVALID_ARGUMENT = 1,
  HM_ERR_PARSE = 2,
  HM_ERR_VALIDATION = 3,
  HM_ERR_IO = 4,
  HM_ERR_INSUFFICIENT_SAMPLE = 5,
  HM_ERR_UNKNOWN_AXIS = 6,
  HM_ERR_INTERNAL = 7
} hm_status;

typedef struct hm_scenario hm_scenario;
typedef struct hm_run hm_run;

/* Message for the last failed call on this thread; "" when none. */
HM_API const char* hm_last_error(void);
HM_API const char* hm_status_name(hm_status s);
HM_API const char* hm_version(void);

HM_API hm_status hm_scenario_load(const char* path, hm_scenario** out);
HM_API hm_status hm_scenario_parse(const char* json_text, hm_scenario** out);
HM_API void hm_scenario_free(hm_scenario* s);
HM_API hm_status hm_scenario_set_seed(hm_scenario* s, uint64_t seed);
HM_API hm_status hm_scenario_seed(const hm_scenario* s, uint64_t* out);
HM_API hm_status hm_scenario_set_output_dir(hm_scenario* s, const char* dir);
/* Borrowed string, valid until the scenario changes or is freed. */
HM_API hm_status hm_scenario_output_dir(const hm_scenario* s, const char** out);

HM_API hm_status hm_run_scenario(const hm_scenario* s, hm_run** out);
HM_API void hm_run_free(hm_run* r);
/* Writes trace.jsonl, report.json and report.csv into dir. */
HM_API hm_status hm_run_write(const hm_run* r, const char* dir);
/* Borrowed strings owned by the run. */
HM_API hm_status hm_run_report_json(const hm_run* r, const char** out);
HM_API hm_status hm_run_report_csv(const hm_run* r, const char** out);
HM_API hm_status hm_run_trace(const hm_run* r, const char** out);
/* Scalar report field by its report.json name, e.g. "legit_success_rate". */
HM_API hm_status hm_run_metric(const hm_run* r, const char* name, double* out);

/* Recomputes the report from a trace file. *json_out is freed with hm_string_free. */
HM_API hm_status hm_report_from_trace_file(const char* trace_path, char** json_out);
/* One run per value; *table_out (CSV) is freed with hm_string_free. */
HM_API hm_status hm_sweep(const hm_scenario* s, const char* axis, const double* values, size_t n_values,
                          char** table_out);
HM_API void hm_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
