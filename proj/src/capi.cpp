#include "honeymesh/honeymesh.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "honeymesh/errors.hpp"
#include "honeymesh/harness/config.hpp"
#include "honeymesh/harness/simulation.hpp"
#include "honeymesh/harness/sweep.hpp"

using namespace honeymesh;

struct hm_scenario {
  nlohmann::json doc;
  harness::ScenarioConfig cfg;
};

struct hm_run {
  harness::RunResult result;
  std::string report_json;
  std::string report_csv;
  std::string trace;
};

namespace {

thread_local std::string last_error;

hm_status fail(hm_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
hm_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return HM_OK;
  } catch (const ParseError& e) {
    return fail(HM_ERR_PARSE, e.what());
  } catch (const ValidationError& e) {
    return fail(HM_ERR_VALIDATION, e.what());
  } catch (const IoError& e) {
    return fail(HM_ERR_IO, e.what());
  } catch (const InsufficientSample& e) {
    return fail(HM_ERR_INSUFFICIENT_SAMPLE, e.what());
  } catch (const UnknownAxis& e) {
    return fail(HM_ERR_UNKNOWN_AXIS, e.what());
  } catch (const std::exception& e) {
    return fail(HM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HM_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

hm_status make_scenario(nlohmann::json doc, hm_scenario** out) {
  return guarded([&] {
    auto cfg = harness::config_from_json(doc);
    *out = new hm_scenario{std::move(doc), std::move(cfg)};
  });
}

}  // namespace

extern "C" {

const char* hm_last_error(void) { return last_error.c_str(); }

const char* hm_status_name(hm_status s) {
  switch (s) {
    case HM_OK:
      return "ok";
    case HM_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case HM_ERR_PARSE:
      return "parse error";
    case HM_ERR_VALIDATION:
      return "validation error";
    case HM_ERR_IO:
      return "io error";
    case HM_ERR_INSUFFICIENT_SAMPLE:
      return "insufficient sample";
    case HM_ERR_UNKNOWN_AXIS:
      return "unknown axis";
    case HM_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* hm_version(void) { return "0.1.0"; }

hm_status hm_scenario_load(const char* path, hm_scenario** out) {
  if (!path || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  nlohmann::json doc;
  const auto st = guarded([&] { doc = harness::parse_json_text(harness::read_file(path)); });
  if (st != HM_OK) return st;
  return make_scenario(std::move(doc), out);
}

hm_status hm_scenario_parse(const char* json_text, hm_scenario** out) {
  if (!json_text || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  nlohmann::json doc;
  const auto st = guarded([&] { doc = harness::parse_json_text(json_text); });
  if (st != HM_OK) return st;
  return make_scenario(std::move(doc), out);
}

void hm_scenario_free(hm_scenario* s) { delete s; }

hm_status hm_scenario_set_seed(hm_scenario* s, uint64_t seed) {
  if (!s) return fail(HM_ERR_INVALID_ARGUMENT, "null scenario");
  s->doc["seed"] = seed;
  s->cfg.seed = seed;
  return HM_OK;
}

hm_status hm_scenario_seed(const hm_scenario* s, uint64_t* out) {
  if (!s || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  *out = s->cfg.seed;
  return HM_OK;
}

hm_status hm_scenario_set_output_dir(hm_scenario* s, const char* dir) {
  if (!s || !dir) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  s->doc["output"]["dir"] = dir;
  s->cfg.output_dir = dir;
  return HM_OK;
}

hm_status hm_scenario_output_dir(const hm_scenario* s, const char** out) {
  if (!s || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  *out = s->cfg.output_dir.c_str();
  return HM_OK;
}

hm_status hm_run_scenario(const hm_scenario* s, hm_run** out) {
  if (!s || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto run = std::make_unique<hm_run>();
    run->result = harness::run_scenario(s->cfg);
    run->report_json = harness::report_json_text(run->result.report);
    run->report_csv = harness::csv_header() + "\n" + harness::csv_row(run->result.report) + "\n";
    run->trace = harness::serialize_trace(run->result.trace);
    *out = run.release();
  });
}

void hm_run_free(hm_run* r) { delete r; }

hm_status hm_run_write(const hm_run* r, const char* dir) {
  if (!r || !dir) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { harness::write_run(r->result, dir); });
}

hm_status hm_run_report_json(const hm_run* r, const char** out) {
  if (!r || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  *out = r->report_json.c_str();
  return HM_OK;
}

hm_status hm_run_report_csv(const hm_run* r, const char** out) {
  if (!r || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  *out = r->report_csv.c_str();
  return HM_OK;
}

hm_status hm_run_trace(const hm_run* r, const char** out) {
  if (!r || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  *out = r->trace.c_str();
  return HM_OK;
}

hm_status hm_run_metric(const hm_run* r, const char* name, double* out) {
  if (!r || !name || !out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  const auto j = harness::report_to_json(r->result.report);
  if (!j.contains(name) || !j[name].is_number()) {
    return fail(HM_ERR_INVALID_ARGUMENT, std::string("no scalar metric '") + name + "'");
  }
  *out = j[name].get<double>();
  return HM_OK;
}

hm_status hm_report_from_trace_file(const char* trace_path, char** json_out) {
  if (!trace_path || !json_out) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto records = harness::parse_trace(harness::read_file(trace_path));
    *json_out = dup(harness::report_json_text(harness::report_from_trace(records)));
  });
}

hm_status hm_sweep(const hm_scenario* s, const char* axis, const double* values, size_t n_values, char** table_out) {
  if (!s || !axis || !table_out || (!values && n_values)) return fail(HM_ERR_INVALID_ARGUMENT, "null argument");
  if (n_values == 0) return fail(HM_ERR_INVALID_ARGUMENT, "sweep needs at least one value");
  return guarded([&] {
    const auto result = harness::sweep(s->doc, axis, std::vector<double>(values, values + n_values));
    *table_out = dup(harness::sweep_table(result));
  });
}

void hm_string_free(char* s) { std::free(s); }

}  // extern "C"
