// honeymesh: run scenarios, sweep a parameter, or recompute a report from a trace.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "honeymesh/honeymesh.h"

namespace {

int exit_code(hm_status s) {
  switch (s) {
    case HM_OK:
      return 0;
    case HM_ERR_PARSE:
    case HM_ERR_VALIDATION:
    case HM_ERR_UNKNOWN_AXIS:
    case HM_ERR_INSUFFICIENT_SAMPLE:
      return 2;
    case HM_ERR_IO:
      return 3;
    default:
      return 1;
  }
}

int report_error(hm_status s) {
  std::cerr << "honeymesh: " << hm_status_name(s) << ": " << hm_last_error() << "\n";
  return exit_code(s);
}

struct ScenarioHandle {
  hm_scenario* ptr = nullptr;
  ~ScenarioHandle() { hm_scenario_free(ptr); }
};

struct RunHandle {
  hm_run* ptr = nullptr;
  ~RunHandle() { hm_run_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { hm_string_free(ptr); }
};

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument(item);
  }
  return out;
}

bool write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

int load(const std::string& path, std::optional<std::uint64_t> seed, ScenarioHandle& sc) {
  if (auto st = hm_scenario_load(path.c_str(), &sc.ptr); st != HM_OK) return report_error(st);
  if (seed) hm_scenario_set_seed(sc.ptr, *seed);
  return 0;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  ScenarioHandle sc;
  if (int rc = load(config, seed, sc)) return rc;
  if (out) hm_scenario_set_output_dir(sc.ptr, out->c_str());
  const char* dir = nullptr;
  hm_scenario_output_dir(sc.ptr, &dir);

  RunHandle run;
  if (auto st = hm_run_scenario(sc.ptr, &run.ptr); st != HM_OK) return report_error(st);
  if (auto st = hm_run_write(run.ptr, dir); st != HM_OK) return report_error(st);
  const char* json = nullptr;
  hm_run_report_json(run.ptr, &json);
  std::cout << json;
  std::cerr << "wrote " << dir << "/trace.jsonl, report.json, report.csv\n";
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& axis, const std::string& values,
              std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  std::vector<double> xs;
  try {
    xs = parse_values(values);
  } catch (const std::exception&) {
    std::cerr << "honeymesh: --values must be a comma-separated list of numbers\n";
    return 2;
  }
  ScenarioHandle sc;
  if (int rc = load(config, seed, sc)) return rc;
  OwnedString table;
  if (auto st = hm_sweep(sc.ptr, axis.c_str(), xs.data(), xs.size(), &table.ptr); st != HM_OK) {
    return report_error(st);
  }
  std::cout << table.ptr;
  if (out && !write_text(*out, "sweep.csv", table.ptr)) {
    std::cerr << "honeymesh: cannot write " << *out << "/sweep.csv\n";
    return 3;
  }
  return 0;
}

int cmd_report(const std::string& trace, std::optional<std::string> out) {
  OwnedString json;
  if (auto st = hm_report_from_trace_file(trace.c_str(), &json.ptr); st != HM_OK) return report_error(st);
  std::cout << json.ptr;
  if (out && !write_text(*out, "report.json", json.ptr)) {
    std::cerr << "honeymesh: cannot write " << *out << "/report.json\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HoneyMesh DDoS defense simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string trace;
  std::string axis;
  std::string values;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  auto* run = app.add_subcommand("run", "Run one scenario and write trace and reports");
  run->add_option("--config", config, "Scenario config (JSON)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out, "Output directory (overrides output.dir)");

  auto* sweep = app.add_subcommand("sweep", "One run per value of a numeric config field");
  sweep->add_option("--config", config, "Base scenario config (JSON)")->required();
  sweep->add_option("--axis", axis, "Dotted config path or unique field name")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--seed", seed, "Override the config seed");
  sweep->add_option("--out", out, "Also write sweep.csv into this directory");

  auto* report = app.add_subcommand("report", "Recompute the report from a trace file");
  report->add_option("--trace", trace, "trace.jsonl from a previous run")->required();
  report->add_option("--out", out, "Also write report.json into this directory");

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(config, seed, out);
  if (*sweep) return cmd_sweep(config, axis, values, seed, out);
  return cmd_report(trace, out);
}
