// Copyright 2026 The cellbus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cellbus/errors.hpp"
#include "cellbus/runner.hpp"

namespace {

void print_summary(const cellbus::RunReport& r) {
  std::cout << "outcome " << cellbus::to_string(r.outcome) << " (" << r.reason << ") after " << r.ticks_used
            << " ticks, topology " << r.topology << "\n";
  for (const auto& a : r.assertions) {
    std::cout << "  (" << a.id << ") " << (a.passed ? "pass" : "FAIL") << "  " << a.description;
    if (a.first_violation) std::cout << "  first violation at tick " << *a.first_violation;
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated collaborative assembly cell"};
  app.require_subcommand(1);

  std::string scenario_dir;
  std::string topology;
  std::uint64_t seed = 0;
  std::uint64_t ticks = 0;
  std::vector<std::string> faults;
  std::string trace_path;
  std::string report_path;
  auto* run = app.add_subcommand("run", "Run a scenario");
  run->add_option("--scenario", scenario_dir, "Scenario directory")->required()->check(CLI::ExistingDirectory);
  run->add_option("--topology", topology, "hub-gateway, hub-direct, node-type or node-type-collector");
  run->add_option("--seed", seed, "Random seed (overrides the scenario)");
  run->add_option("--ticks", ticks, "Tick limit (overrides the scenario)");
  run->add_option("--fault", faults, "kind:target[:p]@start+duration, repeatable");
  run->add_option("--trace", trace_path, "Trace output file");
  run->add_option("--report", report_path, "JSON report output file");

  std::string replay_trace;
  std::string compare_trace;
  auto* replay = app.add_subcommand("replay", "Re-evaluate a recorded trace");
  replay->add_option("--trace", replay_trace, "Trace file")->required()->check(CLI::ExistingFile);
  replay->add_option("--compare", compare_trace, "Second trace whose operation boundaries must match")
      ->check(CLI::ExistingFile);

  std::string topics_dir;
  auto* topics = app.add_subcommand("topics", "Print the topic plan of a scenario");
  topics->add_option("--scenario", topics_dir, "Scenario directory")->required()->check(CLI::ExistingDirectory);
  topics->add_option("--topology", topology, "Topology override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto scenario = cellbus::load_scenario(scenario_dir);
      cellbus::RunOptions options;
      if (!topology.empty()) {
        options.topology = cellbus::parse_topology(topology);
        if (!options.topology) throw cellbus::ConfigError("unknown topology '" + topology + "'");
      }
      if (run->count("--seed")) options.seed = seed;
      if (run->count("--ticks")) options.max_ticks = ticks;
      for (const auto& f : faults) options.faults.push_back(cellbus::parse_fault(f));
      if (!trace_path.empty()) options.trace_path = trace_path;
      const auto result = cellbus::run(scenario, options);
      print_summary(result.report);
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        out << result.report.to_json();
      }
      return result.report.success() ? 0 : 1;
    }
    if (replay->parsed()) {
      const auto report = cellbus::replay(replay_trace);
      print_summary(report);
      bool ok = report.success();
      if (!compare_trace.empty()) {
        const auto diff = cellbus::compare_boundaries(report, cellbus::replay(compare_trace));
        std::cout << (diff.empty() ? "operation boundaries identical\n" : "operation boundaries differ:\n");
        for (const auto& line : diff) std::cout << "  " << line << "\n";
        ok = ok && diff.empty();
      }
      return ok ? 0 : 1;
    }
    if (topics->parsed()) {
      const auto scenario = cellbus::load_scenario(topics_dir);
      auto mode = scenario.topology;
      if (!topology.empty()) {
        auto parsed = cellbus::parse_topology(topology);
        if (!parsed) throw cellbus::ConfigError("unknown topology '" + topology + "'");
        mode = *parsed;
      }
      std::cout << cellbus::build_topology(scenario.hubs, mode).report();
      return 0;
    }
  } catch (const cellbus::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
