#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zolcsim/pipeline.hpp"
#include "zolcsim/sim.hpp"

namespace zolcsim {

// One benchmark: the same kernel hand-written in compare-branch, branch-
// decrement and ZOLC form, with identical .output declarations.
struct BenchSpec {
  std::string name;
  std::map<std::string, std::string> forms;  // "default" | "hrdwil" | "zolc" -> .s path
  struct Golden {
    OutputSpec::Kind kind = OutputSpec::Kind::Reg;
    uint32_t index = 0;  // register or byte address
    int64_t value = 0;
  };
  std::vector<Golden> expected_outputs;
};

BenchSpec load_bench_spec(const std::string& path);
std::vector<BenchSpec> load_suite(const std::string& dir);

struct BenchRow {
  std::string benchmark;
  std::string core;
  uint64_t cycles = 0;
  uint64_t dyn_instr = 0;
  uint64_t redirects = 0;
  double reduction_pct = 0.0;  // (1 - cycles/cycles_default) * 100
  std::string status;          // "ok" or the failure kind
};

struct Aggregate {
  std::string core;
  double avg_reduction_pct = 0.0;
  double max_reduction_pct = 0.0;
  int rows = 0;
};

struct SuiteReport {
  std::vector<BenchRow> rows;
  std::vector<Aggregate> aggregates;
};

// Published reference results the measured table is printed against:
// branch-decrement up to 27.5% (11.1% average), ZOLC up to 48.2% (26.2%
// average). Shapes are compared, not the values (different ISA and suite).
struct ReferenceNumbers {
  double hrdwil_avg = 11.1, hrdwil_max = 27.5;
  double zolc_avg = 26.2, zolc_max = 48.2;
};

SuiteReport run_suite(const std::vector<BenchSpec>& suite, const std::vector<CoreVariant>& cores);

std::string suite_to_csv(const SuiteReport& report);
std::string suite_to_json(const SuiteReport& report);
std::string suite_to_table(const SuiteReport& report);  // human-readable, with reference row

}  // namespace zolcsim
