#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zolcsim/zolc.hpp"

namespace zolcsim {

enum class CoreKind { Default, Hrdwil, Zolc };

struct CoreVariant {
  CoreKind kind = CoreKind::Default;
  ZolcVariantKind zolc_kind = ZolcVariantKind::ZOLCfull;  // when kind == Zolc
  int branch_penalty = 2;  // flush cycles for any taken transfer
  int mem_latency = 1;     // LW/SW cost

  std::string name() const;
};

std::optional<CoreVariant> core_from_name(const std::string& name);

struct CycleReport {
  uint64_t cycles = 0;
  uint64_t dyn_instr = 0;
  uint64_t redirects = 0;
  uint64_t taken_branches = 0;
  uint64_t init_overhead_cycles = 0;
  uint64_t loop_region_cycles = 0;  // cycles charged inside annotated loop bodies
  uint64_t final_state_digest = 0;  // FNV-1a over the designated outputs

  bool operator==(const CycleReport&) const = default;
};

std::string report_to_json(const CycleReport& report, const std::string& name,
                           const std::string& core);
CycleReport report_from_json(const std::string& text);

struct TraceEntry {
  uint64_t cycle = 0;
  uint32_t pc = 0;
  Instruction instr;
  uint64_t cost = 0;  // cycles charged, penalty included
  bool taken = false;
  std::string event;  // none | taken | redirect(a->b) | zcfg
};

struct SimResult {
  CycleReport report;
  MachineState state;
  std::vector<TraceEntry> trace;  // filled when tracing enabled
};

constexpr uint64_t kDefaultMaxCycles = 50'000'000;

SimResult simulate_full(const ProgramImage& image, const CoreVariant& core,
                        uint64_t max_cycles = kDefaultMaxCycles, bool want_trace = false);

CycleReport simulate(const ProgramImage& image, const CoreVariant& core,
                     uint64_t max_cycles = kDefaultMaxCycles);

// One line per executed instruction: "cycle, pc, disasm, event".
std::string format_trace(const std::vector<TraceEntry>& trace);

uint64_t output_digest(const ProgramImage& image, const MachineState& state);

struct Verdict {
  bool pass = false;
  std::string cause;
  uint64_t baseline_digest = 0;
  uint64_t variant_digest = 0;
};

// Functional oracle on the baseline image vs cycle simulation of the variant
// image; pass iff the designated outputs are bit-identical.
Verdict verify_equivalence(const ProgramImage& baseline, const ProgramImage& variant_image,
                           const CoreVariant& core, uint64_t max_steps = 10'000'000);

// Dynamic loop-bookkeeping cost in the trace: index updates, compares folded
// into backward branches, BDECs, plus their taken penalties. Zero inside
// ZOLC-managed loops by construction.
uint64_t count_loop_pattern_overhead(const std::vector<TraceEntry>& trace,
                                     const ProgramImage& image);

}  // namespace zolcsim
