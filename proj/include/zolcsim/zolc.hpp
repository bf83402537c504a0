#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zolcsim/assembler.hpp"

namespace zolcsim {

enum class ZolcVariantKind { uZOLC, ZOLClite, ZOLCfull };

const char* zolc_variant_name(ZolcVariantKind kind);
std::optional<ZolcVariantKind> zolc_variant_from_name(const std::string& name);

struct ZolcLimits {
  uint32_t max_tasks = 0;       // task-table / LUT-addressable tasks
  uint32_t max_loops = 0;
  uint32_t max_lut_entries = 0;
  uint32_t max_exits_per_loop = 0;
  uint32_t max_entries_per_loop = 0;  // entry edges, counting the natural one
};

// uZOLC: one loop, one watched task pair, no breaks, no side entries.
// ZOLClite: full capacity but no multiple-entry/exit loops.
// ZOLCfull: 32 LUT entries, 8 loops, up to 4 exits and 4 entries per loop.
ZolcLimits zolc_limits(ZolcVariantKind kind);

struct LoopParamRecord {
  int32_t initial = 0, step = 0, final = 0, current = 0;
  Compare compare = Compare::LT;
  uint8_t index_reg = 0;
  uint32_t body_start_pc = 0;
  uint32_t after_pc = 0;
};

enum class LoopStatus : uint8_t { NotDone = 0, Done = 1 };

struct TaskLutEntry {
  uint8_t task_id = 0;      // key
  LoopStatus status = LoopStatus::NotDone;  // key
  uint8_t next_task = 0;
  uint32_t target_pc = 0;
  uint8_t loop_id = kNoLoop;  // loop whose index this transition updates

  static constexpr uint8_t kNoLoop = 0xFF;
};

struct ExitRecord {
  uint8_t loop_id = 0;
  uint32_t branch_pc = 0;      // in-body conditional branch being watched
  uint8_t exit_next_task = 0;
  uint32_t exit_target_pc = 0;
};

// Per-task row of the task table: end_pc watched by PC decode, plus the loop
// (if any) whose index is evaluated when the end fires. Empty tasks carry a
// decision only; they are chained through within one redirect.
struct TaskRecord {
  uint32_t end_pc = kUnsetEndPc;
  uint8_t decision_loop = kNoDecision;
  bool empty = false;

  static constexpr uint32_t kUnsetEndPc = 0xFFFFFFFF;
  static constexpr uint8_t kNoDecision = 0xFF;
};

// Behavioral contents of the loop parameter tables, task table, LUT and exit
// table for one program under one variant.
struct ZolcConfig {
  ZolcVariantKind variant = ZolcVariantKind::ZOLCfull;
  std::vector<LoopParamRecord> loops;
  std::vector<TaskRecord> tasks;
  std::vector<TaskLutEntry> lut;
  std::vector<ExitRecord> exits;
  uint8_t start_task = 0;

  // stored fields written by the init sequence (drives its length, 2f+1)
  uint32_t stored_field_count() const;
};

// Port address layout: table selector [15:12], entry index [11:6], field
// selector [5:0]. Tables: 0 loop params, 1 task table, 2 LUT, 3 exits,
// 0xF control (field 0 = start task).
namespace port {
constexpr uint16_t make(uint16_t table, uint16_t entry, uint16_t field) {
  return static_cast<uint16_t>((table << 12) | ((entry & 0x3F) << 6) | (field & 0x3F));
}
constexpr uint16_t kTableLoop = 0x0, kTableTask = 0x1, kTableLut = 0x2, kTableExit = 0x3,
                   kTableControl = 0xF;
// loop fields
constexpr uint16_t kLoopInitial = 0, kLoopStep = 1, kLoopFinal = 2, kLoopCurrent = 3,
                   kLoopCompare = 4, kLoopIndexReg = 5, kLoopBodyStart = 6, kLoopAfter = 7;
// task fields
constexpr uint16_t kTaskEndPc = 0, kTaskDecision = 1;
// lut fields
constexpr uint16_t kLutTask = 0, kLutStatus = 1, kLutNextTask = 2, kLutTargetPc = 3,
                   kLutLoopId = 4;
// exit fields
constexpr uint16_t kExitLoopId = 0, kExitBranchPc = 1, kExitNextTask = 2, kExitTargetPc = 3;
constexpr uint16_t kCtrlStartTask = 0;
}  // namespace port

enum class ZolcMode { Init, Active, Off };

struct RegWrite {
  uint8_t reg = 0;
  int32_t value = 0;
};

struct Redirect {
  uint32_t target_pc = 0;
  uint8_t new_task = 0;
  std::vector<RegWrite> writes;
  uint32_t chain_len = 1;  // loop transitions resolved in this single event
};

// Runtime state of the controller as seen by the cycle simulator.
struct ZolcState {
  explicit ZolcState(ZolcVariantKind kind);

  ZolcVariantKind variant;
  ZolcLimits limits;
  ZolcMode mode = ZolcMode::Init;
  uint8_t current_task = 0;
  uint8_t start_task = 0;
  std::vector<LoopParamRecord> loops;
  std::vector<bool> loop_valid;
  std::vector<TaskRecord> tasks;
  std::vector<TaskLutEntry> lut;      // slot-indexed; key fields set by writes
  std::vector<bool> lut_valid;
  std::vector<ExitRecord> exits;
  std::vector<bool> exit_valid;
  std::vector<RegWrite> writes_pending;  // drained by the simulator every cycle

  void activate() {
    mode = ZolcMode::Active;
    current_task = start_task;
  }
};

// Decodes the port address and writes one field; init mode only.
void config_write(ZolcState& state, uint16_t port_address, uint32_t value);

// (new_current, status). On done the record resets to initial for re-entry.
std::pair<int32_t, LoopStatus> index_update(LoopParamRecord& rec);

// Called after the instruction at fetched_pc executed (active mode). Matches
// exit records on taken transfers, then the current task's end_pc; chained
// resolution covers simultaneous last iterations of nested loops.
std::optional<Redirect> on_fetch(ZolcState& state, uint32_t fetched_pc, bool branch_taken);

// Capacity storage budget of a variant, bytes; field widths in docs/FORMATS.md.
uint32_t storage_bytes(ZolcVariantKind kind);

// Port write stream that loads `config` into a reset controller; one
// (port, value) pair per stored field, ordered so that index_reg precedes
// current (the current write also deposits the value in the index register).
std::vector<std::pair<uint16_t, uint32_t>> config_port_writes(const ZolcConfig& config);

std::string dump_config_text(const ZolcConfig& config);
std::string dump_config_json(const ZolcConfig& config);

}  // namespace zolcsim
