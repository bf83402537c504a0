#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zolcsim/zolc.hpp"

namespace zolcsim {

enum class EdgeKind { Fallthrough, Taken, Jump };

struct BasicBlock {
  uint32_t start = 0;         // byte address of first instruction
  uint32_t end = 0;           // byte address of last instruction
  Opcode terminator = Opcode::NOP;  // opcode of the last instruction
  uint32_t taken_target = 0;  // resolved target for branches/jumps
  bool unanalyzable = false;  // ends in JR: successors unknown
};

struct CfgEdge {
  int from = 0, to = 0;  // block indices
  EdgeKind kind = EdgeKind::Fallthrough;
};

struct Cfg {
  std::vector<BasicBlock> blocks;  // address order; partition the image
  std::vector<CfgEdge> edges;

  int block_at(uint32_t addr) const;  // -1 if not a block start
};

Cfg build_cfg(const ProgramImage& image);

struct Loop {
  int loop_id = 0;
  std::set<int> body;                // block indices
  std::vector<int> headers;          // entry-target blocks; >1 marks multi-entry
  std::vector<CfgEdge> back_edges;
  std::vector<CfgEdge> exit_edges;   // edges leaving the body
  std::vector<CfgEdge> entry_edges;  // edges entering the body
  std::optional<int> parent;
  bool multi_entry = false;
  uint32_t range_start = 0, range_end = 0;  // address extent of the body
  std::optional<int> annotation_index;      // into image.loop_annotations
};

struct LoopForest {
  std::vector<Loop> loops;
};

// Iterated SCC decomposition (remove headers, recurse); identifies irreducible
// multi-entry loops that natural-loop detection cannot represent.
LoopForest find_loops(const Cfg& cfg);

// Loop structure taken from .loop directives: body = address range between the
// directive labels, entries/exits recovered from the CFG. Used for ZOLC-form
// images, whose CFG is acyclic. Equal ranges nest by loop id (smaller = inner).
LoopForest forest_from_annotations(const ProgramImage& image, const Cfg& cfg);

// Directive truth vs analysis truth: same loop count, each directive body
// label heading one derived loop.
void cross_check(const ProgramImage& image, const LoopForest& derived);

struct Task {
  int task_id = 0;
  uint32_t first_pc = 0;
  uint32_t end_pc = 0;  // unset (0xFFFFFFFF) for empty tasks
  bool empty = false;
  std::optional<int> owning_loop;    // innermost loop containing the range
  std::optional<int> decision_loop;  // loop whose body ends at end_pc
};

enum class TransitionCond { Always, LoopNotDone, LoopDone, ExitTaken };

struct TaskTransition {
  int from_task = 0;
  TransitionCond cond = TransitionCond::Always;
  int to_task = 0;
  uint32_t target_pc = 0;
  int exit_index = -1;  // per-loop index when cond == ExitTaken
  int exit_loop = -1;   // forest loop index being exited
};

struct TaskGraph {
  std::vector<Task> tasks;  // dense ids, address order; empties follow their anchor
  std::vector<TaskTransition> transitions;
};

// Cuts the program at loop boundaries (back/entry/exit edges); regions must be
// contiguous single-ended address ranges (RegionNotLinearizable otherwise).
// Empty tasks materialize the decisions of enclosing loops whose bodies end at
// the same instruction (perfect nests).
TaskGraph extract_tasks(const Cfg& cfg, const LoopForest& forest);

ZolcConfig generate_zolc_config(const TaskGraph& tg, const ProgramImage& image,
                                const LoopForest& forest, ZolcVariantKind variant);

// ADDI r1/ZCFG pairs, one per stored field, then ZRUN. Values must fit a
// signed 16-bit immediate (FieldOutOfRange otherwise).
std::vector<Instruction> emit_init_sequence(const ZolcConfig& config);

std::string dump_taskgraph_text(const TaskGraph& tg);
std::string dump_taskgraph_json(const TaskGraph& tg, const ZolcConfig* config);

}  // namespace zolcsim
