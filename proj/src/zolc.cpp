#include "zolcsim/zolc.hpp"

#include <sstream>

#include "json.hpp"

namespace zolcsim {

const char* zolc_variant_name(ZolcVariantKind kind) {
  switch (kind) {
    case ZolcVariantKind::uZOLC: return "uzolc";
    case ZolcVariantKind::ZOLClite: return "zolc-lite";
    case ZolcVariantKind::ZOLCfull: return "zolc-full";
  }
  return "?";
}

std::optional<ZolcVariantKind> zolc_variant_from_name(const std::string& name) {
  if (name == "uzolc") return ZolcVariantKind::uZOLC;
  if (name == "zolc-lite") return ZolcVariantKind::ZOLClite;
  if (name == "zolc-full") return ZolcVariantKind::ZOLCfull;
  return std::nullopt;
}

ZolcLimits zolc_limits(ZolcVariantKind kind) {
  switch (kind) {
    case ZolcVariantKind::uZOLC: return {1, 1, 0, 0, 1};
    case ZolcVariantKind::ZOLClite: return {32, 8, 32, 0, 1};
    case ZolcVariantKind::ZOLCfull: return {32, 8, 32, 4, 4};
  }
  return {};
}

// Field widths (bytes), documented in docs/FORMATS.md:
//   loop record: initial/step/final/current 4 each, compare 1, index_reg 1,
//                body_start_pc 4, after_pc 4                          -> 26
//   task row:    end_pc 4, decision byte 1 (uZOLC keeps end_pc only)  -> 5 / 4
//   LUT row:     task 1, status 1, next 1, target_pc 4, loop 1        -> 8
//   exit row:    loop 1, branch_pc 4, next task 1, target_pc 4        -> 10
//   control:     start task 1 (absent under uZOLC)
uint32_t storage_bytes(ZolcVariantKind kind) {
  constexpr uint32_t kLoopRec = 26, kTaskRow = 5, kLutRow = 8, kExitRow = 10;
  switch (kind) {
    case ZolcVariantKind::uZOLC:
      return kLoopRec + 4;  // one loop record plus the watched end_pc
    case ZolcVariantKind::ZOLClite:
      return 8 * kLoopRec + 32 * kTaskRow + 32 * kLutRow + 1;
    case ZolcVariantKind::ZOLCfull:
      return 8 * kLoopRec + 32 * kTaskRow + 32 * kLutRow + 32 * kExitRow + 1;
  }
  return 0;
}

ZolcState::ZolcState(ZolcVariantKind kind) : variant(kind), limits(zolc_limits(kind)) {
  loops.resize(limits.max_loops);
  loop_valid.resize(limits.max_loops, false);
  tasks.resize(limits.max_tasks == 1 ? 1 : limits.max_tasks);
  lut.resize(limits.max_lut_entries);
  lut_valid.resize(limits.max_lut_entries, false);
  uint32_t exit_slots = limits.max_exits_per_loop * limits.max_loops;
  exits.resize(exit_slots);
  exit_valid.resize(exit_slots, false);
}

void config_write(ZolcState& s, uint16_t port_address, uint32_t value) {
  if (s.mode != ZolcMode::Init)
    throw SimError(Err::NotInInitMode, "port write 0x" + std::to_string(port_address));
  uint16_t table = port_address >> 12;
  uint16_t entry = (port_address >> 6) & 0x3F;
  uint16_t field = port_address & 0x3F;
  auto bound = [&](const char* what, size_t limit) {
    if (entry >= limit)
      throw SimError(Err::CapacityExceeded, what, static_cast<int64_t>(entry) + 1,
                     static_cast<int64_t>(limit));
  };
  switch (table) {
    case port::kTableLoop: {
      bound("loops", s.loops.size());
      LoopParamRecord& rec = s.loops[entry];
      switch (field) {
        case port::kLoopInitial: rec.initial = static_cast<int32_t>(value); break;
        case port::kLoopStep: rec.step = static_cast<int32_t>(value); break;
        case port::kLoopFinal: rec.final = static_cast<int32_t>(value); break;
        case port::kLoopCurrent:
          rec.current = static_cast<int32_t>(value);
          // the live index is architecturally visible from the first iteration
          s.writes_pending.push_back({rec.index_reg, rec.current});
          break;
        case port::kLoopCompare: rec.compare = static_cast<Compare>(value & 0x7); break;
        case port::kLoopIndexReg: rec.index_reg = static_cast<uint8_t>(value & 0x1F); break;
        case port::kLoopBodyStart: rec.body_start_pc = value; break;
        case port::kLoopAfter: rec.after_pc = value; break;
        default: throw SimError(Err::BadField, "loop field " + std::to_string(field));
      }
      s.loop_valid[entry] = true;
      break;
    }
    case port::kTableTask: {
      bound("tasks", s.tasks.size());
      TaskRecord& rec = s.tasks[entry];
      switch (field) {
        case port::kTaskEndPc: rec.end_pc = value; break;
        case port::kTaskDecision: {
          uint8_t v = static_cast<uint8_t>(value);
          if (v == 0xFF) {
            rec.decision_loop = TaskRecord::kNoDecision;
            rec.empty = false;
          } else {
            rec.empty = (v & 0x80) != 0;
            rec.decision_loop = v & 0x7F;
          }
          break;
        }
        default: throw SimError(Err::BadField, "task field " + std::to_string(field));
      }
      break;
    }
    case port::kTableLut: {
      bound("lut entries", s.lut.size());
      TaskLutEntry& row = s.lut[entry];
      switch (field) {
        case port::kLutTask: row.task_id = static_cast<uint8_t>(value); break;
        case port::kLutStatus:
          row.status = value ? LoopStatus::Done : LoopStatus::NotDone;
          break;
        case port::kLutNextTask: row.next_task = static_cast<uint8_t>(value); break;
        case port::kLutTargetPc: row.target_pc = value; break;
        case port::kLutLoopId: row.loop_id = static_cast<uint8_t>(value); break;
        default: throw SimError(Err::BadField, "lut field " + std::to_string(field));
      }
      s.lut_valid[entry] = true;
      break;
    }
    case port::kTableExit: {
      bound("exits", s.exits.size());
      ExitRecord& rec = s.exits[entry];
      switch (field) {
        case port::kExitLoopId: rec.loop_id = static_cast<uint8_t>(value); break;
        case port::kExitBranchPc: rec.branch_pc = value; break;
        case port::kExitNextTask: rec.exit_next_task = static_cast<uint8_t>(value); break;
        case port::kExitTargetPc: rec.exit_target_pc = value; break;
        default: throw SimError(Err::BadField, "exit field " + std::to_string(field));
      }
      s.exit_valid[entry] = true;
      break;
    }
    case port::kTableControl:
      if (field == port::kCtrlStartTask) {
        s.start_task = static_cast<uint8_t>(value);
      } else {
        throw SimError(Err::BadField, "control field " + std::to_string(field));
      }
      break;
    default:
      throw SimError(Err::BadField, "table " + std::to_string(table));
  }
}

std::pair<int32_t, LoopStatus> index_update(LoopParamRecord& rec) {
  int32_t candidate =
      static_cast<int32_t>(static_cast<uint32_t>(rec.current) + static_cast<uint32_t>(rec.step));
  if (compare_holds(rec.compare, candidate, rec.final)) {
    rec.current = candidate;
    return {candidate, LoopStatus::NotDone};
  }
  rec.current = rec.initial;  // ready for re-entry
  return {rec.initial, LoopStatus::Done};
}

namespace {

constexpr uint32_t kMaxChain = 8;  // nesting depth bound == max_loops

bool in_body(const LoopParamRecord& rec, uint32_t pc) {
  return rec.body_start_pc <= pc && pc + 4 <= rec.after_pc;
}

}  // namespace

std::optional<Redirect> on_fetch(ZolcState& s, uint32_t fetched_pc, bool branch_taken) {
  if (s.mode != ZolcMode::Active) return std::nullopt;

  if (branch_taken) {
    for (size_t i = 0; i < s.exits.size(); ++i) {
      if (!s.exit_valid[i] || s.exits[i].branch_pc != fetched_pc) continue;
      const ExitRecord& ex = s.exits[i];
      Redirect r;
      r.target_pc = ex.exit_target_pc;
      r.new_task = ex.exit_next_task;
      // every loop whose body the branch leaves resets for re-entry
      for (size_t li = 0; li < s.loops.size(); ++li) {
        if (!s.loop_valid[li]) continue;
        LoopParamRecord& rec = s.loops[li];
        if (in_body(rec, fetched_pc) && !in_body(rec, ex.exit_target_pc)) {
          rec.current = rec.initial;
          r.writes.push_back({rec.index_reg, rec.initial});
        }
      }
      return r;
    }
  }

  if (s.variant == ZolcVariantKind::uZOLC) {
    if (!s.tasks.empty() && s.tasks[0].end_pc == fetched_pc && s.loop_valid[0]) {
      auto [value, status] = index_update(s.loops[0]);
      Redirect r;
      r.new_task = 0;
      r.target_pc =
          status == LoopStatus::NotDone ? s.loops[0].body_start_pc : s.loops[0].after_pc;
      r.writes.push_back({s.loops[0].index_reg, value});
      return r;
    }
    return std::nullopt;
  }

  if (s.current_task >= s.tasks.size()) return std::nullopt;
  if (s.tasks[s.current_task].end_pc != fetched_pc) return std::nullopt;

  Redirect r;
  uint32_t task = s.current_task;
  uint32_t chain = 0;
  for (;;) {
    if (++chain > kMaxChain)
      throw SimError(Err::ChainBoundExceeded, "task " + std::to_string(task));
    const TaskRecord& trec = s.tasks[task];
    LoopStatus status = LoopStatus::NotDone;
    if (trec.decision_loop != TaskRecord::kNoDecision) {
      uint8_t li = trec.decision_loop;
      if (li >= s.loops.size() || !s.loop_valid[li])
        throw SimError(Err::MissingLutEntry,
                       "task " + std::to_string(task) + " decides unconfigured loop");
      auto [value, st] = index_update(s.loops[li]);
      r.writes.push_back({s.loops[li].index_reg, value});
      status = st;
    }
    const TaskLutEntry* row = nullptr;
    for (size_t i = 0; i < s.lut.size(); ++i)
      if (s.lut_valid[i] && s.lut[i].task_id == task &&
          s.lut[i].status == status) {
        row = &s.lut[i];
        break;
      }
    if (!row)
      throw SimError(Err::MissingLutEntry,
                     "task " + std::to_string(task) + " status " +
                         (status == LoopStatus::Done ? "done" : "not_done"));
    r.target_pc = row->target_pc;
    r.new_task = row->next_task;
    if (row->next_task < s.tasks.size() && s.tasks[row->next_task].empty) {
      task = row->next_task;  // zero-length task: resolve within the same event
      continue;
    }
    break;
  }
  r.chain_len = chain;
  return r;
}

uint32_t ZolcConfig::stored_field_count() const {
  return static_cast<uint32_t>(config_port_writes(*this).size());
}

std::vector<std::pair<uint16_t, uint32_t>> config_port_writes(const ZolcConfig& config) {
  std::vector<std::pair<uint16_t, uint32_t>> writes;
  auto push = [&](uint16_t table, uint16_t entry, uint16_t field, uint32_t value) {
    writes.push_back({port::make(table, entry, field), value});
  };
  for (size_t i = 0; i < config.loops.size(); ++i) {
    const LoopParamRecord& rec = config.loops[i];
    uint16_t e = static_cast<uint16_t>(i);
    push(port::kTableLoop, e, port::kLoopInitial, static_cast<uint32_t>(rec.initial));
    push(port::kTableLoop, e, port::kLoopStep, static_cast<uint32_t>(rec.step));
    push(port::kTableLoop, e, port::kLoopFinal, static_cast<uint32_t>(rec.final));
    push(port::kTableLoop, e, port::kLoopCompare, static_cast<uint32_t>(rec.compare));
    push(port::kTableLoop, e, port::kLoopIndexReg, rec.index_reg);
    push(port::kTableLoop, e, port::kLoopBodyStart, rec.body_start_pc);
    push(port::kTableLoop, e, port::kLoopAfter, rec.after_pc);
    // current last: its write deposits the value into the index register
    push(port::kTableLoop, e, port::kLoopCurrent, static_cast<uint32_t>(rec.current));
  }
  for (size_t i = 0; i < config.tasks.size(); ++i) {
    const TaskRecord& rec = config.tasks[i];
    uint16_t e = static_cast<uint16_t>(i);
    if (rec.end_pc != TaskRecord::kUnsetEndPc)
      push(port::kTableTask, e, port::kTaskEndPc, rec.end_pc);
    if (config.variant != ZolcVariantKind::uZOLC &&
        (rec.decision_loop != TaskRecord::kNoDecision || rec.empty)) {
      uint8_t v = rec.empty ? static_cast<uint8_t>(0x80 | rec.decision_loop)
                            : rec.decision_loop;
      push(port::kTableTask, e, port::kTaskDecision, v);
    }
  }
  for (size_t i = 0; i < config.lut.size(); ++i) {
    const TaskLutEntry& row = config.lut[i];
    uint16_t e = static_cast<uint16_t>(i);
    push(port::kTableLut, e, port::kLutTask, row.task_id);
    push(port::kTableLut, e, port::kLutStatus, row.status == LoopStatus::Done ? 1 : 0);
    push(port::kTableLut, e, port::kLutNextTask, row.next_task);
    push(port::kTableLut, e, port::kLutTargetPc, row.target_pc);
    push(port::kTableLut, e, port::kLutLoopId, row.loop_id);
  }
  for (size_t i = 0; i < config.exits.size(); ++i) {
    const ExitRecord& rec = config.exits[i];
    uint16_t e = static_cast<uint16_t>(i);
    push(port::kTableExit, e, port::kExitLoopId, rec.loop_id);
    push(port::kTableExit, e, port::kExitBranchPc, rec.branch_pc);
    push(port::kTableExit, e, port::kExitNextTask, rec.exit_next_task);
    push(port::kTableExit, e, port::kExitTargetPc, rec.exit_target_pc);
  }
  if (config.variant != ZolcVariantKind::uZOLC && !config.tasks.empty())
    push(port::kTableControl, 0, port::kCtrlStartTask, config.start_task);
  return writes;
}

std::string dump_config_text(const ZolcConfig& config) {
  std::ostringstream os;
  os << "variant: " << zolc_variant_name(config.variant) << "\n";
  os << "storage_bytes: " << storage_bytes(config.variant) << "\n";
  os << "stored_fields: " << config.stored_field_count() << "\n";
  os << "start_task: " << int(config.start_task) << "\n";
  os << "loops (" << config.loops.size() << "):\n";
  for (size_t i = 0; i < config.loops.size(); ++i) {
    const auto& l = config.loops[i];
    os << "  " << i << ": r" << int(l.index_reg) << " init=" << l.initial << " step=" << l.step
       << " final=" << l.final << " cmp=" << compare_name(l.compare) << " body=0x" << std::hex
       << l.body_start_pc << " after=0x" << l.after_pc << std::dec << "\n";
  }
  os << "tasks (" << config.tasks.size() << "):\n";
  for (size_t i = 0; i < config.tasks.size(); ++i) {
    const auto& t = config.tasks[i];
    os << "  " << i << ":";
    if (t.end_pc != TaskRecord::kUnsetEndPc) os << " end=0x" << std::hex << t.end_pc << std::dec;
    if (t.decision_loop != TaskRecord::kNoDecision) os << " decides=" << int(t.decision_loop);
    if (t.empty) os << " empty";
    os << "\n";
  }
  os << "lut (" << config.lut.size() << "):\n";
  for (const auto& row : config.lut)
    os << "  (" << int(row.task_id) << ", " << (row.status == LoopStatus::Done ? "done" : "nd")
       << ") -> task " << int(row.next_task) << " @ 0x" << std::hex << row.target_pc << std::dec
       << (row.loop_id != TaskLutEntry::kNoLoop ? " loop " + std::to_string(row.loop_id) : "")
       << "\n";
  os << "exits (" << config.exits.size() << "):\n";
  for (const auto& ex : config.exits)
    os << "  loop " << int(ex.loop_id) << " branch 0x" << std::hex << ex.branch_pc << " -> task "
       << std::dec << int(ex.exit_next_task) << " @ 0x" << std::hex << ex.exit_target_pc
       << std::dec << "\n";
  return os.str();
}

std::string dump_config_json(const ZolcConfig& config) {
  nlohmann::json j;
  j["variant"] = zolc_variant_name(config.variant);
  j["storage_bytes"] = storage_bytes(config.variant);
  j["stored_fields"] = config.stored_field_count();
  j["start_task"] = config.start_task;
  j["loops"] = nlohmann::json::array();
  for (const auto& l : config.loops)
    j["loops"].push_back({{"index_reg", l.index_reg},
                          {"initial", l.initial},
                          {"step", l.step},
                          {"final", l.final},
                          {"compare", compare_name(l.compare)},
                          {"body_start_pc", l.body_start_pc},
                          {"after_pc", l.after_pc}});
  j["tasks"] = nlohmann::json::array();
  for (const auto& t : config.tasks) {
    nlohmann::json jt;
    if (t.end_pc != TaskRecord::kUnsetEndPc) jt["end_pc"] = t.end_pc;
    if (t.decision_loop != TaskRecord::kNoDecision) jt["decision_loop"] = t.decision_loop;
    jt["empty"] = t.empty;
    j["tasks"].push_back(jt);
  }
  j["lut"] = nlohmann::json::array();
  for (const auto& row : config.lut)
    j["lut"].push_back({{"task", row.task_id},
                        {"status", row.status == LoopStatus::Done ? "done" : "not_done"},
                        {"next_task", row.next_task},
                        {"target_pc", row.target_pc},
                        {"loop", row.loop_id}});
  j["exits"] = nlohmann::json::array();
  for (const auto& ex : config.exits)
    j["exits"].push_back({{"loop", ex.loop_id},
                          {"branch_pc", ex.branch_pc},
                          {"next_task", ex.exit_next_task},
                          {"target_pc", ex.exit_target_pc}});
  return j.dump(2);
}

}  // namespace zolcsim
