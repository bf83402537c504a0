#include "zolcsim/sim.hpp"

#include <sstream>

#include "json.hpp"

namespace zolcsim {

std::string CoreVariant::name() const {
  switch (kind) {
    case CoreKind::Default: return "default";
    case CoreKind::Hrdwil: return "hrdwil";
    case CoreKind::Zolc: return zolc_variant_name(zolc_kind);
  }
  return "?";
}

std::optional<CoreVariant> core_from_name(const std::string& name) {
  CoreVariant core;
  if (name == "default") {
    core.kind = CoreKind::Default;
    return core;
  }
  if (name == "hrdwil") {
    core.kind = CoreKind::Hrdwil;
    return core;
  }
  if (auto z = zolc_variant_from_name(name)) {
    core.kind = CoreKind::Zolc;
    core.zolc_kind = *z;
    return core;
  }
  return std::nullopt;
}

std::string report_to_json(const CycleReport& r, const std::string& name,
                           const std::string& core) {
  nlohmann::json j;
  j["name"] = name;
  j["core"] = core;
  j["cycles"] = r.cycles;
  j["dyn_instr"] = r.dyn_instr;
  j["redirects"] = r.redirects;
  j["taken_branches"] = r.taken_branches;
  j["init_overhead_cycles"] = r.init_overhead_cycles;
  j["loop_region_cycles"] = r.loop_region_cycles;
  std::ostringstream os;
  os << "0x" << std::hex << r.final_state_digest;
  j["final_state_digest"] = os.str();
  return j.dump(2);
}

CycleReport report_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  CycleReport r;
  r.cycles = j.at("cycles").get<uint64_t>();
  r.dyn_instr = j.at("dyn_instr").get<uint64_t>();
  r.redirects = j.at("redirects").get<uint64_t>();
  r.taken_branches = j.at("taken_branches").get<uint64_t>();
  r.init_overhead_cycles = j.at("init_overhead_cycles").get<uint64_t>();
  r.loop_region_cycles = j.at("loop_region_cycles").get<uint64_t>();
  r.final_state_digest = std::stoull(j.at("final_state_digest").get<std::string>(), nullptr, 16);
  return r;
}

uint64_t output_digest(const ProgramImage& image, const MachineState& state) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  auto mix = [&](uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (const auto& out : image.outputs) {
    if (out.kind == OutputSpec::Kind::Reg) {
      uint32_t v = static_cast<uint32_t>(state.reg(out.reg));
      mix(v & 0xFF);
      mix((v >> 8) & 0xFF);
      mix((v >> 16) & 0xFF);
      mix((v >> 24) & 0xFF);
    } else {
      for (uint32_t a = out.mem_start; a < out.mem_start + out.mem_len && a < state.mem.size();
           ++a)
        mix(state.mem[a]);
    }
  }
  return h;
}

SimResult simulate_full(const ProgramImage& image, const CoreVariant& core, uint64_t max_cycles,
                        bool want_trace) {
  SimResult out;
  MachineState& s = out.state;
  std::optional<ZolcState> zolc;
  if (core.kind == CoreKind::Zolc) zolc.emplace(core.zolc_kind);

  uint32_t init_end = image.has_zolc_meta() ? image.zolc.init_len * 4 : 0;

  for (;;) {
    if (s.halted) break;
    if (s.cycle > max_cycles)
      throw SimError(Err::StepBudgetExceeded, std::to_string(max_cycles) + " cycles");
    if (s.pc % 4 != 0) throw SimError(Err::UnalignedAccess, "pc " + std::to_string(s.pc));
    uint32_t idx = s.pc / 4;
    if (idx >= image.words.size())
      throw SimError(Err::OutOfBoundsAccess, "pc " + std::to_string(s.pc));
    Instruction in = decode(image.words[idx]);
    if (in.opcode == Opcode::BDEC && core.kind != CoreKind::Hrdwil)
      throw SimError(Err::VariantUnsupported,
                     "branch-decrement requires the hrdwil core (pc " + std::to_string(s.pc) + ")");

    uint32_t pc = s.pc;
    uint64_t start_cycle = s.cycle;
    bool taken;
    std::string event = "none";

    if (zolc && (in.opcode == Opcode::ZCFG || in.opcode == Opcode::ZRUN ||
                 in.opcode == Opcode::ZSTOP)) {
      if (in.opcode == Opcode::ZCFG) {
        config_write(*zolc, static_cast<uint16_t>(static_cast<int16_t>(in.imm)),
                     static_cast<uint32_t>(s.reg(in.rs)));
        event = "zcfg";
      } else if (in.opcode == Opcode::ZRUN) {
        zolc->activate();
      } else {
        zolc->mode = ZolcMode::Init;
      }
      s.pc += 4;
      s.dyn_instr += 1;
      taken = false;
      // port writes land in the register file the same cycle
      for (const auto& w : zolc->writes_pending) s.set_reg(w.reg, w.value);
      zolc->writes_pending.clear();
    } else {
      taken = step_functional(s, in);
    }

    uint64_t cost = (in.opcode == Opcode::LW || in.opcode == Opcode::SW)
                        ? static_cast<uint64_t>(core.mem_latency)
                        : 1;
    if (taken) {
      cost += static_cast<uint64_t>(core.branch_penalty);
      out.report.taken_branches += 1;
      if (event == "none") event = "taken";
    }
    s.cycle += cost;
    if (pc < init_end) out.report.init_overhead_cycles += cost;
    for (const auto& ann : image.loop_annotations)
      if (pc >= ann.body_start_addr && pc <= ann.body_end_addr) {
        out.report.loop_region_cycles += cost;
        break;
      }

    if (zolc && zolc->mode == ZolcMode::Active && !s.halted) {
      uint8_t from_task = zolc->current_task;
      if (auto r = on_fetch(*zolc, pc, taken)) {
        for (const auto& w : r->writes) s.set_reg(w.reg, w.value);
        s.pc = r->target_pc;
        zolc->current_task = r->new_task;
        out.report.redirects += 1;
        event = "redirect(" + std::to_string(from_task) + "->" + std::to_string(r->new_task) + ")";
      }
    }

    if (want_trace)
      out.trace.push_back({start_cycle, pc, in, cost, taken, event});
  }
  out.report.cycles = s.cycle;
  out.report.dyn_instr = s.dyn_instr;
  out.report.final_state_digest = output_digest(image, s);
  return out;
}

CycleReport simulate(const ProgramImage& image, const CoreVariant& core, uint64_t max_cycles) {
  return simulate_full(image, core, max_cycles).report;
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
  std::ostringstream os;
  for (const auto& t : trace) {
    os << t.cycle << ", 0x" << std::hex << t.pc << std::dec << ", "
       << format_instruction(t.instr) << ", " << t.event << "\n";
  }
  return os.str();
}

Verdict verify_equivalence(const ProgramImage& baseline, const ProgramImage& variant_image,
                           const CoreVariant& core, uint64_t max_steps) {
  Verdict v;
  if (baseline.outputs.size() != variant_image.outputs.size())
    throw SimError(Err::UsageError, "images declare different .output lists");
  for (size_t i = 0; i < baseline.outputs.size(); ++i) {
    const auto& a = baseline.outputs[i];
    const auto& b = variant_image.outputs[i];
    if (a.kind != b.kind || a.reg != b.reg || a.mem_start != b.mem_start || a.mem_len != b.mem_len)
      throw SimError(Err::UsageError, "images declare different .output lists");
  }
  FunctionalResult oracle;
  try {
    oracle = run_functional(baseline, max_steps);
  } catch (const SimError& e) {
    v.cause = std::string("oracle: ") + e.what();
    return v;
  }
  SimResult sim;
  try {
    sim = simulate_full(variant_image, core);
  } catch (const SimError& e) {
    v.cause = std::string("simulation: ") + e.what();
    return v;
  }
  v.baseline_digest = output_digest(baseline, oracle.state);
  v.variant_digest = sim.report.final_state_digest;
  for (const auto& out : baseline.outputs) {
    if (out.kind == OutputSpec::Kind::Reg) {
      if (oracle.state.reg(out.reg) != sim.state.reg(out.reg)) {
        v.cause = "r" + std::to_string(out.reg) + ": oracle " +
                  std::to_string(oracle.state.reg(out.reg)) + " vs " +
                  std::to_string(sim.state.reg(out.reg));
        return v;
      }
    } else {
      for (uint32_t a = out.mem_start; a < out.mem_start + out.mem_len; ++a) {
        if (a >= oracle.state.mem.size() || a >= sim.state.mem.size()) break;
        if (oracle.state.mem[a] != sim.state.mem[a]) {
          v.cause = "mem[" + std::to_string(a) + "]: oracle " +
                    std::to_string(oracle.state.mem[a]) + " vs " +
                    std::to_string(sim.state.mem[a]);
          return v;
        }
      }
    }
  }
  v.pass = true;
  return v;
}

uint64_t count_loop_pattern_overhead(const std::vector<TraceEntry>& trace,
                                     const ProgramImage& image) {
  uint64_t overhead = 0;
  for (const auto& t : trace) {
    for (const auto& ann : image.loop_annotations) {
      if (t.pc < ann.body_start_addr || t.pc > ann.body_end_addr) continue;
      bool bookkeeping = false;
      if (t.instr.opcode == Opcode::BDEC) {
        bookkeeping = true;
      } else if (is_conditional_branch(t.instr.opcode)) {
        uint32_t target = static_cast<uint32_t>(t.pc + 4 + t.instr.imm * 4);
        if (target == ann.body_start_addr && target <= t.pc) bookkeeping = true;
      } else if (t.instr.opcode == Opcode::ADDI && t.instr.rt == ann.index_reg &&
                 t.instr.rs == ann.index_reg) {
        bookkeeping = true;
      }
      if (bookkeeping) {
        overhead += t.cost;
        break;
      }
    }
  }
  return overhead;
}

}  // namespace zolcsim
