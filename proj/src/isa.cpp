#include "zolcsim/isa.hpp"

#include <sstream>

#include "zolcsim/assembler.hpp"

namespace zolcsim {

const char* err_name(Err kind) {
  switch (kind) {
    case Err::IllegalOpcode: return "IllegalOpcode";
    case Err::UnalignedAccess: return "UnalignedAccess";
    case Err::OutOfBoundsAccess: return "OutOfBoundsAccess";
    case Err::StepBudgetExceeded: return "StepBudgetExceeded";
    case Err::UnknownMnemonic: return "UnknownMnemonic";
    case Err::UndefinedLabel: return "UndefinedLabel";
    case Err::DuplicateLabel: return "DuplicateLabel";
    case Err::ImmediateOutOfRange: return "ImmediateOutOfRange";
    case Err::BranchOutOfRange: return "BranchOutOfRange";
    case Err::MalformedDirective: return "MalformedDirective";
    case Err::InfiniteLoopBounds: return "InfiniteLoopBounds";
    case Err::FieldOutOfRange: return "FieldOutOfRange";
    case Err::BadImage: return "BadImage";
    case Err::IndirectJumpInLoopCandidate: return "IndirectJumpInLoopCandidate";
    case Err::RegionNotLinearizable: return "RegionNotLinearizable";
    case Err::AnnotationMismatch: return "AnnotationMismatch";
    case Err::CapacityExceeded: return "CapacityExceeded";
    case Err::VariantUnsupported: return "VariantUnsupported";
    case Err::MissingLutEntry: return "MissingLutEntry";
    case Err::NotInInitMode: return "NotInInitMode";
    case Err::BadField: return "BadField";
    case Err::ChainBoundExceeded: return "ChainBoundExceeded";
    case Err::IoError: return "IoError";
    case Err::UsageError: return "UsageError";
  }
  return "UnknownError";
}

bool opcode_assigned(uint32_t value) { return value <= kMaxAssignedOpcode; }

const char* opcode_name(Opcode op) {
  switch (op) {
    case Opcode::ADD: return "ADD";
    case Opcode::SUB: return "SUB";
    case Opcode::MUL: return "MUL";
    case Opcode::SLT: return "SLT";
    case Opcode::BEQ: return "BEQ";
    case Opcode::BNE: return "BNE";
    case Opcode::BLT: return "BLT";
    case Opcode::BDEC: return "BDEC";
    case Opcode::ADDI: return "ADDI";
    case Opcode::LW: return "LW";
    case Opcode::SW: return "SW";
    case Opcode::J: return "J";
    case Opcode::JAL: return "JAL";
    case Opcode::JR: return "JR";
    case Opcode::NOP: return "NOP";
    case Opcode::HALT: return "HALT";
    case Opcode::ZCFG: return "ZCFG";
    case Opcode::ZRUN: return "ZRUN";
    case Opcode::ZSTOP: return "ZSTOP";
  }
  return "???";
}

Instruction decode(uint32_t word) {
  uint32_t op = word >> 26;
  if (!opcode_assigned(op)) {
    throw SimError(Err::IllegalOpcode, "opcode value 0x" + [&] {
      std::ostringstream os;
      os << std::hex << op;
      return os.str();
    }());
  }
  Instruction in;
  in.opcode = static_cast<Opcode>(op);
  in.rs = (word >> 21) & 0x1F;
  in.rt = (word >> 16) & 0x1F;
  in.rd = (word >> 11) & 0x1F;
  in.imm = static_cast<int16_t>(word & 0xFFFF);
  in.target = word & 0x03FFFFFF;
  // canonicalize unused fields per format so encode(decode(w)) stays total
  switch (in.opcode) {
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::MUL:
    case Opcode::SLT:
      in.imm = 0;
      in.target = 0;
      break;
    case Opcode::ADDI:
    case Opcode::LW:
    case Opcode::SW:
    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::BLT:
    case Opcode::BDEC:
    case Opcode::ZCFG:
      in.rd = 0;
      in.target = 0;
      break;
    case Opcode::J:
    case Opcode::JAL:
      in.rd = in.rs = in.rt = 0;
      in.imm = 0;
      break;
    case Opcode::JR:
      in.rd = in.rt = 0;
      in.imm = 0;
      in.target = 0;
      break;
    case Opcode::NOP:
    case Opcode::HALT:
    case Opcode::ZRUN:
    case Opcode::ZSTOP:
      in.rd = in.rs = in.rt = 0;
      in.imm = 0;
      in.target = 0;
      break;
  }
  return in;
}

std::string format_instruction(const Instruction& in) {
  std::ostringstream os;
  os << opcode_name(in.opcode);
  auto r = [](unsigned idx) { return "r" + std::to_string(idx); };
  switch (in.opcode) {
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::MUL:
    case Opcode::SLT:
      os << " " << r(in.rd) << ", " << r(in.rs) << ", " << r(in.rt);
      break;
    case Opcode::ADDI:
      os << " " << r(in.rt) << ", " << r(in.rs) << ", " << in.imm;
      break;
    case Opcode::LW:
    case Opcode::SW:
      os << " " << r(in.rt) << ", " << in.imm << "(" << r(in.rs) << ")";
      break;
    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::BLT:
      os << " " << r(in.rs) << ", " << r(in.rt) << ", " << in.imm;
      break;
    case Opcode::BDEC:
      os << " " << r(in.rs) << ", " << in.imm;
      break;
    case Opcode::J:
    case Opcode::JAL:
      os << " " << in.target;
      break;
    case Opcode::JR:
      os << " " << r(in.rs);
      break;
    case Opcode::ZCFG: {
      os << " " << r(in.rs) << ", 0x" << std::hex
         << static_cast<uint16_t>(static_cast<int16_t>(in.imm));
      break;
    }
    case Opcode::NOP:
    case Opcode::HALT:
    case Opcode::ZRUN:
    case Opcode::ZSTOP:
      break;
  }
  return os.str();
}

bool is_conditional_branch(Opcode op) {
  return op == Opcode::BEQ || op == Opcode::BNE || op == Opcode::BLT || op == Opcode::BDEC;
}

bool is_taken_transfer(const Instruction& in, bool taken) {
  switch (in.opcode) {
    case Opcode::J:
    case Opcode::JAL:
    case Opcode::JR:
      return true;
    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::BLT:
    case Opcode::BDEC:
      return taken;
    default:
      return false;
  }
}

uint32_t MachineState::load_word(uint32_t addr) const {
  if (addr % 4 != 0) throw SimError(Err::UnalignedAccess, "load at 0x" + std::to_string(addr));
  if (addr + 4 > mem.size())
    throw SimError(Err::OutOfBoundsAccess, "load at " + std::to_string(addr));
  return static_cast<uint32_t>(mem[addr]) | (static_cast<uint32_t>(mem[addr + 1]) << 8) |
         (static_cast<uint32_t>(mem[addr + 2]) << 16) |
         (static_cast<uint32_t>(mem[addr + 3]) << 24);
}

void MachineState::store_word(uint32_t addr, uint32_t value) {
  if (addr % 4 != 0) throw SimError(Err::UnalignedAccess, "store at " + std::to_string(addr));
  if (addr + 4 > mem.size())
    throw SimError(Err::OutOfBoundsAccess, "store at " + std::to_string(addr));
  mem[addr] = value & 0xFF;
  mem[addr + 1] = (value >> 8) & 0xFF;
  mem[addr + 2] = (value >> 16) & 0xFF;
  mem[addr + 3] = (value >> 24) & 0xFF;
}

namespace {

inline int32_t wrap_add(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) + static_cast<uint32_t>(b));
}
inline int32_t wrap_sub(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) - static_cast<uint32_t>(b));
}
inline int32_t wrap_mul(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) * static_cast<uint32_t>(b));
}

}  // namespace

bool step_functional(MachineState& s, const Instruction& in) {
  uint32_t next = s.pc + 4;
  bool taken = false;
  switch (in.opcode) {
    case Opcode::ADD: s.set_reg(in.rd, wrap_add(s.reg(in.rs), s.reg(in.rt))); break;
    case Opcode::SUB: s.set_reg(in.rd, wrap_sub(s.reg(in.rs), s.reg(in.rt))); break;
    case Opcode::MUL: s.set_reg(in.rd, wrap_mul(s.reg(in.rs), s.reg(in.rt))); break;
    case Opcode::SLT: s.set_reg(in.rd, s.reg(in.rs) < s.reg(in.rt) ? 1 : 0); break;
    case Opcode::ADDI: s.set_reg(in.rt, wrap_add(s.reg(in.rs), in.imm)); break;
    case Opcode::LW:
      s.set_reg(in.rt, static_cast<int32_t>(
                           s.load_word(static_cast<uint32_t>(s.reg(in.rs) + in.imm))));
      break;
    case Opcode::SW:
      s.store_word(static_cast<uint32_t>(s.reg(in.rs) + in.imm),
                   static_cast<uint32_t>(s.reg(in.rt)));
      break;
    case Opcode::BEQ: taken = s.reg(in.rs) == s.reg(in.rt); break;
    case Opcode::BNE: taken = s.reg(in.rs) != s.reg(in.rt); break;
    case Opcode::BLT: taken = s.reg(in.rs) < s.reg(in.rt); break;
    case Opcode::BDEC: {
      int32_t v = wrap_sub(s.reg(in.rs), 1);
      s.set_reg(in.rs, v);
      taken = v != 0;
      break;
    }
    case Opcode::J: next = in.target * 4; break;
    case Opcode::JAL:
      s.set_reg(31, static_cast<int32_t>(s.pc + 4));
      next = in.target * 4;
      break;
    case Opcode::JR: next = static_cast<uint32_t>(s.reg(in.rs)); break;
    case Opcode::NOP: break;
    case Opcode::HALT: s.halted = true; break;
    // architectural no-ops without a loop controller attached
    case Opcode::ZCFG:
    case Opcode::ZRUN:
    case Opcode::ZSTOP: break;
  }
  if (taken && is_conditional_branch(in.opcode)) {
    next = s.pc + 4 + static_cast<uint32_t>(in.imm) * 4;
  }
  s.pc = next;
  s.dyn_instr += 1;
  return is_taken_transfer(in, taken);
}

FunctionalResult run_functional(const ProgramImage& image, uint64_t max_steps, size_t mem_size) {
  MachineState s(mem_size);
  for (uint64_t step = 0; step < max_steps; ++step) {
    if (s.halted) return {std::move(s), s.dyn_instr};
    if (s.pc % 4 != 0) throw SimError(Err::UnalignedAccess, "pc " + std::to_string(s.pc));
    uint32_t idx = s.pc / 4;
    if (idx >= image.words.size())
      throw SimError(Err::OutOfBoundsAccess, "pc " + std::to_string(s.pc));
    Instruction in = decode(image.words[idx]);
    step_functional(s, in);
  }
  if (s.halted) return {std::move(s), s.dyn_instr};
  throw SimError(Err::StepBudgetExceeded, "no HALT within " + std::to_string(max_steps) + " steps");
}

}  // namespace zolcsim
