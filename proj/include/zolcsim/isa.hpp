#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "zolcsim/errors.hpp"

namespace zolcsim {

// Fixed 32-bit encoding: opcode [31:26]; rs [25:21], rt [20:16], rd [15:11]
// for register form; imm [15:0] sign-extended; target [25:0] word-granular.
// Opcode values 0x13..0x3F are unassigned and decode to IllegalOpcode.
enum class Opcode : uint8_t {
  ADD = 0x00,   // rd = rs + rt
  SUB = 0x01,   // rd = rs - rt
  MUL = 0x02,   // rd = rs * rt (low 32 bits)
  SLT = 0x03,   // rd = (rs < rt) signed
  BEQ = 0x04,   // branch if rs == rt
  BNE = 0x05,   // branch if rs != rt
  BLT = 0x06,   // branch if rs < rt signed
  BDEC = 0x07,  // rs -= 1; branch if rs != 0
  ADDI = 0x08,  // rt = rs + imm
  LW = 0x09,    // rt = mem[rs + imm]
  SW = 0x0A,    // mem[rs + imm] = rt
  J = 0x0B,
  JAL = 0x0C,  // r31 = pc + 4
  JR = 0x0D,   // pc = rs
  NOP = 0x0E,
  HALT = 0x0F,
  ZCFG = 0x10,  // loop-controller port write: port = imm, value = rs
  ZRUN = 0x11,  // loop controller -> active mode
  ZSTOP = 0x12, // loop controller -> init mode
};

constexpr uint8_t kMaxAssignedOpcode = 0x12;

bool opcode_assigned(uint32_t value);
const char* opcode_name(Opcode op);

struct Instruction {
  Opcode opcode = Opcode::NOP;
  uint8_t rd = 0;
  uint8_t rs = 0;
  uint8_t rt = 0;
  int32_t imm = 0;      // valid range [-32768, 32767]; canonical after decode
  uint32_t target = 0;  // 26-bit word-granular jump target

  bool operator==(const Instruction&) const = default;
};

Instruction decode(uint32_t word);

// Mnemonic + operands, no label resolution (branch offsets printed raw).
std::string format_instruction(const Instruction& in);

bool is_conditional_branch(Opcode op);
// Any control transfer that actually redirects pc when it executes.
bool is_taken_transfer(const Instruction& in, bool taken);

constexpr size_t kDefaultMemSize = 64 * 1024;

struct MachineState {
  uint32_t pc = 0;
  std::array<int32_t, 32> regs{};
  std::vector<uint8_t> mem;
  bool halted = false;
  uint64_t cycle = 0;
  uint64_t dyn_instr = 0;

  explicit MachineState(size_t mem_size = kDefaultMemSize) : mem(mem_size, 0) {}

  int32_t reg(unsigned idx) const { return regs[idx]; }
  void set_reg(unsigned idx, int32_t value) {
    if (idx != 0) regs[idx] = value;  // r0 hardwired to zero
  }

  uint32_t load_word(uint32_t addr) const;
  void store_word(uint32_t addr, uint32_t value);
};

// Architectural step with no timing. ZCFG/ZRUN/ZSTOP only advance pc here;
// the functional machine is the oracle for baseline (compare-branch) images.
// Returns whether the instruction was a taken control transfer.
bool step_functional(MachineState& state, const Instruction& in);

struct ProgramImage;  // assembler.hpp

struct FunctionalResult {
  MachineState state;
  uint64_t dyn_instr = 0;
};

FunctionalResult run_functional(const ProgramImage& image, uint64_t max_steps,
                                size_t mem_size = kDefaultMemSize);

}  // namespace zolcsim
