#include <random>
#include <set>

#include "doctest.h"
#include "zolcsim/assembler.hpp"
#include "zolcsim/isa.hpp"

using namespace zolcsim;

namespace {

uint32_t word_of(uint32_t opcode, uint32_t rs, uint32_t rt, uint32_t rd, uint32_t imm16) {
  return (opcode << 26) | (rs << 21) | (rt << 16) | (rd << 11) | (imm16 & 0xFFFF);
}

}  // namespace

TEST_CASE("decode: ADDI example") {
  uint32_t w = word_of(0x08, 0, 1, 0, 5);
  Instruction in = decode(w);
  CHECK(in.opcode == Opcode::ADDI);
  CHECK(in.rt == 1);
  CHECK(in.rs == 0);
  CHECK(in.imm == 5);
}

TEST_CASE("decode: all-zero word is ADD r0, r0, r0") {
  Instruction in = decode(0);
  CHECK(in.opcode == Opcode::ADD);
  CHECK(in.rd == 0);
  CHECK(in.rs == 0);
  CHECK(in.rt == 0);
}

TEST_CASE("decode: assigned opcode set matches the encoding table") {
  // independent enumeration of the table; anything else must fail
  const std::set<uint32_t> assigned = {0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09,
                                       0x0A, 0x0B, 0x0C, 0x0D, 0x0E, 0x0F, 0x10, 0x11, 0x12};
  for (uint32_t op = 0; op < 64; ++op) {
    uint32_t w = op << 26;
    if (assigned.count(op)) {
      CHECK_NOTHROW(decode(w));
    } else {
      CHECK_THROWS_WITH_AS(decode(w), doctest::Contains("IllegalOpcode"), SimError);
    }
  }
  CHECK_THROWS_AS(decode(0x3Fu << 26), SimError);
}

TEST_CASE("encode/decode round-trip over every opcode and sampled operands") {
  std::mt19937 rng(7);
  auto reg = [&] { return static_cast<uint8_t>(rng() % 32); };
  auto imm = [&] { return static_cast<int32_t>(static_cast<int16_t>(rng())); };
  for (uint32_t op = 0; op <= kMaxAssignedOpcode; ++op) {
    for (int n = 0; n < 64; ++n) {
      Instruction in;
      in.opcode = static_cast<Opcode>(op);
      switch (in.opcode) {
        case Opcode::ADD:
        case Opcode::SUB:
        case Opcode::MUL:
        case Opcode::SLT:
          in.rd = reg();
          in.rs = reg();
          in.rt = reg();
          break;
        case Opcode::ADDI:
        case Opcode::LW:
        case Opcode::SW:
        case Opcode::BEQ:
        case Opcode::BNE:
        case Opcode::BLT:
          in.rs = reg();
          in.rt = reg();
          in.imm = imm();
          break;
        case Opcode::BDEC:
        case Opcode::ZCFG:
          in.rs = reg();
          in.imm = imm();
          break;
        case Opcode::J:
        case Opcode::JAL:
          in.target = rng() & 0x03FFFFFF;
          break;
        case Opcode::JR:
          in.rs = reg();
          break;
        default:
          break;
      }
      CHECK(decode(encode(in)) == in);
    }
  }
}

TEST_CASE("step: BDEC semantics") {
  MachineState s(256);
  Instruction bdec;
  bdec.opcode = Opcode::BDEC;
  bdec.rs = 2;
  bdec.imm = -3;  // backward target

  SUBCASE("taken while nonzero") {
    s.pc = 16;
    s.set_reg(2, 3);
    step_functional(s, bdec);
    CHECK(s.reg(2) == 2);
    CHECK(s.pc == 16 + 4 - 3 * 4);
  }
  SUBCASE("falls through when the decrement reaches zero") {
    s.pc = 16;
    s.set_reg(2, 1);
    step_functional(s, bdec);
    CHECK(s.reg(2) == 0);
    CHECK(s.pc == 20);
  }
}

TEST_CASE("step: unaligned load faults") {
  MachineState s(256);
  Instruction lw;
  lw.opcode = Opcode::LW;
  lw.rt = 1;
  lw.rs = 0;
  lw.imm = 2;
  CHECK_THROWS_WITH_AS(step_functional(s, lw), doctest::Contains("UnalignedAccess"), SimError);
}

TEST_CASE("step: arithmetic wraps modulo 2^32") {
  MachineState s(64);
  s.set_reg(1, 0x7FFFFFFF);
  s.set_reg(2, 1);
  Instruction add;
  add.opcode = Opcode::ADD;
  add.rd = 3;
  add.rs = 1;
  add.rt = 2;
  step_functional(s, add);
  CHECK(s.reg(3) == static_cast<int32_t>(0x80000000u));
}

TEST_CASE("run_functional: straight-line program") {
  ProgramImage image = assemble("ADDI r1, r0, 7\nHALT\n");
  FunctionalResult r = run_functional(image, 100);
  CHECK(r.state.reg(1) == 7);
  CHECK(r.dyn_instr == 2);
}

TEST_CASE("run_functional: counted compare-branch loop sums 1..10") {
  // sum = 10 * 11 / 2, checked against the closed form
  const char* src =
      "        ADDI r4, r0, 1\n"
      "        ADDI r5, r0, 0\n"
      "        ADDI r6, r0, 11\n"
      "L1:     ADD  r5, r5, r4\n"
      "        ADDI r4, r4, 1\n"
      "        BLT  r4, r6, L1\n"
      "        HALT\n";
  FunctionalResult r = run_functional(assemble(src), 1000);
  CHECK(r.state.reg(5) == 55);
}

TEST_CASE("run_functional: missing HALT exhausts the budget") {
  ProgramImage image = assemble("L: J L\n");
  CHECK_THROWS_WITH_AS(run_functional(image, 100), doctest::Contains("StepBudgetExceeded"),
                       SimError);
}

TEST_CASE("r0 stays zero under random instruction sequences") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    MachineState s(1024);
    for (int i = 0; i < 200; ++i) {
      Instruction in;
      switch (rng() % 5) {
        case 0:
          in.opcode = Opcode::ADDI;
          in.rt = rng() % 32;
          in.rs = rng() % 32;
          in.imm = static_cast<int16_t>(rng());
          break;
        case 1:
          in.opcode = Opcode::ADD;
          in.rd = rng() % 32;
          in.rs = rng() % 32;
          in.rt = rng() % 32;
          break;
        case 2:
          in.opcode = Opcode::SUB;
          in.rd = rng() % 32;
          in.rs = rng() % 32;
          in.rt = rng() % 32;
          break;
        case 3:
          in.opcode = Opcode::MUL;
          in.rd = rng() % 32;
          in.rs = rng() % 32;
          in.rt = rng() % 32;
          break;
        default:
          in.opcode = Opcode::SLT;
          in.rd = rng() % 32;
          in.rs = rng() % 32;
          in.rt = rng() % 32;
          break;
      }
      s.pc = 0;
      step_functional(s, in);
      REQUIRE(s.reg(0) == 0);
    }
  }
}

TEST_CASE("determinism: identical runs produce identical states") {
  const char* src =
      "        ADDI r2, r0, 13\n"
      "        ADDI r3, r0, 0\n"
      "L:      ADD  r3, r3, r2\n"
      "        SW   r3, 0x100(r0)\n"
      "        BDEC r2, L\n"
      "        HALT\n";
  ProgramImage image = assemble(src);
  FunctionalResult a = run_functional(image, 10000);
  FunctionalResult b = run_functional(image, 10000);
  CHECK(a.state.regs == b.state.regs);
  CHECK(a.state.mem == b.state.mem);
  CHECK(a.dyn_instr == b.dyn_instr);
}
