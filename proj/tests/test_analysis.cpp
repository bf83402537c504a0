#include <functional>
#include <set>

#include "doctest.h"
#include "zolcsim/pipeline.hpp"

using namespace zolcsim;

namespace {

const Task* task_starting_at(const TaskGraph& tg, uint32_t pc) {
  for (const auto& t : tg.tasks)
    if (!t.empty && t.first_pc == pc) return &t;
  return nullptr;
}

const TaskTransition* find_transition(const TaskGraph& tg, int from, TransitionCond cond) {
  for (const auto& tr : tg.transitions)
    if (tr.from_task == from && tr.cond == cond) return &tr;
  return nullptr;
}

int nonempty_count(const TaskGraph& tg) {
  int n = 0;
  for (const auto& t : tg.tasks)
    if (!t.empty) n++;
  return n;
}

}  // namespace

TEST_CASE("build_cfg: straight-line program is one block with no edges") {
  Cfg cfg = build_cfg(assemble("ADDI r1, r0, 1\nHALT\n"));
  CHECK(cfg.blocks.size() == 1);
  CHECK(cfg.edges.empty());
}

TEST_CASE("build_cfg: single backward branch splits two blocks") {
  const char* src =
      "L:  ADDI r1, r1, -1\n"
      "    BNE r1, r0, L\n"
      "    HALT\n";
  Cfg cfg = build_cfg(assemble(src));
  REQUIRE(cfg.blocks.size() == 2);
  bool has_fallthrough = false, has_taken_backward = false;
  for (const auto& e : cfg.edges) {
    if (e.kind == EdgeKind::Fallthrough) has_fallthrough = true;
    if (e.kind == EdgeKind::Taken && cfg.blocks[e.to].start < cfg.blocks[e.from].end)
      has_taken_backward = true;
  }
  CHECK(has_fallthrough);
  CHECK(has_taken_backward);
}

TEST_CASE("build_cfg: leaders match a brute-force enumeration on a nested kernel") {
  const char* src =
      "     ADDI r4, r0, 0\n"
      "OL:  ADDI r5, r0, 0\n"
      "IL:  ADDI r5, r5, 1\n"
      "     BLT  r5, r6, IL\n"
      "     ADDI r4, r4, 1\n"
      "     BLT  r4, r7, OL\n"
      "     BEQ  r4, r5, SKIP\n"
      "     NOP\n"
      "SKIP: HALT\n";
  ProgramImage image = assemble(src);
  Cfg cfg = build_cfg(image);

  // oracle: rescan every instruction for leaders
  std::set<uint32_t> leaders{0};
  for (size_t i = 0; i < image.words.size(); ++i) {
    Instruction in = decode(image.words[i]);
    uint32_t pc = static_cast<uint32_t>(i * 4);
    if (is_conditional_branch(in.opcode)) {
      leaders.insert(static_cast<uint32_t>(pc + 4 + in.imm * 4));
      if (i + 1 < image.words.size()) leaders.insert(pc + 4);
    }
    if (in.opcode == Opcode::J || in.opcode == Opcode::JAL) {
      leaders.insert(in.target * 4);
      if (i + 1 < image.words.size()) leaders.insert(pc + 4);
    }
    if ((in.opcode == Opcode::JR || in.opcode == Opcode::HALT) && i + 1 < image.words.size())
      leaders.insert(pc + 4);
  }
  std::set<uint32_t> starts;
  for (const auto& b : cfg.blocks) starts.insert(b.start);
  CHECK(starts == leaders);

  // blocks partition the instruction range
  uint32_t covered = 0;
  for (const auto& b : cfg.blocks) covered += (b.end - b.start) / 4 + 1;
  CHECK(covered == image.words.size());
}

TEST_CASE("find_loops: acyclic control flow yields an empty forest") {
  const char* src =
      "    BEQ r1, r0, S\n"
      "    ADDI r2, r0, 1\n"
      "S:  HALT\n";
  CHECK(find_loops(build_cfg(assemble(src))).loops.empty());
}

TEST_CASE("find_loops: doubly-nested counted loop against brute-force cycle enumeration") {
  const char* src =
      "     ADDI r4, r0, 0\n"
      "OL:  ADDI r5, r0, 0\n"
      "IL:  ADDI r5, r5, 1\n"
      "     BLT  r5, r6, IL\n"
      "     ADDI r4, r4, 1\n"
      "     BLT  r4, r7, OL\n"
      "     HALT\n";
  Cfg cfg = build_cfg(assemble(src));
  LoopForest forest = find_loops(cfg);
  REQUIRE(forest.loops.size() == 2);
  const Loop& outer = forest.loops[0];
  const Loop& inner = forest.loops[1];
  CHECK(inner.parent == 0);
  CHECK(!outer.parent);
  CHECK(std::includes(outer.body.begin(), outer.body.end(), inner.body.begin(), inner.body.end()));

  // oracle: enumerate all simple cycles in the block graph
  std::set<std::set<int>> cycles;
  std::function<void(int, int, std::vector<int>&)> dfs = [&](int start, int v,
                                                             std::vector<int>& path) {
    for (const auto& e : cfg.edges) {
      if (e.from != v) continue;
      if (e.to == start) {
        cycles.insert(std::set<int>(path.begin(), path.end()));
      } else if (std::find(path.begin(), path.end(), e.to) == path.end() && e.to > start) {
        path.push_back(e.to);
        dfs(start, e.to, path);
        path.pop_back();
      }
    }
  };
  for (size_t v = 0; v < cfg.blocks.size(); ++v) {
    std::vector<int> path{static_cast<int>(v)};
    dfs(static_cast<int>(v), static_cast<int>(v), path);
  }
  std::set<std::set<int>> bodies{inner.body, outer.body};
  CHECK(cycles == bodies);
}

TEST_CASE("find_loops: irreducible diamond is one multi-entry loop") {
  const char* src =
      "     BEQ r1, r0, P2\n"
      "P1:  J A\n"
      "P2:  J B\n"
      "A:   ADDI r2, r2, 1\n"
      "B:   ADDI r3, r3, 1\n"
      "     BNE r3, r4, A\n"
      "     HALT\n";
  Cfg cfg = build_cfg(assemble(src));
  LoopForest forest = find_loops(cfg);
  REQUIRE(forest.loops.size() == 1);
  const Loop& loop = forest.loops[0];
  CHECK(loop.multi_entry);
  CHECK(loop.headers.size() == 2);

  // oracle: edges entering the cycle's node set from outside
  int entries = 0;
  for (const auto& e : cfg.edges)
    if (!loop.body.count(e.from) && loop.body.count(e.to)) entries++;
  CHECK(entries == 2);
  CHECK(loop.entry_edges.size() == 2);
}

// three-task shape shared by several checks below
static const char* kSingleLoopZolc =
    ".loop 0 body=L end=LE reg=r4 init=0 step=1 final=16 cmp=LT\n"
    ".output reg 5\n"
    "      ADDI r5, r0, 0\n"
    "L:    ADD  r5, r5, r4\n"
    "LE:   ADD  r5, r5, r0\n"
    "      HALT\n";

TEST_CASE("extract_tasks: single loop gives preheader, body, after") {
  ProgramImage image = assemble(kSingleLoopZolc);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  TaskGraph tg = extract_tasks(cfg, forest);
  REQUIRE(nonempty_count(tg) == 3);
  const Task* pre = task_starting_at(tg, 0);
  const Task* body = task_starting_at(tg, 4);
  const Task* after = task_starting_at(tg, 12);
  REQUIRE(pre);
  REQUIRE(body);
  REQUIRE(after);
  CHECK(body->decision_loop == 0);

  const TaskTransition* always = find_transition(tg, pre->task_id, TransitionCond::Always);
  REQUIRE(always);
  CHECK(always->to_task == body->task_id);
  const TaskTransition* nd = find_transition(tg, body->task_id, TransitionCond::LoopNotDone);
  REQUIRE(nd);
  CHECK(nd->to_task == body->task_id);
  CHECK(nd->target_pc == 4);
  const TaskTransition* done = find_transition(tg, body->task_id, TransitionCond::LoopDone);
  REQUIRE(done);
  CHECK(done->to_task == after->task_id);
  CHECK(done->target_pc == 12);
}

TEST_CASE("extract_tasks: instructions inside loops land in exactly one task") {
  ProgramImage image = assemble(kSingleLoopZolc);
  Cfg cfg = build_cfg(image);
  TaskGraph tg = extract_tasks(cfg, forest_from_annotations(image, cfg));
  std::set<uint32_t> ends;
  for (const auto& t : tg.tasks) {
    if (t.empty) continue;
    CHECK(ends.insert(t.end_pc).second);  // end_pc unique
  }
  for (uint32_t pc = 0; pc < image.size_bytes(); pc += 4) {
    int owners = 0;
    for (const auto& t : tg.tasks)
      if (!t.empty && t.first_pc <= pc && pc <= t.end_pc) owners++;
    CHECK(owners == 1);
  }
}

static const char* kDoubleNestZolc =
    ".loop 0 body=IB end=LE reg=r4 init=0 step=1 final=3 cmp=LT\n"
    ".loop 1 body=OB end=LE reg=r5 init=0 step=1 final=2 cmp=LT\n"
    ".output reg 6\n"
    "      ADDI r6, r0, 0\n"
    "OB:   ADDI r6, r6, 1\n"
    "IB:   ADD  r6, r6, r4\n"
    "LE:   ADD  r6, r6, r0\n"
    "      HALT\n";

TEST_CASE("extract_tasks: shared nest end chains through the outer decision") {
  ProgramImage image = assemble(kDoubleNestZolc);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  REQUIRE(forest.loops.size() == 2);
  CHECK(forest.loops[0].parent == 1);  // inner nested in outer
  TaskGraph tg = extract_tasks(cfg, forest);
  CHECK(nonempty_count(tg) == 4);

  const Task* body = task_starting_at(tg, 8);
  REQUIRE(body);
  CHECK(body->decision_loop == 0);
  const Task* empty = nullptr;
  for (const auto& t : tg.tasks)
    if (t.empty) empty = &t;
  REQUIRE(empty);
  CHECK(empty->decision_loop == 1);

  // inner done lands on the outer back-edge decision
  const TaskTransition* done = find_transition(tg, body->task_id, TransitionCond::LoopDone);
  REQUIRE(done);
  CHECK(done->to_task == empty->task_id);
  const TaskTransition* outer_nd = find_transition(tg, empty->task_id, TransitionCond::LoopNotDone);
  REQUIRE(outer_nd);
  CHECK(outer_nd->target_pc == 4);  // outer body start
}

static const char* kBreakZolc =
    ".loop 0 body=L end=LE reg=r4 init=0 step=1 final=16 cmp=LT\n"
    ".exit 0 branch=BR target=OUT\n"
    ".output reg 5\n"
    "      ADDI r5, r0, 0\n"
    "L:    ADD  r5, r5, r4\n"
    "BR:   BLT  r6, r5, OUT\n"
    "LE:   ADD  r5, r5, r0\n"
    "OUT:  HALT\n";

TEST_CASE("extract_tasks: conditional break carries exit_taken(0)") {
  ProgramImage image = assemble(kBreakZolc);
  Cfg cfg = build_cfg(image);
  TaskGraph tg = extract_tasks(cfg, forest_from_annotations(image, cfg));
  const TaskTransition* exit_tr = nullptr;
  for (const auto& tr : tg.transitions)
    if (tr.cond == TransitionCond::ExitTaken) exit_tr = &tr;
  REQUIRE(exit_tr);
  CHECK(exit_tr->exit_index == 0);
  const Task* after = task_starting_at(tg, 16);
  REQUIRE(after);
  CHECK(exit_tr->to_task == after->task_id);
  // the task holding the branch is part of the loop body
  CHECK(tg.tasks[exit_tr->from_task].owning_loop == 0);
}

TEST_CASE("extract_tasks: conditional entry into a loop is not linearizable") {
  const char* src =
      ".loop 0 body=L end=LE reg=r4 init=0 step=1 final=4 cmp=LT\n"
      "     BEQ r1, r0, MID\n"
      "     NOP\n"
      "L:   ADD r5, r5, r4\n"
      "MID: ADD r5, r5, r5\n"
      "LE:  ADD r5, r5, r0\n"
      "     HALT\n";
  ProgramImage image = assemble(src);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  CHECK_THROWS_WITH_AS(extract_tasks(cfg, forest), doctest::Contains("RegionNotLinearizable"),
                       SimError);
}

TEST_CASE("JR inside an annotated loop body is rejected") {
  const char* src =
      ".loop 0 body=L end=LE reg=r4 init=0 step=1 final=4 cmp=LT\n"
      "L:   JR r2\n"
      "LE:  NOP\n"
      "     HALT\n";
  ProgramImage image = assemble(src);
  Cfg cfg = build_cfg(image);
  CHECK_THROWS_WITH_AS(forest_from_annotations(image, cfg),
                       doctest::Contains("IndirectJumpInLoopCandidate"), SimError);
}

TEST_CASE("cross_check: directives agree with detected loops on the compare-branch form") {
  const char* src =
      ".loop 0 body=IL end=ILB reg=r5 init=0 step=1 final=4 cmp=LT\n"
      ".loop 1 body=OL end=OLB reg=r4 init=0 step=1 final=3 cmp=LT\n"
      "     ADDI r4, r0, 0\n"
      "OL:  ADDI r5, r0, 0\n"
      "IL:  ADDI r5, r5, 1\n"
      "ILB: BLT  r5, r6, IL\n"
      "     ADDI r4, r4, 1\n"
      "OLB: BLT  r4, r7, OL\n"
      "     HALT\n";
  ProgramImage image = assemble(src);
  LoopForest derived = find_loops(build_cfg(image));
  CHECK_NOTHROW(cross_check(image, derived));

  // a missing directive must be flagged
  ProgramImage pruned = image;
  pruned.loop_annotations.pop_back();
  CHECK_THROWS_WITH_AS(cross_check(pruned, derived), doctest::Contains("AnnotationMismatch"),
                       SimError);
}

TEST_CASE("generate_zolc_config: minimal single-loop config under uZOLC") {
  ProgramImage image = assemble(kSingleLoopZolc);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  TaskGraph tg = extract_tasks(cfg, forest);
  ZolcConfig config = generate_zolc_config(tg, image, forest, ZolcVariantKind::uZOLC);
  CHECK(config.loops.size() == 1);
  CHECK(config.lut.empty());
  CHECK(config.exits.empty());
  REQUIRE(config.tasks.size() == 1);
  CHECK(config.tasks[0].end_pc == 8);
  CHECK(config.stored_field_count() == 9);
}

TEST_CASE("generate_zolc_config: ninth loop exceeds the 8-loop structure") {
  std::string src;
  for (int i = 0; i < 9; ++i) {
    src += ".loop " + std::to_string(i) + " body=L" + std::to_string(i) + " end=L" +
           std::to_string(i) + " reg=r4 init=0 step=1 final=4 cmp=LT\n";
  }
  for (int i = 0; i < 9; ++i) src += "L" + std::to_string(i) + ": ADD r5, r5, r4\n";
  src += "HALT\n";
  ProgramImage image = assemble(src);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  TaskGraph tg = extract_tasks(cfg, forest);
  try {
    generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLCfull);
    FAIL("expected CapacityExceeded");
  } catch (const SimError& e) {
    CHECK(e.kind() == Err::CapacityExceeded);
    CHECK(e.resource() == "loops");
    CHECK(e.have() == 9);
    CHECK(e.limit() == 8);
  }
}

TEST_CASE("generate_zolc_config: one break is unsupported under ZOLClite") {
  ProgramImage image = assemble(kBreakZolc);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  TaskGraph tg = extract_tasks(cfg, forest);
  try {
    generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLClite);
    FAIL("expected VariantUnsupported");
  } catch (const SimError& e) {
    CHECK(e.kind() == Err::VariantUnsupported);
    CHECK(std::string(e.what()).find("multi-exit") != std::string::npos);
  }
  // and accepted under ZOLCfull
  CHECK_NOTHROW(generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLCfull));
}

TEST_CASE("capacity monotonicity: uZOLC-valid configs pass lite, lite-valid pass full") {
  for (const char* src : {kSingleLoopZolc}) {
    ProgramImage image = assemble(src);
    Cfg cfg = build_cfg(image);
    LoopForest forest = forest_from_annotations(image, cfg);
    TaskGraph tg = extract_tasks(cfg, forest);
    CHECK_NOTHROW(generate_zolc_config(tg, image, forest, ZolcVariantKind::uZOLC));
    CHECK_NOTHROW(generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLClite));
    CHECK_NOTHROW(generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLCfull));
  }
  for (const char* src : {kDoubleNestZolc}) {
    ProgramImage image = assemble(src);
    Cfg cfg = build_cfg(image);
    LoopForest forest = forest_from_annotations(image, cfg);
    TaskGraph tg = extract_tasks(cfg, forest);
    CHECK_NOTHROW(generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLClite));
    CHECK_NOTHROW(generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLCfull));
  }
}

TEST_CASE("emit_init_sequence: empty config is just ZRUN") {
  ZolcConfig config;
  std::vector<Instruction> seq = emit_init_sequence(config);
  REQUIRE(seq.size() == 1);
  CHECK(seq[0].opcode == Opcode::ZRUN);
}

TEST_CASE("emit_init_sequence: uZOLC single loop writes nine fields") {
  ProgramImage image = assemble(kSingleLoopZolc);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  TaskGraph tg = extract_tasks(cfg, forest);
  ZolcConfig config = generate_zolc_config(tg, image, forest, ZolcVariantKind::uZOLC);
  std::vector<Instruction> seq = emit_init_sequence(config);
  CHECK(seq.size() == 2 * 9 + 1);
  CHECK(seq.size() <= 19);
  CHECK(seq.back().opcode == Opcode::ZRUN);
  for (size_t i = 0; i + 1 < seq.size(); i += 2) {
    CHECK(seq[i].opcode == Opcode::ADDI);
    CHECK(seq[i + 1].opcode == Opcode::ZCFG);
  }
}

TEST_CASE("emit_init_sequence: length is exactly twice the serialized fields plus one") {
  ProgramImage image = assemble(kDoubleNestZolc);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  TaskGraph tg = extract_tasks(cfg, forest);
  ZolcConfig config = generate_zolc_config(tg, image, forest, ZolcVariantKind::ZOLCfull);
  std::vector<Instruction> seq = emit_init_sequence(config);
  uint32_t fields = static_cast<uint32_t>(config_port_writes(config).size());
  CHECK(seq.size() == 2 * fields + 1);

  // recount the serialization by table: 2 loop records, per-task rows, LUT
  // rows of 5 fields, one control write
  uint32_t task_fields = 0;
  for (const auto& t : config.tasks) {
    if (t.end_pc != TaskRecord::kUnsetEndPc) task_fields++;
    if (t.decision_loop != TaskRecord::kNoDecision || t.empty) task_fields++;
  }
  uint32_t expect = 2 * 8 + task_fields + static_cast<uint32_t>(config.lut.size()) * 5 +
                    static_cast<uint32_t>(config.exits.size()) * 4 + 1;
  CHECK(fields == expect);
}

TEST_CASE("prepared image: no configuration write sits inside a loop body") {
  PreparedImage prepared = prepare_zolc_image(kDoubleNestZolc, ZolcVariantKind::ZOLCfull);
  const ProgramImage& image = prepared.image;
  REQUIRE(image.has_zolc_meta());
  CHECK(image.zolc.init_len == 2 * image.zolc.field_count + 1);
  for (const auto& ann : image.loop_annotations) {
    CHECK(ann.body_start_addr >= image.zolc.init_len * 4);
    for (uint32_t a = ann.body_start_addr; a <= ann.body_end_addr; a += 4)
      CHECK(decode(image.words[a / 4]).opcode != Opcode::ZCFG);
  }
}

TEST_CASE("forest_from_annotations: equal extents nest by declaration id") {
  const char* src =
      ".loop 0 body=B end=E reg=r4 init=0 step=1 final=3 cmp=LT\n"
      ".loop 1 body=B end=E reg=r5 init=0 step=1 final=2 cmp=LT\n"
      ".loop 2 body=B end=E reg=r6 init=0 step=1 final=2 cmp=LT\n"
      "     NOP\n"
      "B:   ADD r7, r7, r4\n"
      "E:   ADD r7, r7, r0\n"
      "     HALT\n";
  ProgramImage image = assemble(src);
  Cfg cfg = build_cfg(image);
  LoopForest forest = forest_from_annotations(image, cfg);
  REQUIRE(forest.loops.size() == 3);
  CHECK(forest.loops[0].parent == 1);
  CHECK(forest.loops[1].parent == 2);
  CHECK(!forest.loops[2].parent);
  TaskGraph tg = extract_tasks(cfg, forest);
  int empties = 0;
  for (const auto& t : tg.tasks)
    if (t.empty) empties++;
  CHECK(empties == 2);
}
