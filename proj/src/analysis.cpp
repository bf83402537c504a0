#include "zolcsim/analysis.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace zolcsim {

int Cfg::block_at(uint32_t addr) const {
  for (size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].start == addr) return static_cast<int>(i);
  return -1;
}

namespace {

bool is_terminator(Opcode op) {
  return is_conditional_branch(op) || op == Opcode::J || op == Opcode::JAL || op == Opcode::JR ||
         op == Opcode::HALT;
}

uint32_t branch_target(uint32_t pc, const Instruction& in) {
  return static_cast<uint32_t>(pc + 4 + in.imm * 4);
}

std::string hexaddr(uint32_t a) {
  std::ostringstream os;
  os << "0x" << std::hex << a;
  return os.str();
}

}  // namespace

Cfg build_cfg(const ProgramImage& image) {
  const size_t n = image.words.size();
  std::vector<Instruction> prog(n);
  for (size_t i = 0; i < n; ++i) prog[i] = decode(image.words[i]);

  // leaders: entry, transfer targets, instruction after any terminator;
  // annotated loop boundaries are implicit transfer points (redirect targets
  // and task ends) and split blocks the same way
  std::set<uint32_t> leaders;
  if (n > 0) leaders.insert(0);
  for (size_t i = 0; i < n; ++i) {
    uint32_t pc = static_cast<uint32_t>(i * 4);
    const Instruction& in = prog[i];
    if (is_conditional_branch(in.opcode)) leaders.insert(branch_target(pc, in));
    if (in.opcode == Opcode::J || in.opcode == Opcode::JAL) leaders.insert(in.target * 4);
    if (is_terminator(in.opcode) && i + 1 < n) leaders.insert(pc + 4);
  }
  for (const auto& ann : image.loop_annotations) {
    leaders.insert(ann.body_start_addr);
    if (ann.body_end_addr + 4 < n * 4) leaders.insert(ann.body_end_addr + 4);
  }
  for (uint32_t l : leaders)
    if (l % 4 != 0 || l >= n * 4)
      throw SimError(Err::BadImage, "transfer target " + hexaddr(l) + " outside image");

  Cfg cfg;
  std::vector<uint32_t> starts(leaders.begin(), leaders.end());
  for (size_t b = 0; b < starts.size(); ++b) {
    BasicBlock blk;
    blk.start = starts[b];
    uint32_t limit = (b + 1 < starts.size()) ? starts[b + 1] : static_cast<uint32_t>(n * 4);
    blk.end = limit - 4;
    const Instruction& last = prog[blk.end / 4];
    blk.terminator = last.opcode;
    if (is_conditional_branch(last.opcode))
      blk.taken_target = branch_target(blk.end, last);
    else if (last.opcode == Opcode::J || last.opcode == Opcode::JAL)
      blk.taken_target = last.target * 4;
    blk.unanalyzable = (last.opcode == Opcode::JR);
    cfg.blocks.push_back(blk);
  }
  for (size_t b = 0; b < cfg.blocks.size(); ++b) {
    const BasicBlock& blk = cfg.blocks[b];
    auto add = [&](uint32_t to_addr, EdgeKind kind) {
      int to = cfg.block_at(to_addr);
      if (to >= 0) cfg.edges.push_back({static_cast<int>(b), to, kind});
    };
    if (is_conditional_branch(blk.terminator)) {
      add(blk.taken_target, EdgeKind::Taken);
      if (blk.end + 4 < n * 4) add(blk.end + 4, EdgeKind::Fallthrough);
    } else if (blk.terminator == Opcode::J || blk.terminator == Opcode::JAL) {
      add(blk.taken_target, EdgeKind::Jump);
    } else if (blk.terminator == Opcode::JR || blk.terminator == Opcode::HALT) {
      // no static successors
    } else if (blk.end + 4 < n * 4) {
      add(blk.end + 4, EdgeKind::Fallthrough);
    }
  }
  return cfg;
}

namespace {

std::vector<std::vector<int>> scc_partition(const std::set<int>& nodes,
                                            const std::vector<CfgEdge>& edges) {
  std::map<int, std::vector<int>> adj;
  for (const auto& e : edges)
    if (nodes.count(e.from) && nodes.count(e.to)) adj[e.from].push_back(e.to);

  std::map<int, int> index, low;
  std::map<int, bool> on_stack;
  std::vector<int> stack;
  std::vector<std::vector<int>> sccs;
  int counter = 0;

  std::function<void(int)> strongconnect = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : adj[v]) {
      if (!index.count(w)) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<int> comp;
      for (;;) {
        int w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
        if (w == v) break;
      }
      sccs.push_back(std::move(comp));
    }
  };
  for (int v : nodes)
    if (!index.count(v)) strongconnect(v);
  return sccs;
}

bool has_self_edge(int v, const std::vector<CfgEdge>& edges) {
  for (const auto& e : edges)
    if (e.from == v && e.to == v) return true;
  return false;
}

void fill_loop_edges(Loop& loop, const Cfg& cfg) {
  std::set<int> header_targets;
  for (const auto& e : cfg.edges) {
    bool from_in = loop.body.count(e.from) > 0;
    bool to_in = loop.body.count(e.to) > 0;
    if (!from_in && to_in) {
      loop.entry_edges.push_back(e);
      header_targets.insert(e.to);
    } else if (from_in && !to_in) {
      loop.exit_edges.push_back(e);
    }
  }
  if (header_targets.empty()) header_targets.insert(*loop.body.begin());
  loop.headers.assign(header_targets.begin(), header_targets.end());
  loop.multi_entry = loop.headers.size() > 1;
  for (const auto& e : cfg.edges)
    if (loop.body.count(e.from) && header_targets.count(e.to)) loop.back_edges.push_back(e);
  uint32_t lo = 0xFFFFFFFF, hi = 0;
  for (int b : loop.body) {
    lo = std::min(lo, cfg.blocks[b].start);
    hi = std::max(hi, cfg.blocks[b].end);
  }
  loop.range_start = lo;
  loop.range_end = hi;
}

void assign_parents_by_containment(LoopForest& forest) {
  for (size_t i = 0; i < forest.loops.size(); ++i) {
    Loop& l = forest.loops[i];
    l.loop_id = static_cast<int>(i);
    std::optional<int> best;
    for (size_t j = 0; j < forest.loops.size(); ++j) {
      if (i == j) continue;
      const Loop& c = forest.loops[j];
      bool contains;
      if (c.range_start == l.range_start && c.range_end == l.range_end) {
        contains = j > i;  // equal extents: later loop wraps earlier
      } else {
        contains = c.range_start <= l.range_start && l.range_end <= c.range_end;
      }
      if (!contains) continue;
      if (!best) {
        best = static_cast<int>(j);
        continue;
      }
      const Loop& b = forest.loops[*best];
      uint64_t span_c = static_cast<uint64_t>(c.range_end) - c.range_start;
      uint64_t span_b = static_cast<uint64_t>(b.range_end) - b.range_start;
      if (span_c < span_b || (span_c == span_b && j < static_cast<size_t>(*best)))
        best = static_cast<int>(j);
    }
    l.parent = best;
  }
}

}  // namespace

LoopForest find_loops(const Cfg& cfg) {
  LoopForest forest;
  std::set<int> all;
  for (size_t i = 0; i < cfg.blocks.size(); ++i) all.insert(static_cast<int>(i));

  // remove headers before recursing so nested and irreducible loops both
  // surface as their own SCCs
  std::function<void(const std::set<int>&)> visit = [&](const std::set<int>& universe) {
    for (const auto& comp : scc_partition(universe, cfg.edges)) {
      if (comp.size() < 2 && !has_self_edge(comp[0], cfg.edges)) continue;
      Loop loop;
      loop.body.insert(comp.begin(), comp.end());
      for (int b : comp)
        if (cfg.blocks[b].unanalyzable)
          throw SimError(Err::IndirectJumpInLoopCandidate,
                         "JR at " + hexaddr(cfg.blocks[b].end));
      fill_loop_edges(loop, cfg);
      forest.loops.push_back(loop);
      std::set<int> inner(loop.body);
      for (int h : loop.headers) inner.erase(h);
      if (!inner.empty()) visit(inner);
    }
  };
  visit(all);
  std::sort(forest.loops.begin(), forest.loops.end(), [](const Loop& a, const Loop& b) {
    if (a.range_start != b.range_start) return a.range_start < b.range_start;
    return a.range_end > b.range_end;
  });
  assign_parents_by_containment(forest);
  return forest;
}

LoopForest forest_from_annotations(const ProgramImage& image, const Cfg& cfg) {
  LoopForest forest;
  for (size_t i = 0; i < image.loop_annotations.size(); ++i) {
    const LoopAnnotation& ann = image.loop_annotations[i];
    Loop loop;
    loop.annotation_index = static_cast<int>(i);
    loop.range_start = ann.body_start_addr;
    loop.range_end = ann.body_end_addr;
    for (size_t b = 0; b < cfg.blocks.size(); ++b) {
      const BasicBlock& blk = cfg.blocks[b];
      if (blk.start >= loop.range_start && blk.end <= loop.range_end) {
        loop.body.insert(static_cast<int>(b));
        if (blk.unanalyzable)
          throw SimError(Err::IndirectJumpInLoopCandidate, "JR at " + hexaddr(blk.end));
      } else if (blk.start <= loop.range_end && blk.end >= loop.range_start) {
        throw SimError(Err::AnnotationMismatch,
                       "block straddles body of loop " + std::to_string(ann.loop_id));
      }
    }
    if (loop.body.empty())
      throw SimError(Err::AnnotationMismatch, "empty body for loop " + std::to_string(ann.loop_id));
    std::set<int> header_targets;
    int head = cfg.block_at(loop.range_start);
    if (head < 0)
      throw SimError(Err::AnnotationMismatch,
                     "body of loop " + std::to_string(ann.loop_id) + " does not start a block");
    header_targets.insert(head);
    for (const auto& e : cfg.edges) {
      bool from_in = loop.body.count(e.from) > 0;
      bool to_in = loop.body.count(e.to) > 0;
      if (!from_in && to_in) {
        loop.entry_edges.push_back(e);
        header_targets.insert(e.to);
      } else if (from_in && !to_in) {
        // completion falls out of the last body instruction; breaks do not
        bool completion =
            cfg.blocks[e.from].end == loop.range_end && e.kind == EdgeKind::Fallthrough;
        if (!completion) loop.exit_edges.push_back(e);
      } else if (from_in && to_in && e.to == head &&
                 cfg.blocks[e.from].start >= cfg.blocks[e.to].start) {
        loop.back_edges.push_back(e);
      }
    }
    loop.headers.assign(header_targets.begin(), header_targets.end());
    loop.multi_entry = loop.headers.size() > 1;
    forest.loops.push_back(std::move(loop));
  }
  for (size_t i = 0; i < forest.loops.size(); ++i)
    for (size_t j = i + 1; j < forest.loops.size(); ++j) {
      const Loop& a = forest.loops[i];
      const Loop& b = forest.loops[j];
      bool disjoint = a.range_end < b.range_start || b.range_end < a.range_start;
      bool a_in_b = b.range_start <= a.range_start && a.range_end <= b.range_end;
      bool b_in_a = a.range_start <= b.range_start && b.range_end <= a.range_end;
      if (!disjoint && !a_in_b && !b_in_a)
        throw SimError(Err::AnnotationMismatch,
                       "loop bodies " + std::to_string(i) + " and " + std::to_string(j) +
                           " partially overlap");
    }
  assign_parents_by_containment(forest);
  return forest;
}

void cross_check(const ProgramImage& image, const LoopForest& derived) {
  if (image.loop_annotations.size() != derived.loops.size())
    throw SimError(Err::AnnotationMismatch,
                   "directive loops " + std::to_string(image.loop_annotations.size()) +
                       " vs derived " + std::to_string(derived.loops.size()));
  std::vector<bool> used(derived.loops.size(), false);
  for (const auto& ann : image.loop_annotations) {
    bool matched = false;
    for (size_t i = 0; i < derived.loops.size(); ++i) {
      if (used[i] || derived.loops[i].range_start != ann.body_start_addr) continue;
      used[i] = true;
      matched = true;
      break;
    }
    if (!matched)
      throw SimError(Err::AnnotationMismatch, "no derived loop headed at body of loop " +
                                                  std::to_string(ann.loop_id));
  }
}

namespace {

struct Segment {
  uint32_t first = 0, last = 0;  // byte addresses of first/last instruction
};

}  // namespace

TaskGraph extract_tasks(const Cfg& cfg, const LoopForest& forest) {
  TaskGraph tg;
  if (cfg.blocks.empty()) return tg;
  uint32_t prog_end = cfg.blocks.back().end;

  for (const auto& loop : forest.loops) {
    uint64_t covered = 0;
    for (int b : loop.body) covered += (cfg.blocks[b].end - cfg.blocks[b].start) / 4 + 1;
    uint64_t expect = (static_cast<uint64_t>(loop.range_end) - loop.range_start) / 4 + 1;
    if (covered != expect)
      throw SimError(Err::RegionNotLinearizable,
                     "loop " + std::to_string(loop.loop_id) + " body is not contiguous");
    for (int b : loop.body)
      if (cfg.blocks[b].unanalyzable)
        throw SimError(Err::IndirectJumpInLoopCandidate, "JR at " + hexaddr(cfg.blocks[b].end));
  }

  // cut boundaries: loop extents, entry targets, sources of cut edges
  std::set<uint32_t> bounds;
  bounds.insert(0);
  bounds.insert(prog_end + 4);
  for (const auto& loop : forest.loops) {
    bounds.insert(loop.range_start);
    bounds.insert(loop.range_end + 4);
    for (const auto& e : loop.entry_edges) {
      bounds.insert(cfg.blocks[e.to].start);
      bounds.insert(cfg.blocks[e.from].end + 4);
    }
    for (const auto& e : loop.exit_edges) {
      bounds.insert(cfg.blocks[e.from].end + 4);
      bounds.insert(cfg.blocks[e.to].start);
    }
    for (const auto& e : loop.back_edges) bounds.insert(cfg.blocks[e.from].end + 4);
  }

  std::vector<Segment> segments;
  std::vector<uint32_t> bs(bounds.begin(), bounds.end());
  for (size_t i = 0; i + 1 < bs.size(); ++i)
    if (bs[i + 1] > bs[i] && bs[i] <= prog_end) segments.push_back({bs[i], bs[i + 1] - 4});

  auto segment_of = [&](uint32_t addr) -> int {
    for (size_t i = 0; i < segments.size(); ++i)
      if (segments[i].first <= addr && addr <= segments[i].last) return static_cast<int>(i);
    return -1;
  };

  // inter-segment edges must leave from a segment end and land on a segment
  // start, otherwise a region would need two end instructions
  for (const auto& e : cfg.edges) {
    uint32_t from_pc = cfg.blocks[e.from].end;
    uint32_t to_pc = cfg.blocks[e.to].start;
    int sf = segment_of(from_pc), st = segment_of(to_pc);
    if (sf == st) continue;
    if (from_pc != segments[sf].last)
      throw SimError(Err::RegionNotLinearizable,
                     "transfer from region middle at " + hexaddr(from_pc));
    if (to_pc != segments[st].first)
      throw SimError(Err::RegionNotLinearizable,
                     "transfer into region middle at " + hexaddr(to_pc));
  }

  auto innermost_at = [&](uint32_t lo, uint32_t hi) -> std::optional<int> {
    std::optional<int> best;
    for (size_t i = 0; i < forest.loops.size(); ++i) {
      const Loop& l = forest.loops[i];
      if (!(l.range_start <= lo && hi <= l.range_end)) continue;
      if (!best) {
        best = static_cast<int>(i);
        continue;
      }
      const Loop& b = forest.loops[*best];
      uint64_t span_l = static_cast<uint64_t>(l.range_end) - l.range_start;
      uint64_t span_b = static_cast<uint64_t>(b.range_end) - b.range_start;
      if (span_l < span_b || (span_l == span_b && static_cast<int>(i) < *best))
        best = static_cast<int>(i);
    }
    return best;
  };

  // loops ending at each address, innermost first
  std::map<uint32_t, std::vector<int>> ends;
  for (size_t i = 0; i < forest.loops.size(); ++i)
    ends[forest.loops[i].range_end].push_back(static_cast<int>(i));
  for (auto& [addr, ids] : ends)
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      const Loop& la = forest.loops[a];
      const Loop& lb = forest.loops[b];
      if (la.range_start != lb.range_start) return la.range_start > lb.range_start;
      return a < b;
    });

  std::map<uint32_t, int> task_at_start;
  std::map<int, int> empty_for_loop;
  for (const auto& seg : segments) {
    Task t;
    t.task_id = static_cast<int>(tg.tasks.size());
    t.first_pc = seg.first;
    t.end_pc = seg.last;
    t.owning_loop = innermost_at(seg.first, seg.last);
    auto it = ends.find(seg.last);
    if (it != ends.end()) t.decision_loop = it->second.front();
    task_at_start[t.first_pc] = t.task_id;
    tg.tasks.push_back(t);
    if (it != ends.end()) {
      for (size_t k = 1; k < it->second.size(); ++k) {
        Task e;
        e.task_id = static_cast<int>(tg.tasks.size());
        e.first_pc = seg.last + 4;
        e.end_pc = TaskRecord::kUnsetEndPc;
        e.empty = true;
        e.decision_loop = it->second[k];
        e.owning_loop = forest.loops[it->second[k]].parent;
        empty_for_loop[it->second[k]] = e.task_id;
        tg.tasks.push_back(e);
      }
    }
  }

  auto task_starting = [&](uint32_t addr, const char* what) -> int {
    auto it = task_at_start.find(addr);
    if (it == task_at_start.end())
      throw SimError(Err::RegionNotLinearizable,
                     std::string(what) + " target " + hexaddr(addr) + " is not a region start");
    return it->second;
  };

  auto done_successor = [&](int loop_id) -> std::pair<int, uint32_t> {
    const Loop& l = forest.loops[loop_id];
    uint32_t after = l.range_end + 4;
    const auto& ids = ends[l.range_end];
    auto pos = std::find(ids.begin(), ids.end(), loop_id);
    if (pos != ids.end() && pos + 1 != ids.end()) return {empty_for_loop.at(*(pos + 1)), after};
    if (after > prog_end)
      throw SimError(Err::RegionNotLinearizable,
                     "loop " + std::to_string(loop_id) + " ends at program end");
    return {task_starting(after, "loop done"), after};
  };

  // decision transitions (including empty-task chains)
  for (const auto& t : tg.tasks) {
    if (!t.decision_loop) continue;
    const Loop& l = forest.loops[*t.decision_loop];
    tg.transitions.push_back({t.task_id, TransitionCond::LoopNotDone,
                              task_starting(l.range_start, "loop body"), l.range_start, -1, -1});
    auto [done_task, done_target] = done_successor(*t.decision_loop);
    tg.transitions.push_back(
        {t.task_id, TransitionCond::LoopDone, done_task, done_target, -1, -1});
  }

  // exit transitions: one per break edge, per-loop index in address order
  std::map<int, int> exit_counter;
  for (size_t li = 0; li < forest.loops.size(); ++li) {
    const Loop& l = forest.loops[li];
    std::vector<CfgEdge> breaks;
    for (const auto& e : l.exit_edges) {
      bool natural = false;
      for (const auto& be : l.back_edges)
        if (be.from == e.from && e.kind == EdgeKind::Fallthrough) natural = true;
      if (!natural) breaks.push_back(e);
    }
    std::sort(breaks.begin(), breaks.end(), [&](const CfgEdge& a, const CfgEdge& b) {
      return cfg.blocks[a.from].end < cfg.blocks[b.from].end;
    });
    for (const auto& e : breaks) {
      uint32_t branch_pc = cfg.blocks[e.from].end;
      uint32_t target = cfg.blocks[e.to].start;
      int from_task = -1;
      for (const auto& t : tg.tasks)
        if (!t.empty && t.end_pc == branch_pc) from_task = t.task_id;
      if (from_task < 0)
        throw SimError(Err::RegionNotLinearizable,
                       "exit branch " + hexaddr(branch_pc) + " not at a region end");
      int k = exit_counter[static_cast<int>(li)]++;
      tg.transitions.push_back({from_task, TransitionCond::ExitTaken,
                                task_starting(target, "exit"), target, k,
                                static_cast<int>(li)});
    }
  }

  // flow handoffs for non-decision task ends
  for (const auto& t : tg.tasks) {
    if (t.empty || t.decision_loop) continue;
    const BasicBlock* blk = nullptr;
    for (const auto& b : cfg.blocks)
      if (b.end == t.end_pc) blk = &b;
    if (!blk) continue;
    uint32_t target;
    if (blk->terminator == Opcode::HALT || blk->terminator == Opcode::JR) continue;
    if (blk->terminator == Opcode::J || blk->terminator == Opcode::JAL) {
      target = blk->taken_target;
    } else if (is_conditional_branch(blk->terminator)) {
      // taken side must be covered by an exit record; fallthrough is the handoff
      bool covered = false;
      for (const auto& tr : tg.transitions)
        if (tr.cond == TransitionCond::ExitTaken && tr.from_task == t.task_id &&
            tr.target_pc == blk->taken_target)
          covered = true;
      if (!covered)
        throw SimError(Err::RegionNotLinearizable,
                       "conditional handoff at " + hexaddr(t.end_pc));
      if (t.end_pc >= prog_end) continue;
      target = t.end_pc + 4;
    } else {
      if (t.end_pc >= prog_end) continue;
      target = t.end_pc + 4;
    }
    tg.transitions.push_back(
        {t.task_id, TransitionCond::Always, task_starting(target, "handoff"), target, -1, -1});
  }
  return tg;
}

ZolcConfig generate_zolc_config(const TaskGraph& tg, const ProgramImage& image,
                                const LoopForest& forest, ZolcVariantKind variant) {
  ZolcLimits lim = zolc_limits(variant);
  ZolcConfig config;
  config.variant = variant;

  if (forest.loops.size() > lim.max_loops)
    throw SimError(Err::CapacityExceeded, "loops", static_cast<int64_t>(forest.loops.size()),
                   lim.max_loops);

  // per-loop break / entry feature checks
  std::map<int, int> breaks_per_loop;
  for (const auto& tr : tg.transitions)
    if (tr.cond == TransitionCond::ExitTaken) breaks_per_loop[tr.exit_loop]++;
  for (size_t li = 0; li < forest.loops.size(); ++li) {
    int breaks = breaks_per_loop.count(static_cast<int>(li))
                     ? breaks_per_loop[static_cast<int>(li)]
                     : 0;
    if (breaks > 0 && lim.max_exits_per_loop == 0)
      throw SimError(Err::VariantUnsupported, "multi-exit loop " + std::to_string(li) + " under " +
                                                  zolc_variant_name(variant));
    if (breaks > static_cast<int>(lim.max_exits_per_loop))
      throw SimError(Err::CapacityExceeded, "exits of loop " + std::to_string(li), breaks,
                     lim.max_exits_per_loop);
    size_t entries = forest.loops[li].headers.size();
    if (entries > 1 && lim.max_entries_per_loop <= 1)
      throw SimError(Err::VariantUnsupported, "multi-entry loop " + std::to_string(li) +
                                                  " under " + zolc_variant_name(variant));
    if (entries > lim.max_entries_per_loop)
      throw SimError(Err::CapacityExceeded, "entries of loop " + std::to_string(li),
                     static_cast<int64_t>(entries), lim.max_entries_per_loop);
  }

  // loop parameter records from the paired annotations
  for (size_t li = 0; li < forest.loops.size(); ++li) {
    const Loop& l = forest.loops[li];
    const LoopAnnotation* ann = nullptr;
    if (l.annotation_index) {
      ann = &image.loop_annotations[*l.annotation_index];
    } else {
      for (const auto& a : image.loop_annotations)
        if (a.body_start_addr == l.range_start) ann = &a;
    }
    if (!ann)
      throw SimError(Err::AnnotationMismatch,
                     "loop at " + hexaddr(l.range_start) + " has no .loop directive");
    LoopParamRecord rec;
    rec.initial = ann->initial;
    rec.step = ann->step;
    rec.final = ann->final;
    rec.current = ann->initial;
    rec.compare = ann->compare;
    rec.index_reg = ann->index_reg;
    rec.body_start_pc = l.range_start;
    rec.after_pc = l.range_end + 4;
    config.loops.push_back(rec);
  }

  if (variant == ZolcVariantKind::uZOLC) {
    if (config.loops.empty())
      throw SimError(Err::AnnotationMismatch, "uZOLC requires exactly one loop");
    TaskRecord body;
    body.end_pc = forest.loops[0].range_end;
    config.tasks.push_back(body);
    config.start_task = 0;
    return config;
  }

  if (tg.tasks.size() > lim.max_tasks)
    throw SimError(Err::CapacityExceeded, "tasks", static_cast<int64_t>(tg.tasks.size()),
                   lim.max_tasks);

  std::set<int> has_rows;
  for (const auto& tr : tg.transitions)
    if (tr.cond != TransitionCond::ExitTaken) has_rows.insert(tr.from_task);

  for (const auto& t : tg.tasks) {
    TaskRecord rec;
    rec.empty = t.empty;
    if (t.decision_loop) rec.decision_loop = static_cast<uint8_t>(*t.decision_loop);
    if (!t.empty && has_rows.count(t.task_id)) rec.end_pc = t.end_pc;
    config.tasks.push_back(rec);
  }

  std::set<std::pair<int, int>> seen_keys;
  for (const auto& tr : tg.transitions) {
    if (tr.cond == TransitionCond::ExitTaken) {
      ExitRecord ex;
      ex.loop_id = static_cast<uint8_t>(tr.exit_loop);
      for (const auto& t : tg.tasks)
        if (t.task_id == tr.from_task) ex.branch_pc = t.end_pc;
      ex.exit_next_task = static_cast<uint8_t>(tr.to_task);
      ex.exit_target_pc = tr.target_pc;
      config.exits.push_back(ex);
      continue;
    }
    TaskLutEntry row;
    row.task_id = static_cast<uint8_t>(tr.from_task);
    row.status = tr.cond == TransitionCond::LoopDone ? LoopStatus::Done : LoopStatus::NotDone;
    row.next_task = static_cast<uint8_t>(tr.to_task);
    row.target_pc = tr.target_pc;
    const Task& from = tg.tasks[tr.from_task];
    if (from.decision_loop && tr.cond != TransitionCond::Always)
      row.loop_id = static_cast<uint8_t>(*from.decision_loop);
    if (!seen_keys.insert({tr.from_task, static_cast<int>(row.status)}).second)
      throw SimError(Err::AnnotationMismatch,
                     "duplicate LUT key for task " + std::to_string(tr.from_task));
    config.lut.push_back(row);
  }

  if (config.lut.size() > lim.max_lut_entries)
    throw SimError(Err::CapacityExceeded, "lut entries", static_cast<int64_t>(config.lut.size()),
                   lim.max_lut_entries);
  if (config.exits.size() > 32)
    throw SimError(Err::CapacityExceeded, "exit records", static_cast<int64_t>(config.exits.size()),
                   32);

  // LUT totality over the reachable task graph: decision tasks need both
  // statuses, other row-bearing tasks need not-done
  for (const auto& t : tg.tasks) {
    if (!has_rows.count(t.task_id)) continue;
    bool nd = seen_keys.count({t.task_id, static_cast<int>(LoopStatus::NotDone)});
    bool dn = seen_keys.count({t.task_id, static_cast<int>(LoopStatus::Done)});
    if (t.decision_loop && (!nd || !dn))
      throw SimError(Err::MissingLutEntry, "task " + std::to_string(t.task_id));
    if (!t.decision_loop && !nd)
      throw SimError(Err::MissingLutEntry, "task " + std::to_string(t.task_id));
  }

  // entry task: the region holding address 0 (the init sequence splices there)
  for (const auto& t : tg.tasks)
    if (!t.empty && t.first_pc == 0) config.start_task = static_cast<uint8_t>(t.task_id);
  return config;
}

std::vector<Instruction> emit_init_sequence(const ZolcConfig& config) {
  std::vector<Instruction> seq;
  for (const auto& [port, value] : config_port_writes(config)) {
    int32_t v = static_cast<int32_t>(value);
    if (v < -32768 || v > 32767)
      throw SimError(Err::FieldOutOfRange,
                     "init value " + std::to_string(v) + " for port " + std::to_string(port));
    Instruction li;
    li.opcode = Opcode::ADDI;
    li.rt = 1;  // scratch register reserved for configuration
    li.rs = 0;
    li.imm = v;
    seq.push_back(li);
    Instruction wr;
    wr.opcode = Opcode::ZCFG;
    wr.rs = 1;
    wr.imm = static_cast<int16_t>(port);
    seq.push_back(wr);
  }
  Instruction run;
  run.opcode = Opcode::ZRUN;
  seq.push_back(run);
  return seq;
}

std::string dump_taskgraph_text(const TaskGraph& tg) {
  std::ostringstream os;
  os << tg.tasks.size() << " tasks\n";
  for (const auto& t : tg.tasks) {
    os << "  task " << t.task_id;
    if (t.empty)
      os << " (empty)";
    else
      os << " [" << hexaddr(t.first_pc) << ", " << hexaddr(t.end_pc) << "]";
    if (t.owning_loop) os << " loop=" << *t.owning_loop;
    if (t.decision_loop) os << " decides=" << *t.decision_loop;
    os << "\n";
  }
  for (const auto& tr : tg.transitions) {
    const char* cond = tr.cond == TransitionCond::Always       ? "always"
                       : tr.cond == TransitionCond::LoopNotDone ? "loop_not_done"
                       : tr.cond == TransitionCond::LoopDone    ? "loop_done"
                                                                : "exit_taken";
    os << "  " << tr.from_task << " -> " << tr.to_task << " (" << cond;
    if (tr.cond == TransitionCond::ExitTaken) os << "(" << tr.exit_index << ")";
    os << ") @ " << hexaddr(tr.target_pc) << "\n";
  }
  return os.str();
}

std::string dump_taskgraph_json(const TaskGraph& tg, const ZolcConfig* config) {
  nlohmann::json j;
  j["tasks"] = nlohmann::json::array();
  for (const auto& t : tg.tasks) {
    nlohmann::json jt;
    jt["id"] = t.task_id;
    jt["empty"] = t.empty;
    if (!t.empty) {
      jt["first_pc"] = t.first_pc;
      jt["end_pc"] = t.end_pc;
    }
    if (t.owning_loop) jt["loop"] = *t.owning_loop;
    if (t.decision_loop) jt["decides"] = *t.decision_loop;
    j["tasks"].push_back(jt);
  }
  j["transitions"] = nlohmann::json::array();
  for (const auto& tr : tg.transitions) {
    nlohmann::json jt;
    jt["from"] = tr.from_task;
    jt["to"] = tr.to_task;
    jt["cond"] = tr.cond == TransitionCond::Always       ? "always"
                 : tr.cond == TransitionCond::LoopNotDone ? "loop_not_done"
                 : tr.cond == TransitionCond::LoopDone    ? "loop_done"
                                                          : "exit_taken";
    jt["target_pc"] = tr.target_pc;
    if (tr.cond == TransitionCond::ExitTaken) jt["exit_index"] = tr.exit_index;
    j["transitions"].push_back(jt);
  }
  if (config) {
    nlohmann::json jc = nlohmann::json::parse(dump_config_json(*config));
    j["loops"] = jc["loops"];
    j["lut"] = jc["lut"];
    j["exits"] = jc["exits"];
  } else {
    j["loops"] = nlohmann::json::array();
    j["lut"] = nlohmann::json::array();
    j["exits"] = nlohmann::json::array();
  }
  return j.dump(2);
}

}  // namespace zolcsim
