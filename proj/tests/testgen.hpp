// Random counted-loop program generator. Each program is rendered in the
// three benchmark forms (compare-branch, branch-decrement, ZOLC) from one
// tree, with identical outputs, so the functional oracle on the default form
// checks the other two.
#pragma once

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testgen {

struct GenForms {
  std::string def;
  std::string hrdwil;
  std::string zolc;
  int loops = 0;
  int breaks = 0;
  int max_depth = 0;
};

namespace detail {

struct Element {
  bool is_loop = false;
  std::string op;     // instruction text when not a loop
  int loop_index = -1;
};

struct LoopNode {
  int trips = 1;
  int idx_reg = 0;    // r2..r6, controller-maintained in the ZOLC form
  int cnt_reg = 0;    // r8..r12, branch-decrement counter
  int bound_reg = 0;  // r26..r30, compare-branch bound
  bool uses_idx = false;
  bool has_break = false;
  int break_pos = 0;  // break emitted before element break_pos; == size is at end
  int break_acc = 16;
  int depth = 1;
  std::vector<Element> body;
};

struct Builder {
  std::mt19937 rng;
  double break_prob;
  std::vector<LoopNode> loops;

  Builder(uint32_t seed, double p) : rng(seed), break_prob(p) {}

  int pct(int n) { return static_cast<int>(rng() % static_cast<uint32_t>(n)); }

  std::string make_op(const std::vector<int>& active_idx) {
    const int accs[4] = {16, 17, 18, 19};
    int a = accs[pct(4)];
    int b = accs[pct(4)];
    std::ostringstream os;
    switch (pct(7)) {
      case 0: os << "ADD r" << a << ", r" << a << ", r" << b; break;
      case 1: os << "ADDI r" << a << ", r" << a << ", " << (pct(9) - 4); break;
      case 2: os << "SUB r" << a << ", r" << a << ", r" << b; break;
      case 3: os << "SLT r" << a << ", r" << b << ", r" << accs[pct(4)]; break;
      case 4:
        if (!active_idx.empty()) {
          os << "ADD r" << a << ", r" << a << ", r"
             << active_idx[pct(static_cast<int>(active_idx.size()))];
          break;
        }
        [[fallthrough]];
      case 5: os << "SW r" << a << ", " << 4 * pct(8) << "(r14)"; break;
      default: os << "LW r" << b << ", " << 4 * pct(8) << "(r14)"; break;
    }
    return os.str();
  }

  std::vector<Element> make_body(int depth, int& budget, std::vector<int>& active_idx) {
    std::vector<Element> body;
    int elems = 1 + pct(3);
    for (int e = 0; e < elems; ++e) {
      if (depth < 3 && budget > 0 && pct(100) < 45) {
        int li = static_cast<int>(loops.size());
        budget--;
        loops.push_back({});
        LoopNode ln;
        ln.trips = 1 + pct(6);
        ln.idx_reg = 2 + li;
        ln.cnt_reg = 8 + li;
        ln.bound_reg = 26 + li;
        ln.depth = depth + 1;
        // ops may read the index only where every form maintains it
        ln.uses_idx = pct(2) == 0;
        if (ln.uses_idx) active_idx.push_back(ln.idx_reg);
        ln.body = make_body(depth + 1, budget, active_idx);
        if (ln.uses_idx) active_idx.pop_back();
        ln.has_break = (rng() % 1000) < static_cast<uint32_t>(break_prob * 1000);
        if (ln.has_break) {
          ln.break_pos = pct(static_cast<int>(ln.body.size()) + 1);
          ln.break_acc = 16 + pct(4);
        }
        loops[li] = std::move(ln);
        body.push_back({true, "", li});
        if (loops[li].has_break) {
          // a breaking loop must not sit in tail position: its exit target
          // has to be a real instruction inside the enclosing region
          body.push_back({false, make_op(active_idx), -1});
          e++;
        }
      } else {
        body.push_back({false, make_op(active_idx), -1});
      }
    }
    return body;
  }
};

enum class Form { Default, Hrdwil, Zolc };

struct Renderer {
  const std::vector<LoopNode>& loops;
  Form form;
  std::vector<std::string> lines;
  std::vector<std::string> pending;

  void emit(const std::string& instr) {
    std::string prefix;
    for (const auto& l : pending) prefix += l + ": ";
    pending.clear();
    lines.push_back("        " + prefix + instr);
  }

  void emit_break(int li) {
    emit("BLT r25, r" + std::to_string(loops[li].break_acc) + ", AFT" + std::to_string(li));
  }

  void render_elements(const std::vector<Element>& body, int self) {
    for (size_t e = 0; e <= body.size(); ++e) {
      if (self >= 0 && loops[self].has_break &&
          loops[self].break_pos == static_cast<int>(e))
        emit_break(self);
      if (e == body.size()) break;
      const Element& el = body[e];
      if (el.is_loop)
        render_loop(el.loop_index);
      else
        emit(el.op);
    }
  }

  void render_loop(int li) {
    const LoopNode& ln = loops[li];
    if (form == Form::Default) {
      emit("ADDI r" + std::to_string(ln.idx_reg) + ", r0, 0");
    } else if (form == Form::Hrdwil) {
      emit("ADDI r" + std::to_string(ln.cnt_reg) + ", r0, " + std::to_string(ln.trips));
      if (ln.uses_idx) emit("ADDI r" + std::to_string(ln.idx_reg) + ", r0, 0");
    }
    pending.push_back("L" + std::to_string(li));
    render_elements(ln.body, li);
    if (form == Form::Default) {
      emit("ADDI r" + std::to_string(ln.idx_reg) + ", r" + std::to_string(ln.idx_reg) + ", 1");
      pending.push_back("E" + std::to_string(li));
      emit("BLT r" + std::to_string(ln.idx_reg) + ", r" + std::to_string(ln.bound_reg) + ", L" +
           std::to_string(li));
    } else if (form == Form::Hrdwil) {
      if (ln.uses_idx)
        emit("ADDI r" + std::to_string(ln.idx_reg) + ", r" + std::to_string(ln.idx_reg) + ", 1");
      pending.push_back("E" + std::to_string(li));
      emit("BDEC r" + std::to_string(ln.cnt_reg) + ", L" + std::to_string(li));
    } else {
      // the last emitted body instruction is the loop end
      std::string& last = lines.back();
      size_t indent = last.find_first_not_of(' ');
      last = "        E" + std::to_string(li) + ": " + last.substr(indent);
    }
    pending.push_back("AFT" + std::to_string(li));
  }
};

}  // namespace detail

inline GenForms generate_program(uint32_t seed, double break_prob = 0.3) {
  using namespace detail;
  Builder b(seed, break_prob);
  int budget = 5;
  std::vector<int> active;
  std::vector<Element> top = b.make_body(0, budget, active);

  GenForms out;
  out.loops = static_cast<int>(b.loops.size());
  for (const auto& ln : b.loops) {
    if (ln.has_break) out.breaks++;
    out.max_depth = std::max(out.max_depth, ln.depth);
  }

  for (Form form : {Form::Default, Form::Hrdwil, Form::Zolc}) {
    Renderer r{b.loops, form, {}, {}};
    std::ostringstream head;
    if (form == Form::Zolc) {
      // deeper loops get smaller ids so equal extents nest correctly
      std::vector<size_t> order(b.loops.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        if (b.loops[x].depth != b.loops[y].depth) return b.loops[x].depth > b.loops[y].depth;
        return x < y;
      });
      int id = 0;
      for (size_t li : order) {
        const LoopNode& ln = b.loops[li];
        head << ".loop " << id++ << " body=L" << li << " end=E" << li << " reg=r" << ln.idx_reg
             << " init=0 step=1 final=" << ln.trips << " cmp=LT\n";
      }
    }
    head << ".output reg 16\n.output reg 17\n.output reg 18\n.output reg 19\n"
         << ".output mem 0x2000 32\n";

    r.emit("ADDI r14, r0, 0x2000");
    r.emit("ADDI r25, r0, " + std::to_string(40 + (seed % 200)));
    r.emit("ADDI r16, r0, 1");
    r.emit("ADDI r17, r0, 2");
    r.emit("ADDI r18, r0, 3");
    r.emit("ADDI r19, r0, 5");
    if (form == Form::Default)
      for (const auto& ln : b.loops)
        r.emit("ADDI r" + std::to_string(ln.bound_reg) + ", r0, " + std::to_string(ln.trips));
    r.render_elements(top, -1);
    r.emit("HALT");

    std::string src = head.str();
    for (const auto& line : r.lines) src += line + "\n";
    if (form == Form::Default)
      out.def = src;
    else if (form == Form::Hrdwil)
      out.hrdwil = src;
    else
      out.zolc = src;
  }
  return out;
}

}  // namespace testgen
