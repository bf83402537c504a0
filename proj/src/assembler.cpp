#include "zolcsim/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace zolcsim {

const char* compare_name(Compare cmp) {
  switch (cmp) {
    case Compare::LT: return "LT";
    case Compare::LE: return "LE";
    case Compare::GT: return "GT";
    case Compare::GE: return "GE";
    case Compare::NE: return "NE";
  }
  return "??";
}

std::optional<Compare> compare_from_name(const std::string& name) {
  std::string up;
  for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "LT") return Compare::LT;
  if (up == "LE") return Compare::LE;
  if (up == "GT") return Compare::GT;
  if (up == "GE") return Compare::GE;
  if (up == "NE") return Compare::NE;
  return std::nullopt;
}

bool compare_holds(Compare cmp, int32_t lhs, int32_t rhs) {
  switch (cmp) {
    case Compare::LT: return lhs < rhs;
    case Compare::LE: return lhs <= rhs;
    case Compare::GT: return lhs > rhs;
    case Compare::GE: return lhs >= rhs;
    case Compare::NE: return lhs != rhs;
  }
  return false;
}

uint64_t loop_trip_count(int32_t initial, int32_t step, int32_t final, Compare cmp) {
  if (step == 0) throw SimError(Err::InfiniteLoopBounds, "step is zero");
  int64_t init = initial, st = step, fin = final;
  auto holds = [&](int64_t v) { return compare_holds(cmp, static_cast<int32_t>(v), final); };
  // do-while: body runs, then candidate = current + step is tested; loop
  // continues while compare(candidate, final) holds
  switch (cmp) {
    case Compare::LT:
      if (st < 0 && init + st < fin) throw SimError(Err::InfiniteLoopBounds, "LT with negative step");
      break;
    case Compare::LE:
      if (st < 0 && init + st <= fin) throw SimError(Err::InfiniteLoopBounds, "LE with negative step");
      break;
    case Compare::GT:
      if (st > 0 && init + st > fin) throw SimError(Err::InfiniteLoopBounds, "GT with positive step");
      break;
    case Compare::GE:
      if (st > 0 && init + st >= fin) throw SimError(Err::InfiniteLoopBounds, "GE with positive step");
      break;
    case Compare::NE: {
      int64_t delta = fin - init;
      if (delta % st != 0 || delta / st < 1)
        throw SimError(Err::InfiniteLoopBounds, "NE never reaches final");
      return static_cast<uint64_t>(delta / st);
    }
  }
  // monotone sweep toward the bound: closed form, N = min k>=1 with
  // !compare(initial + k*step, final)
  if (!holds(init + st)) return 1;
  int64_t n = 1;
  switch (cmp) {
    case Compare::LT: n = (fin - init + st - 1) / st; break;          // smallest k: init+k*st >= fin
    case Compare::LE: n = (fin - init) / st + 1; break;               // smallest k: init+k*st > fin
    case Compare::GT: n = (init - fin + (-st) - 1) / (-st); break;    // smallest k: init+k*st <= fin
    case Compare::GE: n = (init - fin) / (-st) + 1; break;            // smallest k: init+k*st < fin
    case Compare::NE: break;                                          // handled above
  }
  return static_cast<uint64_t>(std::max<int64_t>(n, 1));
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

struct SourceLine {
  int lineno = 0;
  std::vector<std::string> labels;
  std::string mnemonic;               // uppercased, empty for directive-only lines
  std::vector<std::string> operands;  // comma-split
  std::string directive;              // ".loop" etc., lowercased
  std::vector<std::string> dir_args;  // whitespace-split
};

[[noreturn]] void fail(Err kind, int lineno, const std::string& what) {
  throw SimError(kind, "line " + std::to_string(lineno) + ": " + what);
}

int64_t parse_int(const std::string& tok, int lineno) {
  std::string t = trim(tok);
  if (t.empty()) fail(Err::MalformedDirective, lineno, "empty number");
  try {
    size_t pos = 0;
    bool neg = t[0] == '-';
    std::string body = neg ? t.substr(1) : t;
    int64_t v;
    if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
      v = static_cast<int64_t>(std::stoull(body.substr(2), &pos, 16));
      pos += 2;
    } else {
      v = static_cast<int64_t>(std::stoll(body, &pos, 10));
    }
    if (pos != body.size()) fail(Err::MalformedDirective, lineno, "bad number '" + t + "'");
    return neg ? -v : v;
  } catch (const std::exception&) {
    fail(Err::MalformedDirective, lineno, "bad number '" + t + "'");
  }
}

int parse_reg(const std::string& tok, int lineno) {
  std::string t = trim(tok);
  if (t.size() < 2 || (t[0] != 'r' && t[0] != 'R'))
    fail(Err::UnknownMnemonic, lineno, "bad register '" + t + "'");
  for (size_t i = 1; i < t.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(t[i])))
      fail(Err::UnknownMnemonic, lineno, "bad register '" + t + "'");
  int v = std::stoi(t.substr(1));
  if (v < 0 || v > 31) fail(Err::UnknownMnemonic, lineno, "register out of range '" + t + "'");
  return v;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int paren = 0;
  for (char c : s) {
    if (c == '(') paren++;
    if (c == ')') paren = std::max(0, paren - 1);
    if (c == ',' && paren == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_' && s[0] != '.') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
  return true;
}

std::vector<SourceLine> scan_lines(const std::string& source) {
  std::vector<SourceLine> out;
  std::istringstream is(source);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    lineno++;
    size_t sc = raw.find(';');
    if (sc != std::string::npos) raw = raw.substr(0, sc);
    std::string line = trim(raw);
    if (line.empty()) continue;
    SourceLine sl;
    sl.lineno = lineno;
    // leading labels
    for (;;) {
      size_t colon = line.find(':');
      if (colon == std::string::npos) break;
      std::string head = trim(line.substr(0, colon));
      if (!valid_label(head) || head[0] == '.') break;
      sl.labels.push_back(head);
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) {
      out.push_back(std::move(sl));
      continue;
    }
    if (line[0] == '.') {
      auto args = split_ws(line);
      sl.directive = args[0];
      for (char& c : sl.directive) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      sl.dir_args.assign(args.begin() + 1, args.end());
    } else {
      size_t sp = line.find_first_of(" \t");
      sl.mnemonic = upper(sp == std::string::npos ? line : line.substr(0, sp));
      if (sp != std::string::npos) sl.operands = split_commas(trim(line.substr(sp + 1)));
    }
    out.push_back(std::move(sl));
  }
  return out;
}

struct KvArgs {
  std::map<std::string, std::string> kv;
  std::vector<std::string> positional;
};

KvArgs parse_kv(const std::vector<std::string>& args) {
  KvArgs out;
  for (const auto& a : args) {
    size_t eq = a.find('=');
    if (eq == std::string::npos) {
      out.positional.push_back(a);
    } else {
      out.kv[a.substr(0, eq)] = a.substr(eq + 1);
    }
  }
  return out;
}

struct PendingInstr {
  Instruction in;
  int lineno = 0;
  std::string label_operand;  // branch/jump target to resolve in pass 2
};

void check_imm_range(int64_t v, Opcode op, int lineno) {
  if (op == Opcode::ZCFG) {
    if (v < -32768 || v > 65535) fail(Err::ImmediateOutOfRange, lineno, "port " + std::to_string(v));
    return;
  }
  if (v < -32768 || v > 32767)
    fail(Err::ImmediateOutOfRange, lineno, "immediate " + std::to_string(v));
}

// mnemonic -> opcode for text parsing; decode is total over this table
std::optional<Opcode> opcode_from_mnemonic(const std::string& m) {
  static const std::map<std::string, Opcode> table = {
      {"ADD", Opcode::ADD},   {"SUB", Opcode::SUB},   {"MUL", Opcode::MUL},
      {"SLT", Opcode::SLT},   {"BEQ", Opcode::BEQ},   {"BNE", Opcode::BNE},
      {"BLT", Opcode::BLT},   {"BDEC", Opcode::BDEC}, {"ADDI", Opcode::ADDI},
      {"LW", Opcode::LW},     {"SW", Opcode::SW},     {"J", Opcode::J},
      {"JAL", Opcode::JAL},   {"JR", Opcode::JR},     {"NOP", Opcode::NOP},
      {"HALT", Opcode::HALT}, {"ZCFG", Opcode::ZCFG}, {"ZRUN", Opcode::ZRUN},
      {"ZSTOP", Opcode::ZSTOP}};
  auto it = table.find(m);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

}  // namespace

ProgramImage assemble(const std::string& source) {
  auto lines = scan_lines(source);
  ProgramImage image;
  std::vector<PendingInstr> prog;
  std::vector<std::pair<SourceLine, size_t>> loop_lines;  // directive + (unused) position

  // pass 1: addresses, labels, directives
  uint32_t addr = 0;
  for (const auto& sl : lines) {
    for (const auto& lab : sl.labels) {
      if (image.symbols.count(lab)) fail(Err::DuplicateLabel, sl.lineno, lab);
      image.symbols[lab] = addr;
    }
    if (!sl.directive.empty()) {
      loop_lines.push_back({sl, prog.size()});
      continue;
    }
    if (sl.mnemonic.empty()) continue;
    auto opc = opcode_from_mnemonic(sl.mnemonic);
    if (!opc) fail(Err::UnknownMnemonic, sl.lineno, sl.mnemonic);

    PendingInstr pi;
    pi.lineno = sl.lineno;
    pi.in.opcode = *opc;
    const auto& ops = sl.operands;
    auto need = [&](size_t n) {
      if (ops.size() != n)
        fail(Err::UnknownMnemonic, sl.lineno,
             sl.mnemonic + " expects " + std::to_string(n) + " operands");
    };
    switch (*opc) {
      case Opcode::ADD:
      case Opcode::SUB:
      case Opcode::MUL:
      case Opcode::SLT:
        need(3);
        pi.in.rd = static_cast<uint8_t>(parse_reg(ops[0], sl.lineno));
        pi.in.rs = static_cast<uint8_t>(parse_reg(ops[1], sl.lineno));
        pi.in.rt = static_cast<uint8_t>(parse_reg(ops[2], sl.lineno));
        break;
      case Opcode::ADDI: {
        need(3);
        pi.in.rt = static_cast<uint8_t>(parse_reg(ops[0], sl.lineno));
        pi.in.rs = static_cast<uint8_t>(parse_reg(ops[1], sl.lineno));
        int64_t v = parse_int(ops[2], sl.lineno);
        check_imm_range(v, Opcode::ADDI, sl.lineno);
        pi.in.imm = static_cast<int32_t>(v);
        break;
      }
      case Opcode::LW:
      case Opcode::SW: {
        need(2);
        pi.in.rt = static_cast<uint8_t>(parse_reg(ops[0], sl.lineno));
        const std::string& m = ops[1];
        size_t l = m.find('('), r = m.find(')');
        if (l == std::string::npos || r == std::string::npos || r < l)
          fail(Err::UnknownMnemonic, sl.lineno, "expected imm(reg), got '" + m + "'");
        std::string off = trim(m.substr(0, l));
        int64_t v = off.empty() ? 0 : parse_int(off, sl.lineno);
        check_imm_range(v, *opc, sl.lineno);
        pi.in.imm = static_cast<int32_t>(v);
        pi.in.rs = static_cast<uint8_t>(parse_reg(m.substr(l + 1, r - l - 1), sl.lineno));
        break;
      }
      case Opcode::BEQ:
      case Opcode::BNE:
      case Opcode::BLT:
        need(3);
        pi.in.rs = static_cast<uint8_t>(parse_reg(ops[0], sl.lineno));
        pi.in.rt = static_cast<uint8_t>(parse_reg(ops[1], sl.lineno));
        pi.label_operand = ops[2];
        break;
      case Opcode::BDEC:
        need(2);
        pi.in.rs = static_cast<uint8_t>(parse_reg(ops[0], sl.lineno));
        pi.label_operand = ops[1];
        break;
      case Opcode::J:
      case Opcode::JAL:
        need(1);
        pi.label_operand = ops[0];
        break;
      case Opcode::JR:
        need(1);
        pi.in.rs = static_cast<uint8_t>(parse_reg(ops[0], sl.lineno));
        break;
      case Opcode::ZCFG: {
        need(2);
        pi.in.rs = static_cast<uint8_t>(parse_reg(ops[0], sl.lineno));
        int64_t v = parse_int(ops[1], sl.lineno);
        check_imm_range(v, Opcode::ZCFG, sl.lineno);
        pi.in.imm = static_cast<int16_t>(static_cast<uint16_t>(v & 0xFFFF));
        break;
      }
      case Opcode::NOP:
      case Opcode::HALT:
      case Opcode::ZRUN:
      case Opcode::ZSTOP:
        need(0);
        break;
    }
    prog.push_back(std::move(pi));
    addr += 4;
  }

  // pass 2: resolve branch/jump labels
  auto lookup = [&](const std::string& lab, int lineno) -> uint32_t {
    std::string t = trim(lab);
    auto it = image.symbols.find(t);
    if (it == image.symbols.end()) fail(Err::UndefinedLabel, lineno, t);
    return it->second;
  };
  for (size_t i = 0; i < prog.size(); ++i) {
    auto& pi = prog[i];
    if (pi.label_operand.empty()) continue;
    uint32_t target = lookup(pi.label_operand, pi.lineno);
    uint32_t here = static_cast<uint32_t>(i * 4);
    if (pi.in.opcode == Opcode::J || pi.in.opcode == Opcode::JAL) {
      pi.in.target = target / 4;
    } else {
      int64_t off = (static_cast<int64_t>(target) - static_cast<int64_t>(here) - 4) / 4;
      if (off < -32768 || off > 32767)
        fail(Err::BranchOutOfRange, pi.lineno, "offset " + std::to_string(off));
      pi.in.imm = static_cast<int32_t>(off);
    }
  }
  image.words.reserve(prog.size());
  for (const auto& pi : prog) image.words.push_back(encode(pi.in));

  // directives
  for (const auto& [sl, pos] : loop_lines) {
    (void)pos;
    auto args = parse_kv(sl.dir_args);
    if (sl.directive == ".loop") {
      if (args.positional.size() != 1) fail(Err::MalformedDirective, sl.lineno, ".loop needs id");
      LoopAnnotation ann;
      ann.loop_id = static_cast<int>(parse_int(args.positional[0], sl.lineno));
      for (const char* key : {"body", "end", "reg", "init", "step", "final", "cmp"})
        if (!args.kv.count(key))
          fail(Err::MalformedDirective, sl.lineno, std::string(".loop missing ") + key);
      ann.body_start = args.kv["body"];
      ann.body_end = args.kv["end"];
      ann.index_reg = static_cast<uint8_t>(parse_reg(args.kv["reg"], sl.lineno));
      ann.initial = static_cast<int32_t>(parse_int(args.kv["init"], sl.lineno));
      ann.step = static_cast<int32_t>(parse_int(args.kv["step"], sl.lineno));
      ann.final = static_cast<int32_t>(parse_int(args.kv["final"], sl.lineno));
      auto cmp = compare_from_name(args.kv["cmp"]);
      if (!cmp) fail(Err::MalformedDirective, sl.lineno, "bad cmp " + args.kv["cmp"]);
      ann.compare = *cmp;
      ann.body_start_addr = lookup(ann.body_start, sl.lineno);
      ann.body_end_addr = lookup(ann.body_end, sl.lineno);
      if (ann.body_end_addr < ann.body_start_addr)
        fail(Err::MalformedDirective, sl.lineno, "loop end before body start");
      if (ann.step == 0) throw SimError(Err::InfiniteLoopBounds, "loop " + std::to_string(ann.loop_id));
      try {
        loop_trip_count(ann.initial, ann.step, ann.final, ann.compare);
      } catch (const SimError&) {
        throw SimError(Err::InfiniteLoopBounds, "loop " + std::to_string(ann.loop_id));
      }
      image.loop_annotations.push_back(std::move(ann));
    } else if (sl.directive == ".exit") {
      if (args.positional.size() != 1 || !args.kv.count("branch") || !args.kv.count("target"))
        fail(Err::MalformedDirective, sl.lineno, ".exit needs id branch= target=");
      int id = static_cast<int>(parse_int(args.positional[0], sl.lineno));
      lookup(args.kv["branch"], sl.lineno);
      lookup(args.kv["target"], sl.lineno);
      bool found = false;
      for (auto& ann : image.loop_annotations)
        if (ann.loop_id == id) {
          ann.exits.push_back({args.kv["branch"], args.kv["target"]});
          found = true;
        }
      if (!found) fail(Err::MalformedDirective, sl.lineno, ".exit before its .loop");
    } else if (sl.directive == ".entry") {
      if (args.positional.size() != 2) fail(Err::MalformedDirective, sl.lineno, ".entry id label");
      int id = static_cast<int>(parse_int(args.positional[0], sl.lineno));
      lookup(args.positional[1], sl.lineno);
      bool found = false;
      for (auto& ann : image.loop_annotations)
        if (ann.loop_id == id) {
          ann.entries.push_back(args.positional[1]);
          found = true;
        }
      if (!found) fail(Err::MalformedDirective, sl.lineno, ".entry before its .loop");
    } else if (sl.directive == ".output") {
      OutputSpec out;
      if (args.positional.size() == 2 && args.positional[0] == "reg") {
        out.kind = OutputSpec::Kind::Reg;
        out.reg = static_cast<uint8_t>(parse_int(args.positional[1], sl.lineno));
        if (out.reg > 31) fail(Err::MalformedDirective, sl.lineno, "bad output reg");
      } else if (args.positional.size() == 3 && args.positional[0] == "mem") {
        out.kind = OutputSpec::Kind::Mem;
        out.mem_start = static_cast<uint32_t>(parse_int(args.positional[1], sl.lineno));
        out.mem_len = static_cast<uint32_t>(parse_int(args.positional[2], sl.lineno));
      } else {
        fail(Err::MalformedDirective, sl.lineno, ".output reg N | .output mem ADDR LEN");
      }
      image.outputs.push_back(out);
    } else {
      fail(Err::MalformedDirective, sl.lineno, "unknown directive " + sl.directive);
    }
  }

  // per-loop exit/entry caps (ZOLCfull maximum); variant-specific limits are
  // enforced again at config generation
  for (const auto& ann : image.loop_annotations) {
    if (ann.exits.size() > 4)
      throw SimError(Err::CapacityExceeded, "exits of loop " + std::to_string(ann.loop_id),
                     static_cast<int64_t>(ann.exits.size()), 4);
    if (ann.entries.size() > 4)
      throw SimError(Err::CapacityExceeded, "entries of loop " + std::to_string(ann.loop_id),
                     static_cast<int64_t>(ann.entries.size()), 4);
  }
  for (const auto& [lab, a] : image.symbols)
    if (a > image.size_bytes())
      throw SimError(Err::BadImage, "symbol " + lab + " out of image");
  // canonical order; for equal body ranges (perfect nests) smaller id = inner
  std::sort(image.loop_annotations.begin(), image.loop_annotations.end(),
            [](const LoopAnnotation& a, const LoopAnnotation& b) { return a.loop_id < b.loop_id; });
  for (size_t i = 1; i < image.loop_annotations.size(); ++i)
    if (image.loop_annotations[i].loop_id == image.loop_annotations[i - 1].loop_id)
      throw SimError(Err::MalformedDirective,
                     "duplicate loop id " + std::to_string(image.loop_annotations[i].loop_id));
  return image;
}

uint32_t encode(const Instruction& in) {
  auto check_reg = [](uint8_t r) {
    if (r > 31) throw SimError(Err::FieldOutOfRange, "register " + std::to_string(r));
  };
  check_reg(in.rd);
  check_reg(in.rs);
  check_reg(in.rt);
  if (in.imm < -32768 || in.imm > 32767)
    throw SimError(Err::FieldOutOfRange, "immediate " + std::to_string(in.imm));
  if (in.target > 0x03FFFFFF)
    throw SimError(Err::FieldOutOfRange, "target " + std::to_string(in.target));
  uint32_t word = static_cast<uint32_t>(in.opcode) << 26;
  switch (in.opcode) {
    case Opcode::ADD:
    case Opcode::SUB:
    case Opcode::MUL:
    case Opcode::SLT:
      word |= (in.rs << 21) | (in.rt << 16) | (in.rd << 11);
      break;
    case Opcode::ADDI:
    case Opcode::LW:
    case Opcode::SW:
    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::BLT:
    case Opcode::BDEC:
    case Opcode::ZCFG:
      word |= (in.rs << 21) | (in.rt << 16) | (static_cast<uint32_t>(in.imm) & 0xFFFF);
      break;
    case Opcode::J:
    case Opcode::JAL:
      word |= in.target;
      break;
    case Opcode::JR:
      word |= (in.rs << 21);
      break;
    case Opcode::NOP:
    case Opcode::HALT:
    case Opcode::ZRUN:
    case Opcode::ZSTOP:
      break;
  }
  return word;
}

std::string disassemble(const ProgramImage& image) {
  // collect branch/jump targets so reassembly resolves identically
  std::map<uint32_t, std::string> labels;
  auto mark = [&](uint32_t addr) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "L%04x", addr);
    labels[addr] = buf;
  };
  for (size_t i = 0; i < image.words.size(); ++i) {
    Instruction in = decode(image.words[i]);
    if (is_conditional_branch(in.opcode))
      mark(static_cast<uint32_t>(i * 4 + 4 + in.imm * 4));
    else if (in.opcode == Opcode::J || in.opcode == Opcode::JAL)
      mark(in.target * 4);
  }
  std::ostringstream os;
  for (size_t i = 0; i < image.words.size(); ++i) {
    uint32_t addr = static_cast<uint32_t>(i * 4);
    Instruction in = decode(image.words[i]);
    if (labels.count(addr)) os << labels[addr] << ":";
    os << "\t";
    switch (in.opcode) {
      case Opcode::BEQ:
      case Opcode::BNE:
      case Opcode::BLT:
        os << opcode_name(in.opcode) << " r" << int(in.rs) << ", r" << int(in.rt) << ", "
           << labels.at(static_cast<uint32_t>(addr + 4 + in.imm * 4));
        break;
      case Opcode::BDEC:
        os << "BDEC r" << int(in.rs) << ", "
           << labels.at(static_cast<uint32_t>(addr + 4 + in.imm * 4));
        break;
      case Opcode::J:
      case Opcode::JAL:
        os << opcode_name(in.opcode) << " " << labels.at(in.target * 4);
        break;
      default:
        os << format_instruction(in);
        break;
    }
    os << "\n";
  }
  return os.str();
}

namespace {

void write_u32(std::ofstream& f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v & 0xFF), static_cast<uint8_t>((v >> 8) & 0xFF),
                  static_cast<uint8_t>((v >> 16) & 0xFF), static_cast<uint8_t>((v >> 24) & 0xFF)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::ifstream& f) {
  uint8_t b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw SimError(Err::BadImage, "truncated image");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_image(const ProgramImage& image, const std::string& img_path,
                const std::string& meta_path) {
  std::ofstream img(img_path, std::ios::binary);
  if (!img) throw SimError(Err::IoError, "cannot write " + img_path);
  img.write("ZIMG", 4);
  char version = 1;
  img.write(&version, 1);
  write_u32(img, static_cast<uint32_t>(image.words.size()));
  for (uint32_t w : image.words) write_u32(img, w);

  std::ofstream meta(meta_path);
  if (!meta) throw SimError(Err::IoError, "cannot write " + meta_path);
  meta << "format = zmeta1\n";
  for (const auto& [lab, addr] : image.symbols) meta << "symbol." << lab << " = " << addr << "\n";
  for (const auto& out : image.outputs) {
    if (out.kind == OutputSpec::Kind::Reg)
      meta << "output.reg = " << int(out.reg) << "\n";
    else
      meta << "output.mem = " << out.mem_start << " " << out.mem_len << "\n";
  }
  for (const auto& ann : image.loop_annotations) {
    std::string p = "loop." + std::to_string(ann.loop_id) + ".";
    meta << p << "body = " << ann.body_start << "\n";
    meta << p << "end = " << ann.body_end << "\n";
    meta << p << "body_addr = " << ann.body_start_addr << "\n";
    meta << p << "end_addr = " << ann.body_end_addr << "\n";
    meta << p << "reg = " << int(ann.index_reg) << "\n";
    meta << p << "init = " << ann.initial << "\n";
    meta << p << "step = " << ann.step << "\n";
    meta << p << "final = " << ann.final << "\n";
    meta << p << "cmp = " << compare_name(ann.compare) << "\n";
    for (const auto& [b, t] : ann.exits) meta << p << "exit = " << b << " " << t << "\n";
    for (const auto& e : ann.entries) meta << p << "entry = " << e << "\n";
  }
  if (image.has_zolc_meta()) {
    meta << "zolc.variant = " << image.zolc.variant << "\n";
    meta << "zolc.init_len = " << image.zolc.init_len << "\n";
    meta << "zolc.field_count = " << image.zolc.field_count << "\n";
    meta << "zolc.start_task = " << image.zolc.start_task << "\n";
    meta << "zolc.storage_bytes = " << image.zolc.storage_bytes << "\n";
  }
}

ProgramImage load_image(const std::string& img_path, const std::string& meta_path) {
  std::ifstream img(img_path, std::ios::binary);
  if (!img) throw SimError(Err::IoError, "cannot read " + img_path);
  char magic[4];
  img.read(magic, 4);
  if (!img || std::string(magic, 4) != "ZIMG") throw SimError(Err::BadImage, "bad magic");
  char version;
  img.read(&version, 1);
  if (!img || version != 1) throw SimError(Err::BadImage, "unsupported version");
  uint32_t count = read_u32(img);
  ProgramImage image;
  image.words.reserve(count);
  for (uint32_t i = 0; i < count; ++i) image.words.push_back(read_u32(img));

  std::ifstream meta(meta_path);
  if (!meta) return image;  // sidecar optional for plain images
  std::string line;
  std::map<int, LoopAnnotation> loops;
  while (std::getline(meta, line)) {
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.rfind("symbol.", 0) == 0) {
      image.symbols[key.substr(7)] = static_cast<uint32_t>(std::stoul(val));
    } else if (key == "output.reg") {
      OutputSpec o;
      o.kind = OutputSpec::Kind::Reg;
      o.reg = static_cast<uint8_t>(std::stoul(val));
      image.outputs.push_back(o);
    } else if (key == "output.mem") {
      OutputSpec o;
      o.kind = OutputSpec::Kind::Mem;
      std::istringstream vs(val);
      vs >> o.mem_start >> o.mem_len;
      image.outputs.push_back(o);
    } else if (key.rfind("loop.", 0) == 0) {
      size_t dot = key.find('.', 5);
      if (dot == std::string::npos) throw SimError(Err::BadImage, "bad meta key " + key);
      int id = std::stoi(key.substr(5, dot - 5));
      std::string field = key.substr(dot + 1);
      auto& ann = loops[id];
      ann.loop_id = id;
      if (field == "body") ann.body_start = val;
      else if (field == "end") ann.body_end = val;
      else if (field == "body_addr") ann.body_start_addr = static_cast<uint32_t>(std::stoul(val));
      else if (field == "end_addr") ann.body_end_addr = static_cast<uint32_t>(std::stoul(val));
      else if (field == "reg") ann.index_reg = static_cast<uint8_t>(std::stoul(val));
      else if (field == "init") ann.initial = std::stoi(val);
      else if (field == "step") ann.step = std::stoi(val);
      else if (field == "final") ann.final = std::stoi(val);
      else if (field == "cmp") {
        auto cmp = compare_from_name(val);
        if (!cmp) throw SimError(Err::BadImage, "bad cmp " + val);
        ann.compare = *cmp;
      } else if (field == "exit") {
        std::istringstream vs(val);
        std::string b, t;
        vs >> b >> t;
        ann.exits.push_back({b, t});
      } else if (field == "entry") {
        ann.entries.push_back(val);
      } else {
        throw SimError(Err::BadImage, "bad meta key " + key);
      }
    } else if (key == "zolc.variant") image.zolc.variant = val;
    else if (key == "zolc.init_len") image.zolc.init_len = static_cast<uint32_t>(std::stoul(val));
    else if (key == "zolc.field_count") image.zolc.field_count = static_cast<uint32_t>(std::stoul(val));
    else if (key == "zolc.start_task") image.zolc.start_task = static_cast<uint32_t>(std::stoul(val));
    else if (key == "zolc.storage_bytes") image.zolc.storage_bytes = static_cast<uint32_t>(std::stoul(val));
  }
  for (auto& [id, ann] : loops) image.loop_annotations.push_back(std::move(ann));
  std::sort(image.loop_annotations.begin(), image.loop_annotations.end(),
            [](const LoopAnnotation& a, const LoopAnnotation& b) { return a.loop_id < b.loop_id; });
  return image;
}

}  // namespace zolcsim
