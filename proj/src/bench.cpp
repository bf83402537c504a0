#include "zolcsim/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace zolcsim {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SimError(Err::IoError, "cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

BenchSpec load_bench_spec(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  BenchSpec spec;
  spec.name = j.at("name").get<std::string>();
  fs::path dir = fs::path(path).parent_path();
  for (const auto& [form, file] : j.at("forms").items())
    spec.forms[form] = (dir / file.get<std::string>()).string();
  if (j.contains("expected_outputs")) {
    for (const auto& e : j["expected_outputs"]) {
      BenchSpec::Golden g;
      std::string kind = e.at("kind").get<std::string>();
      g.kind = kind == "mem" ? OutputSpec::Kind::Mem : OutputSpec::Kind::Reg;
      g.index = e.at("index").get<uint32_t>();
      g.value = e.at("value").get<int64_t>();
      spec.expected_outputs.push_back(g);
    }
  }
  return spec;
}

std::vector<BenchSpec> load_suite(const std::string& dir) {
  std::vector<BenchSpec> suite;
  if (!fs::is_directory(dir)) throw SimError(Err::IoError, dir + " is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string p = entry.path().string();
    if (p.size() > 11 && p.substr(p.size() - 11) == ".bench.json") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) suite.push_back(load_bench_spec(f));
  if (suite.empty()) throw SimError(Err::IoError, "no .bench.json specs in " + dir);
  return suite;
}

namespace {

const char* form_for_core(const CoreVariant& core) {
  switch (core.kind) {
    case CoreKind::Default: return "default";
    case CoreKind::Hrdwil: return "hrdwil";
    case CoreKind::Zolc: return "zolc";
  }
  return "default";
}

void check_goldens(const BenchSpec& spec, const ProgramImage& image, const MachineState& state) {
  for (const auto& g : spec.expected_outputs) {
    if (g.kind == OutputSpec::Kind::Reg) {
      if (state.reg(g.index) != static_cast<int32_t>(g.value))
        throw SimError(Err::UsageError, spec.name + ": r" + std::to_string(g.index) + " = " +
                                            std::to_string(state.reg(g.index)) + ", expected " +
                                            std::to_string(g.value));
    } else {
      MachineState tmp = state;
      if (static_cast<int64_t>(tmp.load_word(g.index)) != g.value)
        throw SimError(Err::UsageError, spec.name + ": mem[" + std::to_string(g.index) + "] = " +
                                            std::to_string(tmp.load_word(g.index)) +
                                            ", expected " + std::to_string(g.value));
    }
  }
  (void)image;
}

}  // namespace

SuiteReport run_suite(const std::vector<BenchSpec>& suite, const std::vector<CoreVariant>& cores) {
  SuiteReport report;
  for (const auto& spec : suite) {
    auto it = spec.forms.find("default");
    if (it == spec.forms.end())
      throw SimError(Err::UsageError, spec.name + " has no default form");
    ProgramImage baseline = assemble(read_file(it->second));
    FunctionalResult oracle = run_functional(baseline, 10'000'000);
    check_goldens(spec, baseline, oracle.state);

    std::map<std::string, uint64_t> cycles_by_core;
    for (const auto& core : cores) {
      BenchRow row;
      row.benchmark = spec.name;
      row.core = core.name();
      auto form = spec.forms.find(form_for_core(core));
      if (form == spec.forms.end()) {
        row.status = "missing-form";
        report.rows.push_back(row);
        continue;
      }
      try {
        ProgramImage image;
        if (core.kind == CoreKind::Zolc) {
          image = prepare_zolc_image(read_file(form->second), core.zolc_kind).image;
        } else {
          image = assemble(read_file(form->second));
        }
        Verdict v = verify_equivalence(baseline, image, core);
        if (!v.pass) {
          row.status = "equivalence-failed: " + v.cause;
          report.rows.push_back(row);
          continue;
        }
        CycleReport r = simulate(image, core);
        row.cycles = r.cycles;
        row.dyn_instr = r.dyn_instr;
        row.redirects = r.redirects;
        row.status = "ok";
        cycles_by_core[row.core] = r.cycles;
      } catch (const SimError& e) {
        row.status = err_name(e.kind());
      }
      report.rows.push_back(row);
    }
    // reductions recomputed from the cycles columns against the default core
    auto base = cycles_by_core.find("default");
    if (base != cycles_by_core.end() && base->second > 0) {
      for (auto& row : report.rows) {
        if (row.benchmark != spec.name || row.status != "ok") continue;
        row.reduction_pct =
            (1.0 - static_cast<double>(row.cycles) / static_cast<double>(base->second)) * 100.0;
      }
    }
  }

  std::map<std::string, Aggregate> agg;
  for (const auto& core : cores) {
    agg[core.name()].core = core.name();
  }
  for (const auto& row : report.rows) {
    if (row.status != "ok") continue;
    auto& a = agg[row.core];
    a.avg_reduction_pct += row.reduction_pct;
    a.max_reduction_pct = std::max(a.max_reduction_pct, row.reduction_pct);
    a.rows += 1;
  }
  for (const auto& core : cores) {
    Aggregate a = agg[core.name()];
    if (a.rows > 0) a.avg_reduction_pct /= a.rows;
    report.aggregates.push_back(a);
  }
  return report;
}

std::string suite_to_csv(const SuiteReport& report) {
  std::ostringstream os;
  os << "benchmark,core,cycles,reduction_pct,status\n";
  os << std::fixed << std::setprecision(2);
  for (const auto& row : report.rows) {
    os << row.benchmark << "," << row.core << ",";
    if (row.status == "ok")
      os << row.cycles << "," << row.reduction_pct;
    else
      os << ",";
    os << "," << row.status << "\n";
  }
  for (const auto& a : report.aggregates)
    os << "average," << a.core << ",," << a.avg_reduction_pct << ",\n";
  for (const auto& a : report.aggregates)
    os << "max," << a.core << ",," << a.max_reduction_pct << ",\n";
  return os.str();
}

std::string suite_to_json(const SuiteReport& report) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows)
    j["rows"].push_back({{"benchmark", row.benchmark},
                         {"core", row.core},
                         {"cycles", row.cycles},
                         {"dyn_instr", row.dyn_instr},
                         {"redirects", row.redirects},
                         {"reduction_pct", row.reduction_pct},
                         {"status", row.status}});
  j["aggregates"] = nlohmann::json::array();
  for (const auto& a : report.aggregates)
    j["aggregates"].push_back({{"core", a.core},
                               {"avg_reduction_pct", a.avg_reduction_pct},
                               {"max_reduction_pct", a.max_reduction_pct},
                               {"rows", a.rows}});
  ReferenceNumbers ref;
  j["reference"] = {{"hrdwil", {{"avg", ref.hrdwil_avg}, {"max", ref.hrdwil_max}}},
                    {"zolc", {{"avg", ref.zolc_avg}, {"max", ref.zolc_max}}}};
  return j.dump(2);
}

std::string suite_to_table(const SuiteReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(14) << "benchmark" << std::setw(12) << "core" << std::right
     << std::setw(10) << "cycles" << std::setw(12) << "reduction" << "  status\n";
  for (const auto& row : report.rows) {
    os << std::left << std::setw(14) << row.benchmark << std::setw(12) << row.core << std::right;
    if (row.status == "ok")
      os << std::setw(10) << row.cycles << std::setw(11) << row.reduction_pct << "%";
    else
      os << std::setw(10) << "-" << std::setw(12) << "-";
    os << "  " << row.status << "\n";
  }
  os << "\n";
  for (const auto& a : report.aggregates)
    os << std::left << std::setw(12) << a.core << " avg " << std::setw(7) << a.avg_reduction_pct
       << "  max " << a.max_reduction_pct << "  (" << a.rows << " kernels)\n";
  ReferenceNumbers ref;
  os << "\nreference results: branch-decrement avg " << ref.hrdwil_avg << "% max "
     << ref.hrdwil_max << "%, ZOLC avg " << ref.zolc_avg << "% max " << ref.zolc_max << "%\n";
  return os.str();
}

}  // namespace zolcsim
