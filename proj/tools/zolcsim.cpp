// zolcsim: assembler, cycle-accurate simulator and benchmark harness for a
// small RISC core with a zero-overhead loop controller.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "zolcsim/bench.hpp"

using namespace zolcsim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SimError(Err::IoError, "cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw SimError(Err::IoError, "cannot write " + path);
  f << text;
}

std::string stem_of(const std::string& path) {
  size_t slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

std::string meta_path_for(const std::string& img_path) {
  size_t dot = img_path.find_last_of('.');
  if (dot != std::string::npos && img_path.substr(dot) == ".img")
    return img_path.substr(0, dot) + ".meta";
  return img_path + ".meta";
}

bool is_user_error(Err kind) {
  switch (kind) {
    case Err::StepBudgetExceeded:
    case Err::MissingLutEntry:
    case Err::ChainBoundExceeded:
    case Err::IllegalOpcode:
    case Err::UnalignedAccess:
    case Err::OutOfBoundsAccess:
      return false;  // runtime simulation failures
    default:
      return true;
  }
}

int cmd_asm(const std::string& source_path, std::string out_path, const std::string& variant) {
  if (out_path.empty()) out_path = stem_of(source_path) + ".img";
  std::string source = read_file(source_path);
  ProgramImage image;
  if (variant == "default") {
    image = assemble(source);
  } else {
    auto kind = zolc_variant_from_name(variant);
    if (!kind) throw SimError(Err::UsageError, "unknown variant " + variant);
    image = prepare_zolc_image(source, *kind).image;
  }
  save_image(image, out_path, meta_path_for(out_path));
  std::cout << out_path << ": " << image.words.size() << " words, "
            << image.loop_annotations.size() << " loops\n";
  return 0;
}

int cmd_run(const std::string& img_path, const std::string& core_name, int branch_penalty,
            int mem_latency, const std::string& trace_path, const std::string& report_path,
            uint64_t max_cycles) {
  auto core = core_from_name(core_name);
  if (!core) throw SimError(Err::UsageError, "unknown core " + core_name);
  core->branch_penalty = branch_penalty;
  core->mem_latency = mem_latency;
  ProgramImage image = load_image(img_path, meta_path_for(img_path));
  if (core->kind != CoreKind::Zolc && image.has_zolc_meta())
    throw SimError(Err::UsageError,
                   "image is prepared for " + image.zolc.variant + "; pick a ZOLC core");
  if (core->kind == CoreKind::Zolc) {
    if (!image.has_zolc_meta())
      throw SimError(Err::UsageError, "image is not prepared for a ZOLC core; "
                                      "assemble with --variant " + core_name);
    // structural validation under the requested capacity class
    analyze_image(image, core->zolc_kind);
    if (image.zolc.variant != core_name)
      throw SimError(Err::UsageError, "image prepared for " + image.zolc.variant +
                                          "; re-assemble with --variant " + core_name);
  }
  SimResult result = simulate_full(image, *core, max_cycles, !trace_path.empty());
  if (!trace_path.empty()) write_file(trace_path, format_trace(result.trace));
  if (!report_path.empty())
    write_file(report_path, report_to_json(result.report, stem_of(img_path), core->name()));
  std::cout << stem_of(img_path) << " cycles=" << result.report.cycles
            << " dyn=" << result.report.dyn_instr << " redirects=" << result.report.redirects
            << "\n";
  return 0;
}

int cmd_bench(const std::string& suite_dir, const std::vector<std::string>& core_names,
              int branch_penalty, int mem_latency, const std::string& csv_path,
              const std::string& json_path) {
  std::vector<CoreVariant> cores;
  for (const auto& name : core_names) {
    auto core = core_from_name(name);
    if (!core) throw SimError(Err::UsageError, "unknown core " + name);
    core->branch_penalty = branch_penalty;
    core->mem_latency = mem_latency;
    cores.push_back(*core);
  }
  SuiteReport report = run_suite(load_suite(suite_dir), cores);
  if (!csv_path.empty()) write_file(csv_path, suite_to_csv(report));
  if (!json_path.empty()) write_file(json_path, suite_to_json(report));
  std::cout << suite_to_table(report);
  return 0;
}

int cmd_analyze(const std::string& source_path, const std::string& variant,
                const std::string& dump, bool as_json) {
  auto kind = zolc_variant_from_name(variant);
  if (!kind) throw SimError(Err::UsageError, "unknown variant " + variant);
  std::string source = read_file(source_path);
  ProgramImage image = assemble(source);
  AnalysisResult analysis = analyze_image(image, *kind);
  if (dump == "tasks") {
    std::cout << (as_json ? dump_taskgraph_json(analysis.tasks, &analysis.config)
                          : dump_taskgraph_text(analysis.tasks));
  } else if (dump == "config") {
    std::cout << (as_json ? dump_config_json(analysis.config)
                          : dump_config_text(analysis.config));
  } else if (dump == "init") {
    for (const auto& in : emit_init_sequence(analysis.config))
      std::cout << format_instruction(in) << "\n";
  } else {
    throw SimError(Err::UsageError, "unknown dump " + dump);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zolcsim: RISC + zero-overhead loop controller simulator"};
  app.require_subcommand(1);

  auto* a = app.add_subcommand("asm", "assemble a .s source into .img/.meta");
  std::string asm_src, asm_out, asm_variant = "default";
  a->add_option("source", asm_src, "assembly source")->required();
  a->add_option("-o,--output", asm_out, "output image path");
  a->add_option("--variant", asm_variant,
                "default|uzolc|zolc-lite|zolc-full (ZOLC variants prepare the image)");

  auto* r = app.add_subcommand("run", "simulate an image on one core");
  std::string run_img, run_core = "default", run_trace, run_report;
  int run_penalty = 2, run_latency = 1;
  uint64_t run_max = kDefaultMaxCycles;
  r->add_option("image", run_img, "image path")->required();
  r->add_option("--core", run_core, "default|hrdwil|uzolc|zolc-lite|zolc-full");
  r->add_option("--branch-penalty", run_penalty, "taken-transfer penalty cycles");
  r->add_option("--mem-latency", run_latency, "LW/SW cost in cycles");
  r->add_option("--trace", run_trace, "write per-instruction trace");
  r->add_option("--report", run_report, "write CycleReport JSON");
  r->add_option("--max-cycles", run_max, "cycle budget");

  auto* b = app.add_subcommand("bench", "run a suite directory across cores");
  std::string bench_dir, bench_csv, bench_json;
  std::vector<std::string> bench_cores = {"default", "hrdwil", "zolc-lite", "zolc-full"};
  int bench_penalty = 2, bench_latency = 1;
  b->add_option("suite", bench_dir, "directory of .bench.json specs")->required();
  b->add_option("--cores", bench_cores, "cores to run");
  b->add_option("--branch-penalty", bench_penalty, "taken-transfer penalty cycles");
  b->add_option("--mem-latency", bench_latency, "LW/SW cost in cycles");
  b->add_option("--csv", bench_csv, "write CSV report");
  b->add_option("--json", bench_json, "write JSON report");

  auto* z = app.add_subcommand("analyze", "dump tasks, config or init sequence");
  std::string an_src, an_variant = "zolc-full", an_dump = "tasks";
  bool an_json = false;
  z->add_option("source", an_src, "assembly source")->required();
  z->add_option("--variant", an_variant, "uzolc|zolc-lite|zolc-full");
  z->add_option("--dump", an_dump, "tasks|config|init");
  z->add_flag("--json", an_json, "machine-readable output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (a->parsed()) return cmd_asm(asm_src, asm_out, asm_variant);
    if (r->parsed())
      return cmd_run(run_img, run_core, run_penalty, run_latency, run_trace, run_report, run_max);
    if (b->parsed())
      return cmd_bench(bench_dir, bench_cores, bench_penalty, bench_latency, bench_csv,
                       bench_json);
    if (z->parsed()) return cmd_analyze(an_src, an_variant, an_dump, an_json);
  } catch (const SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_user_error(e.kind()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
