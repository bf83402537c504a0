#include "zolcsim/pipeline.hpp"

#include <sstream>

namespace zolcsim {

AnalysisResult analyze_image(const ProgramImage& image, ZolcVariantKind variant) {
  AnalysisResult out;
  out.cfg = build_cfg(image);
  LoopForest scc = find_loops(out.cfg);
  if (!scc.loops.empty()) {
    // compare-branch form: the directives must agree with the detected loops
    cross_check(image, scc);
    out.forest = std::move(scc);
  } else {
    out.forest = forest_from_annotations(image, out.cfg);
  }
  out.tasks = extract_tasks(out.cfg, out.forest);
  out.config = generate_zolc_config(out.tasks, image, out.forest, variant);
  return out;
}

namespace {

std::string init_sequence_text(const std::vector<Instruction>& seq) {
  std::ostringstream os;
  for (const auto& in : seq) os << "\t" << format_instruction(in) << "\n";
  return os.str();
}

void require_branchless_loops(const ProgramImage& image, const Cfg& cfg) {
  LoopForest scc = find_loops(cfg);
  if (!scc.loops.empty())
    throw SimError(Err::UsageError,
                   "source still carries software loop branches; strip the compare/branch "
                   "bookkeeping before preparing a ZOLC image");
  for (const auto& blk : cfg.blocks)
    if (blk.unanalyzable)
      throw SimError(Err::UsageError, "JR is not supported in ZOLC-form programs");
  (void)image;
}

}  // namespace

PreparedImage prepare_zolc_image(const std::string& source, ZolcVariantKind variant) {
  ProgramImage first = assemble(source);
  {
    Cfg cfg = build_cfg(first);
    require_branchless_loops(first, cfg);
    LoopForest forest = forest_from_annotations(first, cfg);
    TaskGraph tg = extract_tasks(cfg, forest);
    ZolcConfig config = generate_zolc_config(tg, first, forest, variant);
    std::vector<Instruction> init = emit_init_sequence(config);

    std::string spliced = init_sequence_text(init) + source;
    PreparedImage out;
    out.image = assemble(spliced);
    out.analysis = analyze_image(out.image, variant);
    std::vector<Instruction> final_init = emit_init_sequence(out.analysis.config);
    if (final_init.size() != init.size())
      throw SimError(Err::BadImage, "init sequence length did not reach a fixed point");
    for (size_t i = 0; i < final_init.size(); ++i)
      out.image.words[i] = encode(final_init[i]);

    // the special instruction sequence must stay outside every loop nest
    uint32_t init_end = static_cast<uint32_t>(final_init.size() * 4);
    for (const auto& ann : out.image.loop_annotations)
      if (ann.body_start_addr < init_end)
        throw SimError(Err::BadImage, "loop body overlaps the init sequence");
    for (const auto& ann : out.image.loop_annotations)
      for (uint32_t a = ann.body_start_addr; a <= ann.body_end_addr; a += 4)
        if (decode(out.image.words[a / 4]).opcode == Opcode::ZCFG)
          throw SimError(Err::BadImage, "ZCFG inside loop body at " + std::to_string(a));

    out.image.zolc.variant = zolc_variant_name(variant);
    out.image.zolc.init_len = static_cast<uint32_t>(final_init.size());
    out.image.zolc.field_count = out.analysis.config.stored_field_count();
    out.image.zolc.start_task = out.analysis.config.start_task;
    out.image.zolc.storage_bytes = storage_bytes(variant);
    return out;
  }
}

}  // namespace zolcsim
