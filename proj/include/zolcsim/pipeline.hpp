#pragma once

#include <string>

#include "zolcsim/analysis.hpp"

namespace zolcsim {

struct AnalysisResult {
  Cfg cfg;
  LoopForest forest;
  TaskGraph tasks;
  ZolcConfig config;
};

// Analysis front end working on any image: annotation-derived forest for
// branchless (ZOLC-form) code, SCC-derived forest cross-checked against the
// directives for compare-branch code.
AnalysisResult analyze_image(const ProgramImage& image, ZolcVariantKind variant);

// Assembles a ZOLC-form source, generates the configuration, splices the
// init sequence in front (one re-assembly pass reaches the address fixed
// point) and re-encodes the first words from the final configuration.
struct PreparedImage {
  ProgramImage image;
  AnalysisResult analysis;
};

PreparedImage prepare_zolc_image(const std::string& source, ZolcVariantKind variant);

}  // namespace zolcsim
