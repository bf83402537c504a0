#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zolcsim/isa.hpp"

namespace zolcsim {

enum class Compare : uint8_t { LT = 0, LE = 1, GT = 2, GE = 3, NE = 4 };

const char* compare_name(Compare cmp);
std::optional<Compare> compare_from_name(const std::string& name);
bool compare_holds(Compare cmp, int32_t lhs, int32_t rhs);

// .loop directive payload. Addresses are resolved label positions.
struct LoopAnnotation {
  int loop_id = 0;
  std::string body_start, body_end;        // labels
  uint32_t body_start_addr = 0, body_end_addr = 0;
  uint8_t index_reg = 0;
  int32_t initial = 0, step = 0, final = 0;
  Compare compare = Compare::LT;
  std::vector<std::pair<std::string, std::string>> exits;  // (branch label, target label)
  std::vector<std::string> entries;                        // side-entry labels
};

struct OutputSpec {
  enum class Kind { Reg, Mem } kind = Kind::Reg;
  uint8_t reg = 0;
  uint32_t mem_start = 0;
  uint32_t mem_len = 0;  // bytes
};

// Attached by the ZOLC preparation pipeline (pipeline.hpp); empty otherwise.
struct ZolcMeta {
  std::string variant;        // "uzolc" | "zolc-lite" | "zolc-full"
  uint32_t init_len = 0;      // instructions, occupying words [0, init_len)
  uint32_t field_count = 0;   // stored fields written by the init sequence
  uint32_t start_task = 0;
  uint32_t storage_bytes = 0;
};

struct ProgramImage {
  std::vector<uint32_t> words;
  std::map<std::string, uint32_t> symbols;  // label -> byte address
  std::vector<LoopAnnotation> loop_annotations;
  std::vector<OutputSpec> outputs;
  ZolcMeta zolc;

  uint32_t size_bytes() const { return static_cast<uint32_t>(words.size() * 4); }
  bool has_zolc_meta() const { return !zolc.variant.empty(); }
};

ProgramImage assemble(const std::string& source);

// Inverse of decode; validates field ranges (FieldOutOfRange).
uint32_t encode(const Instruction& in);

// Round-trip stable: assemble(disassemble(image)).words == image.words.
std::string disassemble(const ProgramImage& image);

// .img: magic "ZIMG", version byte 1, u32 word count, little-endian words.
// .meta: line-oriented "key = value" records (symbols, loops, outputs, zolc).
void save_image(const ProgramImage& image, const std::string& img_path,
                const std::string& meta_path);
ProgramImage load_image(const std::string& img_path, const std::string& meta_path);

// Closed-form body iteration count under do-while semantics (first iteration
// entered unconditionally, index updated at body end). Throws
// InfiniteLoopBounds when the sweep never terminates.
uint64_t loop_trip_count(int32_t initial, int32_t step, int32_t final, Compare cmp);

}  // namespace zolcsim
