#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zolcsim {

enum class Err {
  // isa / machine
  IllegalOpcode,
  UnalignedAccess,
  OutOfBoundsAccess,
  StepBudgetExceeded,
  // assembler
  UnknownMnemonic,
  UndefinedLabel,
  DuplicateLabel,
  ImmediateOutOfRange,
  BranchOutOfRange,
  MalformedDirective,
  InfiniteLoopBounds,
  FieldOutOfRange,
  BadImage,
  // analysis
  IndirectJumpInLoopCandidate,
  RegionNotLinearizable,
  AnnotationMismatch,
  // zolc engine / config
  CapacityExceeded,
  VariantUnsupported,
  MissingLutEntry,
  NotInInitMode,
  BadField,
  ChainBoundExceeded,
  // cli / harness
  IoError,
  UsageError,
};

const char* err_name(Err kind);

// Single exception type carrying a machine-checkable kind plus an optional
// (resource, have, limit) payload for capacity errors.
class SimError : public std::runtime_error {
 public:
  SimError(Err kind, std::string message)
      : std::runtime_error(std::string(err_name(kind)) + ": " + message), kind_(kind) {}
  SimError(Err kind, std::string resource, int64_t have, int64_t limit)
      : std::runtime_error(std::string(err_name(kind)) + ": " + resource + " have " +
                           std::to_string(have) + ", limit " + std::to_string(limit)),
        kind_(kind),
        resource_(std::move(resource)),
        have_(have),
        limit_(limit) {}

  Err kind() const { return kind_; }
  const std::string& resource() const { return resource_; }
  int64_t have() const { return have_; }
  int64_t limit() const { return limit_; }

 private:
  Err kind_;
  std::string resource_;
  int64_t have_ = 0;
  int64_t limit_ = 0;
};

}  // namespace zolcsim
