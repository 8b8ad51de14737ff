#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rubblevoid {

enum class Errc {
  EmptyCloud,
  MalformedHeader,
  NonFiniteValue,
  NonPositiveCell,
  InvalidRotation,
  DegenerateCorrespondences,
  NoOverlap,
  AllUnoccupied,
  GridMismatch,
  DuplicateEpoch,
  InvalidSpacing,
  PlaneOutsideGrid,
  SingleLayerStack,
  EmptyFootprint,
  NegativeThickness,
  VoidOutsideFootprint,
  OverlappingVoids,
  InvalidArgument,
  InvalidConfig,
  Io,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-status mapping) can branch without string
/// matching. `record()` is the 1-based record/line index for parse errors,
/// 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::uint64_t record = 0);

  Errc code() const noexcept { return code_; }
  std::uint64_t record() const noexcept { return record_; }

 private:
  Errc code_;
  std::uint64_t record_;
};

[[noreturn]] void fail(Errc code, const std::string& what, std::uint64_t record = 0);

}  // namespace rubblevoid
