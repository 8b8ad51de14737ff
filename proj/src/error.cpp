#include "rubblevoid/error.hpp"

namespace rubblevoid {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyCloud: return "EmptyCloud";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::NonPositiveCell: return "NonPositiveCell";
    case Errc::InvalidRotation: return "InvalidRotation";
    case Errc::DegenerateCorrespondences: return "DegenerateCorrespondences";
    case Errc::NoOverlap: return "NoOverlap";
    case Errc::AllUnoccupied: return "AllUnoccupied";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::DuplicateEpoch: return "DuplicateEpoch";
    case Errc::InvalidSpacing: return "InvalidSpacing";
    case Errc::PlaneOutsideGrid: return "PlaneOutsideGrid";
    case Errc::SingleLayerStack: return "SingleLayerStack";
    case Errc::EmptyFootprint: return "EmptyFootprint";
    case Errc::NegativeThickness: return "NegativeThickness";
    case Errc::VoidOutsideFootprint: return "VoidOutsideFootprint";
    case Errc::OverlappingVoids: return "OverlappingVoids";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what, std::uint64_t record)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), record_(record) {}

void fail(Errc code, const std::string& what, std::uint64_t record) {
  throw Error(code, what, record);
}

}  // namespace rubblevoid
