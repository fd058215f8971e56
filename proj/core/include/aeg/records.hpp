#pragma once

#include <string>

namespace aeg {

enum class AffordanceStage { Local, Updated };

/// Four-field context-induced affordance of a receptacle (or context object).
struct AffordanceRecord {
  std::string geometry_position;
  std::string relationship;
  std::string unique_usage;
  std::string fine_grained_category;
  AffordanceStage stage = AffordanceStage::Local;

  bool operator==(const AffordanceRecord&) const = default;
};

/// Carriables are analysed without position or relationships: their local
/// context changes every time they are moved.
struct CarriableAffordance {
  std::string geometry_functionality;
  std::string fine_grained_category;

  bool operator==(const CarriableAffordance&) const = default;
};

struct AreaProfile {
  std::string name;
  std::string description;

  bool operator==(const AreaProfile&) const = default;
};

}  // namespace aeg
