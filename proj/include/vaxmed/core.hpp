#pragma once

#include <string>
#include <vector>

#include "vaxmed/errors.hpp"

namespace vaxmed {

// Serialized name of the below-detection-limit mediator level 0*.
inline constexpr const char* kUndetectable = "neg";

// Hard cap on mediator support size; keeps exact enumeration desk-scale.
inline constexpr int kMaxSupportLevels = 16;

// Tolerance for probability-mass checks before renormalization.
inline constexpr double kMassTolerance = 1e-12;

// Ordered mediator support. Level 0 is always the undetectable level 0*,
// serialized as "neg"; detectable levels follow in increasing order.
class MediatorSupport {
 public:
  MediatorSupport() : levels_{kUndetectable} {}
  explicit MediatorSupport(std::vector<std::string> levels);

  // {"neg", "1"} — the binary detectable/undetectable support.
  static MediatorSupport binary();
  // {"neg", "1", ..., "<detectable_count>"}
  static MediatorSupport with_detectable(int detectable_count);

  int size() const { return static_cast<int>(levels_.size()); }
  const std::string& level(int i) const { return levels_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& levels() const { return levels_; }
  // Index of a level name, -1 if absent.
  int index_of(const std::string& name) const;

  bool operator==(const MediatorSupport& other) const { return levels_ == other.levels_; }
  bool operator!=(const MediatorSupport& other) const { return !(*this == other); }

 private:
  std::vector<std::string> levels_;
};

// One violated invariant; violations are data, not exceptions.
struct InvariantViolation {
  std::string invariant;  // short name of the violated rule
  std::string subject;    // offending key / cell / atom
  double magnitude = 0.0; // size of the violation where meaningful
};

using ValidationResult = std::vector<InvariantViolation>;

// Joins violations into a one-line summary for error messages.
std::string describe(const ValidationResult& violations);

}  // namespace vaxmed
