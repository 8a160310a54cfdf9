#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vaxmed/core.hpp"

namespace vaxmed {

inline constexpr int kPlacebo = 0;
inline constexpr int kVaccine = 1;
inline constexpr int kImmunization = 2;

const char* arm_name(int arm);
int arm_from_string(const std::string& s);  // accepts names or 0/1/2; -1 unknown

// One aggregated cell of trial data. `count` is integer-valued for
// ingested trial data; fractional values are allowed so estimators can be
// run on exact population cell probabilities.
struct CountRow {
  int arm = 0;
  std::string stratum;
  std::optional<int> mediator;            // level index; vaccine rows: M1, immunization rows: assigned M2
  int outcome = 0;                        // 1 = failure (event), 0 = success
  std::optional<int> closeout_mediator;   // immunization rows with outcome 0, when closeout was done
  double count = 0.0;
};

struct StratifiedTrialCounts {
  MediatorSupport support;
  std::vector<CountRow> rows;

  double arm_total(int arm) const;
  double arm_failures(int arm) const;
  bool has_arm(int arm) const { return arm_total(arm) > 0; }
  // Pooled stratum proportions across all arms.
  std::map<std::string, double> stratum_weights() const;
  // Empirical Pr[M = m | arm] over the support (levels with no rows get 0).
  std::vector<double> mediator_distribution(int arm) const;
};

ValidationResult validate_counts(const StratifiedTrialCounts& counts,
                                 bool require_integer_counts = true);

}  // namespace vaxmed
