#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vaxmed/counts.hpp"
#include "vaxmed/effects.hpp"

namespace vaxmed {

// Known randomization distribution for the assigned mediator M2 in the
// passive immunization arm.
struct AssignmentDesign {
  MediatorSupport support;
  std::vector<double> pmf;

  // Validates nonnegativity and total mass, renormalizes once. Strict
  // positivity over the support is checked by the operations whose
  // identification needs it (a degenerate design is legal for the binary
  // three-arm trial, where infusion simply sets M = 1).
  static AssignmentDesign checked(MediatorSupport support, std::vector<double> pmf);
};

ValidationResult validate_design(const AssignmentDesign& design, bool require_strictly_positive);

// Per-level controlled efficacy curves plus the M1 weights used to
// aggregate them.
struct CurveTable {
  MediatorSupport support;
  std::vector<CurveRow> rows;
  std::vector<std::string> warnings;
};

ValidationResult validate_curves(const CurveTable& curves);

// --- three-arm trial, binary mediator, perfect baseline predictor --------

struct ThreeArmBinaryResult {
  double ey0m1 = 0;  // identified E[Y_{0M1}]
  ReportValue theta_t, theta_ia, lambda_a;
  double misclassification_rate = 0;  // predictor vs observed vaccine-arm M1
  std::vector<std::string> warnings;
};

// predictor maps every stratum to its predicted M1 (0 or 1). The failure
// rate among immunization participants in predicted-responder strata and
// among placebo participants in predicted-non-responder strata combine to
// E[Y_{0M1}].
ThreeArmBinaryResult three_arm_binary_identify(const StratifiedTrialCounts& counts,
                                               const std::map<std::string, int>& predictor);

// --- controlled vaccine / protective efficacy curves ---------------------

// theta_c(m) from the vaccine vs placebo comparison; theta_ia_m(m) from
// the immunization arm when present (requires the assignment design).
// Weights are the vaccine-arm empirical Pr[M1 = m].
CurveTable cve_cpe_curves(const StratifiedTrialCounts& counts,
                          const std::optional<AssignmentDesign>& design);

// Aggregates a curve table: theta_t and theta_ia as weighted sums, the
// overall lambda_a, and per-row lambda_a(m) where theta_c(m) != 1.
EffectReport combine_curves(const CurveTable& curves);

// --- three-arm trial with closeout vaccination ---------------------------

struct CloseoutResult {
  double ey2m1 = 0;  // identified E[Y_{2M1}] = E[Y_{0M1}]
  ReportValue theta_t, theta_ia, lambda_a;
  std::vector<std::string> warnings;
};

CloseoutResult closeout_identify(const StratifiedTrialCounts& counts,
                                 const AssignmentDesign& design);

// --- combining a VP trial with an IP trial --------------------------------

enum class TwoTrialApproach { quota, standardize };

struct TwoTrialResult {
  TwoTrialApproach approach = TwoTrialApproach::standardize;
  CurveTable curves;              // standardize: per-level rows; quota: empty
  ReportValue theta_ia;           // quota: the direct IP ratio; standardize: aggregated
  ReportValue theta_t, lambda_a;  // from the VP trial / aggregation
  double tv_distance = 0;         // stratum-distribution imbalance between the trials
  std::vector<std::string> warnings;
};

TwoTrialResult two_trial_standardize(const StratifiedTrialCounts& vp,
                                     const StratifiedTrialCounts& ip, TwoTrialApproach approach);

}  // namespace vaxmed
