#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vaxmed/counts.hpp"
#include "vaxmed/effects.hpp"
#include "vaxmed/popmodel.hpp"

namespace vaxmed {

// Observed-data ingredients of the mediation formula for one stratum:
// outcome means per (arm, mediator level) and per-arm mediator
// distributions. Absent means are legal until an estimator needs them.
struct StratumData {
  std::string id;
  double weight = 0.0;
  std::array<std::map<int, double>, 3> outcome_mean;                 // [arm][level] -> E[Y|A,M,X]
  std::array<std::optional<std::vector<double>>, 3> mediator_dist;   // [arm] -> pmf over support
};

struct StratifiedConditionalMeans {
  MediatorSupport support;
  std::vector<StratumData> strata;
};

ValidationResult validate_means(const StratifiedConditionalMeans& data);

// Sum_x Pr[X=x] Sum_m E[Y|A=a,M=m,X=x] Pr[M=m|A=a',X=x]. Throws
// PreconditionError naming the first missing (x, m) cells (a PosM
// violation for arm a). Strata with weight 0 are dropped first.
double mediation_formula(const StratifiedConditionalMeans& data, int outcome_arm,
                         int mediator_arm);

// E[Y_{1M0}] when the placebo arm has no detectable antibody: the
// weighted vaccinated-undetectable mean Sum_x E[Y|A=1,M=0*,X=x] Pr[X=x].
double identify_ey1m0_undetectable(const StratifiedConditionalMeans& data);

// The six aggregate type proportions identified under the independence
// model. Dots in the names stand for summed-over indices.
struct PiComponents {
  double p00_0000 = 0;  // pi^00_0000
  double p00_00d1 = 0;  // pi^00_{00.1}
  double p00_d1d1 = 0;  // pi^00_{.1.1}
  double p10_0000 = 0;  // pi^10_0000
  double p10_0dd1 = 0;  // pi^10_{0..1}
  double p10_1111 = 0;  // pi^10_1111
};

struct Theorem2Result {
  PiComponents pi;
  double ey1m0 = 0;      // phi_vnf / phi_vn
  ReportValue theta_is;  // phi_vf * phi_vn / phi_vnf
  ReportValue lambda_s;
  std::vector<std::string> warnings;
};

// Closed-form identification from the observable margins under the base
// model plus potential-outcome/potential-mediator independence. Negative
// identified masses within -1e-9 are clamped with a warning.
Theorem2Result theorem2_identify(const PhiTable& phi);

struct ConstraintCheck {
  std::string constraint;
  std::optional<double> lhs, rhs;
  bool evaluable = false;
  bool satisfied = false;
};

// The two observable inequalities implied by the independence model:
// phi_vnf/phi_vn <= phi_pnf and phi_vaf/phi_va <= phi_pnf.
std::vector<ConstraintCheck> check_testable_constraints(const PhiTable& phi);

// --- derivation from trial counts ---------------------------------------

struct EstimateOptions {
  // Adds 0.5 to both outcome cells of every observed (arm, stratum,
  // mediator) group before taking proportions. Off by default; the
  // population estimands need no correction.
  bool continuity_correction = false;
};

PhiTable phi_from_counts(const StratifiedTrialCounts& counts, const EstimateOptions& opts = {});

StratifiedConditionalMeans conditional_means_from_counts(const StratifiedTrialCounts& counts,
                                                         const EstimateOptions& opts = {});

// The identification-layer analysis of a two-arm (or more) trial:
// pooled margins, the closed-form identification, constraint checks, and
// the effect report with e10 from the stratified undetectable-arm mean.
struct IdentificationReport {
  PhiTable phi;
  Theorem2Result theorem2;
  std::vector<ConstraintCheck> constraints;
  double ey1m0 = 0;  // stratified version (equals theorem2.ey1m0 for one stratum)
  EffectReport effects;
  std::vector<std::string> warnings;
};

IdentificationReport estimate_from_counts(const StratifiedTrialCounts& counts,
                                          const EstimateOptions& opts = {});

}  // namespace vaxmed
