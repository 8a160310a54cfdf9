#include "vaxmed/designs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace vaxmed {

namespace {

struct Cell {
  double fail = 0, success = 0;
  double total() const { return fail + success; }
};

// (stratum, mediator-or--1) -> outcome cell, one map per arm.
struct ArmCells {
  std::map<std::pair<std::string, int>, Cell> cells;
  double fail = 0, total = 0;

  double failure_rate() const { return total > 0 ? fail / total : 0.0; }
};

std::array<ArmCells, 3> split_by_arm(const StratifiedTrialCounts& counts) {
  std::array<ArmCells, 3> arms;
  for (const auto& r : counts.rows) {
    if (r.count <= 0) continue;
    auto& arm = arms[static_cast<std::size_t>(r.arm)];
    auto& cell = arm.cells[{r.stratum, r.mediator ? *r.mediator : -1}];
    (r.outcome == 1 ? cell.fail : cell.success) += r.count;
    if (r.outcome == 1) arm.fail += r.count;
    arm.total += r.count;
  }
  return arms;
}

void require_valid_counts(const StratifiedTrialCounts& counts) {
  auto violations = validate_counts(counts, false);
  if (!violations.empty()) {
    throw ValidationError("invalid counts: " + describe(violations));
  }
}

void require_arm(const StratifiedTrialCounts& counts, int arm) {
  if (!counts.has_arm(arm)) {
    throw PreconditionError(std::string("no participants in the ") + arm_name(arm) + " arm");
  }
}

ReportValue design_ratio(double num, double den, const char* den_name) {
  if (den <= 0.0) return ReportValue::undefined(std::string(den_name) + " = 0");
  return ReportValue::of(num / den, Provenance::identified_design);
}

ReportValue design_log_share(const ReportValue& theta_i, const ReportValue& theta_t) {
  if (!theta_i.defined()) return ReportValue::undefined(theta_i.reason);
  if (!theta_t.defined()) return ReportValue::undefined(theta_t.reason);
  if (*theta_i.value <= 0.0) return ReportValue::undefined("indirect ratio effect is 0");
  if (*theta_t.value <= 0.0) return ReportValue::undefined("total ratio effect is 0");
  if (*theta_t.value == 1.0) return ReportValue::undefined("no total effect (theta_t = 1)");
  return ReportValue::of(std::log(*theta_i.value) / std::log(*theta_t.value),
                         Provenance::identified_design);
}

// Chi-square-style imbalance between realized M2 assignments and the design
// pmf; reported, never enforced.
std::string design_balance_note(const std::map<int, double>& assigned, double total,
                                const AssignmentDesign& design) {
  double chi2 = 0;
  for (int m = 0; m < design.support.size(); ++m) {
    double expected = total * design.pmf[static_cast<std::size_t>(m)];
    if (expected <= 0) continue;
    auto it = assigned.find(m);
    double observed = it == assigned.end() ? 0.0 : it->second;
    chi2 += (observed - expected) * (observed - expected) / expected;
  }
  std::ostringstream os;
  os << "M2 assignment balance chi-square = " << chi2 << " on "
     << std::max(0, design.support.size() - 1) << " df";
  return os.str();
}

}  // namespace

AssignmentDesign AssignmentDesign::checked(MediatorSupport support, std::vector<double> pmf) {
  AssignmentDesign d;
  d.support = std::move(support);
  d.pmf = std::move(pmf);
  auto violations = validate_design(d, false);
  if (!violations.empty()) {
    throw ValidationError("invalid assignment design: " + describe(violations));
  }
  double mass = 0;
  for (double p : d.pmf) mass += p;
  for (double& p : d.pmf) p /= mass;
  return d;
}

ValidationResult validate_design(const AssignmentDesign& design, bool require_strictly_positive) {
  ValidationResult out;
  if (static_cast<int>(design.pmf.size()) != design.support.size()) {
    out.push_back({"design pmf length != support size", "", 0});
    return out;
  }
  double mass = 0;
  for (int m = 0; m < design.support.size(); ++m) {
    double p = design.pmf[static_cast<std::size_t>(m)];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      out.push_back({"negative design probability", design.support.level(m), p});
    }
    if (require_strictly_positive && p <= 0.0) {
      out.push_back({"design probability 0 at a support level", design.support.level(m), p});
    }
    mass += p;
  }
  if (std::fabs(mass - 1.0) > kMassTolerance) {
    out.push_back({"design mass " + std::to_string(mass) + " != 1", "", mass - 1.0});
  }
  return out;
}

ValidationResult validate_curves(const CurveTable& curves) {
  ValidationResult out;
  double wsum = 0;
  for (const auto& row : curves.rows) {
    std::string subject = "m=" + (row.m >= 0 && row.m < curves.support.size()
                                      ? curves.support.level(row.m)
                                      : std::to_string(row.m));
    if (row.m < 0 || row.m >= curves.support.size()) {
      out.push_back({"curve level outside support", subject, double(row.m)});
    }
    if (!(row.weight >= 0.0)) out.push_back({"negative weight", subject, row.weight});
    wsum += row.weight;
    if (row.theta_c && !(*row.theta_c > 0.0)) {
      out.push_back({"theta_c not positive", subject, *row.theta_c});
    }
    if (row.theta_ia_m && !(*row.theta_ia_m > 0.0)) {
      out.push_back({"theta_ia not positive", subject, *row.theta_ia_m});
    }
  }
  if (std::fabs(wsum - 1.0) > kMassTolerance) {
    out.push_back({"weights mass " + std::to_string(wsum) + " != 1", "", wsum - 1.0});
  }
  return out;
}

ThreeArmBinaryResult three_arm_binary_identify(const StratifiedTrialCounts& counts,
                                               const std::map<std::string, int>& predictor) {
  require_valid_counts(counts);
  if (counts.support.size() != 2) {
    throw PreconditionError("the perfect-predictor design needs a binary mediator support");
  }
  require_arm(counts, kPlacebo);
  require_arm(counts, kVaccine);
  require_arm(counts, kImmunization);

  auto arms = split_by_arm(counts);
  auto weights = counts.stratum_weights();
  for (const auto& [stratum, _] : weights) {
    auto it = predictor.find(stratum);
    if (it == predictor.end()) {
      throw PreconditionError("predictor undefined on observed stratum \"" + stratum + "\"");
    }
    if (it->second != 0 && it->second != 1) {
      throw PreconditionError("predictor value for stratum \"" + stratum + "\" must be 0 or 1");
    }
  }

  double pr_pred1 = 0;
  for (const auto& [stratum, w] : weights) {
    if (predictor.at(stratum) == 1) pr_pred1 += w;
  }
  double pr_pred0 = 1.0 - pr_pred1;

  auto class_rate = [&](int arm, int predicted, const char* role) {
    double fail = 0, total = 0;
    for (const auto& [key, cell] : arms[static_cast<std::size_t>(arm)].cells) {
      if (predictor.at(key.first) != predicted) continue;
      fail += cell.fail;
      total += cell.total();
    }
    if (total <= 0) {
      throw PreconditionError(std::string("positivity: no ") + arm_name(arm) +
                              " participants in predicted M1=" + std::to_string(predicted) +
                              " strata (" + role + ")");
    }
    return fail / total;
  };

  ThreeArmBinaryResult r;
  double term1 = pr_pred1 > 0 ? pr_pred1 * class_rate(kImmunization, 1, "responder term") : 0.0;
  double term0 = pr_pred0 > 0 ? pr_pred0 * class_rate(kPlacebo, 0, "non-responder term") : 0.0;
  r.ey0m1 = term1 + term0;

  // Within the vaccine arm the predictor is checkable against observed M1.
  double mismatched = 0, vaccine_total = 0;
  for (const auto& [key, cell] : arms[kVaccine].cells) {
    vaccine_total += cell.total();
    if (key.second >= 0 && key.second != predictor.at(key.first)) mismatched += cell.total();
  }
  r.misclassification_rate = vaccine_total > 0 ? mismatched / vaccine_total : 0.0;
  if (r.misclassification_rate > 0) {
    std::ostringstream os;
    os << "predictor disagrees with observed vaccine-arm M1 at rate " << r.misclassification_rate
       << "; the perfect-predictor assumption looks violated";
    r.warnings.push_back(os.str());
  }

  double e00 = arms[kPlacebo].failure_rate();
  double e11 = arms[kVaccine].failure_rate();
  r.theta_t = design_ratio(e11, e00, "placebo failure rate");
  r.theta_ia = design_ratio(r.ey0m1, e00, "placebo failure rate");
  r.lambda_a = design_log_share(r.theta_ia, r.theta_t);
  return r;
}

CurveTable cve_cpe_curves(const StratifiedTrialCounts& counts,
                          const std::optional<AssignmentDesign>& design) {
  require_valid_counts(counts);
  require_arm(counts, kPlacebo);
  require_arm(counts, kVaccine);
  if (design && design->support != counts.support) {
    throw ValidationError("assignment design support differs from the counts support");
  }
  if (design && !counts.has_arm(kImmunization)) {
    throw PreconditionError("assignment design given but no immunization arm in the data");
  }

  auto arms = split_by_arm(counts);
  CurveTable out;
  out.support = counts.support;

  // Strata carrying weight; PosM1 needs every (x, m) vaccine cell filled.
  std::set<std::string> strata;
  for (const auto& [key, _] : arms[kVaccine].cells) strata.insert(key.first);
  for (const auto& [key, _] : arms[kPlacebo].cells) strata.insert(key.first);

  std::vector<std::string> empty_cells;
  for (const auto& x : strata) {
    for (int m = 0; m < counts.support.size(); ++m) {
      auto it = arms[kVaccine].cells.find({x, m});
      if (it == arms[kVaccine].cells.end() || it->second.total() <= 0) {
        empty_cells.push_back("(x=" + x + ", m=" + counts.support.level(m) + ")");
      }
    }
  }
  if (!empty_cells.empty()) {
    std::ostringstream os;
    os << "PosM1 violation: empty vaccine-arm cells";
    for (const auto& c : empty_cells) os << " " << c;
    throw PreconditionError(os.str());
  }

  // E[Y_{00}]: placebo failures at undetectable antibody.
  double p_fail = 0, p_total = 0, p_detectable = 0;
  for (const auto& [key, cell] : arms[kPlacebo].cells) {
    if (key.second >= 1) {
      p_detectable += cell.total();
      continue;
    }
    p_fail += cell.fail;
    p_total += cell.total();
  }
  if (p_detectable > 0) {
    out.warnings.push_back("placebo arm has detectable-antibody participants; they are excluded "
                           "from the E[Y_00] denominator");
  }
  if (p_total <= 0) throw PreconditionError("no undetectable-antibody placebo participants");
  double e00 = p_fail / p_total;
  if (e00 <= 0.0) throw PreconditionError("placebo failure rate is 0; ratio effects undefined");

  std::vector<double> m1_weights = counts.mediator_distribution(kVaccine);

  for (int m = 0; m < counts.support.size(); ++m) {
    CurveRow row;
    row.m = m;
    row.weight = m1_weights[static_cast<std::size_t>(m)];
    // Sum_x E[Y | A=1, M1=m, X=x] Pr[X=x | M1=m].
    double level_total = 0;
    for (const auto& x : strata) {
      level_total += arms[kVaccine].cells.at({x, m}).total();
    }
    double mean = 0;
    for (const auto& x : strata) {
      const auto& cell = arms[kVaccine].cells.at({x, m});
      mean += (cell.fail / cell.total()) * (cell.total() / level_total);
    }
    row.theta_c = mean / e00;
    out.rows.push_back(row);
  }

  if (design && counts.has_arm(kImmunization)) {
    auto strict = validate_design(*design, true);
    if (!strict.empty()) {
      throw PreconditionError("assignment design violates design positivity: " + describe(strict));
    }
    std::map<int, double> assigned;  // level -> participants
    std::map<int, double> assigned_fail;
    for (const auto& [key, cell] : arms[kImmunization].cells) {
      if (key.second < 0) continue;
      assigned[key.second] += cell.total();
      assigned_fail[key.second] += cell.fail;
    }
    std::vector<std::string> missing;
    for (int m = 0; m < counts.support.size(); ++m) {
      if (assigned.find(m) == assigned.end() || assigned[m] <= 0) {
        missing.push_back(counts.support.level(m));
      }
    }
    if (!missing.empty()) {
      std::ostringstream os;
      os << "design violation: no M2 assignments at levels";
      for (const auto& l : missing) os << " " << l;
      throw PreconditionError(os.str());
    }
    for (auto& row : out.rows) {
      row.theta_ia_m = (assigned_fail[row.m] / assigned[row.m]) / e00;
    }
    out.warnings.push_back(
        design_balance_note(assigned, arms[kImmunization].total, *design));
  } else if (counts.has_arm(kImmunization)) {
    out.warnings.push_back(
        "immunization arm present but no assignment design given; CPE curves skipped");
  }
  return out;
}

EffectReport combine_curves(const CurveTable& curves) {
  auto violations = validate_curves(curves);
  if (!violations.empty()) {
    throw ValidationError("invalid curve table: " + describe(violations));
  }
  EffectReport report;
  report.warnings = curves.warnings;

  double theta_t = 0;
  bool all_c = true, all_ia = true;
  double theta_ia = 0;
  for (const auto& row : curves.rows) {
    if (!row.theta_c) {
      all_c = false;
      continue;
    }
    theta_t += *row.theta_c * row.weight;
  }
  for (const auto& row : curves.rows) {
    if (!row.theta_ia_m) {
      all_ia = false;
      continue;
    }
    theta_ia += *row.theta_ia_m * row.weight;
  }
  if (!all_c) {
    throw PreconditionError("curve table is missing theta_c entries; cannot aggregate");
  }

  report.theta_t = ReportValue::of(theta_t, Provenance::identified_design);
  report.ve = ReportValue::of(1.0 - theta_t, Provenance::identified_design);
  report.theta_ia = all_ia ? ReportValue::of(theta_ia, Provenance::identified_design)
                           : ReportValue::undefined("incomplete theta_ia(m) column");
  report.lambda_a = design_log_share(report.theta_ia, report.theta_t);
  if (report.theta_ia.defined() && *report.theta_ia.value > 0.0) {
    report.theta_da = ReportValue::of(theta_t / theta_ia, Provenance::identified_design);
  } else {
    report.theta_da = ReportValue::undefined("theta_ia unavailable");
  }
  const char* unidentified = "not identified by curve aggregation";
  report.theta_is = ReportValue::undefined(unidentified);
  report.theta_ds = ReportValue::undefined(unidentified);
  report.xi = ReportValue::undefined(unidentified);
  report.lambda_s = ReportValue::undefined(unidentified);

  report.curves = curves.rows;
  for (auto& row : report.curves) {
    row.lambda_a_m.reset();
    if (!row.theta_c || !row.theta_ia_m) continue;
    if (*row.theta_c == 1.0) continue;  // log denominator 0: row stays undefined
    if (*row.theta_c <= 0.0 || *row.theta_ia_m <= 0.0) continue;
    row.lambda_a_m = std::log(*row.theta_ia_m) / std::log(*row.theta_c);
  }
  return report;
}

CloseoutResult closeout_identify(const StratifiedTrialCounts& counts,
                                 const AssignmentDesign& design) {
  require_valid_counts(counts);
  require_arm(counts, kPlacebo);
  require_arm(counts, kVaccine);
  require_arm(counts, kImmunization);
  if (design.support != counts.support) {
    throw ValidationError("assignment design support differs from the counts support");
  }
  auto strict = validate_design(design, true);
  if (!strict.empty()) {
    throw PreconditionError("assignment design violates design positivity: " + describe(strict));
  }

  // Immunization-arm tallies per assigned level: totals, survivors, and the
  // closeout M1 distribution among survivors.
  const int n = counts.support.size();
  std::vector<double> total(n, 0), survivors(n, 0), closeout_match(n, 0);
  std::vector<double> closeout_measured(n, 0);
  for (const auto& r : counts.rows) {
    if (r.arm != kImmunization || r.count <= 0) continue;
    int m2 = *r.mediator;
    total[static_cast<std::size_t>(m2)] += r.count;
    if (r.outcome == 0) {
      survivors[static_cast<std::size_t>(m2)] += r.count;
      if (r.closeout_mediator) {
        closeout_measured[static_cast<std::size_t>(m2)] += r.count;
        if (*r.closeout_mediator == m2) closeout_match[static_cast<std::size_t>(m2)] += r.count;
      }
    }
  }

  std::vector<std::string> missing_levels, missing_closeout;
  for (int m = 0; m < n; ++m) {
    if (total[static_cast<std::size_t>(m)] <= 0) missing_levels.push_back(counts.support.level(m));
    if (survivors[static_cast<std::size_t>(m)] >
        closeout_measured[static_cast<std::size_t>(m)]) {
      missing_closeout.push_back(counts.support.level(m));
    }
  }
  if (!missing_levels.empty()) {
    std::ostringstream os;
    os << "positivity: no M2 assignments at levels";
    for (const auto& l : missing_levels) os << " " << l;
    throw PreconditionError(os.str());
  }
  if (!missing_closeout.empty()) {
    std::ostringstream os;
    os << "closeout mediator missing for event-free immunization participants at M2 levels";
    for (const auto& l : missing_closeout) os << " " << l;
    throw ValidationError(os.str());
  }

  CloseoutResult r;
  std::vector<double> pr_m1 = counts.mediator_distribution(kVaccine);
  double ey2m1 = 0;
  for (int m = 0; m < n; ++m) {
    double pr_surv = survivors[static_cast<std::size_t>(m)] / total[static_cast<std::size_t>(m)];
    double pr_m1_given_surv =
        survivors[static_cast<std::size_t>(m)] > 0
            ? closeout_match[static_cast<std::size_t>(m)] / survivors[static_cast<std::size_t>(m)]
            : 0.0;
    ey2m1 += pr_m1[static_cast<std::size_t>(m)] - pr_m1_given_surv * pr_surv;
  }
  if (ey2m1 < 0.0 || ey2m1 > 1.0) {
    std::ostringstream os;
    os << "identified E[Y_{2M1}] = " << ey2m1 << " outside [0,1]; clamped (sampling noise)";
    r.warnings.push_back(os.str());
    ey2m1 = std::clamp(ey2m1, 0.0, 1.0);
  }
  r.ey2m1 = ey2m1;

  std::map<int, double> assigned;
  for (int m = 0; m < n; ++m) assigned[m] = total[static_cast<std::size_t>(m)];
  double imm_total = 0;
  for (int m = 0; m < n; ++m) imm_total += total[static_cast<std::size_t>(m)];
  r.warnings.push_back(design_balance_note(assigned, imm_total, design));

  auto arms = split_by_arm(counts);
  double e00 = arms[kPlacebo].failure_rate();
  double e11 = arms[kVaccine].failure_rate();
  r.theta_t = design_ratio(e11, e00, "placebo failure rate");
  r.theta_ia = design_ratio(r.ey2m1, e00, "placebo failure rate");
  r.lambda_a = design_log_share(r.theta_ia, r.theta_t);
  return r;
}

TwoTrialResult two_trial_standardize(const StratifiedTrialCounts& vp,
                                     const StratifiedTrialCounts& ip, TwoTrialApproach approach) {
  require_valid_counts(vp);
  require_valid_counts(ip);
  if (vp.support != ip.support) {
    throw ValidationError("the two trials use different mediator supports");
  }
  require_arm(vp, kVaccine);
  require_arm(vp, kPlacebo);
  require_arm(ip, kImmunization);
  require_arm(ip, kPlacebo);

  auto w_vp = vp.stratum_weights();
  auto w_ip = ip.stratum_weights();
  bool overlap = false;
  for (const auto& [x, _] : w_vp) {
    if (w_ip.count(x)) overlap = true;
  }
  if (!overlap) {
    throw ValidationError("disjoint stratum codings between the two trials");
  }

  TwoTrialResult r;
  r.approach = approach;
  r.curves.support = vp.support;

  double tv = 0;
  std::set<std::string> all_strata;
  for (const auto& [x, _] : w_vp) all_strata.insert(x);
  for (const auto& [x, _] : w_ip) all_strata.insert(x);
  for (const auto& x : all_strata) {
    double a = w_vp.count(x) ? w_vp.at(x) : 0.0;
    double b = w_ip.count(x) ? w_ip.at(x) : 0.0;
    tv += std::fabs(a - b);
  }
  r.tv_distance = 0.5 * tv;

  auto vp_arms = split_by_arm(vp);
  auto ip_arms = split_by_arm(ip);

  if (approach == TwoTrialApproach::quota) {
    double e2 = ip_arms[kImmunization].failure_rate();
    double e0 = ip_arms[kPlacebo].failure_rate();
    r.theta_ia = design_ratio(e2, e0, "IP placebo failure rate");
    double vp_e11 = vp_arms[kVaccine].failure_rate();
    double vp_e00 = vp_arms[kPlacebo].failure_rate();
    r.theta_t = design_ratio(vp_e11, vp_e00, "VP placebo failure rate");
    r.lambda_a = design_log_share(r.theta_ia, r.theta_t);
    std::ostringstream os;
    os << "quota approach: covariate balance (total variation) between trials = " << r.tv_distance;
    r.warnings.push_back(os.str());
    return r;
  }

  // Standardization to the VP trial's stratum distribution.
  double vp_e00 = vp_arms[kPlacebo].failure_rate();
  if (vp_e00 <= 0.0) throw PreconditionError("VP placebo failure rate is 0");

  std::vector<std::string> missing;
  auto cell_mean = [&](const ArmCells& arm, const std::string& x, int m,
                       const char* what) -> double {
    auto it = arm.cells.find({x, m});
    if (it == arm.cells.end() || it->second.total() <= 0) {
      missing.push_back(std::string("(") + what + ": x=" + x +
                        (m >= 0 ? ", m=" + vp.support.level(m) : "") + ")");
      return 0.0;
    }
    return it->second.fail / it->second.total();
  };

  // IP placebo is pooled over mediator levels within stratum.
  std::map<std::string, Cell> ip_placebo;
  for (const auto& [key, cell] : ip_arms[kPlacebo].cells) {
    auto& agg = ip_placebo[key.first];
    agg.fail += cell.fail;
    agg.success += cell.success;
  }

  double ip_e00_std = 0;
  for (const auto& [x, wx] : w_vp) {
    if (wx <= 0) continue;
    auto it = ip_placebo.find(x);
    if (it == ip_placebo.end() || it->second.total() <= 0) {
      missing.push_back("(IP placebo: x=" + x + ")");
      continue;
    }
    ip_e00_std += wx * (it->second.fail / it->second.total());
  }

  std::vector<double> m1_weights = vp.mediator_distribution(kVaccine);
  for (int m = 0; m < vp.support.size(); ++m) {
    CurveRow row;
    row.m = m;
    row.weight = m1_weights[static_cast<std::size_t>(m)];
    double num_c = 0, num_ia = 0;
    for (const auto& [x, wx] : w_vp) {
      if (wx <= 0) continue;
      num_c += wx * cell_mean(vp_arms[kVaccine], x, m, "VP vaccine");
      num_ia += wx * cell_mean(ip_arms[kImmunization], x, m, "IP immunization");
    }
    row.theta_c = num_c / vp_e00;
    if (ip_e00_std > 0) row.theta_ia_m = num_ia / ip_e00_std;
    r.curves.rows.push_back(row);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "standardization positivity violation: empty cells";
    std::set<std::string> unique(missing.begin(), missing.end());
    for (const auto& c : unique) os << " " << c;
    throw PreconditionError(os.str());
  }
  if (ip_e00_std <= 0.0) throw PreconditionError("standardized IP placebo failure rate is 0");

  EffectReport combined = combine_curves(r.curves);
  r.curves.rows = combined.curves;
  r.theta_t = combined.theta_t;
  r.theta_ia = combined.theta_ia;
  r.lambda_a = combined.lambda_a;
  for (const auto& w : combined.warnings) r.warnings.push_back(w);
  return r;
}

}  // namespace vaxmed
