#include "vaxmed/identification.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace vaxmed {

namespace {

constexpr double kClampTolerance = 1e-9;

void require_valid(const StratifiedConditionalMeans& data) {
  auto violations = validate_means(data);
  if (!violations.empty()) {
    throw ValidationError("invalid conditional means: " + describe(violations));
  }
}

}  // namespace

ValidationResult validate_means(const StratifiedConditionalMeans& data) {
  ValidationResult out;
  const int n = data.support.size();
  double wsum = 0;
  for (const auto& s : data.strata) {
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
      out.push_back({"negative stratum weight", s.id, s.weight});
    } else {
      wsum += s.weight;
    }
    for (int arm = 0; arm < 3; ++arm) {
      for (const auto& [m, mean] : s.outcome_mean[arm]) {
        if (m < 0 || m >= n) {
          out.push_back({"mean at level outside support", s.id, double(m)});
        }
        if (!(mean >= 0.0 && mean <= 1.0)) {
          out.push_back({"outcome mean outside [0,1]", s.id + ", arm " + arm_name(arm), mean});
        }
      }
      if (s.mediator_dist[arm]) {
        const auto& dist = *s.mediator_dist[arm];
        if (static_cast<int>(dist.size()) != n) {
          out.push_back({"mediator distribution length != support size", s.id, 0});
          continue;
        }
        double d = 0;
        for (double p : dist) {
          if (!(p >= 0.0)) out.push_back({"negative mediator probability", s.id, p});
          d += p;
        }
        if (std::fabs(d - 1.0) > kMassTolerance) {
          out.push_back({"mediator distribution mass != 1", s.id + ", arm " + arm_name(arm),
                         d - 1.0});
        }
      }
    }
  }
  if (!data.strata.empty() && std::fabs(wsum - 1.0) > kMassTolerance) {
    out.push_back({"stratum weights mass != 1", "", wsum - 1.0});
  }
  return out;
}

double mediation_formula(const StratifiedConditionalMeans& data, int outcome_arm,
                         int mediator_arm) {
  require_valid(data);
  if (outcome_arm < 0 || outcome_arm > 2) throw PreconditionError("outcome arm must be 0, 1 or 2");
  if (mediator_arm < 0 || mediator_arm > 1) throw PreconditionError("mediator arm must be 0 or 1");

  std::vector<std::string> missing;
  double total = 0;
  for (const auto& s : data.strata) {
    if (s.weight == 0.0) continue;
    if (!s.mediator_dist[mediator_arm]) {
      throw PreconditionError("stratum " + s.id + " has no mediator distribution for arm " +
                              arm_name(mediator_arm));
    }
    const auto& dist = *s.mediator_dist[mediator_arm];
    double inner = 0;
    for (int m = 0; m < data.support.size(); ++m) {
      double pm = dist[static_cast<std::size_t>(m)];
      if (pm == 0.0) continue;
      auto it = s.outcome_mean[outcome_arm].find(m);
      if (it == s.outcome_mean[outcome_arm].end()) {
        missing.push_back("(x=" + s.id + ", m=" + data.support.level(m) + ")");
        continue;
      }
      inner += it->second * pm;
    }
    total += s.weight * inner;
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "PosM" << outcome_arm << " violation: no outcome mean for arm " << arm_name(outcome_arm)
       << " at cells";
    for (const auto& c : missing) os << " " << c;
    throw PreconditionError(os.str());
  }
  return total;
}

double identify_ey1m0_undetectable(const StratifiedConditionalMeans& data) {
  require_valid(data);
  std::vector<std::string> missing;
  double total = 0;
  for (const auto& s : data.strata) {
    if (s.weight == 0.0) continue;
    if (s.mediator_dist[kPlacebo]) {
      const auto& dist = *s.mediator_dist[kPlacebo];
      for (int m = 1; m < data.support.size(); ++m) {
        if (dist[static_cast<std::size_t>(m)] > 0.0) {
          throw PreconditionError("stratum " + s.id +
                                  " has detectable placebo-arm antibody (Pr[M0>0*] > 0); the "
                                  "undetectable-arm identification does not apply");
        }
      }
    }
    auto it = s.outcome_mean[kVaccine].find(0);
    if (it == s.outcome_mean[kVaccine].end()) {
      missing.push_back("(x=" + s.id + ", m=" + std::string(kUndetectable) + ")");
      continue;
    }
    total += s.weight * it->second;
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "PosM1 violation at 0*: no vaccinated-undetectable mean at cells";
    for (const auto& c : missing) os << " " << c;
    throw PreconditionError(os.str());
  }
  return total;
}

Theorem2Result theorem2_identify(const PhiTable& raw) {
  PhiTable phi = PhiTable::checked(raw);
  if (phi.vn() <= 0.0) {
    throw PreconditionError(
        "identification impossible: no vaccinated antibody non-responders (phi_vn = 0)");
  }
  Theorem2Result r;
  double vn = phi.vn(), va = phi.va(), vf = phi.vf();

  r.pi.p00_0000 = phi.pns * vn;
  r.pi.p00_00d1 = phi.vns - phi.pns * vn;
  r.pi.p00_d1d1 = phi.vnf;
  r.pi.p10_0000 = phi.pns * va;
  r.pi.p10_0dd1 = phi.vas - phi.pns * va;
  r.pi.p10_1111 = phi.vaf;

  auto clamp = [&](double& v, const char* name) {
    if (v < 0.0 && v >= -kClampTolerance) {
      r.warnings.push_back(std::string(name) + " slightly negative (" + std::to_string(v) +
                           "), clamped to 0");
      v = 0.0;
    } else if (v < 0.0) {
      r.warnings.push_back(std::string(name) + " negative (" + std::to_string(v) +
                           "): observable violation of the independence model");
    }
  };
  clamp(r.pi.p00_00d1, "pi^00_{00.1}");
  clamp(r.pi.p10_0dd1, "pi^10_{0..1}");

  r.ey1m0 = phi.vnf / vn;
  if (phi.vnf <= 0.0 && vf > 0.0) {
    r.theta_is = ReportValue::undefined("phi_vnf = 0 with phi_vf > 0 (division by zero)");
  } else if (phi.vnf <= 0.0) {
    r.theta_is = ReportValue::undefined("phi_vnf = 0");
  } else {
    r.theta_is = ReportValue::of(vf * vn / phi.vnf, Provenance::identified_si2);
  }
  if (r.ey1m0 < vf - kClampTolerance) {
    r.warnings.push_back(
        "identified E[Y_{1M0}] is below E[Y_{1M1}]: base-model ordering violated "
        "(subtracting indirect effect would be harmful)");
  }

  if (!r.theta_is.defined()) {
    r.lambda_s = ReportValue::undefined(r.theta_is.reason);
  } else if (phi.pnf <= 0.0 || vf <= 0.0) {
    r.lambda_s = ReportValue::undefined("zero margin in the total ratio effect");
  } else if (vf == phi.pnf) {
    r.lambda_s = ReportValue::undefined("no total effect (theta_t = 1)");
  } else {
    r.lambda_s = ReportValue::of(std::log(*r.theta_is.value) / std::log(vf / phi.pnf),
                                 Provenance::identified_si2);
  }
  return r;
}

std::vector<ConstraintCheck> check_testable_constraints(const PhiTable& raw) {
  PhiTable phi = PhiTable::checked(raw);
  std::vector<ConstraintCheck> out(2);
  out[0].constraint = "phi_vnf/phi_vn <= phi_pnf";
  out[1].constraint = "phi_vaf/phi_va <= phi_pnf";
  if (phi.vn() > 0.0) {
    out[0].lhs = phi.vnf / phi.vn();
    out[0].rhs = phi.pnf;
    out[0].evaluable = true;
    out[0].satisfied = *out[0].lhs <= phi.pnf + kClampTolerance;
  }
  if (phi.va() > 0.0) {
    out[1].lhs = phi.vaf / phi.va();
    out[1].rhs = phi.pnf;
    out[1].evaluable = true;
    out[1].satisfied = *out[1].lhs <= phi.pnf + kClampTolerance;
  }
  return out;
}

namespace {

struct CellKey {
  int arm;
  std::string stratum;
  int mediator;  // -1 when absent (placebo rows without a measured level count as 0*)
  bool operator<(const CellKey& o) const {
    return std::tie(arm, stratum, mediator) < std::tie(o.arm, o.stratum, o.mediator);
  }
};

struct CellCounts {
  double fail = 0, success = 0;
  double total() const { return fail + success; }
};

std::map<CellKey, CellCounts> group_cells(const StratifiedTrialCounts& counts, bool continuity) {
  std::map<CellKey, CellCounts> cells;
  for (const auto& r : counts.rows) {
    if (r.count <= 0) continue;
    int m = r.mediator ? *r.mediator : (r.arm == kPlacebo ? 0 : -1);
    auto& c = cells[{r.arm, r.stratum, m}];
    (r.outcome == 1 ? c.fail : c.success) += r.count;
  }
  if (continuity) {
    for (auto& [_, c] : cells) {
      c.fail += 0.5;
      c.success += 0.5;
    }
  }
  return cells;
}

}  // namespace

PhiTable phi_from_counts(const StratifiedTrialCounts& counts, const EstimateOptions& opts) {
  auto violations = validate_counts(counts, false);
  if (!violations.empty()) {
    throw ValidationError("invalid counts: " + describe(violations));
  }
  auto cells = group_cells(counts, opts.continuity_correction);
  PhiTable phi;
  double imm_f = 0, imm_s = 0, imm_total = 0;
  for (const auto& [key, c] : cells) {
    bool detectable = key.mediator >= 1;
    switch (key.arm) {
      case kVaccine:
        (detectable ? phi.vaf : phi.vnf) += c.fail;
        (detectable ? phi.vas : phi.vns) += c.success;
        break;
      case kPlacebo:
        (detectable ? phi.paf : phi.pnf) += c.fail;
        (detectable ? phi.pas : phi.pns) += c.success;
        break;
      case kImmunization:
        imm_f += c.fail;
        imm_s += c.success;
        imm_total += c.total();
        break;
    }
  }
  double v = phi.vaf + phi.vas + phi.vnf + phi.vns;
  if (v <= 0.0) throw PreconditionError("no vaccine-arm participants");
  double p = phi.pnf + phi.pns + phi.paf + phi.pas;
  if (p <= 0.0) throw PreconditionError("no placebo-arm participants");
  phi.vaf /= v;
  phi.vas /= v;
  phi.vnf /= v;
  phi.vns /= v;
  phi.pnf /= p;
  phi.pns /= p;
  phi.paf /= p;
  phi.pas /= p;
  if (imm_total > 0) {
    phi.imm_f = imm_f / imm_total;
    phi.imm_s = imm_s / imm_total;
  }
  return phi;
}

StratifiedConditionalMeans conditional_means_from_counts(const StratifiedTrialCounts& counts,
                                                         const EstimateOptions& opts) {
  auto violations = validate_counts(counts, false);
  if (!violations.empty()) {
    throw ValidationError("invalid counts: " + describe(violations));
  }
  auto cells = group_cells(counts, opts.continuity_correction);
  auto raw_cells = opts.continuity_correction ? group_cells(counts, false) : cells;

  StratifiedConditionalMeans out;
  out.support = counts.support;

  std::set<std::string> stratum_ids;
  for (const auto& [key, _] : raw_cells) stratum_ids.insert(key.stratum);

  double grand_total = 0;
  std::map<std::string, double> stratum_totals;
  for (const auto& [key, c] : raw_cells) {
    stratum_totals[key.stratum] += c.total();
    grand_total += c.total();
  }

  for (const auto& id : stratum_ids) {
    StratumData s;
    s.id = id;
    s.weight = grand_total > 0 ? stratum_totals[id] / grand_total : 0.0;

    for (int arm = 0; arm < 3; ++arm) {
      // Means use (optionally corrected) cells; mediator distributions stay raw.
      for (const auto& [key, c] : cells) {
        if (key.arm != arm || key.stratum != id || key.mediator < 0) continue;
        if (c.total() > 0) s.outcome_mean[arm][key.mediator] = c.fail / c.total();
      }
      std::vector<double> dist(static_cast<std::size_t>(counts.support.size()), 0.0);
      double arm_stratum_total = 0;
      for (const auto& [key, c] : raw_cells) {
        if (key.arm != arm || key.stratum != id || key.mediator < 0) continue;
        dist[static_cast<std::size_t>(key.mediator)] += c.total();
        arm_stratum_total += c.total();
      }
      if (arm_stratum_total > 0) {
        for (double& d : dist) d /= arm_stratum_total;
        s.mediator_dist[arm] = std::move(dist);
      }
    }
    out.strata.push_back(std::move(s));
  }
  return out;
}

IdentificationReport estimate_from_counts(const StratifiedTrialCounts& counts,
                                          const EstimateOptions& opts) {
  IdentificationReport report;
  report.phi = phi_from_counts(counts, opts);
  report.theorem2 = theorem2_identify(report.phi);
  report.constraints = check_testable_constraints(report.phi);

  auto means = conditional_means_from_counts(counts, opts);
  report.ey1m0 = identify_ey1m0_undetectable(means);

  // Flag strata whose vaccinated participants all lack detectable
  // antibody: lambda_s then reflects only the 0* comparison there.
  for (const auto& s : means.strata) {
    if (s.weight == 0.0 || !s.mediator_dist[kVaccine]) continue;
    const auto& dist = *s.mediator_dist[kVaccine];
    double detectable = 0;
    for (int m = 1; m < means.support.size(); ++m) detectable += dist[static_cast<std::size_t>(m)];
    if (detectable == 0.0) {
      report.warnings.push_back("stratum " + s.id +
                                " has no vaccinated participants with detectable antibody; "
                                "lambda_s reflects only the undetectable-level comparison there");
    }
  }

  double e11 = report.phi.vf();
  double e00 = report.phi.pnf + report.phi.paf;
  report.effects = effects_from_expectations(e11, report.ey1m0, std::nullopt, e00,
                                             Provenance::identified_si2);
  for (const auto& w : report.theorem2.warnings) report.warnings.push_back(w);
  return report;
}

}  // namespace vaxmed
