#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vaxmed {

// Where a reported estimand value came from.
enum class Provenance { oracle, identified_si2, identified_design, undefined_value };

const char* to_string(Provenance p);

// A single estimand: either a value with provenance, or an explicit
// undefined marker with the reason. Never a silent 0 or NaN.
struct ReportValue {
  std::optional<double> value;
  Provenance provenance = Provenance::undefined_value;
  std::string reason;  // why undefined; empty when defined
  std::optional<double> ci_lower;
  std::optional<double> ci_upper;

  bool defined() const { return value.has_value(); }

  static ReportValue of(double v, Provenance p) { return ReportValue{v, p, "", {}, {}}; }
  static ReportValue undefined(std::string why) {
    return ReportValue{{}, Provenance::undefined_value, std::move(why), {}, {}};
  }
};

// Per-mediator-level efficacy curve row. theta_c is the controlled total
// ratio effect at level m (vaccine vs placebo-at-0*), theta_ia_m the
// controlled protective ratio effect (immunization at m vs placebo-at-0*).
struct CurveRow {
  int m = 0;  // index into the trial's mediator support
  std::optional<double> theta_c;
  std::optional<double> theta_ia_m;
  std::optional<double> lambda_a_m;
  double weight = 0.0;  // Pr[M1 = m]
};

// All ratio-effect estimands for one analysis.
struct EffectReport {
  ReportValue ve;        // 1 - theta_t
  ReportValue theta_t;   // E[Y_{1M1}] / E[Y_{0M0}]
  ReportValue theta_is;  // E[Y_{1M1}] / E[Y_{1M0}]   (subtracting indirect)
  ReportValue theta_ia;  // E[Y_{0M1}] / E[Y_{0M0}]   (adding indirect)
  ReportValue theta_ds;  // E[Y_{1M0}] / E[Y_{0M0}]
  ReportValue theta_da;  // E[Y_{1M1}] / E[Y_{0M1}]
  ReportValue xi;        // interaction: theta_t / (theta_ia * theta_ds)
  ReportValue lambda_s;  // log(theta_is) / log(theta_t)
  ReportValue lambda_a;  // log(theta_ia) / log(theta_t)
  std::vector<CurveRow> curves;
  std::vector<std::string> warnings;
};

struct NamedField {
  const char* name;
  ReportValue EffectReport::* member;
};

// Stable field list, used by serialization and bootstrap aggregation.
std::span<const NamedField> effect_report_fields();

// Builds the full report from the four cross-world expectations.
// e10 = E[Y_{1M0}] and e01 = E[Y_{0M1}] may be absent (not identified);
// the fields needing them come back undefined. Zero denominators and
// theta_t == 1 also yield typed undefined fields, never infinities.
EffectReport effects_from_expectations(double e11, std::optional<double> e10,
                                       std::optional<double> e01, double e00,
                                       Provenance provenance = Provenance::identified_si2);

}  // namespace vaxmed
