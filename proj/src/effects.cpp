#include "vaxmed/effects.hpp"

#include <array>
#include <cmath>

namespace vaxmed {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::oracle: return "oracle";
    case Provenance::identified_si2: return "identified-SI2";
    case Provenance::identified_design: return "identified-design";
    case Provenance::undefined_value: return "undefined";
  }
  return "undefined";
}

std::span<const NamedField> effect_report_fields() {
  static const std::array<NamedField, 9> fields{{
      {"ve", &EffectReport::ve},
      {"theta_t", &EffectReport::theta_t},
      {"theta_is", &EffectReport::theta_is},
      {"theta_ia", &EffectReport::theta_ia},
      {"theta_ds", &EffectReport::theta_ds},
      {"theta_da", &EffectReport::theta_da},
      {"xi", &EffectReport::xi},
      {"lambda_s", &EffectReport::lambda_s},
      {"lambda_a", &EffectReport::lambda_a},
  }};
  return fields;
}

namespace {

ReportValue ratio(std::optional<double> num, std::optional<double> den, Provenance prov,
                  const char* num_name, const char* den_name) {
  if (!num) return ReportValue::undefined(std::string(num_name) + " not identified");
  if (!den) return ReportValue::undefined(std::string(den_name) + " not identified");
  if (*den <= 0.0) return ReportValue::undefined(std::string(den_name) + " = 0");
  return ReportValue::of(*num / *den, prov);
}

// lambda = log(theta_i) / log(theta_t); undefined at theta_t = 1 and at
// nonpositive ratios (a zero expectation upstream).
ReportValue log_share(const ReportValue& theta_i, const ReportValue& theta_t, Provenance prov) {
  if (!theta_i.defined()) return ReportValue::undefined(theta_i.reason);
  if (!theta_t.defined()) return ReportValue::undefined(theta_t.reason);
  if (*theta_i.value <= 0.0) return ReportValue::undefined("indirect ratio effect is 0");
  if (*theta_t.value <= 0.0) return ReportValue::undefined("total ratio effect is 0");
  if (*theta_t.value == 1.0) return ReportValue::undefined("no total effect (theta_t = 1)");
  return ReportValue::of(std::log(*theta_i.value) / std::log(*theta_t.value), prov);
}

}  // namespace

EffectReport effects_from_expectations(double e11, std::optional<double> e10,
                                       std::optional<double> e01, double e00,
                                       Provenance provenance) {
  EffectReport r;
  if (e00 <= 0.0) {
    for (const auto& f : effect_report_fields()) {
      r.*(f.member) = ReportValue::undefined("E[Y_{0M0}] = 0");
    }
    return r;
  }

  r.theta_t = ReportValue::of(e11 / e00, provenance);
  r.ve = ReportValue::of(1.0 - e11 / e00, provenance);
  r.theta_is = ratio(e11, e10, provenance, "E[Y_{1M1}]", "E[Y_{1M0}]");
  r.theta_ds = ratio(e10, e00, provenance, "E[Y_{1M0}]", "E[Y_{0M0}]");
  r.theta_ia = ratio(e01, e00, provenance, "E[Y_{0M1}]", "E[Y_{0M0}]");
  r.theta_da = ratio(e11, e01, provenance, "E[Y_{1M1}]", "E[Y_{0M1}]");

  if (!e10) {
    r.xi = ReportValue::undefined("E[Y_{1M0}] not identified");
  } else if (!e01) {
    r.xi = ReportValue::undefined("E[Y_{0M1}] not identified");
  } else if (*e10 * *e01 <= 0.0) {
    r.xi = ReportValue::undefined("zero cross-world expectation in denominator");
  } else {
    r.xi = ReportValue::of((e11 * e00) / (*e10 * *e01), provenance);
  }

  r.lambda_s = log_share(r.theta_is, r.theta_t, provenance);
  r.lambda_a = log_share(r.theta_ia, r.theta_t, provenance);
  return r;
}

}  // namespace vaxmed
