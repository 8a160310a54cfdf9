#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vaxmed/bounds.hpp"
#include "vaxmed/counts.hpp"
#include "vaxmed/designs.hpp"
#include "vaxmed/identification.hpp"
#include "vaxmed/popmodel.hpp"
#include "vaxmed/trialsim.hpp"

namespace vaxmed {

using json = nlohmann::json;

// --- counts CSV (arm,stratum,mediator,outcome,closeout_mediator,count) ----
// "neg" is the undetectable level 0*; an empty field means absent.

StratifiedTrialCounts parse_counts_csv(std::istream& in, const std::string& name);
StratifiedTrialCounts read_counts_csv(const std::string& path);
void write_counts_csv(std::ostream& out, const StratifiedTrialCounts& counts);
void write_counts_csv(const std::string& path, const StratifiedTrialCounts& counts);

// --- population JSON -------------------------------------------------------

using Population = std::variant<BinaryTypeDistribution, GeneralPopulation>;

Population population_from_json(const json& j);
Population read_population_json(const std::string& path);
json population_to_json(const Population& pop);

GeneralPopulation as_general(const Population& pop);

// --- assignment design + trial design spec JSON ----------------------------

AssignmentDesign design_from_json(const json& j);
AssignmentDesign read_design_json(const std::string& path);
json design_to_json(const AssignmentDesign& design);

TrialDesignSpec spec_from_json(const json& j);
TrialDesignSpec read_spec_json(const std::string& path);

// --- curve CSV (m,cve,cpe,theta_c,theta_ia,lambda_a_m,weight) --------------

CurveTable parse_curve_csv(std::istream& in, const std::string& name);
CurveTable read_curve_csv(const std::string& path);
void write_curve_csv(std::ostream& out, const CurveTable& curves);
void write_curve_csv(const std::string& path, const CurveTable& curves);

// --- sensitivity CSV (rho,ey1m0,lambda_s) ----------------------------------

void write_sensitivity_csv(std::ostream& out, const SensitivityCurve& curve);
void write_sensitivity_csv(const std::string& path, const SensitivityCurve& curve);

// --- report JSON ------------------------------------------------------------

inline constexpr int kReportSchemaVersion = 1;

json report_value_to_json(const ReportValue& v);
json effect_report_to_json(const EffectReport& report);
json curves_to_json(const std::vector<CurveRow>& rows, const MediatorSupport& support);
json constraints_to_json(const std::vector<ConstraintCheck>& checks);
json violations_to_json(const ValidationResult& violations);
json bootstrap_to_json(const BootstrapResult& result);

// Wraps a report body with schema_version and command.
json make_report_document(const std::string& command, json body);

void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

}  // namespace vaxmed
