#include "vaxmed/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace vaxmed {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

[[noreturn]] void parse_fail(const std::string& name, std::size_t line, const std::string& what) {
  throw ParseError(name + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& name, std::size_t line, const std::string& token,
                    const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    parse_fail(name, line, std::string("bad ") + what + " \"" + token + "\"");
  }
}

// Detectable level tokens must be nonnegative integers so their order is
// unambiguous; "neg" is 0*.
bool is_integer_token(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

MediatorSupport support_from_tokens(const std::set<std::string>& tokens,
                                    const std::string& name) {
  std::vector<long long> detectable;
  for (const auto& t : tokens) {
    if (t == kUndetectable) continue;
    if (!is_integer_token(t)) {
      throw ParseError(name + ": mediator level \"" + t +
                       "\" is neither \"neg\" nor a nonnegative integer");
    }
    detectable.push_back(std::stoll(t));
  }
  std::sort(detectable.begin(), detectable.end());
  std::vector<std::string> levels{kUndetectable};
  for (long long v : detectable) levels.push_back(std::to_string(v));
  return MediatorSupport(std::move(levels));
}

}  // namespace

StratifiedTrialCounts parse_counts_csv(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  ++line_no;
  auto header = split_csv_line(line);
  const std::vector<std::string> expected{"arm",     "stratum",           "mediator",
                                          "outcome", "closeout_mediator", "count"};
  if (header != expected) {
    parse_fail(name, line_no,
               "expected header arm,stratum,mediator,outcome,closeout_mediator,count");
  }

  struct RawRow {
    int arm;
    std::string stratum, mediator, closeout;
    int outcome;
    double count;
    std::size_t line;
  };
  std::vector<RawRow> raw;
  std::set<std::string> level_tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 6) parse_fail(name, line_no, "expected 6 fields");
    RawRow r;
    r.arm = arm_from_string(fields[0]);
    if (r.arm < 0) parse_fail(name, line_no, "unknown arm \"" + fields[0] + "\"");
    r.stratum = fields[1];
    if (r.stratum.empty()) parse_fail(name, line_no, "empty stratum");
    r.mediator = fields[2];
    double outcome = parse_number(name, line_no, fields[3], "outcome");
    if (outcome != 0.0 && outcome != 1.0) parse_fail(name, line_no, "outcome must be 0 or 1");
    r.outcome = static_cast<int>(outcome);
    r.closeout = fields[4];
    r.count = parse_number(name, line_no, fields[5], "count");
    r.line = line_no;
    if (!r.mediator.empty()) level_tokens.insert(r.mediator);
    if (!r.closeout.empty()) level_tokens.insert(r.closeout);
    raw.push_back(std::move(r));
  }

  StratifiedTrialCounts counts;
  counts.support = support_from_tokens(level_tokens, name);
  for (const auto& r : raw) {
    CountRow row;
    row.arm = r.arm;
    row.stratum = r.stratum;
    if (!r.mediator.empty()) row.mediator = counts.support.index_of(r.mediator);
    row.outcome = r.outcome;
    if (!r.closeout.empty()) row.closeout_mediator = counts.support.index_of(r.closeout);
    row.count = r.count;
    counts.rows.push_back(std::move(row));
  }
  auto violations = validate_counts(counts, true);
  if (!violations.empty()) {
    throw ValidationError(name + ": " + describe(violations));
  }
  return counts;
}

StratifiedTrialCounts read_counts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_counts_csv(in, path);
}

void write_counts_csv(std::ostream& out, const StratifiedTrialCounts& counts) {
  out << "arm,stratum,mediator,outcome,closeout_mediator,count\n";
  for (const auto& r : counts.rows) {
    out << arm_name(r.arm) << ',' << r.stratum << ','
        << (r.mediator ? counts.support.level(*r.mediator) : "") << ',' << r.outcome << ','
        << (r.closeout_mediator ? counts.support.level(*r.closeout_mediator) : "") << ','
        << fmt(r.count) << '\n';
  }
}

void write_counts_csv(const std::string& path, const StratifiedTrialCounts& counts) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write " + path);
  write_counts_csv(out, counts);
}

Population population_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("population JSON must be an object");
  if (j.contains("pi")) {
    if (!j["pi"].is_object()) throw ParseError("\"pi\" must map type keys to proportions");
    std::map<std::string, double> pi;
    for (const auto& [key, value] : j["pi"].items()) {
      if (!value.is_number()) throw ParseError("proportion for \"" + key + "\" must be a number");
      pi[key] = value.get<double>();
    }
    return BinaryTypeDistribution::checked(pi);
  }
  if (!j.contains("support") || !j.contains("atoms")) {
    throw ParseError("population JSON needs either \"pi\" or \"support\"+\"atoms\"");
  }
  std::vector<std::string> levels;
  for (const auto& l : j["support"]) {
    if (!l.is_string()) throw ParseError("support levels must be strings");
    levels.push_back(l.get<std::string>());
  }
  MediatorSupport support(levels);
  std::vector<PopulationAtom> atoms;
  for (const auto& a : j["atoms"]) {
    PopulationAtom atom;
    if (!a.contains("m1") || !a.contains("y1") || !a.contains("y0") || !a.contains("prob")) {
      throw ParseError("each atom needs m1, y1, y0 and prob");
    }
    atom.m1 = a["m1"].get<int>();
    for (const auto& y : a["y1"]) atom.y1.push_back(y.get<int>());
    for (const auto& y : a["y0"]) atom.y0.push_back(y.get<int>());
    atom.prob = a["prob"].get<double>();
    atoms.push_back(std::move(atom));
  }
  bool monotone = j.value("monotone", false);
  return GeneralPopulation::checked(std::move(support), std::move(atoms), monotone);
}

Population read_population_json(const std::string& path) {
  return population_from_json(read_json(path));
}

json population_to_json(const Population& pop) {
  json j;
  if (std::holds_alternative<BinaryTypeDistribution>(pop)) {
    const auto& pi = std::get<BinaryTypeDistribution>(pop);
    json m = json::object();
    const auto& keys = BinaryTypeDistribution::type_keys();
    for (int i = 0; i < BinaryTypeDistribution::kTypeCount; ++i) {
      m[keys[static_cast<std::size_t>(i)]] = pi.prob[static_cast<std::size_t>(i)];
    }
    j["pi"] = std::move(m);
    return j;
  }
  const auto& pop2 = std::get<GeneralPopulation>(pop);
  j["support"] = pop2.support.levels();
  json atoms = json::array();
  for (const auto& a : pop2.atoms) {
    atoms.push_back({{"m1", a.m1}, {"y1", a.y1}, {"y0", a.y0}, {"prob", a.prob}});
  }
  j["atoms"] = std::move(atoms);
  j["monotone"] = pop2.monotone;
  return j;
}

GeneralPopulation as_general(const Population& pop) {
  if (std::holds_alternative<GeneralPopulation>(pop)) return std::get<GeneralPopulation>(pop);
  return to_general(std::get<BinaryTypeDistribution>(pop));
}

AssignmentDesign design_from_json(const json& j) {
  if (!j.is_object() || !j.contains("levels") || !j.contains("probs")) {
    throw ParseError("assignment design JSON needs \"levels\" and \"probs\" arrays");
  }
  std::vector<std::string> levels;
  for (const auto& l : j["levels"]) levels.push_back(l.get<std::string>());
  std::vector<double> probs;
  for (const auto& p : j["probs"]) probs.push_back(p.get<double>());
  return AssignmentDesign::checked(MediatorSupport(std::move(levels)), std::move(probs));
}

AssignmentDesign read_design_json(const std::string& path) {
  return design_from_json(read_json(path));
}

json design_to_json(const AssignmentDesign& design) {
  return json{{"levels", design.support.levels()}, {"probs", design.pmf}};
}

TrialDesignSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("arms")) {
    throw ParseError("trial design spec JSON needs an \"arms\" object");
  }
  TrialDesignSpec spec;
  for (const auto& [key, value] : j["arms"].items()) {
    int arm = arm_from_string(key);
    if (arm < 0) throw ParseError("unknown arm \"" + key + "\" in spec");
    spec.arm_sizes[arm] = value.get<long long>();
  }
  spec.exposure = j.value("exposure", 1.0);
  if (j.contains("m2_design")) spec.m2_design = design_from_json(j["m2_design"]);
  spec.closeout = j.value("closeout", false);
  if (j.contains("strata")) {
    for (const auto& s : j["strata"]) {
      StratumSpec st;
      st.id = s.at("id").get<std::string>();
      st.weight = s.at("weight").get<double>();
      if (s.contains("population")) {
        st.population = as_general(population_from_json(s["population"]));
      }
      spec.strata.push_back(std::move(st));
    }
  }
  return spec;
}

TrialDesignSpec read_spec_json(const std::string& path) { return spec_from_json(read_json(path)); }

CurveTable parse_curve_csv(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  ++line_no;
  auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  if (!col.count("m") || !col.count("weight")) {
    parse_fail(name, line_no, "curve CSV needs at least columns m and weight");
  }
  bool has_theta_c = col.count("theta_c"), has_cve = col.count("cve");
  bool has_theta_ia = col.count("theta_ia"), has_cpe = col.count("cpe");

  struct RawRow {
    std::string m;
    std::optional<double> theta_c, theta_ia;
    double weight;
  };
  std::vector<RawRow> raw;
  std::set<std::string> level_tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < header.size()) fields.resize(header.size());
    RawRow r;
    r.m = fields[col["m"]];
    level_tokens.insert(r.m);
    auto opt_field = [&](const std::string& c) -> std::optional<double> {
      if (!col.count(c) || fields[col[c]].empty()) return {};
      return parse_number(name, line_no, fields[col[c]], c.c_str());
    };
    if (has_theta_c) {
      r.theta_c = opt_field("theta_c");
    } else if (has_cve) {
      if (auto v = opt_field("cve")) r.theta_c = 1.0 - *v;
    }
    if (has_theta_ia) {
      r.theta_ia = opt_field("theta_ia");
    } else if (has_cpe) {
      if (auto v = opt_field("cpe")) r.theta_ia = 1.0 - *v;
    }
    auto w = opt_field("weight");
    if (!w) parse_fail(name, line_no, "missing weight");
    r.weight = *w;
    raw.push_back(std::move(r));
  }

  CurveTable curves;
  curves.support = support_from_tokens(level_tokens, name);
  for (const auto& r : raw) {
    CurveRow row;
    row.m = curves.support.index_of(r.m);
    row.theta_c = r.theta_c;
    row.theta_ia_m = r.theta_ia;
    row.weight = r.weight;
    curves.rows.push_back(row);
  }
  std::sort(curves.rows.begin(), curves.rows.end(),
            [](const CurveRow& a, const CurveRow& b) { return a.m < b.m; });
  auto violations = validate_curves(curves);
  if (!violations.empty()) {
    throw ValidationError(name + ": " + describe(violations));
  }
  return curves;
}

CurveTable read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_curve_csv(in, path);
}

void write_curve_csv(std::ostream& out, const CurveTable& curves) {
  out << "m,cve,cpe,theta_c,theta_ia,lambda_a_m,weight\n";
  for (const auto& row : curves.rows) {
    out << curves.support.level(row.m) << ',';
    out << (row.theta_c ? fmt(1.0 - *row.theta_c) : "") << ',';
    out << (row.theta_ia_m ? fmt(1.0 - *row.theta_ia_m) : "") << ',';
    out << (row.theta_c ? fmt(*row.theta_c) : "") << ',';
    out << (row.theta_ia_m ? fmt(*row.theta_ia_m) : "") << ',';
    out << (row.lambda_a_m ? fmt(*row.lambda_a_m) : "") << ',';
    out << fmt(row.weight) << '\n';
  }
}

void write_curve_csv(const std::string& path, const CurveTable& curves) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write " + path);
  write_curve_csv(out, curves);
}

void write_sensitivity_csv(std::ostream& out, const SensitivityCurve& curve) {
  out << "rho,ey1m0,lambda_s\n";
  for (const auto& p : curve.points) {
    out << fmt(p.rho) << ',' << fmt(p.ey1m0) << ',' << fmt(p.lambda_s) << '\n';
  }
}

void write_sensitivity_csv(const std::string& path, const SensitivityCurve& curve) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write " + path);
  write_sensitivity_csv(out, curve);
}

json report_value_to_json(const ReportValue& v) {
  json j;
  j["provenance"] = to_string(v.provenance);
  if (v.defined()) {
    j["value"] = *v.value;
  } else {
    j["reason"] = v.reason.empty() ? "undefined" : v.reason;
  }
  if (v.ci_lower && v.ci_upper) {
    j["ci"] = json{{"lower", *v.ci_lower}, {"upper", *v.ci_upper}};
  }
  return j;
}

json effect_report_to_json(const EffectReport& report) {
  json j = json::object();
  for (const auto& field : effect_report_fields()) {
    j[field.name] = report_value_to_json(report.*(field.member));
  }
  return j;
}

json curves_to_json(const std::vector<CurveRow>& rows, const MediatorSupport& support) {
  json arr = json::array();
  for (const auto& row : rows) {
    json r;
    r["m"] = support.level(row.m);
    if (row.theta_c) {
      r["theta_c"] = *row.theta_c;
      r["cve"] = 1.0 - *row.theta_c;
    }
    if (row.theta_ia_m) {
      r["theta_ia"] = *row.theta_ia_m;
      r["cpe"] = 1.0 - *row.theta_ia_m;
    }
    if (row.lambda_a_m) r["lambda_a_m"] = *row.lambda_a_m;
    r["weight"] = row.weight;
    arr.push_back(std::move(r));
  }
  return arr;
}

json constraints_to_json(const std::vector<ConstraintCheck>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    json j;
    j["constraint"] = c.constraint;
    if (c.lhs) j["lhs"] = *c.lhs;
    if (c.rhs) j["rhs"] = *c.rhs;
    j["evaluable"] = c.evaluable;
    j["satisfied"] = c.evaluable ? json(c.satisfied) : json("not evaluable");
    arr.push_back(std::move(j));
  }
  return arr;
}

json violations_to_json(const ValidationResult& violations) {
  json arr = json::array();
  for (const auto& v : violations) {
    arr.push_back({{"invariant", v.invariant}, {"subject", v.subject}, {"magnitude", v.magnitude}});
  }
  return arr;
}

json bootstrap_to_json(const BootstrapResult& result) {
  json fields = json::object();
  for (const auto& [name, interval] : result.intervals) {
    fields[name] = {{"lower", interval.lower},
                    {"upper", interval.upper},
                    {"defined_replicates", interval.defined_replicates},
                    {"undefined_replicates", interval.undefined_replicates}};
  }
  return json{{"replicates", result.replicates}, {"seed", result.seed}, {"fields", fields}};
}

json make_report_document(const std::string& command, json body) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["command"] = command;
  for (auto& [key, value] : body.items()) doc[key] = std::move(value);
  return doc;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write " + path);
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace vaxmed
