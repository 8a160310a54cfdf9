#include "vaxmed/popmodel.hpp"

#include <algorithm>
#include <cmath>

namespace vaxmed {

namespace {

// Table-1 order: the six outcome patterns within the M=[0,0] block, then
// the same six within M=[1,0].
constexpr const char* kYPatterns[6] = {"0000", "0001", "0011", "0101", "0111", "1111"};

std::array<std::string, 12> make_keys() {
  std::array<std::string, 12> keys;
  int k = 0;
  for (const char* m : {"00", "10"}) {
    for (const char* y : kYPatterns) {
      keys[k++] = std::string(m) + "/" + y;
    }
  }
  return keys;
}

std::array<BinaryType, 12> make_types() {
  std::array<BinaryType, 12> t;
  const auto& keys = BinaryTypeDistribution::type_keys();
  for (int i = 0; i < 12; ++i) {
    const std::string& key = keys[i];
    t[i].m = {key[0] - '0', key[1] - '0'};
    for (int j = 0; j < 4; ++j) t[i].y[j] = key[3 + j] - '0';
  }
  return t;
}

}  // namespace

const std::array<std::string, 12>& BinaryTypeDistribution::type_keys() {
  static const auto keys = make_keys();
  return keys;
}

const std::array<BinaryType, 12>& BinaryTypeDistribution::types() {
  static const auto t = make_types();
  return t;
}

int BinaryTypeDistribution::index_of(std::string_view key) {
  const auto& keys = type_keys();
  for (int i = 0; i < kTypeCount; ++i) {
    if (keys[i] == key) return i;
  }
  return -1;
}

double BinaryTypeDistribution::operator[](std::string_view key) const {
  int i = index_of(key);
  if (i < 0) throw ValidationError("inadmissible type key \"" + std::string(key) + "\"");
  return prob[static_cast<std::size_t>(i)];
}

double BinaryTypeDistribution::total_mass() const {
  double s = 0;
  for (double p : prob) s += p;
  return s;
}

BinaryTypeDistribution BinaryTypeDistribution::checked(const std::array<double, kTypeCount>& prob) {
  BinaryTypeDistribution pi;
  pi.prob = prob;
  auto violations = validate_population(pi);
  if (!violations.empty()) {
    throw ValidationError("invalid type distribution: " + describe(violations));
  }
  double mass = pi.total_mass();
  for (double& p : pi.prob) p /= mass;
  return pi;
}

BinaryTypeDistribution BinaryTypeDistribution::checked(const std::map<std::string, double>& pi) {
  std::array<double, kTypeCount> prob{};
  for (const auto& [key, p] : pi) {
    int i = index_of(key);
    if (i < 0) throw ValidationError("inadmissible type key \"" + key + "\"");
    prob[static_cast<std::size_t>(i)] = p;
  }
  return checked(prob);
}

ValidationResult validate_population(const BinaryTypeDistribution& pi) {
  ValidationResult out;
  const auto& keys = BinaryTypeDistribution::type_keys();
  for (int i = 0; i < BinaryTypeDistribution::kTypeCount; ++i) {
    double p = pi.prob[static_cast<std::size_t>(i)];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      out.push_back({"negative proportion", keys[i], p});
    }
  }
  double mass = pi.total_mass();
  if (std::fabs(mass - 1.0) > kMassTolerance) {
    out.push_back({"mass " + std::to_string(mass) + " != 1", "", mass - 1.0});
  }
  return out;
}

GeneralPopulation GeneralPopulation::checked(MediatorSupport support,
                                             std::vector<PopulationAtom> atoms, bool monotone) {
  GeneralPopulation pop;
  pop.support = std::move(support);
  pop.atoms = std::move(atoms);
  pop.monotone = monotone;
  auto violations = validate_population(pop);
  if (!violations.empty()) {
    throw ValidationError("invalid population: " + describe(violations));
  }
  double mass = 0;
  for (const auto& a : pop.atoms) mass += a.prob;
  for (auto& a : pop.atoms) a.prob /= mass;
  return pop;
}

ValidationResult validate_population(const GeneralPopulation& pop) {
  ValidationResult out;
  const int n = pop.support.size();
  double mass = 0;
  for (std::size_t i = 0; i < pop.atoms.size(); ++i) {
    const auto& a = pop.atoms[i];
    const std::string subject = "atom " + std::to_string(i);
    if (!(a.prob >= 0.0) || !std::isfinite(a.prob)) {
      out.push_back({"negative proportion", subject, a.prob});
    } else {
      mass += a.prob;
    }
    if (a.m1 < 0 || a.m1 >= n) out.push_back({"m1 outside support", subject, double(a.m1)});
    if (static_cast<int>(a.y1.size()) != n || static_cast<int>(a.y0.size()) != n) {
      out.push_back({"outcome vector length != support size", subject, 0});
      continue;
    }
    for (int m = 0; m < n; ++m) {
      if ((a.y1[m] != 0 && a.y1[m] != 1) || (a.y0[m] != 0 && a.y0[m] != 1)) {
        out.push_back({"non-binary potential outcome", subject, 0});
        break;
      }
    }
    if (pop.monotone) {
      for (int m = 0; m + 1 < n; ++m) {
        if (a.y1[m + 1] > a.y1[m] || a.y0[m + 1] > a.y0[m]) {
          out.push_back({"outcomes increase in mediator level", subject, double(m + 1)});
          break;
        }
      }
      for (int m = 0; m < n; ++m) {
        if (a.y1[m] > a.y0[m]) {
          out.push_back({"vaccine outcome exceeds placebo outcome", subject, double(m)});
          break;
        }
      }
    }
  }
  if (std::fabs(mass - 1.0) > kMassTolerance) {
    out.push_back({"mass " + std::to_string(mass) + " != 1", "", mass - 1.0});
  }
  return out;
}

PhiTable PhiTable::checked(PhiTable raw) {
  auto violations = validate_phi(raw);
  if (!violations.empty()) {
    throw ValidationError("invalid phi table: " + describe(violations));
  }
  double v = raw.vaf + raw.vas + raw.vnf + raw.vns;
  raw.vaf /= v;
  raw.vas /= v;
  raw.vnf /= v;
  raw.vns /= v;
  double p = raw.pnf + raw.pns + raw.paf + raw.pas;
  raw.pnf /= p;
  raw.pns /= p;
  raw.paf /= p;
  raw.pas /= p;
  if (raw.imm_f || raw.imm_s) {
    double i = raw.imm_f.value_or(0) + raw.imm_s.value_or(0);
    raw.imm_f = raw.imm_f.value_or(0) / i;
    raw.imm_s = raw.imm_s.value_or(0) / i;
  }
  return raw;
}

ValidationResult validate_phi(const PhiTable& phi) {
  ValidationResult out;
  auto check_nonneg = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back({"negative proportion", name, v});
  };
  check_nonneg(phi.vaf, "vaf");
  check_nonneg(phi.vas, "vas");
  check_nonneg(phi.vnf, "vnf");
  check_nonneg(phi.vns, "vns");
  check_nonneg(phi.pnf, "pnf");
  check_nonneg(phi.pns, "pns");
  check_nonneg(phi.paf, "paf");
  check_nonneg(phi.pas, "pas");
  if (phi.imm_f) check_nonneg(*phi.imm_f, "if");
  if (phi.imm_s) check_nonneg(*phi.imm_s, "is");
  double v = phi.vaf + phi.vas + phi.vnf + phi.vns;
  if (std::fabs(v - 1.0) > kMassTolerance) {
    out.push_back({"vaccine-arm mass " + std::to_string(v) + " != 1", "", v - 1.0});
  }
  double p = phi.pnf + phi.pns + phi.paf + phi.pas;
  if (std::fabs(p - 1.0) > kMassTolerance) {
    out.push_back({"placebo-arm mass " + std::to_string(p) + " != 1", "", p - 1.0});
  }
  if (phi.imm_f || phi.imm_s) {
    double i = phi.imm_f.value_or(0) + phi.imm_s.value_or(0);
    if (std::fabs(i - 1.0) > kMassTolerance) {
      out.push_back({"immunization-arm mass " + std::to_string(i) + " != 1", "", i - 1.0});
    }
  }
  return out;
}

GeneralPopulation to_general(const BinaryTypeDistribution& pi) {
  auto violations = validate_population(pi);
  if (!violations.empty()) {
    throw ValidationError("invalid type distribution: " + describe(violations));
  }
  const auto& types = BinaryTypeDistribution::types();
  std::vector<PopulationAtom> atoms;
  atoms.reserve(12);
  for (int i = 0; i < 12; ++i) {
    PopulationAtom a;
    a.m1 = types[i].m[0];
    // y[j] = [Y11, Y10, Y01, Y00]; vectors are indexed by level {neg, 1}.
    a.y1 = {types[i].y[1], types[i].y[0]};
    a.y0 = {types[i].y[3], types[i].y[2]};
    a.prob = pi.prob[static_cast<std::size_t>(i)];
    atoms.push_back(std::move(a));
  }
  return GeneralPopulation::checked(MediatorSupport::binary(), std::move(atoms), true);
}

PhiTable phi_from_pi(const BinaryTypeDistribution& pi) {
  auto violations = validate_population(pi);
  if (!violations.empty()) {
    throw ValidationError("invalid type distribution: " + describe(violations));
  }
  PhiTable phi;
  double imm_f = 0, imm_s = 0;
  const auto& types = BinaryTypeDistribution::types();
  for (int i = 0; i < 12; ++i) {
    const auto& t = types[i];
    double p = pi.prob[static_cast<std::size_t>(i)];
    // Vaccine arm observes (M1, Y_{1M1}).
    int y1m1 = t.m[0] == 1 ? t.y[0] : t.y[1];
    if (t.m[0] == 1) {
      (y1m1 ? phi.vaf : phi.vas) += p;
    } else {
      (y1m1 ? phi.vnf : phi.vns) += p;
    }
    // Placebo arm observes (M0 = 0, Y_{00}).
    (t.y[3] ? phi.pnf : phi.pns) += p;
    // Passive immunization arm observes Y_{01}.
    (t.y[2] ? imm_f : imm_s) += p;
  }
  phi.imm_f = imm_f;
  phi.imm_s = imm_s;
  return phi;
}

double oracle_cross_world(const GeneralPopulation& pop, int outcome_arm, int mediator_arm) {
  auto violations = validate_population(pop);
  if (!violations.empty()) {
    throw ValidationError("invalid population: " + describe(violations));
  }
  if (outcome_arm < 0 || outcome_arm > 2) throw PreconditionError("outcome arm must be 0, 1 or 2");
  if (mediator_arm < 0 || mediator_arm > 1) throw PreconditionError("mediator arm must be 0 or 1");
  double e = 0;
  for (const auto& a : pop.atoms) {
    int m = mediator_arm == 1 ? a.m1 : 0;
    const auto& y = outcome_arm == 1 ? a.y1 : a.y0;  // Y_{2m} == Y_{0m}
    e += a.prob * y[static_cast<std::size_t>(m)];
  }
  return e;
}

double oracle_cross_world(const BinaryTypeDistribution& pi, int outcome_arm, int mediator_arm) {
  return oracle_cross_world(to_general(pi), outcome_arm, mediator_arm);
}

EffectReport oracle_effects(const GeneralPopulation& pop) {
  double e11 = oracle_cross_world(pop, 1, 1);
  double e10 = oracle_cross_world(pop, 1, 0);
  double e01 = oracle_cross_world(pop, 0, 1);
  double e00 = oracle_cross_world(pop, 0, 0);
  return effects_from_expectations(e11, e10, e01, e00, Provenance::oracle);
}

EffectReport oracle_effects(const BinaryTypeDistribution& pi) {
  return oracle_effects(to_general(pi));
}

}  // namespace vaxmed
