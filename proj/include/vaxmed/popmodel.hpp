#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vaxmed/core.hpp"
#include "vaxmed/effects.hpp"

namespace vaxmed {

// One admissible binary principal type: potential mediators [M1 M0] and
// potential outcomes [Y11 Y10 Y01 Y00].
struct BinaryType {
  std::array<int, 2> m;
  std::array<int, 4> y;
};

// The 12-type population for a binary mediator. Keys look like "10/0101":
// mediator pattern / outcome pattern. Admissibility (no M1=0,M0=1; no
// Y_{1m}=1,Y_{0m}=0; no Y_{a1}=1,Y_{a0}=0; M0 never detectable) is baked
// into the key set, so only proportions can go wrong.
struct BinaryTypeDistribution {
  static constexpr int kTypeCount = 12;

  std::array<double, kTypeCount> prob{};

  static const std::array<std::string, kTypeCount>& type_keys();
  static const std::array<BinaryType, kTypeCount>& types();
  static int index_of(std::string_view key);  // -1 when not admissible

  double operator[](std::string_view key) const;
  double total_mass() const;

  // Validates to 1e-12 and renormalizes exactly once; throws ValidationError.
  static BinaryTypeDistribution checked(const std::array<double, kTypeCount>& prob);
  static BinaryTypeDistribution checked(const std::map<std::string, double>& pi);
};

// One atom of a general-mediator population: the vaccine-arm potential
// mediator m1 and the full potential-outcome vectors over the support.
// M0 is the undetectable level 0* for everyone, and the passive
// immunization outcome Y_{2m} coincides with Y_{0m}.
struct PopulationAtom {
  int m1 = 0;
  std::vector<int> y1;  // Y_{1m} per support level
  std::vector<int> y0;  // Y_{0m} per support level
  double prob = 0.0;
};

struct GeneralPopulation {
  MediatorSupport support;
  std::vector<PopulationAtom> atoms;
  bool monotone = false;  // when set: y non-increasing in m, y1 <= y0

  // Validates to 1e-12 and renormalizes exactly once; throws ValidationError.
  static GeneralPopulation checked(MediatorSupport support, std::vector<PopulationAtom> atoms,
                                   bool monotone);
};

// Observable within-arm margins phi_{amy}. Vaccine arm splits by antibody
// response (a/n) and outcome (f/s); placebo and immunization arms split by
// outcome only (detectable placebo cells exist but default to 0).
struct PhiTable {
  double vaf = 0, vas = 0, vnf = 0, vns = 0;
  double pnf = 0, pns = 0;
  double paf = 0, pas = 0;
  std::optional<double> imm_f, imm_s;

  double vn() const { return vnf + vns; }
  double va() const { return vaf + vas; }
  double vf() const { return vnf + vaf; }

  // Validates per-arm sums to 1e-12 and renormalizes each arm exactly once.
  static PhiTable checked(PhiTable raw);
};

ValidationResult validate_population(const BinaryTypeDistribution& pi);
ValidationResult validate_population(const GeneralPopulation& pop);
ValidationResult validate_phi(const PhiTable& phi);

// Exact binary-to-general conversion: support {"neg","1"},
// y1 = [Y10, Y11], y0 = [Y00, Y01]; monotone by construction.
GeneralPopulation to_general(const BinaryTypeDistribution& pi);

// Observable margins implied by a 12-type population.
PhiTable phi_from_pi(const BinaryTypeDistribution& pi);

// Brute-force cross-world expectation E[Y_{a M_{a'}}] by exact enumeration.
// outcome_arm in {0,1,2} (2 reads Y_{0m}); mediator_arm in {0,1}.
double oracle_cross_world(const GeneralPopulation& pop, int outcome_arm, int mediator_arm);
double oracle_cross_world(const BinaryTypeDistribution& pi, int outcome_arm, int mediator_arm);

// All estimands from the four enumerated cross-world expectations.
EffectReport oracle_effects(const GeneralPopulation& pop);
EffectReport oracle_effects(const BinaryTypeDistribution& pi);

}  // namespace vaxmed
