#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vaxmed/popmodel.hpp"

using namespace vaxmed;
using vaxmed::testing::random_pi;

namespace {

BinaryTypeDistribution uniform_pi() {
  std::array<double, 12> prob{};
  prob.fill(1.0 / 12.0);
  return BinaryTypeDistribution::checked(prob);
}

BinaryTypeDistribution point_mass(const char* key) {
  std::array<double, 12> prob{};
  prob[static_cast<std::size_t>(BinaryTypeDistribution::index_of(key))] = 1.0;
  return BinaryTypeDistribution::checked(prob);
}

}  // namespace

TEST_CASE("the twelve admissible type keys") {
  const auto& keys = BinaryTypeDistribution::type_keys();
  CHECK(keys.size() == 12);
  CHECK(BinaryTypeDistribution::index_of("00/0000") == 0);
  CHECK(BinaryTypeDistribution::index_of("10/1111") == 11);
  // Excluded by construction: blocked antibodies, vaccine-caused disease,
  // antibody-caused disease.
  CHECK(BinaryTypeDistribution::index_of("01/0000") == -1);
  CHECK(BinaryTypeDistribution::index_of("00/1000") == -1);
  CHECK(BinaryTypeDistribution::index_of("00/0010") == -1);
}

TEST_CASE("validate_population on the 12-type distribution") {
  CHECK(validate_population(uniform_pi()).empty());

  BinaryTypeDistribution bad = uniform_pi();
  bad.prob[3] = -0.1;
  auto violations = validate_population(bad);
  REQUIRE(!violations.empty());
  CHECK(violations[0].invariant == "negative proportion");

  BinaryTypeDistribution short_mass = uniform_pi();
  for (auto& p : short_mass.prob) p *= 0.9;
  violations = validate_population(short_mass);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].invariant.find("!= 1") != std::string::npos);
}

TEST_CASE("validate_population on general populations") {
  GeneralPopulation pop;
  pop.support = MediatorSupport::binary();
  pop.atoms.push_back({1, {0, 0}, {1, 1}, 0.5});
  pop.atoms.push_back({0, {1, 0}, {1, 1}, 0.4});
  auto violations = validate_population(pop);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].invariant.find("!= 1") != std::string::npos);

  pop.atoms[1].prob = 0.5;
  CHECK(validate_population(pop).empty());

  pop.monotone = true;
  violations = validate_population(pop);  // atom 1 has y1 increasing? no: {1,0} decreasing; ok
  CHECK(violations.empty());
  pop.atoms[0].y1 = {0, 1};  // protection lost at the higher level
  violations = validate_population(pop);
  REQUIRE(!violations.empty());
  CHECK(violations[0].invariant == "outcomes increase in mediator level");
}

TEST_CASE("checked() renormalizes exactly once") {
  std::array<double, 12> prob{};
  prob.fill(2.0 / 12.0);  // mass 2, rejected
  CHECK_THROWS_AS(BinaryTypeDistribution::checked(prob), ValidationError);

  prob.fill((1.0 + 5e-13) / 12.0);  // within tolerance, renormalized
  auto pi = BinaryTypeDistribution::checked(prob);
  CHECK(pi.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("phi_from_pi point mass and uniform") {
  auto phi = phi_from_pi(point_mass("00/0000"));
  CHECK(phi.vns == 1.0);
  CHECK(phi.pns == 1.0);
  CHECK(phi.vaf == 0.0);
  CHECK(phi.vnf == 0.0);
  CHECK(phi.pnf == 0.0);

  phi = phi_from_pi(uniform_pi());
  CHECK(phi.vaf == doctest::Approx(1.0 / 12).epsilon(1e-14));
  CHECK(phi.vnf == doctest::Approx(3.0 / 12).epsilon(1e-14));
  CHECK(phi.vas == doctest::Approx(5.0 / 12).epsilon(1e-14));
  CHECK(phi.vns == doctest::Approx(3.0 / 12).epsilon(1e-14));
  CHECK(phi.pns == doctest::Approx(2.0 / 12).epsilon(1e-14));
  CHECK(phi.pnf == doctest::Approx(10.0 / 12).epsilon(1e-14));
}

TEST_CASE("phi_from_pi arms are partitions of unity") {
  std::mt19937_64 rng(20240601);
  for (int rep = 0; rep < 200; ++rep) {
    auto phi = phi_from_pi(random_pi(rng));
    CHECK(phi.vaf + phi.vas + phi.vnf + phi.vns == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(phi.pnf + phi.pns == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(phi.imm_f.value() + phi.imm_s.value() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(validate_phi(phi).empty());
  }
}

TEST_CASE("oracle cross-world expectations on the uniform population") {
  auto pi = uniform_pi();
  CHECK(oracle_cross_world(pi, 1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(oracle_cross_world(pi, 1, 0) == doctest::Approx(1.0 / 2).epsilon(1e-14));
  CHECK(oracle_cross_world(pi, 0, 1) == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(oracle_cross_world(pi, 0, 0) == doctest::Approx(5.0 / 6).epsilon(1e-14));
  // The immunization arm acts as placebo with the mediator set.
  CHECK(oracle_cross_world(pi, 2, 1) == oracle_cross_world(pi, 0, 1));
}

TEST_CASE("oracle cross-world on degenerate populations") {
  auto doomed = point_mass("00/1111");
  auto uninfectable = point_mass("10/0000");
  for (int a = 0; a <= 1; ++a) {
    for (int ap = 0; ap <= 1; ++ap) {
      CHECK(oracle_cross_world(doomed, a, ap) == 1.0);
      CHECK(oracle_cross_world(uninfectable, a, ap) == 0.0);
    }
  }
}

TEST_CASE("oracle_effects on the uniform population") {
  auto report = oracle_effects(uniform_pi());
  CHECK(report.theta_t.value.value() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(report.theta_is.value.value() == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(report.theta_ia.value.value() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(report.xi.value.value() == doctest::Approx(5.0 / 6).epsilon(1e-12));
  CHECK(report.ve.value.value() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(report.theta_t.provenance == Provenance::oracle);
}

TEST_CASE("no vaccine effect means theta_t = 1 and undefined lambda") {
  // Vaccination neither induces antibodies (m1 = 0) nor acts directly
  // (y1 == y0), so every comparison collapses.
  GeneralPopulation pop;
  pop.support = MediatorSupport::binary();
  pop.atoms.push_back({0, {1, 0}, {1, 0}, 0.5});
  pop.atoms.push_back({0, {1, 1}, {1, 1}, 0.5});
  auto report = oracle_effects(pop);
  CHECK(report.theta_t.value.value() == 1.0);
  CHECK(!report.lambda_s.defined());
  CHECK(!report.lambda_a.defined());
  CHECK(report.lambda_s.reason.find("theta_t = 1") != std::string::npos);
}

TEST_CASE("mediator-inert population has unit indirect effects") {
  GeneralPopulation pop;
  pop.support = MediatorSupport::binary();
  pop.atoms.push_back({1, {1, 1}, {1, 1}, 0.3});  // constant in m
  pop.atoms.push_back({0, {0, 0}, {1, 1}, 0.7});
  auto report = oracle_effects(pop);
  CHECK(report.theta_is.value.value() == 1.0);
  CHECK(report.theta_ia.value.value() == 1.0);
  CHECK(report.lambda_s.value.value() == 0.0);
  CHECK(report.lambda_a.value.value() == 0.0);
}

TEST_CASE("partition identity on random populations") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 500; ++rep) {
    auto report = oracle_effects(random_pi(rng));
    if (!report.theta_t.defined() || !report.theta_is.defined() || !report.theta_ia.defined()) {
      continue;
    }
    double theta_t = *report.theta_t.value;
    CHECK(std::fabs(*report.theta_is.value * *report.theta_ds.value - theta_t) < 1e-10);
    CHECK(std::fabs(*report.theta_ia.value * *report.theta_da.value - theta_t) < 1e-10);
    if (report.xi.defined()) {
      CHECK(std::fabs(*report.xi.value * *report.theta_ia.value * *report.theta_ds.value -
                      theta_t) < 1e-10);
    }
  }
}

TEST_CASE("monotone ordering of cross-world expectations") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 500; ++rep) {
    auto pi = random_pi(rng);
    double e11 = oracle_cross_world(pi, 1, 1);
    double e10 = oracle_cross_world(pi, 1, 0);
    double e00 = oracle_cross_world(pi, 0, 0);
    CHECK(e11 <= e10 + 1e-15);
    CHECK(e10 <= e00 + 1e-15);
  }
}

TEST_CASE("phi margins reproduce oracle expectations") {
  // Dyadic proportions keep every sum exact, so equality is literal.
  std::array<double, 12> prob{};
  prob.fill(1.0 / 16.0);
  prob[0] = 1.0 / 16.0 + 4.0 / 16.0;
  auto pi = BinaryTypeDistribution::checked(prob);
  auto phi = phi_from_pi(pi);
  CHECK(phi.vaf + phi.vnf == oracle_cross_world(pi, 1, 1));
  CHECK(phi.pnf == oracle_cross_world(pi, 0, 0));

  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    auto rpi = random_pi(rng);
    auto rphi = phi_from_pi(rpi);
    CHECK(rphi.vaf + rphi.vnf == doctest::Approx(oracle_cross_world(rpi, 1, 1)).epsilon(1e-14));
    CHECK(rphi.pnf == doctest::Approx(oracle_cross_world(rpi, 0, 0)).epsilon(1e-14));
  }
}

TEST_CASE("lambda is invariant to the logarithm base") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    auto report = oracle_effects(random_pi(rng));
    if (!report.lambda_s.defined()) continue;
    double base10 =
        std::log10(*report.theta_is.value) / std::log10(*report.theta_t.value);
    CHECK(std::fabs(base10 - *report.lambda_s.value) < 1e-12);
  }
}

TEST_CASE("support cap and undetectable-first are enforced") {
  CHECK_THROWS_AS(MediatorSupport({"1", "neg"}), ValidationError);
  std::vector<std::string> too_many{"neg"};
  for (int i = 1; i <= 16; ++i) too_many.push_back(std::to_string(i));
  CHECK_THROWS_AS(MediatorSupport{too_many}, ValidationError);
  CHECK(MediatorSupport::with_detectable(15).size() == 16);
}
