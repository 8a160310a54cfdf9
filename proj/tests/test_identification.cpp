#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vaxmed/identification.hpp"

using namespace vaxmed;
using namespace vaxmed::testing;

namespace {

// Single stratum with the worked-example conditional means: vaccinated
// means 0.004 (undetectable) and 0.00025 (detectable); placebo all
// undetectable with mean 0.01.
StratifiedConditionalMeans example_means() {
  StratifiedConditionalMeans data;
  data.support = MediatorSupport::binary();
  StratumData s;
  s.id = "all";
  s.weight = 1.0;
  s.outcome_mean[kVaccine][0] = 0.004;
  s.outcome_mean[kVaccine][1] = 0.00025;
  s.outcome_mean[kPlacebo][0] = 0.01;
  s.mediator_dist[kVaccine] = std::vector<double>{0.2, 0.8};
  s.mediator_dist[kPlacebo] = std::vector<double>{1.0, 0.0};
  data.strata.push_back(s);
  return data;
}

}  // namespace

TEST_CASE("mediation formula on the worked example") {
  auto data = example_means();
  CHECK(mediation_formula(data, 1, 0) == doctest::Approx(0.004).epsilon(1e-14));
}

TEST_CASE("mediation formula with the arm's own mediator distribution is the marginal mean") {
  auto data = example_means();
  double marginal = 0.2 * 0.004 + 0.8 * 0.00025;
  CHECK(mediation_formula(data, 1, 1) == doctest::Approx(marginal).epsilon(1e-14));
}

TEST_CASE("mediation formula averages strata") {
  StratifiedConditionalMeans data;
  data.support = MediatorSupport::binary();
  for (int x = 0; x < 2; ++x) {
    StratumData s;
    s.id = std::to_string(x);
    s.weight = 0.5;
    s.outcome_mean[kVaccine][x] = x == 0 ? 0.2 : 0.4;
    s.mediator_dist[kPlacebo] =
        x == 0 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
    data.strata.push_back(s);
  }
  CHECK(mediation_formula(data, 1, 0) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("mediation formula names the positivity-violating cell") {
  auto data = example_means();
  data.strata[0].outcome_mean[kVaccine].erase(1);  // detectable mean gone
  CHECK_THROWS_WITH_AS(mediation_formula(data, 1, 1),
                       doctest::Contains("(x=all, m=1)"), PreconditionError);
  // Zero-weight strata are dropped before the check.
  data.strata[0].weight = 0.0;
  StratumData filler;
  filler.id = "rest";
  filler.weight = 1.0;
  filler.outcome_mean[kVaccine][0] = 0.1;
  filler.mediator_dist[kVaccine] = std::vector<double>{1.0, 0.0};
  data.strata.push_back(filler);
  CHECK(mediation_formula(data, 1, 1) == doctest::Approx(0.1));
}

TEST_CASE("undetectable-arm identification") {
  CHECK(identify_ey1m0_undetectable(example_means()) == doctest::Approx(0.004).epsilon(1e-14));

  StratifiedConditionalMeans data;
  data.support = MediatorSupport::binary();
  for (int x = 0; x < 2; ++x) {
    StratumData s;
    s.id = std::to_string(x);
    s.weight = 0.5;
    s.outcome_mean[kVaccine][0] = x == 0 ? 0.01 : 0.03;
    s.mediator_dist[kPlacebo] = std::vector<double>{1.0, 0.0};
    data.strata.push_back(s);
  }
  CHECK(identify_ey1m0_undetectable(data) == doctest::Approx(0.02).epsilon(1e-14));

  // A constant mean is recovered no matter the weights.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double w = unif(rng);
  data.strata[0].weight = w;
  data.strata[1].weight = 1.0 - w;
  data.strata[0].outcome_mean[kVaccine][0] = 0.007;
  data.strata[1].outcome_mean[kVaccine][0] = 0.007;
  CHECK(identify_ey1m0_undetectable(data) == doctest::Approx(0.007).epsilon(1e-13));
}

TEST_CASE("undetectable-arm identification rejects detectable placebo antibody") {
  auto data = example_means();
  data.strata[0].mediator_dist[kPlacebo] = std::vector<double>{0.9, 0.1};
  CHECK_THROWS_AS(identify_ey1m0_undetectable(data), PreconditionError);

  data = example_means();
  data.strata[0].outcome_mean[kVaccine].erase(0);
  CHECK_THROWS_WITH_AS(identify_ey1m0_undetectable(data), doctest::Contains("PosM1"),
                       PreconditionError);
}

TEST_CASE("closed-form identification on the worked example") {
  auto r = theorem2_identify(example_phi());
  CHECK(r.ey1m0 == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(r.theta_is.value.value() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(round_to(r.lambda_s.value.value(), 4) == 0.6021);
  CHECK(r.warnings.empty());

  CHECK(r.pi.p00_0000 == doctest::Approx(0.198).epsilon(1e-12));
  CHECK(r.pi.p00_00d1 == doctest::Approx(0.0012).epsilon(1e-9));
  CHECK(r.pi.p00_d1d1 == doctest::Approx(0.0008).epsilon(1e-12));
  CHECK(r.pi.p10_0000 == doctest::Approx(0.792).epsilon(1e-12));
  CHECK(r.pi.p10_0dd1 == doctest::Approx(0.0078).epsilon(1e-9));
  CHECK(r.pi.p10_1111 == doctest::Approx(0.0002).epsilon(1e-12));
  double sum = r.pi.p00_0000 + r.pi.p00_00d1 + r.pi.p00_d1d1 + r.pi.p10_0000 + r.pi.p10_0dd1 +
               r.pi.p10_1111;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("no antibody effect forces theta_is = 1 and lambda_s = 0") {
  PhiTable phi;
  phi.vnf = 0.005;
  phi.vaf = 0.005;
  phi.vns = 0.495;
  phi.vas = 0.495;
  phi.pnf = 0.05;
  phi.pns = 0.95;
  // vnf / vn = 0.01 = vf
  auto r = theorem2_identify(phi);
  CHECK(r.theta_is.value.value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.lambda_s.value.value() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("subtracting effect equal to the total forces lambda_s = 1") {
  PhiTable phi;
  phi.vnf = 0.005;
  phi.vns = 0.495;
  phi.vaf = 0.002;
  phi.vas = 0.498;
  phi.pnf = 0.01;
  phi.pns = 0.99;
  // vnf / vn = 0.01 = pnf
  auto r = theorem2_identify(phi);
  CHECK(r.lambda_s.value.value() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identification failure modes") {
  PhiTable no_nonresponders;
  no_nonresponders.vaf = 0.1;
  no_nonresponders.vas = 0.9;
  no_nonresponders.pnf = 0.1;
  no_nonresponders.pns = 0.9;
  CHECK_THROWS_AS(theorem2_identify(no_nonresponders), PreconditionError);

  PhiTable zero_vnf = example_phi();
  zero_vnf.vns += zero_vnf.vnf;
  zero_vnf.vnf = 0;
  auto r = theorem2_identify(zero_vnf);
  CHECK(!r.theta_is.defined());
  CHECK(!r.lambda_s.defined());
  CHECK(r.theta_is.reason.find("division by zero") != std::string::npos);

  // Dyadic margins keep vf == pnf exact: theta_t is literally 1.
  PhiTable null_effect;
  null_effect.vnf = 0.03125;
  null_effect.vaf = 0.09375;
  null_effect.vns = 0.21875;
  null_effect.vas = 0.65625;
  null_effect.pnf = 0.125;
  null_effect.pns = 0.875;
  CHECK(!theorem2_identify(null_effect).lambda_s.defined());
}

TEST_CASE("slightly negative identified masses are clamped with a warning") {
  // Solving vns = pns*(vnf+vns) - 0.01*eps puts pi^00_{00.1} at -0.01*eps.
  double eps = 5e-8;
  PhiTable phi;
  phi.vaf = 0.0002;
  phi.vnf = 0.0008;
  phi.pns = 0.99;
  phi.pnf = 0.01;
  phi.vns = (phi.pns * phi.vnf) / (1.0 - phi.pns) - eps;
  phi.vas = 1.0 - phi.vaf - phi.vnf - phi.vns;
  auto r = theorem2_identify(phi);
  CHECK(r.pi.p00_00d1 == 0.0);
  REQUIRE(!r.warnings.empty());
  CHECK(r.warnings[0].find("clamped") != std::string::npos);

  // A solidly negative mass is a model violation, not numerical fuzz.
  phi.vns -= 1e-3;
  phi.vas += 1e-3;
  r = theorem2_identify(phi);
  CHECK(r.pi.p00_00d1 < 0.0);
  REQUIRE(!r.warnings.empty());
  CHECK(r.warnings[0].find("violation") != std::string::npos);
}

TEST_CASE("testable constraints on the worked example") {
  auto checks = check_testable_constraints(example_phi());
  REQUIRE(checks.size() == 2);
  CHECK(checks[0].evaluable);
  CHECK(checks[0].satisfied);
  CHECK(checks[0].lhs.value() == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(checks[0].rhs.value() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(checks[1].satisfied);
  CHECK(checks[1].lhs.value() == doctest::Approx(0.00025).epsilon(1e-12));
}

TEST_CASE("testable constraint violation is flagged") {
  PhiTable phi;
  phi.vnf = 0.004;  // vnf/vn = 0.02 > pnf = 0.01
  phi.vns = 0.196;
  phi.vaf = 0.001;
  phi.vas = 0.799;
  phi.pnf = 0.01;
  phi.pns = 0.99;
  auto checks = check_testable_constraints(phi);
  CHECK(!checks[0].satisfied);
  CHECK(checks[1].satisfied);

  phi.vns += phi.vnf;
  phi.vnf = 0;  // 0 <= anything
  checks = check_testable_constraints(phi);
  CHECK(checks[0].satisfied);
}

TEST_CASE("oracle agreement for factorized populations") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    auto pi = random_factorized_pi(rng);
    auto phi = phi_from_pi(pi);
    if (phi.vn() <= 0) continue;
    auto r = theorem2_identify(phi);
    CHECK(std::fabs(r.ey1m0 - oracle_cross_world(pi, 1, 0)) < 1e-12);
    // ey1m0 stays inside the admissible bracket.
    CHECK(r.ey1m0 >= phi.vf() - 1e-12);
    CHECK(r.ey1m0 <= phi.pnf + 1e-12);
    // lambda_s agrees with the generic expectation route.
    auto expected = effects_from_expectations(phi.vf(), r.ey1m0, std::nullopt, phi.pnf);
    if (r.lambda_s.defined() && expected.lambda_s.defined()) {
      CHECK(std::fabs(*r.lambda_s.value - *expected.lambda_s.value) < 1e-12);
    }
  }
}

TEST_CASE("mediation formula reduces to the undetectable-arm identification") {
  auto data = example_means();
  CHECK(mediation_formula(data, 1, 0) == identify_ey1m0_undetectable(data));
}

TEST_CASE("effects_from_expectations on the worked example") {
  auto r = effects_from_expectations(0.001, 0.004, std::nullopt, 0.01);
  CHECK(r.theta_t.value.value() == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(r.ve.value.value() == doctest::Approx(0.90).epsilon(1e-12));
  CHECK(r.theta_is.value.value() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.theta_ds.value.value() == doctest::Approx(0.40).epsilon(1e-12));
  CHECK(round_to(r.lambda_s.value.value(), 4) == 0.6021);
  CHECK(!r.theta_ia.defined());
  CHECK(!r.lambda_a.defined());
  CHECK(!r.xi.defined());
}

TEST_CASE("all-equal expectations give null effects and undefined lambdas") {
  auto r = effects_from_expectations(0.05, 0.05, 0.05, 0.05);
  CHECK(r.theta_t.value.value() == 1.0);
  CHECK(r.theta_is.value.value() == 1.0);
  CHECK(r.theta_ia.value.value() == 1.0);
  CHECK(r.xi.value.value() == 1.0);
  CHECK(!r.lambda_s.defined());
  CHECK(!r.lambda_a.defined());
}

TEST_CASE("no interaction means the two lambdas agree") {
  double e11 = 0.01, e00 = 0.1, e10 = 0.02;
  double e01 = e11 * e00 / e10;  // forces xi = 1
  auto r = effects_from_expectations(e11, e10, e01, e00);
  CHECK(r.xi.value.value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*r.lambda_s.value == doctest::Approx(*r.lambda_a.value).epsilon(1e-12));
}

TEST_CASE("zero denominators yield typed undefined fields") {
  auto r = effects_from_expectations(0.01, 0.0, std::nullopt, 0.1);
  CHECK(!r.theta_is.defined());
  CHECK(r.theta_ds.defined());
  r = effects_from_expectations(0.01, std::nullopt, std::nullopt, 0.0);
  CHECK(!r.theta_t.defined());
  CHECK(!r.ve.defined());
}

TEST_CASE("phi margins from counts reproduce the worked example") {
  auto counts = example_counts();
  auto phi = phi_from_counts(counts);
  CHECK(phi.vaf == doctest::Approx(0.0002).epsilon(1e-14));
  CHECK(phi.vas == doctest::Approx(0.7998).epsilon(1e-14));
  CHECK(phi.vnf == doctest::Approx(0.0008).epsilon(1e-14));
  CHECK(phi.vns == doctest::Approx(0.1992).epsilon(1e-14));
  CHECK(phi.pnf == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(phi.pns == doctest::Approx(0.99).epsilon(1e-14));
}

TEST_CASE("estimate_from_counts ties the pieces together") {
  auto report = estimate_from_counts(example_counts());
  CHECK(report.effects.ve.value.value() == doctest::Approx(0.90).epsilon(1e-12));
  CHECK(round_to(report.effects.lambda_s.value.value(), 4) == 0.6021);
  CHECK(report.ey1m0 == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(report.ey1m0 == doctest::Approx(report.theorem2.ey1m0).epsilon(1e-12));
  CHECK(report.constraints.size() == 2);
  CHECK(!report.effects.theta_ia.defined());
}

TEST_CASE("continuity correction rescues zero failure cells") {
  auto counts = example_counts();
  counts.rows[2].count = 0;  // no vaccinated-undetectable failures
  auto plain = estimate_from_counts(counts);
  CHECK(!plain.theorem2.theta_is.defined());

  EstimateOptions opts;
  opts.continuity_correction = true;
  auto corrected = estimate_from_counts(counts, opts);
  CHECK(corrected.theorem2.theta_is.defined());
  CHECK(corrected.phi.vnf > 0);
}

TEST_CASE("stratified estimate differs from the pooled one when strata differ") {
  auto counts = example_counts();
  // Second stratum with double the undetectable failure rate but fewer
  // participants; the stratified e10 is a weighted mean of cell means.
  auto add = [&](int arm, int m, int y, double n) {
    CountRow r;
    r.arm = arm;
    r.stratum = "x1";
    r.mediator = m;
    r.outcome = y;
    r.count = n;
    counts.rows.push_back(r);
  };
  add(kVaccine, 0, 1, 16);
  add(kVaccine, 0, 0, 1984);
  add(kVaccine, 1, 0, 3000);
  add(kPlacebo, 0, 1, 50);
  add(kPlacebo, 0, 0, 4950);
  auto report = estimate_from_counts(counts);
  double w0 = 20000.0 / 30000.0, w1 = 10000.0 / 30000.0;
  double expected = w0 * 0.004 + w1 * 0.008;
  CHECK(report.ey1m0 == doctest::Approx(expected).epsilon(1e-12));
  // The pooled closed form mixes cells by cell size instead: 24/4000.
  CHECK(report.theorem2.ey1m0 == doctest::Approx(0.006).epsilon(1e-12));
  CHECK(report.ey1m0 != doctest::Approx(report.theorem2.ey1m0).epsilon(1e-6));
}

TEST_CASE("a stratum with no detectable responders is flagged") {
  auto counts = example_counts();
  for (auto& r : counts.rows) {
    if (r.arm == kVaccine && r.mediator == 1) r.count = 0;
  }
  auto report = estimate_from_counts(counts);
  REQUIRE(!report.warnings.empty());
  CHECK(report.warnings[0].find("detectable") != std::string::npos);
}
