#pragma once

// Shared fixtures and generators for the test suites. The brute-force
// oracles here stay independent of the identification code they check.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "vaxmed/counts.hpp"
#include "vaxmed/designs.hpp"
#include "vaxmed/popmodel.hpp"

namespace vaxmed::testing {

// The worked two-arm example margins: 10,000 per arm, 2 / 7998 / 8 / 1992
// vaccine cells and 100 / 9900 placebo cells.
inline PhiTable example_phi() {
  PhiTable phi;
  phi.vaf = 0.0002;
  phi.vas = 0.7998;
  phi.vnf = 0.0008;
  phi.vns = 0.1992;
  phi.pnf = 0.01;
  phi.pns = 0.99;
  return phi;
}

inline StratifiedTrialCounts example_counts() {
  StratifiedTrialCounts counts;
  counts.support = MediatorSupport::binary();
  auto add = [&](int arm, int m, int y, double n) {
    CountRow r;
    r.arm = arm;
    r.stratum = "all";
    r.mediator = m;
    r.outcome = y;
    r.count = n;
    counts.rows.push_back(r);
  };
  add(kVaccine, 1, 1, 2);
  add(kVaccine, 1, 0, 7998);
  add(kVaccine, 0, 1, 8);
  add(kVaccine, 0, 0, 1992);
  add(kPlacebo, 0, 1, 100);
  add(kPlacebo, 0, 0, 9900);
  return counts;
}

// A population whose outcome types are independent of the mediator types:
// pi^{M}_{Y} = Pr[M] * pi_{Y}. theorem-style identification is exact on
// these.
inline BinaryTypeDistribution factorized_pi(const std::array<double, 6>& marginal, double vn) {
  std::array<double, 12> prob{};
  for (int i = 0; i < 6; ++i) {
    prob[static_cast<std::size_t>(i)] = vn * marginal[static_cast<std::size_t>(i)];
    prob[static_cast<std::size_t>(i + 6)] = (1.0 - vn) * marginal[static_cast<std::size_t>(i)];
  }
  return BinaryTypeDistribution::checked(prob);
}

inline std::array<double, 6> random_outcome_marginal(std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::array<double, 6> m{};
  double total = 0;
  for (auto& v : m) {
    v = exp1(rng) + 1e-6;
    total += v;
  }
  for (auto& v : m) v /= total;
  return m;
}

inline BinaryTypeDistribution random_factorized_pi(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  return factorized_pi(random_outcome_marginal(rng), unif(rng));
}

inline BinaryTypeDistribution random_pi(std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::array<double, 12> prob{};
  double total = 0;
  for (auto& v : prob) {
    v = exp1(rng);
    total += v;
  }
  for (auto& v : prob) v /= total;
  return BinaryTypeDistribution::checked(prob);
}

// Margins a base-model population can always produce, with enough slack
// that every tau allocation is feasible and effects stay defined.
inline PhiTable random_admissible_phi(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    PhiTable phi;
    phi.pnf = 0.02 + 0.28 * unif(rng);
    phi.pns = 1.0 - phi.pnf;
    double theta_t = 0.05 + 0.85 * unif(rng);
    double vf = theta_t * phi.pnf;
    double split = 0.1 + 0.8 * unif(rng);
    phi.vnf = vf * split;
    phi.vaf = vf - phi.vnf;
    double vn = phi.vnf + (0.05 + 0.5 * unif(rng)) * (1.0 - vf);
    phi.vns = vn - phi.vnf;
    phi.vas = 1.0 - phi.vaf - phi.vnf - phi.vns;
    if (phi.vns <= 0 || phi.vas <= 0) continue;
    if (phi.vas < phi.pnf - vf) continue;  // tau = 1 must be reachable
    return phi;
  }
}

// Exact infinite-data cells for a binary population in a three-arm trial,
// stratified by responder status ("r1" / "r0"); the stratum is a perfect
// predictor of M1. Counts are per-arm probabilities, not participants.
inline StratifiedTrialCounts exact_three_arm_binary_cells(const BinaryTypeDistribution& pi) {
  const auto& types = BinaryTypeDistribution::types();
  StratifiedTrialCounts counts;
  counts.support = MediatorSupport::binary();
  for (int i = 0; i < 12; ++i) {
    const auto& t = types[i];
    double p = pi.prob[static_cast<std::size_t>(i)];
    if (p <= 0) continue;
    std::string stratum = t.m[0] == 1 ? "r1" : "r0";
    int y1m1 = t.m[0] == 1 ? t.y[0] : t.y[1];
    auto add = [&](int arm, int m, int y) {
      CountRow r;
      r.arm = arm;
      r.stratum = stratum;
      r.mediator = m;
      r.outcome = y;
      r.count = p;
      counts.rows.push_back(r);
    };
    add(kVaccine, t.m[0], y1m1);
    add(kPlacebo, 0, t.y[3]);
    add(kImmunization, 1, t.y[2]);  // infusion sets M = 1
  }
  return counts;
}

// Exact infinite-data cells for a general population under vaccine /
// placebo / immunization arms with an M2 assignment design and closeout
// measurement of M1 on event-free immunization participants.
inline StratifiedTrialCounts exact_closeout_cells(const GeneralPopulation& pop,
                                                  const AssignmentDesign& design) {
  StratifiedTrialCounts counts;
  counts.support = pop.support;
  std::map<std::tuple<int, int, int, int, int>, double> cells;  // arm,m,y,closeout -> mass
  for (const auto& a : pop.atoms) {
    if (a.prob <= 0) continue;
    cells[{kVaccine, a.m1, a.y1[static_cast<std::size_t>(a.m1)], -1, 0}] += a.prob;
    cells[{kPlacebo, 0, a.y0[0], -1, 0}] += a.prob;
    for (int m2 = 0; m2 < pop.support.size(); ++m2) {
      double q = design.pmf[static_cast<std::size_t>(m2)];
      if (q <= 0) continue;
      int y = a.y0[static_cast<std::size_t>(m2)];
      int closeout = y == 0 ? a.m1 : -1;
      cells[{kImmunization, m2, y, closeout, 0}] += a.prob * q;
    }
  }
  for (const auto& [key, mass] : cells) {
    auto [arm, m, y, closeout, pad] = key;
    CountRow r;
    r.arm = arm;
    r.stratum = "all";
    r.mediator = m;
    r.outcome = y;
    if (closeout >= 0) r.closeout_mediator = closeout;
    r.count = mass;
    counts.rows.push_back(r);
  }
  return counts;
}

inline double round_to(double v, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

}  // namespace vaxmed::testing
