#include "vaxmed/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace vaxmed {

namespace {

constexpr double kBisectTolerance = 1e-12;
constexpr int kScanPoints = 1024;

void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw PreconditionError(std::string(name) + " must lie strictly inside (0,1), got " +
                            std::to_string(v));
  }
}

}  // namespace

BinaryTypeDistribution construct_pi_for_tau(const PhiTable& raw, double tau_s) {
  PhiTable phi = PhiTable::checked(raw);
  if (!(tau_s >= 0.0 && tau_s <= 1.0)) {
    throw PreconditionError("tau_s must lie in [0,1]");
  }
  double slack = phi.pnf - phi.vf();  // E[Y_{0M0}] - E[Y_{1M1}]
  if (slack < -kMassTolerance) {
    throw PreconditionError(
        "infeasible margins: phi_pnf < phi_vf (vaccine appears harmful; no base-model "
        "population matches)");
  }
  slack = std::max(slack, 0.0);

  // Split the slack: a tau_s share becomes responder mass whose failure is
  // prevented by antibodies alone (pi^10_0101), the rest becomes mass the
  // vaccine cannot save (pi^00_0001 / pi^10_0001). The free non-responder
  // share u00 is pushed as high as the margins allow.
  double risky = tau_s * slack;
  double lower = std::max(0.0, slack - phi.vas);
  double upper = std::min(phi.vns, (1.0 - tau_s) * slack);
  if (lower > upper + kMassTolerance) {
    throw PreconditionError("infeasible margins: no base-model allocation matches tau_s = " +
                            std::to_string(tau_s));
  }
  double u00 = std::max(lower, upper);  // prefer the non-responder block
  double safe10 = std::max(0.0, (1.0 - tau_s) * slack - u00);

  std::array<double, 12> prob{};
  auto set = [&](const char* key, double v) {
    prob[static_cast<std::size_t>(BinaryTypeDistribution::index_of(key))] = std::max(0.0, v);
  };
  set("00/0000", phi.vns - u00);
  set("00/0001", u00);
  set("00/0101", phi.vnf);
  set("10/0000", phi.vas - safe10 - risky);
  set("10/0001", safe10);
  set("10/0101", risky);
  set("10/1111", phi.vaf);
  return BinaryTypeDistribution::checked(prob);
}

double rho_of_ey1m0(const PhiTable& raw, double e) {
  PhiTable phi = PhiTable::checked(raw);
  require_open_unit(phi.vn(), "phi_vn");
  if (!(e > 0.0 && e < 1.0)) {
    throw PreconditionError("E[Y_{1M0}] = " + std::to_string(e) +
                            " has zero outcome variance; correlation undefined");
  }
  double vn = phi.vn();
  double centered = (e - phi.vnf / vn) * vn;
  return centered / std::sqrt((1.0 - vn) * vn * e * (1.0 - e));
}

RhoEndpoints rho_endpoints(const PhiTable& raw) {
  PhiTable phi = PhiTable::checked(raw);
  require_open_unit(phi.vn(), "phi_vn");
  require_open_unit(phi.vf(), "phi_vf");
  require_open_unit(phi.pnf, "phi_pnf");
  double at_vf = rho_of_ey1m0(phi, phi.vf());
  double at_pnf = rho_of_ey1m0(phi, phi.pnf);
  RhoEndpoints out;
  if (at_vf <= at_pnf) {
    out = {at_vf, at_pnf, "phi_vf", "phi_pnf"};
  } else {
    out = {at_pnf, at_vf, "phi_pnf", "phi_vf"};
  }
  return out;
}

std::vector<double> default_rho_grid(const RhoEndpoints& endpoints, int n) {
  if (n < 2) throw PreconditionError("rho grid needs at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double t = double(i) / double(n - 1);
    grid[static_cast<std::size_t>(i)] = endpoints.low + t * (endpoints.high - endpoints.low);
  }
  grid.front() = endpoints.low;
  grid.back() = endpoints.high;
  return grid;
}

namespace {

double lambda_from_e(double e, double vf, double pnf) {
  return std::log(vf / e) / std::log(vf / pnf);
}

// Bisection for rho(e) = target on [a, b]; assumes a sign change.
double bisect(const PhiTable& phi, double target, double a, double b) {
  double fa = rho_of_ey1m0(phi, a) - target;
  double fb = rho_of_ey1m0(phi, b) - target;
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) {
    throw InternalError("lost the sign change while solving rho(e) = " + std::to_string(target));
  }
  for (int iter = 0; iter < 200 && (b - a) > kBisectTolerance; ++iter) {
    double mid = 0.5 * (a + b);
    double fm = rho_of_ey1m0(phi, mid) - target;
    if (fm == 0.0) return mid;
    if (fa * fm < 0.0) {
      b = mid;
      fb = fm;
    } else {
      a = mid;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

SensitivityCurve lambda_s_sensitivity(const PhiTable& raw, const std::vector<double>& rho_grid) {
  PhiTable phi = PhiTable::checked(raw);
  RhoEndpoints ends = rho_endpoints(phi);
  double vf = phi.vf(), pnf = phi.pnf;
  if (vf == pnf) {
    throw PreconditionError("no total effect (theta_t = 1); lambda_s(rho) undefined");
  }
  double e_lo = std::min(vf, pnf), e_hi = std::max(vf, pnf);

  SensitivityCurve curve;
  curve.low = {ends.low, ends.low_source == "phi_vf" ? vf : pnf, ends.low_source,
               ends.low_source == "phi_vf" ? 0.0 : 1.0};
  curve.high = {ends.high, ends.high_source == "phi_vf" ? vf : pnf, ends.high_source,
                ends.high_source == "phi_vf" ? 0.0 : 1.0};

  // Scan once for monotonicity; the same samples provide the brackets.
  std::vector<double> es(kScanPoints + 1), rhos(kScanPoints + 1);
  for (int i = 0; i <= kScanPoints; ++i) {
    double e = e_lo + (e_hi - e_lo) * double(i) / double(kScanPoints);
    es[static_cast<std::size_t>(i)] = e;
    rhos[static_cast<std::size_t>(i)] = rho_of_ey1m0(phi, e);
  }
  for (int i = 1; i <= kScanPoints && curve.monotone; ++i) {
    if (rhos[static_cast<std::size_t>(i)] < rhos[static_cast<std::size_t>(i - 1)]) {
      curve.monotone = false;
    }
  }

  const double pad = 1e-12 * std::max(1.0, std::fabs(ends.high) + std::fabs(ends.low));
  for (double target : rho_grid) {
    if (target < ends.low - pad || target > ends.high + pad) {
      throw PreconditionError("rho = " + std::to_string(target) +
                              " lies outside the admissible interval [" +
                              std::to_string(ends.low) + ", " + std::to_string(ends.high) + "]");
    }
    target = std::clamp(target, std::min(rhos.front(), rhos.back()),
                        std::max(rhos.front(), rhos.back()));
    bool solved = false;
    for (int i = 1; i <= kScanPoints; ++i) {
      double f0 = rhos[static_cast<std::size_t>(i - 1)] - target;
      double f1 = rhos[static_cast<std::size_t>(i)] - target;
      if (f0 == 0.0 && i > 1) continue;  // solution already emitted at the left edge
      if (f0 * f1 > 0.0) continue;
      double e = bisect(phi, target, es[static_cast<std::size_t>(i - 1)],
                        es[static_cast<std::size_t>(i)]);
      curve.points.push_back({target, e, lambda_from_e(e, vf, pnf)});
      solved = true;
      if (curve.monotone) break;
    }
    if (!solved) {
      throw InternalError("no sign change found for rho = " + std::to_string(target));
    }
  }
  return curve;
}

}  // namespace vaxmed
