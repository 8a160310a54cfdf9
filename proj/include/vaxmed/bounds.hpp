#pragma once

#include <string>
#include <vector>

#include "vaxmed/popmodel.hpp"

namespace vaxmed {

// One sample of the lambda_s(rho) sensitivity curve. Non-monotone rho(e)
// would produce several rows per rho value.
struct SensitivityPoint {
  double rho = 0;
  double ey1m0 = 0;
  double lambda_s = 0;
};

struct SensitivityEndpoint {
  double rho = 0;
  double ey1m0 = 0;
  std::string e_source;  // "phi_vf" or "phi_pnf"
  double lambda_s = 0;
};

struct SensitivityCurve {
  std::vector<SensitivityPoint> points;
  SensitivityEndpoint low, high;  // value-sorted admissible extremes
  bool monotone = true;
};

// Builds a full 12-type population reproducing the given margins with the
// responder "antibody matters" mass set to tau_s times the total slack
// between E[Y_{1M1}] and E[Y_{0M0}]; oracle lambda_s runs from 0 (tau_s=0)
// to 1 (tau_s=1). Throws PreconditionError for margins no base-model
// population can produce (e.g. phi_pnf < phi_vf).
BinaryTypeDistribution construct_pi_for_tau(const PhiTable& phi, double tau_s);

// Corr(M1, Y_{1M0}) as a function of the unidentified e = E[Y_{1M0}].
double rho_of_ey1m0(const PhiTable& phi, double e);

struct RhoEndpoints {
  double low = 0, high = 0;
  std::string low_source, high_source;  // which of phi_vf / phi_pnf produced each
};

// rho evaluated at the two admissible extremes e = phi_vf and e = phi_pnf,
// returned value-sorted with e-provenance.
RhoEndpoints rho_endpoints(const PhiTable& phi);

// n equally spaced rho values across the endpoint interval, inclusive.
std::vector<double> default_rho_grid(const RhoEndpoints& endpoints, int n = 101);

// Inverts rho(e) over [phi_vf, phi_pnf] by bracketed bisection for each
// grid value and maps to lambda_s = log(phi_vf/e) / log(phi_vf/phi_pnf).
// Checks for a sign change first; a non-monotone bracket (sampled at 1024
// points) yields every solution per rho and clears the monotone flag.
SensitivityCurve lambda_s_sensitivity(const PhiTable& phi, const std::vector<double>& rho_grid);

}  // namespace vaxmed
