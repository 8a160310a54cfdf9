#include "vaxmed/counts.hpp"

#include <cmath>

namespace vaxmed {

const char* arm_name(int arm) {
  switch (arm) {
    case kPlacebo: return "placebo";
    case kVaccine: return "vaccine";
    case kImmunization: return "immunization";
  }
  return "?";
}

int arm_from_string(const std::string& s) {
  if (s == "placebo" || s == "p" || s == "0") return kPlacebo;
  if (s == "vaccine" || s == "v" || s == "1") return kVaccine;
  if (s == "immunization" || s == "i" || s == "2") return kImmunization;
  return -1;
}

double StratifiedTrialCounts::arm_total(int arm) const {
  double t = 0;
  for (const auto& r : rows) {
    if (r.arm == arm) t += r.count;
  }
  return t;
}

double StratifiedTrialCounts::arm_failures(int arm) const {
  double t = 0;
  for (const auto& r : rows) {
    if (r.arm == arm && r.outcome == 1) t += r.count;
  }
  return t;
}

std::map<std::string, double> StratifiedTrialCounts::stratum_weights() const {
  std::map<std::string, double> w;
  double total = 0;
  for (const auto& r : rows) {
    w[r.stratum] += r.count;
    total += r.count;
  }
  if (total > 0) {
    for (auto& [_, v] : w) v /= total;
  }
  return w;
}

std::vector<double> StratifiedTrialCounts::mediator_distribution(int arm) const {
  std::vector<double> dist(static_cast<std::size_t>(support.size()), 0.0);
  double total = 0;
  for (const auto& r : rows) {
    if (r.arm != arm || !r.mediator) continue;
    dist[static_cast<std::size_t>(*r.mediator)] += r.count;
    total += r.count;
  }
  if (total > 0) {
    for (double& d : dist) d /= total;
  }
  return dist;
}

ValidationResult validate_counts(const StratifiedTrialCounts& counts,
                                 bool require_integer_counts) {
  ValidationResult out;
  const int n = counts.support.size();
  for (std::size_t i = 0; i < counts.rows.size(); ++i) {
    const auto& r = counts.rows[i];
    const std::string subject = "row " + std::to_string(i);
    if (!(r.count >= 0.0) || !std::isfinite(r.count)) {
      out.push_back({"negative count", subject, r.count});
    } else if (require_integer_counts && std::fabs(r.count - std::round(r.count)) > 0) {
      out.push_back({"non-integer count", subject, r.count});
    }
    if (r.arm < 0 || r.arm > 2) out.push_back({"unknown arm", subject, double(r.arm)});
    if (r.outcome != 0 && r.outcome != 1) out.push_back({"outcome not 0/1", subject, double(r.outcome)});
    if (r.mediator && (*r.mediator < 0 || *r.mediator >= n)) {
      out.push_back({"mediator level outside support", subject, double(*r.mediator)});
    }
    if (r.arm == kVaccine && !r.mediator && r.count > 0) {
      out.push_back({"vaccine row missing mediator level", subject, r.count});
    }
    if (r.arm == kImmunization && !r.mediator && r.count > 0) {
      out.push_back({"immunization row missing assigned M2", subject, r.count});
    }
    if (r.closeout_mediator) {
      if (r.arm != kImmunization || r.outcome != 0) {
        out.push_back({"closeout mediator on a non-immunization or failed row", subject, 0});
      } else if (*r.closeout_mediator < 0 || *r.closeout_mediator >= n) {
        out.push_back({"closeout level outside support", subject, double(*r.closeout_mediator)});
      }
    }
  }
  return out;
}

}  // namespace vaxmed
