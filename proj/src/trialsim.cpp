#include "vaxmed/trialsim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace vaxmed {

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 step on the stream-shifted state.
  std::uint64_t z = master + stream * 0x9E3779B97F4A7C15ull + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

ValidationResult validate_spec(const TrialDesignSpec& spec) {
  ValidationResult out;
  if (spec.arm_sizes.empty()) out.push_back({"no arms requested", "", 0});
  for (const auto& [arm, n] : spec.arm_sizes) {
    if (arm < 0 || arm > 2) out.push_back({"unknown arm", std::to_string(arm), double(arm)});
    if (n <= 0) out.push_back({"non-positive arm size", arm_name(arm), double(n)});
  }
  if (!(spec.exposure > 0.0 && spec.exposure <= 1.0)) {
    out.push_back({"exposure outside (0,1]", "", spec.exposure});
  }
  bool has_imm = spec.arm_sizes.count(kImmunization) > 0;
  if (has_imm && !spec.m2_design) {
    out.push_back({"immunization arm without an M2 assignment design", "", 0});
  }
  if (spec.closeout && !has_imm) {
    out.push_back({"closeout requested without an immunization arm", "", 0});
  }
  if (!spec.strata.empty()) {
    double w = 0;
    for (const auto& s : spec.strata) {
      if (!(s.weight > 0.0)) out.push_back({"non-positive stratum weight", s.id, s.weight});
      w += s.weight;
    }
    if (std::fabs(w - 1.0) > kMassTolerance) {
      out.push_back({"stratum weights mass != 1", "", w - 1.0});
    }
  }
  return out;
}

namespace {

// Inverse-CDF categorical sampler; stable across platforms.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const std::vector<double>& pmf) : cdf_(pmf) {
    double acc = 0;
    for (double& c : cdf_) {
      acc += c;
      c = acc;
    }
    if (!cdf_.empty()) cdf_.back() = 1.0;
  }

  int operator()(std::mt19937_64& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<int>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

struct CellKey {
  std::string stratum;
  int mediator;   // -1 absent
  int outcome;
  int closeout;   // -1 absent
  bool operator<(const CellKey& o) const {
    return std::tie(stratum, mediator, outcome, closeout) <
           std::tie(o.stratum, o.mediator, o.outcome, o.closeout);
  }
};

}  // namespace

StratifiedTrialCounts simulate_trial(const GeneralPopulation& pop, const TrialDesignSpec& spec) {
  auto spec_violations = validate_spec(spec);
  if (!spec_violations.empty()) {
    throw ValidationError("invalid trial design: " + describe(spec_violations));
  }

  // Resolve strata: default is one stratum holding the whole population.
  std::vector<StratumSpec> strata = spec.strata;
  if (strata.empty()) strata.push_back({"all", 1.0, {}});
  std::vector<GeneralPopulation> populations;
  std::vector<double> weights;
  for (const auto& s : strata) {
    const GeneralPopulation& p = s.population ? *s.population : pop;
    auto violations = validate_population(p);
    if (!violations.empty()) {
      throw ValidationError("invalid population for stratum " + s.id + ": " +
                            describe(violations));
    }
    if (p.support != pop.support) {
      throw ValidationError("stratum " + s.id + " uses a different mediator support");
    }
    populations.push_back(p);
    weights.push_back(s.weight);
  }
  if (spec.m2_design && spec.m2_design->support != pop.support) {
    throw ValidationError("M2 assignment design support differs from the population support");
  }

  CategoricalSampler stratum_sampler(weights);
  std::vector<CategoricalSampler> atom_samplers;
  for (const auto& p : populations) {
    std::vector<double> pmf;
    pmf.reserve(p.atoms.size());
    for (const auto& a : p.atoms) pmf.push_back(a.prob);
    atom_samplers.emplace_back(pmf);
  }
  std::optional<CategoricalSampler> m2_sampler;
  if (spec.m2_design) m2_sampler.emplace(spec.m2_design->pmf);

  StratifiedTrialCounts out;
  out.support = pop.support;
  std::map<CellKey, std::array<double, 3>> cells;  // key -> per-arm counts

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& [arm, n] : spec.arm_sizes) {
    std::mt19937_64 rng(derive_stream_seed(spec.seed, static_cast<std::uint64_t>(arm) + 1));
    for (long long i = 0; i < n; ++i) {
      int x = strata.size() == 1 ? 0 : stratum_sampler(rng);
      const auto& p = populations[static_cast<std::size_t>(x)];
      const auto& atom = p.atoms[static_cast<std::size_t>(
          atom_samplers[static_cast<std::size_t>(x)](rng))];
      bool exposed = spec.exposure >= 1.0 || unit(rng) < spec.exposure;

      int mediator = -1;
      int outcome = 0;
      int closeout = -1;
      if (arm == kVaccine) {
        mediator = atom.m1;
        outcome = exposed ? atom.y1[static_cast<std::size_t>(atom.m1)] : 0;
      } else if (arm == kPlacebo) {
        mediator = 0;  // M0 = 0* always
        outcome = exposed ? atom.y0[0] : 0;
      } else {
        mediator = (*m2_sampler)(rng);
        outcome = exposed ? atom.y0[static_cast<std::size_t>(mediator)] : 0;
        if (spec.closeout && outcome == 0) closeout = atom.m1;
      }
      cells[{strata[static_cast<std::size_t>(x)].id, mediator, outcome, closeout}]
           [static_cast<std::size_t>(arm)] += 1.0;
    }
  }

  for (const auto& [key, per_arm] : cells) {
    for (int arm = 0; arm < 3; ++arm) {
      double c = per_arm[static_cast<std::size_t>(arm)];
      if (c <= 0) continue;
      CountRow row;
      row.arm = arm;
      row.stratum = key.stratum;
      if (key.mediator >= 0) row.mediator = key.mediator;
      row.outcome = key.outcome;
      if (key.closeout >= 0) row.closeout_mediator = key.closeout;
      row.count = c;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

StratifiedTrialCounts simulate_trial(const BinaryTypeDistribution& pi,
                                     const TrialDesignSpec& spec) {
  return simulate_trial(to_general(pi), spec);
}

StratifiedTrialCounts resample_counts(const StratifiedTrialCounts& counts, std::mt19937_64& rng,
                                      bool stratify_by_stratum) {
  // Group rows, then redraw each group's cells multinomially with the
  // group's size fixed (equivalent to resampling participants).
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < counts.rows.size(); ++i) {
    const auto& r = counts.rows[i];
    groups[{r.arm, stratify_by_stratum ? r.stratum : std::string()}].push_back(i);
  }

  StratifiedTrialCounts out;
  out.support = counts.support;
  out.rows = counts.rows;
  for (const auto& [_, indices] : groups) {
    double total = 0;
    for (auto i : indices) total += counts.rows[i].count;
    long long remaining = static_cast<long long>(std::llround(total));
    double mass_left = total;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      std::size_t i = indices[k];
      double c = counts.rows[i].count;
      long long draw;
      if (k + 1 == indices.size()) {
        draw = remaining;  // the last cell absorbs the remainder exactly
      } else if (remaining <= 0 || mass_left <= 0 || c <= 0) {
        draw = 0;
      } else if (c >= mass_left) {
        draw = remaining;
      } else {
        double p = c / mass_left;
        draw = std::binomial_distribution<long long>(remaining, p)(rng);
      }
      out.rows[i].count = static_cast<double>(draw);
      remaining -= draw;
      mass_left -= c;
    }
  }
  return out;
}

namespace {

double percentile(std::vector<double>& sorted_values, double q) {
  // Linear interpolation between order statistics.
  const std::size_t n = sorted_values.size();
  if (n == 1) return sorted_values[0];
  double pos = q * double(n - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, n - 1);
  double frac = pos - double(lo);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

}  // namespace

BootstrapResult bootstrap_ci(const std::vector<StratifiedTrialCounts>& tables,
                             const MultiCountsEstimator& estimator, int b, std::uint64_t seed,
                             bool stratify_by_stratum, double level) {
  if (b < 1) throw PreconditionError("bootstrap needs at least 1 replicate");
  if (!(level > 0.0 && level < 1.0)) throw PreconditionError("level must lie in (0,1)");

  std::vector<EffectReport> replicates(static_cast<std::size_t>(b));
  std::vector<char> failed(static_cast<std::size_t>(b), 0);

  auto run_range = [&](int first, int last) {
    for (int rep = first; rep < last; ++rep) {
      std::mt19937_64 rng(derive_stream_seed(seed, 0x100 + static_cast<std::uint64_t>(rep)));
      std::vector<StratifiedTrialCounts> resampled;
      resampled.reserve(tables.size());
      for (const auto& t : tables) resampled.push_back(resample_counts(t, rng, stratify_by_stratum));
      try {
        replicates[static_cast<std::size_t>(rep)] = estimator(resampled);
      } catch (const Error&) {
        failed[static_cast<std::size_t>(rep)] = 1;  // counted as undefined everywhere
      }
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  int n_threads = std::max(1, std::min<int>(b, hw ? static_cast<int>(hw) : 1));
  if (n_threads == 1) {
    run_range(0, b);
  } else {
    std::vector<std::thread> pool;
    int chunk = (b + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      int first = t * chunk, last = std::min(b, (t + 1) * chunk);
      if (first >= last) break;
      pool.emplace_back(run_range, first, last);
    }
    for (auto& t : pool) t.join();
  }

  BootstrapResult result;
  result.replicates = b;
  result.seed = seed;
  double alpha = (1.0 - level) / 2.0;
  for (const auto& field : effect_report_fields()) {
    std::vector<double> values;
    int undefined = 0;
    for (int rep = 0; rep < b; ++rep) {
      if (failed[static_cast<std::size_t>(rep)]) {
        ++undefined;
        continue;
      }
      const ReportValue& v = replicates[static_cast<std::size_t>(rep)].*(field.member);
      if (v.defined()) {
        values.push_back(*v.value);
      } else {
        ++undefined;
      }
    }
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    FieldInterval interval;
    interval.lower = percentile(values, alpha);
    interval.upper = percentile(values, 1.0 - alpha);
    interval.defined_replicates = static_cast<int>(values.size());
    interval.undefined_replicates = undefined;
    result.intervals[field.name] = interval;
  }
  return result;
}

BootstrapResult bootstrap_ci(const StratifiedTrialCounts& counts, const CountsEstimator& estimator,
                             int b, std::uint64_t seed, bool stratify_by_stratum, double level) {
  std::vector<StratifiedTrialCounts> tables{counts};
  return bootstrap_ci(
      tables,
      [&estimator](const std::vector<StratifiedTrialCounts>& t) { return estimator(t[0]); }, b,
      seed, stratify_by_stratum, level);
}

void apply_intervals(EffectReport& report, const BootstrapResult& result) {
  for (const auto& field : effect_report_fields()) {
    auto it = result.intervals.find(field.name);
    if (it == result.intervals.end()) continue;
    ReportValue& v = report.*(field.member);
    if (!v.defined()) continue;
    v.ci_lower = it->second.lower;
    v.ci_upper = it->second.upper;
  }
}

}  // namespace vaxmed
