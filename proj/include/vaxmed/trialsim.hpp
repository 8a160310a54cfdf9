#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vaxmed/counts.hpp"
#include "vaxmed/designs.hpp"
#include "vaxmed/effects.hpp"
#include "vaxmed/popmodel.hpp"

namespace vaxmed {

// Stream derivation: splitmix64 applied to master ^ f(stream). Streams are
// order-independent, so parallel and sequential execution agree bitwise.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream);

struct StratumSpec {
  std::string id;
  double weight = 1.0;
  // When absent, the population passed to simulate_trial is used.
  std::optional<GeneralPopulation> population;
};

struct TrialDesignSpec {
  std::map<int, long long> arm_sizes;  // arm -> participants
  double exposure = 1.0;               // Pr[Z = 1], in (0, 1]
  std::optional<AssignmentDesign> m2_design;
  bool closeout = false;
  std::vector<StratumSpec> strata;  // empty: single stratum "all"
  std::uint64_t seed = 0;
};

ValidationResult validate_spec(const TrialDesignSpec& spec);

// Draws each participant's principal type, exposure, and arm-specific
// mediator, then aggregates observed (arm, stratum, mediator, outcome,
// closeout) cells. Deterministic given spec.seed; per-arm counts sum to
// the requested sizes exactly.
StratifiedTrialCounts simulate_trial(const GeneralPopulation& pop, const TrialDesignSpec& spec);
StratifiedTrialCounts simulate_trial(const BinaryTypeDistribution& pi, const TrialDesignSpec& spec);

// Participant resampling within arm (optionally within arm x stratum),
// preserving arm sizes; cells are resampled multinomially.
StratifiedTrialCounts resample_counts(const StratifiedTrialCounts& counts, std::mt19937_64& rng,
                                      bool stratify_by_stratum = false);

using CountsEstimator = std::function<EffectReport(const StratifiedTrialCounts&)>;
using MultiCountsEstimator =
    std::function<EffectReport(const std::vector<StratifiedTrialCounts>&)>;

struct FieldInterval {
  double lower = 0, upper = 0;
  int defined_replicates = 0;
  int undefined_replicates = 0;
};

struct BootstrapResult {
  std::map<std::string, FieldInterval> intervals;
  int replicates = 0;
  std::uint64_t seed = 0;
};

// Percentile bootstrap over b replicates. Replicates run concurrently with
// per-replicate derived seeds; results are identical to sequential
// execution. Replicates where a field comes back undefined are counted and
// excluded from that field's percentiles.
BootstrapResult bootstrap_ci(const StratifiedTrialCounts& counts, const CountsEstimator& estimator,
                             int b, std::uint64_t seed, bool stratify_by_stratum = false,
                             double level = 0.95);

// Same, resampling several tables independently (e.g. a VP and an IP trial).
BootstrapResult bootstrap_ci(const std::vector<StratifiedTrialCounts>& tables,
                             const MultiCountsEstimator& estimator, int b, std::uint64_t seed,
                             bool stratify_by_stratum = false, double level = 0.95);

// Copies interval bounds onto the matching defined report fields.
void apply_intervals(EffectReport& report, const BootstrapResult& result);

}  // namespace vaxmed
