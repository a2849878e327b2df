#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "nsmlmc/inverse_problem.hpp"

namespace nsmlmc {

enum class SamplerKind { Independence, ReflectionRandomWalk };

SamplerKind parse_sampler(const std::string& name);
std::string to_string(SamplerKind kind);

struct ChainConfig {
  SamplerKind sampler = SamplerKind::Independence;
  /// Random-walk step beta in (0, 1]; proposals are reflect(x + beta * U(-1, 1)).
  double step_size = 0.5;
  /// Samples discarded before recording; negative selects max(50, ceil(0.1 M)).
  long burn_in = -1;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t burn_in_for(std::size_t samples) const;
};

/// Reflects x into [-1, 1] across the box faces.
double reflect_into_box(double x);

/// Current state of a chain together with its lazily filled per-level evaluations.
class ChainState {
 public:
  ChainState(const LevelModel& model, ParamPoint p) : model_(&model), point_(std::move(p)) {}

  const ParamPoint& point() const { return point_; }
  /// Forward solve at `level`, computed at most once per state.
  const LevelEvaluation& at(int level);
  bool has(int level) const { return cache_.count(level) != 0; }
  std::size_t solves() const { return solves_; }

 private:
  const LevelModel* model_;
  ParamPoint point_;
  std::map<int, LevelEvaluation> cache_;
  std::size_t solves_ = 0;
};

struct ChainSummary {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t recorded = 0;
  std::size_t burn_in = 0;
  std::size_t failures = 0;  // proposals whose target-level solve failed
  std::size_t solves = 0;
  double acceptance_rate() const { return proposals ? static_cast<double>(accepted) / proposals : 0.0; }
};

/// Metropolis-Hastings chain targeting gamma^level, proportional to exp(-Phi^level) times the
/// uniform prior on [-1, 1]^dimension, with acceptance 1 ^ exp(Phi(current) - Phi(proposed)).
/// After burn-in, `on_sample` is called once per retained step with the current state;
/// evaluations at other levels requested there are cached on the state.
ChainSummary run_chain(const LevelModel& model, int level, std::size_t dimension, const ChainConfig& config,
                       std::size_t samples, const std::function<void(ChainState&)>& on_sample);

/// Acceptance probability 1 ^ exp(phi_current - phi_proposed).
double acceptance_probability(double phi_current, double phi_proposed);

struct ScheduleEntry {
  int l = 0;
  int l_prime = 0;
  std::size_t samples = 1;
  double enlargement = 0.0;
};

/// Sample numbers M_{ll'} for 0 <= l, 0 <= l' <= L - l. For a in {0, 2, 3, 4} the boundary
/// rows follow the tabulated choices; other a require `generic`, which applies
/// max(1, l + l')^a 2^(2(L - l - l')) everywhere. Values are rounded up, minimum 1.
std::vector<ScheduleEntry> schedule(int L, double a, bool generic = false);

/// Degrees-of-freedom proxy sum of M_{ll'} (2^{3l} + 2^{3l'}) with one-sided boundary terms.
double dof_cost(int L, double a, bool generic = false);
double dof_cost(const std::vector<ScheduleEntry>& entries);

/// Sample mean and batch-means variance of the mean.
struct MeanEstimate {
  double mean = 0.0;
  double variance = 0.0;  // variance of the sample mean
  double effective_samples = 0.0;
};
MeanEstimate batch_means(const std::vector<double>& x);

struct TermEstimate {
  std::string term;
  int l = 0;
  int l_prime = 0;
  std::size_t samples = 0;
  double mean = 0.0;
  double variance = 0.0;
  double acceptance = 0.0;
};

struct ChainStats {
  int l = 0;
  int l_prime = 0;
  std::string role;  // "main" targets gamma^l, "auxiliary" targets gamma^{l-1}
  int target_level = 0;
  std::size_t samples = 0;
  std::size_t burn_in = 0;
  double acceptance_rate = 0.0;
  double effective_samples = 0.0;
  std::size_t failures = 0;
  std::size_t solves = 0;
  std::uint64_t seed = 0;
};

struct MLMCMCReport {
  int L = 0;
  double enlargement = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::vector<TermEstimate> per_term;
  std::vector<ChainStats> chain_stats;
  double dof_count = 0.0;
  double wall_time = 0.0;
  bool failed = false;
  std::string failure;
};

struct EstimatorOptions {
  ChainConfig chain;  // the seed field is the master seed
  bool generic_schedule = false;
  int threads = 1;
};

/// Seed of chain (l, l', role) derived from the master seed by a splitmix64 hash.
std::uint64_t chain_seed(std::uint64_t master, int l, int l_prime, int role);

/// Six-sum telescoping estimator of E^{gamma^L}[ell(u^L)]. Every expectation is an
/// average over its own chain; the second factor of each product term comes from an
/// independent chain targeting gamma^{l-1}. Results do not depend on the thread count.
MLMCMCReport estimate(int L, double a, const LevelModel& model, const EstimatorOptions& options);

/// The same six sums with exact expectations supplied by the caller:
/// expect(level, f) must return E^{gamma^level}[f], where f maps a state to a number.
using ExactExpectation = std::function<double(int level, const std::function<double(ChainState&)>& f)>;
double assemble_exact(int L, const ExactExpectation& expect);

/// Term rows: term,l,l_prime,samples,mean,variance,acceptance, then a summary comment.
void write_report_csv(const MLMCMCReport& report, const std::string& path, const std::vector<std::string>& header);

}  // namespace nsmlmc
