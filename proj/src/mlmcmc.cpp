#include "nsmlmc/mlmcmc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace nsmlmc {

SamplerKind parse_sampler(const std::string& name) {
  if (name == "independence") return SamplerKind::Independence;
  if (name == "reflection-random-walk" || name == "random-walk") return SamplerKind::ReflectionRandomWalk;
  throw ConfigError("unknown sampler '" + name + "'");
}

std::string to_string(SamplerKind kind) {
  return kind == SamplerKind::Independence ? "independence" : "reflection-random-walk";
}

void ChainConfig::validate() const {
  if (!(step_size > 0.0 && step_size <= 1.0)) throw ConfigError("random-walk step size must lie in (0, 1]");
}

std::size_t ChainConfig::burn_in_for(std::size_t samples) const {
  if (burn_in >= 0) return static_cast<std::size_t>(burn_in);
  return std::max<std::size_t>(50, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(samples))));
}

double reflect_into_box(double x) {
  double y = std::fmod(x + 1.0, 4.0);
  if (y < 0.0) y += 4.0;
  if (y > 2.0) y = 4.0 - y;
  return y - 1.0;
}

const LevelEvaluation& ChainState::at(int level) {
  auto it = cache_.find(level);
  if (it == cache_.end()) {
    it = cache_.emplace(level, model_->evaluate(level, point_)).first;
    ++solves_;
  }
  return it->second;
}

double acceptance_probability(double phi_current, double phi_proposed) {
  if (!(phi_proposed < std::numeric_limits<double>::infinity())) return 0.0;
  if (phi_proposed <= phi_current) return 1.0;
  return std::exp(phi_current - phi_proposed);
}

ChainSummary run_chain(const LevelModel& model, int level, std::size_t dimension, const ChainConfig& config,
                       std::size_t samples, const std::function<void(ChainState&)>& on_sample) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  ChainSummary s;

  ChainState current(model, sample_prior(dimension, rng));
  for (int tries = 0; !current.at(level).ok; ++tries) {
    s.solves += current.solves();
    ++s.failures;
    if (tries >= 1000) throw BlowUp("no prior draw with a finite potential at level " + std::to_string(level));
    current = ChainState(model, sample_prior(dimension, rng));
  }

  s.burn_in = config.burn_in_for(samples);
  const std::size_t total = s.burn_in + samples;
  for (std::size_t step = 0; step < total; ++step) {
    ParamPoint q;
    if (config.sampler == SamplerKind::Independence) {
      q = sample_prior(dimension, rng);
    } else {
      q = current.point();
      for (auto& z : q.zeta) z = reflect_into_box(z + config.step_size * sym(rng));
      for (auto& x : q.xi) x = reflect_into_box(x + config.step_size * sym(rng));
    }
    ChainState proposal(model, std::move(q));
    const LevelEvaluation& e = proposal.at(level);
    s.solves += proposal.solves();
    ++s.proposals;
    const double u = unit(rng);
    if (!e.ok) {
      ++s.failures;
    } else if (u < acceptance_probability(current.at(level).potential, e.potential)) {
      current = std::move(proposal);
      ++s.accepted;
    }
    if (step >= s.burn_in) {
      const std::size_t before = current.solves();
      on_sample(current);
      s.solves += current.solves() - before;
      ++s.recorded;
    }
  }
  return s;
}

namespace {

void check_schedule_args(int L, double a, bool generic) {
  if (L < 0) throw ConfigError("finest level L must be non-negative");
  if (!(a >= 0.0)) throw ConfigError("enlargement a must be non-negative");
  if (!generic && a != 0.0 && a != 2.0 && a != 3.0 && a != 4.0)
    throw ConfigError("enlargement a = " + std::to_string(a) + " has no tabulated schedule; enable the generic formula");
}

std::size_t round_samples(double m) {
  // Exact powers of two must not round up through representation error.
  const double c = std::ceil(m * (1.0 - 1e-12));
  return static_cast<std::size_t>(std::max(1.0, c));
}

double raw_samples(int L, int l, int lp, double a, bool generic) {
  const double lg = std::max(1, L);
  if (generic) return std::pow(std::max(1, l + lp), a) * std::exp2(2.0 * (L - l - lp));
  if (l >= 1 && lp >= 1) return std::pow(l + lp, a) * std::exp2(2.0 * (L - l - lp));
  if (l + lp >= 1) {
    const int m = std::max(l, lp);
    const double base = std::exp2(2.0 * (L - m));
    if (a == 0.0) return base / (lg * lg);
    return std::pow(m, a - 2.0) * base;
  }
  const double top = std::exp2(2.0 * L);
  if (a == 0.0) return top / std::pow(lg, 4);
  if (a == 2.0) return top / (lg * lg);
  if (a == 3.0) return top / lg;
  const double log_l = std::log(lg);
  return top / std::max(1.0, log_l * log_l);
}

}  // namespace

std::vector<ScheduleEntry> schedule(int L, double a, bool generic) {
  check_schedule_args(L, a, generic);
  std::vector<ScheduleEntry> out;
  for (int l = 0; l <= L; ++l)
    for (int lp = 0; lp <= L - l; ++lp)
      out.push_back({l, lp, round_samples(raw_samples(L, l, lp, a, generic)), a});
  return out;
}

double dof_cost(const std::vector<ScheduleEntry>& entries) {
  double total = 0.0;
  for (const auto& e : entries) {
    const double m = static_cast<double>(e.samples);
    if (e.l >= 1 && e.l_prime >= 1)
      total += m * (std::exp2(3.0 * e.l) + std::exp2(3.0 * e.l_prime));
    else if (e.l >= 1)
      total += m * std::exp2(3.0 * e.l);
    else if (e.l_prime >= 1)
      total += m * std::exp2(3.0 * e.l_prime);
    else
      total += m;
  }
  return total;
}

double dof_cost(int L, double a, bool generic) { return dof_cost(schedule(L, a, generic)); }

MeanEstimate batch_means(const std::vector<double>& x) {
  MeanEstimate r;
  const std::size_t n = x.size();
  if (n == 0) return r;
  r.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  r.effective_samples = static_cast<double>(n);
  if (n < 2) return r;
  double naive = 0.0;
  for (double v : x) naive += (v - r.mean) * (v - r.mean);
  naive /= static_cast<double>(n - 1);
  const std::size_t b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (b < 2) {
    r.variance = naive / static_cast<double>(n);
    return r;
  }
  const std::size_t size = n / b;
  std::vector<double> means(b, 0.0);
  for (std::size_t k = 0; k < b; ++k) {
    for (std::size_t i = 0; i < size; ++i) means[k] += x[k * size + i];
    means[k] /= static_cast<double>(size);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double sigma2 = static_cast<double>(size) * ss / static_cast<double>(b - 1);
  r.variance = sigma2 / static_cast<double>(n);
  r.effective_samples = sigma2 > 0.0 ? static_cast<double>(n) * naive / sigma2 : static_cast<double>(n);
  return r;
}

std::uint64_t chain_seed(std::uint64_t master, int l, int l_prime, int role) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ static_cast<std::uint64_t>(l));
  h = mix(h ^ static_cast<std::uint64_t>(l_prime));
  h = mix(h ^ static_cast<std::uint64_t>(role));
  return h;
}

namespace {

double qoi_increment(ChainState& s, int lp) {
  if (lp == 0) return s.at(0).qoi;
  return s.at(lp).qoi - s.at(lp - 1).qoi;
}

/// exp(Phi^l - Phi^{l-1}) at the state.
double level_ratio(ChainState& s, int l) { return std::exp(s.at(l).potential - s.at(l - 1).potential); }

struct ChainTask {
  std::size_t entry = 0;
  int role = 0;
  int level = 0;
  std::size_t dimension = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double cost = 0.0;
  // Recorded series; the main chain of a level-difference entry fills x (correction) and z (ratio).
  std::vector<double> x, z;
  ChainSummary summary;
  std::string error;
};

std::string term_name(int l, int lp, bool product) {
  if (l == 0) return lp == 0 ? "base" : "base-increment";
  if (lp == 0) return product ? "boundary-product" : "boundary-correction";
  return product ? "product" : "correction";
}

}  // namespace

MLMCMCReport estimate(int L, double a, const LevelModel& model, const EstimatorOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  options.chain.validate();
  const auto entries = schedule(L, a, options.generic_schedule);
  MLMCMCReport report;
  report.L = L;
  report.enlargement = a;
  report.dof_count = dof_cost(entries);

  std::vector<ChainTask> tasks;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    std::size_t dim = model.dimension(e.l_prime);
    if (e.l_prime >= 1) dim = std::max(dim, model.dimension(e.l_prime - 1));
    dim = std::max(dim, model.dimension(e.l));
    if (e.l >= 1) dim = std::max(dim, model.dimension(e.l - 1));
    const double burn = static_cast<double>(options.chain.burn_in_for(e.samples));
    ChainTask main;
    main.entry = i;
    main.role = 0;
    main.level = e.l;
    main.dimension = dim;
    main.samples = e.samples;
    main.seed = chain_seed(options.chain.seed, e.l, e.l_prime, 0);
    main.cost = (burn + static_cast<double>(e.samples)) * (model.cost(e.l) + model.cost(e.l_prime));
    tasks.push_back(main);
    if (e.l >= 1) {
      ChainTask aux = main;
      aux.role = 1;
      aux.level = e.l - 1;
      aux.seed = chain_seed(options.chain.seed, e.l, e.l_prime, 1);
      aux.cost = (burn + static_cast<double>(e.samples)) * (model.cost(e.l - 1) + model.cost(e.l_prime));
      tasks.push_back(aux);
    }
  }

  auto run_task = [&](ChainTask& t) {
    const auto& e = entries[t.entry];
    ChainConfig cfg = options.chain;
    cfg.seed = t.seed;
    try {
      t.summary = run_chain(model, t.level, t.dimension, cfg, t.samples, [&](ChainState& s) {
        const double d = qoi_increment(s, e.l_prime);
        if (t.role == 0 && e.l >= 1) {
          const double r = level_ratio(s, e.l);
          t.x.push_back((1.0 - r) * d);
          t.z.push_back(r - 1.0);
        } else {
          t.x.push_back(d);
        }
      });
    } catch (const std::exception& ex) {
      t.error = ex.what();
    }
  };

  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return tasks[i].cost > tasks[j].cost; });
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    for (std::size_t i : order) run_task(tasks[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < order.size(); k = next++) run_task(tasks[order[k]]);
      });
    for (auto& th : pool) th.join();
  }

  // Assemble in schedule order so the sum is independent of scheduling.
  double variance = 0.0;
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const ChainTask& t = tasks[ti];
    const auto& e = entries[t.entry];
    ChainStats cs;
    cs.l = e.l;
    cs.l_prime = e.l_prime;
    cs.role = t.role == 0 ? "main" : "auxiliary";
    cs.target_level = t.level;
    cs.samples = t.summary.recorded;
    cs.burn_in = t.summary.burn_in;
    cs.acceptance_rate = t.summary.acceptance_rate();
    cs.failures = t.summary.failures;
    cs.solves = t.summary.solves;
    cs.seed = t.seed;
    cs.effective_samples = batch_means(t.x).effective_samples;
    report.chain_stats.push_back(cs);
    if (!t.error.empty()) {
      report.failed = true;
      if (report.failure.empty())
        report.failure = "chain (" + std::to_string(e.l) + "," + std::to_string(e.l_prime) + "," + cs.role +
                         ") aborted: " + t.error;
    }
  }
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const ChainTask& t = tasks[ti];
    if (t.role != 0) continue;
    const auto& e = entries[t.entry];
    const MeanEstimate x = batch_means(t.x);
    TermEstimate first{term_name(e.l, e.l_prime, false), e.l, e.l_prime, t.summary.recorded, x.mean, x.variance,
                       t.summary.acceptance_rate()};
    report.per_term.push_back(first);
    variance += x.variance;
    if (e.l >= 1) {
      const ChainTask& aux = tasks[ti + 1];
      const MeanEstimate z = batch_means(t.z);
      const MeanEstimate y = batch_means(aux.x);
      const double v = z.mean * z.mean * y.variance + y.mean * y.mean * z.variance + y.variance * z.variance;
      TermEstimate second{term_name(e.l, e.l_prime, true), e.l, e.l_prime, t.summary.recorded, z.mean * y.mean, v,
                          aux.summary.acceptance_rate()};
      report.per_term.push_back(second);
      variance += v;
    }
  }
  for (const auto& term : report.per_term) {
    report.estimate += term.mean;
    if (!std::isfinite(term.mean) && !report.failed) {
      report.failed = true;
      report.failure = "non-finite term " + term.term;
    }
  }
  report.standard_error = std::sqrt(variance);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double assemble_exact(int L, const ExactExpectation& expect) {
  double total = 0.0;
  for (int l = 0; l <= L; ++l) {
    for (int lp = 0; lp <= L - l; ++lp) {
      const auto d = [lp](ChainState& s) { return qoi_increment(s, lp); };
      if (l == 0) {
        total += expect(0, d);
        continue;
      }
      total += expect(l, [&](ChainState& s) { return (1.0 - level_ratio(s, l)) * d(s); });
      total += expect(l, [&](ChainState& s) { return level_ratio(s, l) - 1.0; }) * expect(l - 1, d);
    }
  }
  return total;
}

void write_report_csv(const MLMCMCReport& report, const std::string& path, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.precision(17);
  for (const auto& h : header) out << "# " << h << "\n";
  out << "term,l,l_prime,samples,mean,variance,acceptance\n";
  for (const auto& t : report.per_term)
    out << t.term << ',' << t.l << ',' << t.l_prime << ',' << t.samples << ',' << t.mean << ',' << t.variance << ','
        << t.acceptance << "\n";
  out << "# summary L=" << report.L << " a=" << report.enlargement << " estimate=" << report.estimate
      << " standard_error=" << report.standard_error << " dof_count=" << report.dof_count
      << " wall_time=" << report.wall_time << " failed=" << (report.failed ? 1 : 0) << "\n";
}

}  // namespace nsmlmc
