#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "sscmi/bounds.hpp"
#include "sscmi/discrete_joint.hpp"
#include "sscmi/info.hpp"
#include "sscmi/rng.hpp"
#include "sscmi/util.hpp"

namespace sscmi {

// ---------------------------------------------------------------------------
// Environment and schedule

/// Reward law of one arm: a finite grid in [0, 1].
struct RewardLaw {
  std::vector<double> values;
  std::vector<double> probs;

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
    return m;
  }

  static RewardLaw bernoulli(double p) { return {{0.0, 1.0}, {1.0 - p, p}}; }
  static RewardLaw point(double v) { return {{v}, {1.0}}; }
};

inline constexpr std::size_t kMaxRewardAtoms = 8;

class BanditEnv {
 public:
  BanditEnv() = default;
  explicit BanditEnv(std::vector<RewardLaw> arms) : arms_(std::move(arms)) { validate(); }

  static BanditEnv bernoulli(const std::vector<double>& means) {
    std::vector<RewardLaw> arms;
    for (double p : means) arms.push_back(RewardLaw::bernoulli(p));
    return BanditEnv(std::move(arms));
  }

  [[nodiscard]] int arms() const noexcept { return static_cast<int>(arms_.size()); }
  [[nodiscard]] const RewardLaw& law(int a) const { return arms_.at(static_cast<std::size_t>(a)); }
  [[nodiscard]] double mean(int a) const { return means_.at(static_cast<std::size_t>(a)); }
  [[nodiscard]] int best() const noexcept { return best_; }
  [[nodiscard]] double gap(int a) const { return means_[static_cast<std::size_t>(best_)] - mean(a); }
  [[nodiscard]] double delta_min() const noexcept { return delta_min_; }

  [[nodiscard]] double gap(std::span<const double> rho) const {
    double g = 0.0;
    for (int a = 0; a < arms(); ++a) g += rho[static_cast<std::size_t>(a)] * gap(a);
    return g;
  }

 private:
  void validate() {
    if (arms_.size() < 2) throw SchemaError("bandit: need K >= 2 arms");
    means_.clear();
    for (std::size_t a = 0; a < arms_.size(); ++a) {
      const auto& law = arms_[a];
      const std::string tag = "bandit arm " + std::to_string(a) + ": ";
      if (law.values.empty() || law.values.size() != law.probs.size())
        throw SchemaError(tag + "reward grid and probabilities differ in length");
      if (law.values.size() > kMaxRewardAtoms) throw SchemaError(tag + "reward grid has more than 8 atoms");
      double total = 0.0;
      for (std::size_t i = 0; i < law.values.size(); ++i) {
        if (!(law.values[i] >= 0.0 && law.values[i] <= 1.0)) throw SchemaError(tag + "reward outside [0,1]");
        if (!(law.probs[i] >= 0.0)) throw SchemaError(tag + "negative probability");
        total += law.probs[i];
      }
      if (std::abs(total - 1.0) > 1e-12) throw SchemaError(tag + "probabilities do not sum to 1");
      means_.push_back(law.mean());
    }
    best_ = static_cast<int>(std::max_element(means_.begin(), means_.end()) - means_.begin());
    delta_min_ = INFINITY;
    for (int a = 0; a < arms(); ++a)
      if (a != best_) delta_min_ = std::min(delta_min_, gap(a));
    if (!(delta_min_ > 1e-12)) throw SchemaError("bandit: optimal arm is not unique (Delta_min = 0)");
  }

  std::vector<RewardLaw> arms_;
  std::vector<double> means_;
  int best_ = 0;
  double delta_min_ = 0.0;
};

/// Exploration floor or policy rejected at a specific round.
class ScheduleViolation : public std::invalid_argument {
 public:
  ScheduleViolation(const std::string& what, int round)
      : std::invalid_argument("round " + std::to_string(round) + ": " + what), round_(round) {}
  [[nodiscard]] int round() const noexcept { return round_; }

 private:
  int round_;
};

struct Schedule {
  std::string name;
  std::function<double(int)> epsilon;  // t >= 1
  std::function<double(int)> gamma;    // t >= 1

  /// Checks rounds 1..horizon+1 (the smoothed output after round t uses eps_{t+1}).
  void validate(int K, int horizon) const {
    if (!epsilon || !gamma) throw ScheduleViolation("schedule is incomplete", 0);
    double prev = INFINITY;
    for (int t = 1; t <= horizon + 1; ++t) {
      const double e = epsilon(t);
      if (!(e > 0.0) || e > 1.0 / K + 1e-15) throw ScheduleViolation("epsilon outside (0, 1/K]", t);
      if (e > prev + 1e-15) throw ScheduleViolation("epsilon increases", t);
      prev = e;
      if (t <= horizon) {
        const double g = gamma(t);
        if (!(g >= 0.0) || !std::isfinite(g)) throw ScheduleViolation("gamma must be finite and >= 0", t);
      }
    }
  }

  /// eps_t = min{1/K, sqrt(c log K / (K t Delta_min))}, gamma_t = 2 log K / (K eps_t).
  static Schedule standard(int K, double delta_min, double c = 52.0) {
    const double logk = std::log(static_cast<double>(K));
    Schedule s;
    s.name = "default";
    s.epsilon = [=](int t) { return std::min(1.0 / K, std::sqrt(c * logk / (K * static_cast<double>(t) * delta_min))); };
    auto eps = s.epsilon;
    s.gamma = [=](int t) { return 2.0 * logk / (K * eps(t)); };
    return s;
  }

  static Schedule constant(double eps, double gamma) {
    Schedule s;
    s.name = "constant";
    s.epsilon = [=](int) { return eps; };
    s.gamma = [=](int) { return gamma; };
    return s;
  }

  /// eps_t = 1/K throughout, so the smoothed policy is uniform.
  static Schedule uniform(int K) {
    return constant(1.0 / K, 2.0 * std::log(static_cast<double>(K)));
  }
};

// ---------------------------------------------------------------------------
// Posterior arithmetic

namespace detail {

inline void exp_weights(std::span<const double> rhat, double gamma, std::span<double> rho) {
  double top = -INFINITY;
  for (double r : rhat) top = std::max(top, gamma * r);
  double z = 0.0;
  for (std::size_t a = 0; a < rhat.size(); ++a) z += rho[a] = std::exp(gamma * rhat[a] - top);
  for (double& p : rho) p /= z;
}

inline void smooth(std::span<const double> rho, double eps, std::span<double> out) {
  const double K = static_cast<double>(rho.size());
  for (std::size_t a = 0; a < rho.size(); ++a) out[a] = (1.0 - K * eps) * rho[a] + eps;
}

inline double kl_to_uniform(std::span<const double> rho) {
  const double K = static_cast<double>(rho.size());
  double s = 0.0;
  for (double p : rho)
    if (p > 0.0) s += p * std::log(K * p);
  return std::max(s, 0.0);
}

/// Delta-hat of rho for the given estimate vector.
inline double estimate_gap(std::span<const double> rhat, int best, std::span<const double> rho) {
  double g = 0.0;
  for (std::size_t a = 0; a < rho.size(); ++a) g += rho[a] * (rhat[static_cast<std::size_t>(best)] - rhat[a]);
  return g;
}

inline CounterRng stream(const CounterRng& base, int round, Stream purpose) {
  return base.split(static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(purpose));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Paired-feedback process

/// Any predictable policy; receives the round and the smoothed posterior of the previous round.
using PolicyHook = std::function<std::vector<double>(int round, std::span<const double> smoothed_prev)>;

struct BanditOptions {
  bool paired = true;            // draw the ghost coordinate
  bool virtual_arm = true;       // draw the proof-side arm from its own stream
  std::uint64_t ghost_salt = 0;  // changes ghost draws only
  PolicyHook policy;             // default: pi_s = smoothed posterior of round s-1
};

struct BanditRound {
  int t = 0;
  std::vector<double> pi;
  int arm_pair[2] = {0, 0};
  double reward_pair[2] = {0.0, 0.0};
  int u = 0;
  int arm = 0;
  double reward = 0.0;
  std::vector<double> rhat, rho, rho_tilde;
  double epsilon = 0.0, epsilon_next = 0.0, gamma = 0.0;
  int virtual_arm = -1;
  double gap_tilde = 0.0;   // Delta(rho_tilde_t)
  double gap_exp = 0.0;     // Delta(rho_t)
  double emp_gap = 0.0;     // Delta-hat_t(rho_t)
  double cumulative = 0.0;  // sum over s <= t of Delta(rho_tilde_s)
};

class BanditProcess {
 public:
  BanditProcess(BanditEnv env, Schedule sched, std::uint64_t seed, std::uint64_t replica, BanditOptions opts = {})
      : env_(std::move(env)), sched_(std::move(sched)), base_(CounterRng{seed}.split(replica)), opts_(std::move(opts)) {
    const auto K = static_cast<std::size_t>(env_.arms());
    sums_.assign(K, 0.0);
    next_policy_.assign(K, 1.0 / static_cast<double>(K));
    r_.rhat.assign(K, 0.0);
    r_.rho.assign(K, 0.0);
    r_.rho_tilde.assign(K, 0.0);
  }

  [[nodiscard]] int rounds_done() const noexcept { return r_.t; }
  [[nodiscard]] const BanditEnv& env() const noexcept { return env_; }

  const BanditRound& step() {
    const int s = r_.t + 1;
    const auto K = static_cast<std::size_t>(env_.arms());
    r_.t = s;
    r_.epsilon = sched_.epsilon(s);
    r_.pi = opts_.policy ? opts_.policy(s, next_policy_) : next_policy_;
    if (r_.pi.size() != K) throw ScheduleViolation("policy has wrong length", s);
    double total = 0.0;
    for (double p : r_.pi) {
      if (p < r_.epsilon - 1e-12) throw ScheduleViolation("policy below exploration floor epsilon_s", s);
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ScheduleViolation("policy does not sum to 1", s);

    const auto feedback = detail::stream(base_, s, Stream::feedback);
    r_.u = detail::stream(base_, s, Stream::selector).bernoulli(0.5) ? 1 : 0;
    auto draw = [&](CounterRng g, int& arm, double& reward) {
      arm = static_cast<int>(g.categorical(r_.pi));
      const auto& law = env_.law(arm);
      reward = law.values[g.categorical(law.probs)];
    };
    // The selected coordinate always comes from sub-stream 0, so ghost draws
    // (sub-stream 1, salted) cannot reach the learner.
    draw(feedback.split(0), r_.arm, r_.reward);
    r_.arm_pair[r_.u] = r_.arm;
    r_.reward_pair[r_.u] = r_.reward;
    if (opts_.paired) {
      draw(feedback.split(1, opts_.ghost_salt), r_.arm_pair[1 - r_.u], r_.reward_pair[1 - r_.u]);
    } else {
      r_.arm_pair[1 - r_.u] = -1;
      r_.reward_pair[1 - r_.u] = std::nan("");
    }

    sums_[static_cast<std::size_t>(r_.arm)] += r_.reward / r_.pi[static_cast<std::size_t>(r_.arm)];
    for (std::size_t a = 0; a < K; ++a) r_.rhat[a] = sums_[a] / s;
    r_.gamma = sched_.gamma(s);
    r_.epsilon_next = sched_.epsilon(s + 1);
    detail::exp_weights(r_.rhat, r_.gamma, r_.rho);
    detail::smooth(r_.rho, r_.epsilon_next, r_.rho_tilde);
    r_.virtual_arm = opts_.virtual_arm
                         ? static_cast<int>(detail::stream(base_, s, Stream::virtual_arm).categorical(r_.rho))
                         : -1;
    r_.gap_tilde = env_.gap(r_.rho_tilde);
    r_.gap_exp = env_.gap(r_.rho);
    r_.emp_gap = detail::estimate_gap(r_.rhat, env_.best(), r_.rho);
    r_.cumulative += r_.gap_tilde;
    next_policy_ = r_.rho_tilde;
    return r_;
  }

 private:
  BanditEnv env_;
  Schedule sched_;
  CounterRng base_;
  BanditOptions opts_;
  std::vector<double> sums_;
  std::vector<double> next_policy_;
  BanditRound r_;
};

struct BanditRun {
  BanditEnv env;
  std::vector<BanditRound> rounds;
};

inline BanditRun run_bandit(const BanditEnv& env, const Schedule& sched, int horizon, std::uint64_t seed,
                            std::uint64_t replica = 0, BanditOptions opts = {}) {
  if (horizon < 1) throw std::invalid_argument("run_bandit: horizon must be >= 1");
  sched.validate(env.arms(), horizon);
  BanditProcess proc(env, sched, seed, replica, std::move(opts));
  BanditRun run{env, {}};
  run.rounds.reserve(static_cast<std::size_t>(horizon));
  for (int s = 1; s <= horizon; ++s) run.rounds.push_back(proc.step());
  return run;
}

/// Selected-feedback gap statistic G_s(a) = R_s^{a*} - R_s^a.
inline double selected_gap(const BanditEnv& env, const BanditRound& r, int a) {
  auto weighted = [&](int b) { return r.arm == b ? r.reward / r.pi[static_cast<std::size_t>(b)] : 0.0; };
  return weighted(env.best()) - weighted(a);
}

/// (1/t) sum_s G_{s,U_s}(rho) over the first t rounds (all rounds when t <= 0).
inline double empirical_gap(const BanditRun& run, std::span<const double> rho, int t = 0) {
  if (run.rounds.empty()) throw std::invalid_argument("empirical_gap: needs t >= 1");
  const int T = t > 0 ? t : static_cast<int>(run.rounds.size());
  if (T > static_cast<int>(run.rounds.size())) throw std::invalid_argument("empirical_gap: t beyond run");
  if (rho.size() != static_cast<std::size_t>(run.env.arms())) throw SchemaError("empirical_gap: rho has wrong length");
  double s = 0.0;
  for (int i = 0; i < T; ++i)
    for (int a = 0; a < run.env.arms(); ++a)
      s += rho[static_cast<std::size_t>(a)] * selected_gap(run.env, run.rounds[static_cast<std::size_t>(i)], a);
  return s / T;
}

// ---------------------------------------------------------------------------
// Monte Carlo ensembles

struct CheckpointValues {
  double gap_tilde = 0.0, gap_exp = 0.0, emp_gap = 0.0, kl = 0.0, cumulative = 0.0;
  std::vector<double> m_mean;     // (1/t) sum_s M_s(a)
  std::vector<double> m_sq_mean;  // (1/t) sum_s M_s(a)^2
  double m_abs_max = 0.0;         // max over s <= t and a of |M_s(a)|
};

/// Pathwise worst cases over every round of one seed; each should be <= 0.
struct PathwiseWorst {
  double floor = -INFINITY;          // max_s,a eps_s - pi_s(a)
  double normalization = 0.0;        // max |sum rho - 1|, |sum rho_tilde - 1|
  double smoothing = -INFINITY;      // max Delta(rho~) - Delta(rho) - K eps_{t+1}
  double expweights = -INFINITY;     // max Delta-hat(rho) - log K / gamma
  double kl = -INFINITY;             // max KL(rho || uniform) - log K
  double smoothed_floor = -INFINITY; // max eps_{t+1} - rho_tilde(a)
};

struct SeedTrace {
  std::vector<CheckpointValues> at;
  PathwiseWorst worst;
};

struct EnsembleOptions {
  std::vector<int> checkpoints;  // defaults to {horizon}
  unsigned parallel = 0;         // 0: hardware concurrency
  bool martingale = true;
  std::size_t chunk = 16;
};

struct BanditEnsemble {
  BanditEnv env;
  Schedule sched;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::vector<int> checkpoints;
  std::vector<SeedTrace> traces;  // in seed order

  [[nodiscard]] std::size_t index_of(int t) const {
    auto it = std::find(checkpoints.begin(), checkpoints.end(), t);
    if (it == checkpoints.end()) throw std::invalid_argument("ensemble: t=" + std::to_string(t) + " is not a checkpoint");
    return static_cast<std::size_t>(it - checkpoints.begin());
  }
};

/// Mean and standard error of the mean.
struct MeanSe {
  double mean = 0.0, se = 0.0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  const double n = static_cast<double>(xs.size());
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

/// Runs `work(i)` for i in [0, count) on worker threads, in chunks.
/// Each index writes only its own slot, so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t count, unsigned threads, std::size_t chunk, F&& work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  chunk = std::max<std::size_t>(chunk, 1);
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, (count + chunk - 1) / chunk));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        try {
          for (std::size_t lo = next.fetch_add(chunk); lo < count; lo = next.fetch_add(chunk))
            for (std::size_t i = lo; i < std::min(count, lo + chunk); ++i) work(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

inline SeedTrace trace_seed(const BanditEnv& env, const Schedule& sched, int horizon, std::uint64_t seed,
                            std::uint64_t replica, const std::vector<int>& checkpoints, bool martingale) {
  BanditOptions opts;
  opts.paired = false;
  opts.virtual_arm = false;
  BanditProcess proc(env, sched, seed, replica, opts);
  const auto K = static_cast<std::size_t>(env.arms());
  const double logk = std::log(static_cast<double>(K));
  SeedTrace tr;
  tr.at.reserve(checkpoints.size());
  std::vector<double> msum(K, 0.0), msq(K, 0.0);
  double mabs = 0.0;
  std::size_t next = 0;
  auto& w = tr.worst;
  for (int s = 1; s <= horizon && next < checkpoints.size(); ++s) {
    const auto& r = proc.step();
    for (double p : r.pi) w.floor = std::max(w.floor, r.epsilon - p);
    for (double p : r.rho_tilde) w.smoothed_floor = std::max(w.smoothed_floor, r.epsilon_next - p);
    const double srho = std::accumulate(r.rho.begin(), r.rho.end(), 0.0);
    const double stil = std::accumulate(r.rho_tilde.begin(), r.rho_tilde.end(), 0.0);
    w.normalization = std::max({w.normalization, std::abs(srho - 1.0), std::abs(stil - 1.0)});
    w.smoothing = std::max(w.smoothing, r.gap_tilde - r.gap_exp - static_cast<double>(K) * r.epsilon_next);
    const double kl = kl_to_uniform(r.rho);
    w.kl = std::max(w.kl, kl - logk);
    const double cap = r.gamma > 0.0 ? logk / r.gamma : INFINITY;
    w.expweights = std::max(w.expweights, r.emp_gap - cap);
    if (martingale) {
      for (std::size_t a = 0; a < K; ++a) {
        const double m = env.gap(static_cast<int>(a)) - selected_gap(env, r, static_cast<int>(a));
        msum[a] += m;
        msq[a] += m * m;
        mabs = std::max(mabs, std::abs(m));
      }
    }
    if (s == checkpoints[next]) {
      CheckpointValues v;
      v.gap_tilde = r.gap_tilde;
      v.gap_exp = r.gap_exp;
      v.emp_gap = r.emp_gap;
      v.kl = kl;
      v.cumulative = r.cumulative;
      if (martingale) {
        v.m_mean.resize(K);
        v.m_sq_mean.resize(K);
        for (std::size_t a = 0; a < K; ++a) {
          v.m_mean[a] = msum[a] / s;
          v.m_sq_mean[a] = msq[a] / s;
        }
        v.m_abs_max = mabs;
      }
      tr.at.push_back(std::move(v));
      ++next;
    }
  }
  return tr;
}

}  // namespace detail

/// Independent seeds 0..seeds-1 under a base seed. Seeds run in parallel;
/// traces are stored by seed index, so every aggregate is order-fixed.
inline BanditEnsemble run_ensemble(const BanditEnv& env, const Schedule& sched, int horizon, std::size_t seeds,
                                   std::uint64_t seed = 0, EnsembleOptions opts = {}) {
  if (horizon < 1) throw std::invalid_argument("run_ensemble: horizon must be >= 1");
  if (seeds == 0) throw std::invalid_argument("run_ensemble: needs at least one seed");
  sched.validate(env.arms(), horizon);
  auto cps = opts.checkpoints.empty() ? std::vector<int>{horizon} : opts.checkpoints;
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  if (cps.front() < 1 || cps.back() > horizon) throw std::invalid_argument("run_ensemble: checkpoint outside [1, horizon]");
  BanditEnsemble ens{env, sched, horizon, seed, cps, std::vector<SeedTrace>(seeds)};
  parallel_for(seeds, opts.parallel, opts.chunk, [&](std::size_t i) {
    ens.traces[i] = detail::trace_seed(env, sched, horizon, seed, i, cps, opts.martingale);
  });
  return ens;
}

inline std::vector<double> gather(const BanditEnsemble& ens, int t, double CheckpointValues::*field) {
  const auto k = ens.index_of(t);
  std::vector<double> out;
  out.reserve(ens.traces.size());
  for (const auto& tr : ens.traces) out.push_back(tr.at[k].*field);
  return out;
}

inline PathwiseWorst worst_case(const BanditEnsemble& ens) {
  PathwiseWorst w;
  for (const auto& tr : ens.traces) {
    w.floor = std::max(w.floor, tr.worst.floor);
    w.normalization = std::max(w.normalization, tr.worst.normalization);
    w.smoothing = std::max(w.smoothing, tr.worst.smoothing);
    w.expweights = std::max(w.expweights, tr.worst.expweights);
    w.kl = std::max(w.kl, tr.worst.kl);
    w.smoothed_floor = std::max(w.smoothed_floor, tr.worst.smoothed_floor);
  }
  return w;
}

enum class ScmiMode { exact_small, logk_cap };

struct OneStepTerms {
  double smoothing = 0.0, empirical = 0.0, scmi_coefficient = 0.0;
};

/// K eps_{t+1}, 2 log K / gamma_t and 52 / (t eps_t Delta_min).
inline OneStepTerms one_step_terms(const BanditEnv& env, const Schedule& sched, int t, double constant = 52.0) {
  const double K = env.arms(), logk = std::log(K);
  const double g = sched.gamma(t);
  return {K * sched.epsilon(t + 1), g > 0.0 ? 2.0 * logk / g : INFINITY,
          constant / (t * sched.epsilon(t) * env.delta_min())};
}

inline BoundSet one_step_bound_check(const BanditEnsemble& ens, int t, ScmiMode mode = ScmiMode::logk_cap,
                                     const Tolerances& tol = {}) {
  const double logk = std::log(static_cast<double>(ens.env.arms()));
  const auto terms = one_step_terms(ens.env, ens.sched, t);
  std::string note = "t=" + std::to_string(t) + " seeds=" + std::to_string(ens.traces.size());
  if (mode == ScmiMode::exact_small) note += "; exact SCMI not available at Monte Carlo scale, log K cap used";
  BoundSet out;
  const auto lhs = mean_se(gather(ens, t, &CheckpointValues::gap_tilde));
  out.push_back(monte_carlo_report(
      "bandit.one_step", lhs.mean,
      {{"smoothing", terms.smoothing}, {"empirical", terms.empirical}, {"scmi", terms.scmi_coefficient * logk}},
      lhs.se, tol, note));
  // Transfer step on its own: E[Delta(rho)] - 2 E[Delta-hat] <= 52 log K / (t eps Delta_min).
  const auto ge = gather(ens, t, &CheckpointValues::gap_exp);
  auto diff = gather(ens, t, &CheckpointValues::emp_gap);
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = ge[i] - 2.0 * diff[i];
  const auto tr = mean_se(diff);
  out.push_back(monte_carlo_report("bandit.transfer", tr.mean, {{"scmi", terms.scmi_coefficient * logk}}, tr.se, tol, note));
  return out;
}

/// Two-sided zero-mean test: holds when |mean| <= sigmas * se.
inline BoundReport zero_mean_report(std::string name, const MeanSe& m, const Tolerances& tol = {}, std::string note = {}) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = std::abs(m.mean);
  r.rhs_terms = {{"sigmas*se", tol.sigmas * m.se}};
  r.margin = r.rhs() - r.lhs;
  r.mode = BoundReport::Mode::monte_carlo;
  r.std_error = m.se;
  r.note = std::move(note);
  r.verdict = r.margin >= -1e-12 ? BoundReport::Verdict::holds : BoundReport::Verdict::violated;
  return r;
}

/// Ordinary-MI baseline with constant 6, plus the fixed-arm Bernstein inputs
/// b = 2/eps_t and B = 2/(eps_t Delta_min) as side checks.
inline BoundSet ordinary_mi_bound_check(const BanditEnsemble& ens, int t, const Tolerances& tol = {}) {
  const auto& env = ens.env;
  const double logk = std::log(static_cast<double>(env.arms()));
  const auto terms = one_step_terms(env, ens.sched, t, 6.0);
  const double eps = ens.sched.epsilon(t);
  const std::string note = "t=" + std::to_string(t);
  BoundSet out;
  const auto lhs = mean_se(gather(ens, t, &CheckpointValues::gap_tilde));
  out.push_back(monte_carlo_report(
      "bandit.ordinary_mi", lhs.mean,
      {{"smoothing", terms.smoothing}, {"empirical", terms.empirical}, {"mi", terms.scmi_coefficient * logk}}, lhs.se,
      tol, note));
  const auto k = ens.index_of(t);
  if (ens.traces.front().at[k].m_mean.empty()) {
    out.push_back(inconclusive_report("bandit.ordinary_mi.martingale", "martingale tracking disabled"));
    return out;
  }
  double mabs = 0.0;
  for (const auto& tr : ens.traces) mabs = std::max(mabs, tr.at[k].m_abs_max);
  out.push_back(exact_report("bandit.ordinary_mi.range", mabs, {{"b", 2.0 / eps}}, tol, note + " pathwise"));
  for (int a = 0; a < env.arms(); ++a) {
    std::vector<double> m, sq;
    for (const auto& tr : ens.traces) {
      m.push_back(tr.at[k].m_mean[static_cast<std::size_t>(a)]);
      sq.push_back(tr.at[k].m_sq_mean[static_cast<std::size_t>(a)]);
    }
    const std::string arm = "[a=" + std::to_string(a) + "]";
    out.push_back(zero_mean_report("bandit.ordinary_mi.martingale" + arm, mean_se(m), tol, note));
    const auto v = mean_se(sq);
    out.push_back(monte_carlo_report("bandit.ordinary_mi.variance" + arm, v.mean,
                                     {{"B*Delta(a)", 2.0 / (eps * env.delta_min()) * env.gap(a)}}, v.se, tol, note));
  }
  return out;
}

/// Pathwise checks over every round of every seed.
inline BoundSet pathwise_checks(const BanditEnsemble& ens, const Tolerances& tol = {}) {
  const auto w = worst_case(ens);
  const std::string note = "worst over " + std::to_string(ens.traces.size()) + " seeds";
  return {
      exact_report("bandit.policy_floor", w.floor, {}, tol, note),
      exact_report("bandit.smoothed_floor", w.smoothed_floor, {}, tol, note),
      exact_report("bandit.normalization", w.normalization, {}, Tolerances{1e-12, tol.sigmas}, note),
      exact_report("bandit.smoothing_cost", w.smoothing, {}, tol, note),
      exact_report("bandit.expweights", w.expweights, {}, tol, note),
      exact_report("bandit.kl_logk", w.kl, {}, tol, note),
  };
}

inline BoundSet entropy_reduction_check(const BanditEnsemble& ens, int t, const Tolerances& tol = {}) {
  const double logk = std::log(static_cast<double>(ens.env.arms()));
  BoundSet out;
  out.push_back(inconclusive_report("bandit.entropy_reduction",
                                    "SCMI sum not computable at Monte Carlo scale; falls back to the log K cap"));
  double worst = 0.0;
  for (double kl : gather(ens, t, &CheckpointValues::kl)) worst = std::max(worst, kl);
  out.push_back(exact_report("bandit.kl_logk", worst, {{"logK", logk}}, tol, "max over seeds at t=" + std::to_string(t)));
  return out;
}

// ---------------------------------------------------------------------------
// Regret curves

struct RegretCurve {
  std::string schedule;
  std::vector<int> t;
  std::vector<double> mean, se;  // cumulative sum_t E[Delta(rho_tilde_t)]
  double slope = 0.0, intercept = 0.0;
  int fit_from = 0, fit_to = 0;
};

inline std::vector<int> log_grid(int horizon, int points = 60) {
  std::vector<int> out;
  for (int i = 0; i < points; ++i) {
    const double x = std::exp(std::log(static_cast<double>(horizon)) * i / (points - 1));
    out.push_back(std::clamp(static_cast<int>(std::lround(x)), 1, horizon));
  }
  out.push_back(horizon);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Least-squares slope of log y on log x over points with x in [lo, hi].
inline std::pair<double, double> loglog_fit(std::span<const int> x, std::span<const double> y, int lo, int hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi || !(y[i] > 0.0)) continue;
    const double lx = std::log(static_cast<double>(x[i])), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, n += 1;
  }
  if (n < 2) throw std::invalid_argument("loglog_fit: fewer than two points in the window");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// Curve from an ensemble whose checkpoints include the fit window [lo, horizon].
inline RegretCurve regret_curve(const BanditEnsemble& ens, int lo) {
  RegretCurve c;
  c.schedule = ens.sched.name;
  c.t = ens.checkpoints;
  for (int t : c.t) {
    const auto m = mean_se(gather(ens, t, &CheckpointValues::cumulative));
    c.mean.push_back(m.mean);
    c.se.push_back(m.se);
  }
  c.fit_from = lo;
  c.fit_to = ens.horizon;
  std::tie(c.slope, c.intercept) = loglog_fit(c.t, c.mean, lo, ens.horizon);
  return c;
}

/// Checkpoints used by regret_curve: the log grid plus horizon / 10.
inline std::vector<int> regret_checkpoints(int horizon, int grid_points = 60) {
  auto cps = log_grid(horizon, grid_points);
  cps.push_back(std::max(1, horizon / 10));
  return cps;
}

inline RegretCurve regret_curve(const BanditEnv& env, const Schedule& sched, int horizon, std::size_t seeds,
                                std::uint64_t seed = 0, unsigned parallel = 0, int grid_points = 60) {
  EnsembleOptions opts;
  opts.checkpoints = regret_checkpoints(horizon, grid_points);
  opts.parallel = parallel;
  opts.martingale = false;
  return regret_curve(run_ensemble(env, sched, horizon, seeds, seed, opts), std::max(1, horizon / 10));
}

inline void write_regret_csv(std::ostream& os, const RegretCurve& c) {
  os << "schedule,t,cumulative_regret,std_error\n";
  for (std::size_t i = 0; i < c.t.size(); ++i)
    os << c.schedule << ',' << c.t[i] << ',' << format_number(c.mean[i]) << ',' << format_number(c.se[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Exact enumeration of the paired process

struct ExactRound {
  std::vector<double> pi;
  int arm[2] = {0, 0};
  double reward[2] = {0.0, 0.0};
  int u = 0;
  std::vector<double> rhat, rho, rho_tilde;
};

struct ExactPath {
  double prob = 0.0;
  std::vector<ExactRound> rounds;
};

struct ExactBandit {
  BanditEnv env;
  Schedule sched;
  int horizon = 0;
  std::vector<ExactPath> paths;
};

inline constexpr std::size_t kExactPathCap = std::size_t{1} << 17;

/// All selector/feedback paths of length `horizon`. The default cap admits
/// K = 2, T = 3 with binary rewards.
inline ExactBandit enumerate_bandit(const BanditEnv& env, const Schedule& sched, int horizon,
                                    std::size_t cap = kExactPathCap) {
  if (horizon < 1) throw std::invalid_argument("enumerate_bandit: horizon must be >= 1");
  sched.validate(env.arms(), horizon);
  std::size_t outcomes = 0;
  for (int a = 0; a < env.arms(); ++a) outcomes += env.law(a).values.size();
  double count = 1.0;
  for (int s = 1; s <= horizon; ++s) {
    count *= 2.0 * static_cast<double>(outcomes * outcomes);
    if (count > static_cast<double>(cap))
      throw EnumerationTooLarge("bandit enumeration exceeds " + std::to_string(cap) + " paths", s);
  }
  const auto K = static_cast<std::size_t>(env.arms());
  ExactBandit eb{env, sched, horizon, {}};
  eb.paths.reserve(static_cast<std::size_t>(count));
  ExactPath cur;
  std::vector<double> sums(K, 0.0);

  struct Outcome {
    int arm;
    double reward, prob;
  };
  auto outcomes_of = [&](const std::vector<double>& pi) {
    std::vector<Outcome> o;
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t i = 0; i < env.law(static_cast<int>(a)).values.size(); ++i) {
        const double p = pi[a] * env.law(static_cast<int>(a)).probs[i];
        if (p > 0.0) o.push_back({static_cast<int>(a), env.law(static_cast<int>(a)).values[i], p});
      }
    return o;
  };

  std::function<void(int, const std::vector<double>&, double)> rec = [&](int s, const std::vector<double>& pi,
                                                                          double prob) {
    if (s > horizon) {
      cur.prob = prob;
      eb.paths.push_back(cur);
      return;
    }
    const auto outs = outcomes_of(pi);
    for (const auto& o0 : outs)
      for (const auto& o1 : outs)
        for (int u = 0; u < 2; ++u) {
          ExactRound r;
          r.pi = pi;
          r.arm[0] = o0.arm, r.arm[1] = o1.arm;
          r.reward[0] = o0.reward, r.reward[1] = o1.reward;
          r.u = u;
          const int sel = r.arm[u];
          const double add = r.reward[u] / pi[static_cast<std::size_t>(sel)];
          sums[static_cast<std::size_t>(sel)] += add;
          r.rhat.resize(K);
          for (std::size_t a = 0; a < K; ++a) r.rhat[a] = sums[a] / s;
          r.rho.resize(K);
          r.rho_tilde.resize(K);
          detail::exp_weights(r.rhat, sched.gamma(s), r.rho);
          detail::smooth(r.rho, sched.epsilon(s + 1), r.rho_tilde);
          const auto next = r.rho_tilde;
          cur.rounds.push_back(std::move(r));
          rec(s + 1, next, prob * o0.prob * o1.prob * 0.5);
          cur.rounds.pop_back();
          sums[static_cast<std::size_t>(sel)] -= add;
        }
  };
  rec(1, std::vector<double>(K, 1.0 / static_cast<double>(K)), 1.0);
  return eb;
}

/// G_{s,u}(a) for one exact round.
inline double pair_gap(const BanditEnv& env, const ExactRound& r, int u, int a) {
  auto weighted = [&](int b) { return r.arm[u] == b ? r.reward[u] / r.pi[static_cast<std::size_t>(b)] : 0.0; };
  return weighted(env.best()) - weighted(a);
}

namespace detail {

inline Names bandit_context(int s) {
  Names g;
  for (int r = 1; r <= s; ++r) {
    for (const char* c : {"A0", "R0", "A1", "R1"}) g.push_back(col(c, r));
    if (r < s) g.push_back(col("U", r));
  }
  return g;
}

}  // namespace detail

/// Joint law of the paired transcript up to round t and the virtual arm drawn
/// from rho_t. Columns per round: A0 R0 A1 R1 U A R X (X = G_{s,0}(Abar)).
inline DiscreteJoint virtual_joint(const ExactBandit& eb, int t) {
  if (t < 1 || t > eb.horizon) throw std::invalid_argument("virtual_joint: t outside [1, horizon]");
  Names schema;
  for (int s = 1; s <= t; ++s)
    for (const char* c : {"A0", "R0", "A1", "R1", "U", "A", "R", "X"}) schema.push_back(col(c, s));
  schema.push_back("Abar");
  DiscreteJoint j(schema);
  j.reserve(eb.paths.size() * static_cast<std::size_t>(eb.env.arms()));
  std::vector<double> row(schema.size());
  for (const auto& p : eb.paths) {
    const auto& rho = p.rounds[static_cast<std::size_t>(t - 1)].rho;
    for (int ab = 0; ab < eb.env.arms(); ++ab) {
      const double w = p.prob * rho[static_cast<std::size_t>(ab)];
      if (w <= 0.0) continue;
      std::size_t k = 0;
      for (int s = 1; s <= t; ++s) {
        const auto& r = p.rounds[static_cast<std::size_t>(s - 1)];
        row[k++] = r.arm[0];
        row[k++] = r.reward[0];
        row[k++] = r.arm[1];
        row[k++] = r.reward[1];
        row[k++] = r.u;
        row[k++] = r.arm[r.u];
        row[k++] = r.reward[r.u];
        row[k++] = pair_gap(eb.env, r, 0, ab);
      }
      row[k] = ab;
      j.add_atom(row, w);
    }
  }
  return j;
}

/// Every exact expectation used by the exact checks at horizon t.
struct ExactTerms {
  int t = 0;
  double eps = 0.0, eps_next = 0.0, gamma = 0.0;
  double gap_tilde = 0.0, gap_exp = 0.0, emp_gap = 0.0;
  double max_smoothing_excess = -INFINITY;  // max Delta(rho~) - Delta(rho)
  double max_emp_gap = -INFINITY;           // max Delta-hat_t(rho_t)
  double selected_virtual = 0.0, ghost_virtual = 0.0, row_swap = 0.0;
  std::vector<double> swap0, swap1;                  // E[sign_s G_{s,u}(Abar)]
  std::vector<double> ghost_sq_u1, ghost_gap_u1;     // E[G_{s,0}^2 | U_s=1], E[Delta(rho) | U_s=1]
  std::vector<double> square;                        // E[G_{s,0}(Abar)^2]
  std::vector<double> scmi, arm_info;                // I(X_s;U_s|G_{s-1}), I(Abar;U_s|G_{s-1})
  double scmi_sum = 0.0, arm_info_sum = 0.0;
  double total_info = 0.0;   // I(Abar; all rows and selectors)
  double kl_marginal = 0.0;  // E KL(rho || law of Abar)
  double kl_uniform = 0.0;   // E KL(rho || uniform)
  double ordinary_mi = 0.0;  // I(Abar; selected history)
  DiscreteJoint joint;
};

inline ExactTerms exact_terms(const ExactBandit& eb, int t) {
  const auto& env = eb.env;
  const int K = env.arms();
  ExactTerms e;
  e.t = t;
  e.eps = eb.sched.epsilon(t);
  e.eps_next = eb.sched.epsilon(t + 1);
  e.gamma = eb.sched.gamma(t);
  e.swap0.assign(static_cast<std::size_t>(t), 0.0);
  e.swap1 = e.square = e.ghost_sq_u1 = e.ghost_gap_u1 = e.swap0;
  std::vector<double> q(static_cast<std::size_t>(K), 0.0);
  for (const auto& p : eb.paths) {
    const auto& last = p.rounds[static_cast<std::size_t>(t - 1)];
    const double dt = env.gap(last.rho_tilde), de = env.gap(last.rho);
    const double dh = detail::estimate_gap(last.rhat, env.best(), last.rho);
    e.gap_tilde += p.prob * dt;
    e.gap_exp += p.prob * de;
    e.emp_gap += p.prob * dh;
    e.max_smoothing_excess = std::max(e.max_smoothing_excess, dt - de);
    e.max_emp_gap = std::max(e.max_emp_gap, dh);
    e.kl_uniform += p.prob * detail::kl_to_uniform(last.rho);
    for (int a = 0; a < K; ++a) {
      const double w = p.prob * last.rho[static_cast<std::size_t>(a)];
      q[static_cast<std::size_t>(a)] += w;
      for (int s = 0; s < t; ++s) {
        const auto& r = p.rounds[static_cast<std::size_t>(s)];
        const double g0 = pair_gap(env, r, 0, a), g1 = pair_gap(env, r, 1, a);
        const double sign = 2.0 * r.u - 1.0;
        e.selected_virtual += w * (r.u ? g1 : g0);
        e.ghost_virtual += w * (r.u ? g0 : g1);
        e.swap0[static_cast<std::size_t>(s)] += w * sign * g0;
        e.swap1[static_cast<std::size_t>(s)] += w * sign * g1;
        e.square[static_cast<std::size_t>(s)] += w * g0 * g0;
        if (r.u == 1) {
          e.ghost_sq_u1[static_cast<std::size_t>(s)] += 2.0 * w * g0 * g0;
          e.ghost_gap_u1[static_cast<std::size_t>(s)] += 2.0 * w * env.gap(a);
        }
      }
    }
  }
  e.selected_virtual /= t;
  e.ghost_virtual /= t;
  for (double v : e.swap0) e.row_swap += 2.0 * v / t;
  for (const auto& p : eb.paths) {
    const auto& rho = p.rounds[static_cast<std::size_t>(t - 1)].rho;
    e.kl_marginal += p.prob * kl_divergence(rho, q).nats;
  }

  e.joint = virtual_joint(eb, t);
  Names all, selected;
  for (int s = 1; s <= t; ++s) {
    const auto ctx = detail::bandit_context(s);
    e.scmi.push_back(conditional_mutual_information(e.joint, Names{col("X", s)}, Names{col("U", s)}, ctx).nats);
    e.arm_info.push_back(conditional_mutual_information(e.joint, Names{"Abar"}, Names{col("U", s)}, ctx).nats);
    e.scmi_sum += e.scmi.back();
    e.arm_info_sum += e.arm_info.back();
    for (const char* c : {"A0", "R0", "A1", "R1", "U"}) all.push_back(col(c, s));
    selected.push_back(col("A", s));
    selected.push_back(col("R", s));
  }
  e.total_info = mutual_information(e.joint, Names{"Abar"}, all).nats;
  e.ordinary_mi = mutual_information(e.joint, Names{"Abar"}, selected).nats;
  return e;
}

/// E[X^2] <= (3/2) E[X^2 | U=1] + 20 b^2 I(X;U|G), given |X| <= b and a fair selector.
inline BoundReport selector_square_check(const DiscreteJoint& joint, const std::string& x, const std::string& u,
                                         const Names& g, double b, const Tolerances& tol = {},
                                         std::string name = "bandit.selector_square") {
  const auto cx = joint.column(x), cu = joint.column(u);
  const auto cg = joint.columns(g);
  TupleIndexer ig(cg);
  std::vector<double> mass, mass_u1;
  double ex2 = 0.0, ex2_u1 = 0.0, pu1 = 0.0, xmax = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const auto r = joint.row(i);
    const double p = joint.prob(i);
    const auto id = ig.id(r);
    if (id >= mass.size()) mass.resize(id + 1, 0.0), mass_u1.resize(id + 1, 0.0);
    mass[id] += p;
    const double xv = r[cx];
    xmax = std::max(xmax, std::abs(xv));
    ex2 += p * xv * xv;
    if (r[cu] == 1.0) {
      mass_u1[id] += p;
      pu1 += p;
      ex2_u1 += p * xv * xv;
    }
  }
  for (std::size_t k = 0; k < mass.size(); ++k)
    if (std::abs(mass_u1[k] - 0.5 * mass[k]) > 1e-9 * std::max(1.0, mass[k]))
      return inconclusive_report(std::move(name), "premise failed: P(U=1|G) != 1/2");
  if (xmax > b * (1.0 + 1e-12) + 1e-15) return inconclusive_report(std::move(name), "premise failed: |X| > b");
  const double info = conditional_mutual_information(joint, Names{x}, Names{u}, g).nats;
  return exact_report(std::move(name), ex2, {{"selected", 1.5 * (pu1 > 0.0 ? ex2_u1 / pu1 : 0.0)}, {"info", 20.0 * b * b * info}},
                      tol);
}

/// Exact-instance checks of the one-step bound (exact SCMI sum or log K cap).
inline BoundReport one_step_bound_check(const ExactTerms& e, const BanditEnv& env, const Schedule& sched,
                                        ScmiMode mode = ScmiMode::exact_small, const Tolerances& tol = {}) {
  const auto terms = one_step_terms(env, sched, e.t);
  const double budget = mode == ScmiMode::exact_small ? e.scmi_sum : std::log(static_cast<double>(env.arms()));
  return exact_report(mode == ScmiMode::exact_small ? "bandit.one_step_exact" : "bandit.one_step_logk", e.gap_tilde,
                      {{"smoothing", terms.smoothing}, {"empirical", terms.empirical},
                       {"scmi", terms.scmi_coefficient * budget}},
                      tol, "t=" + std::to_string(e.t));
}

/// SCMI sum <= sum I(Abar;U_s|G) <= I(Abar; transcript) = E KL(rho||q) <= E KL(rho||uniform) <= log K.
inline BoundSet entropy_reduction_check(const ExactTerms& e, int arms, const Tolerances& tol = {}) {
  const std::string note = "t=" + std::to_string(e.t);
  return {
      exact_report("bandit.entropy.data_processing", e.scmi_sum, {{"arm_info", e.arm_info_sum}}, tol, note),
      exact_report("bandit.entropy.chain_rule", e.arm_info_sum, {{"total_info", e.total_info}}, tol, note),
      identity_report("bandit.entropy.kl_identity", e.total_info, e.kl_marginal, tol, note),
      exact_report("bandit.entropy_reduction", e.scmi_sum, {{"kl_uniform", e.kl_uniform}}, tol, note),
      exact_report("bandit.entropy.logk", e.kl_uniform, {{"logK", std::log(static_cast<double>(arms))}}, tol, note),
  };
}

inline BoundSet ordinary_mi_bound_check(const ExactTerms& e, const BanditEnv& env, const Schedule& sched,
                                        const Tolerances& tol = {}) {
  const auto terms = one_step_terms(env, sched, e.t, 6.0);
  const double c = 1.0 / (e.t * e.eps * env.delta_min());
  const std::string note = "t=" + std::to_string(e.t);
  return {
      exact_report("bandit.ordinary_mi.transfer", e.gap_exp,
                   {{"empirical", 10.0 / 7.0 * e.emp_gap}, {"mi", 40.0 / 7.0 * c * e.ordinary_mi}}, tol, note),
      exact_report("bandit.ordinary_mi", e.gap_tilde,
                   {{"smoothing", terms.smoothing}, {"empirical", terms.empirical}, {"mi", 6.0 * c * e.ordinary_mi}}, tol,
                   note),
      exact_report("bandit.ordinary_mi.kl", e.ordinary_mi, {{"kl_uniform", e.kl_uniform}}, tol, note),
  };
}

/// Every step of the bandit analysis on an exact instance at horizon t.
inline BoundSet exact_bandit_checks(const ExactBandit& eb, int t, const Tolerances& tol = {}) {
  const auto& env = eb.env;
  const auto e = exact_terms(eb, t);
  const double K = env.arms(), logk = std::log(K);
  const double dmin = env.delta_min();
  const std::string note = "t=" + std::to_string(t);
  BoundSet out;
  const double smoothing = e.gap_tilde - e.gap_exp, transfer = e.gap_exp - 2.0 * e.emp_gap, empirical = 2.0 * e.emp_gap;
  out.push_back(identity_report("bandit.decomposition", smoothing + transfer + empirical, e.gap_tilde, tol, note));
  out.push_back(exact_report("bandit.smoothing_cost", e.max_smoothing_excess, {{"K*eps", K * e.eps_next}}, tol, note));
  out.push_back(exact_report("bandit.expweights", e.max_emp_gap, {{"logK/gamma", e.gamma > 0.0 ? logk / e.gamma : INFINITY}},
                             tol, note));
  out.push_back(identity_report("bandit.virtual_selected", e.emp_gap, e.selected_virtual, tol, note));
  out.push_back(identity_report("bandit.virtual_ghost", e.gap_exp, e.ghost_virtual, tol, note));
  out.push_back(identity_report("bandit.row_swap", e.gap_exp - e.emp_gap, e.row_swap, tol, note));
  double square_mean = 0.0;
  for (int s = 1; s <= t; ++s) {
    const auto k = static_cast<std::size_t>(s - 1);
    const std::string tag = "[s=" + std::to_string(s) + "]";
    out.push_back(identity_report("bandit.row_swap_local" + tag, e.swap1[k], -e.swap0[k], tol, note));
    out.push_back(exact_report("bandit.ghost_second_moment" + tag, e.ghost_sq_u1[k],
                               {{"B*gap", 2.0 / (e.eps * dmin) * e.ghost_gap_u1[k]}}, tol, note));
    out.push_back(selector_square_check(e.joint, col("X", s), col("U", s), detail::bandit_context(s), 1.0 / e.eps, tol,
                                        "bandit.selector_square" + tag));
    square_mean += e.square[k] / t;
  }
  out.push_back(exact_report("bandit.square_sum", square_mean,
                             {{"gap", 6.0 / (e.eps * dmin) * e.gap_exp}, {"info", 20.0 / (t * e.eps * e.eps) * e.scmi_sum}},
                             tol, note));
  out.push_back(exact_report("bandit.scmi_transfer", e.gap_exp,
                             {{"empirical", 2.0 * e.emp_gap}, {"scmi", 52.0 / (t * e.eps * dmin) * e.scmi_sum}}, tol, note));
  append(out, entropy_reduction_check(e, env.arms(), tol));
  out.push_back(one_step_bound_check(e, env, eb.sched, ScmiMode::exact_small, tol));
  out.push_back(one_step_bound_check(e, env, eb.sched, ScmiMode::logk_cap, tol));
  append(out, ordinary_mi_bound_check(e, env, eb.sched, tol));
  return out;
}

}  // namespace sscmi
