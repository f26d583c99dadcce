#pragma once

// The CEI agent (trigger logic around plan, belief and risk) and the coupled
// two-vehicle simulation loop.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "cei/belief.hpp"
#include "cei/params.hpp"
#include "cei/perception.hpp"
#include "cei/planner.hpp"
#include "cei/risk.hpp"
#include "cei/scenario.hpp"

namespace cei {

enum class Mode { kStochastic, kNoiseFree };

constexpr std::string_view to_string(Mode m) { return m == Mode::kStochastic ? "stochastic" : "noise_free"; }

inline Mode parse_mode(std::string_view text) {
  if (text == "stochastic") return Mode::kStochastic;
  if (text == "noise_free") return Mode::kNoiseFree;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (expected stochastic|noise_free)");
}

// splitmix64 finalizer; all seed derivation goes through it.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) {
  return mix_seed(seed ^ mix_seed(value));
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Per-trial seed; independent of scheduling order and worker count.
inline std::uint64_t derive_trial_seed(std::uint64_t base_seed, int pair, const Condition& condition,
                                       int repetition) {
  std::uint64_t s = combine_seed(base_seed, static_cast<std::uint64_t>(pair));
  s = combine_seed(s, fnv1a(condition.label()));
  return combine_seed(s, static_cast<std::uint64_t>(repetition));
}

enum class ReplanTrigger { kInitial, kUpper, kLower, kDesiredVelocity, kRetry };

constexpr std::string_view to_string(ReplanTrigger t) {
  switch (t) {
    case ReplanTrigger::kInitial: return "initial";
    case ReplanTrigger::kUpper: return "upper";
    case ReplanTrigger::kLower: return "lower";
    case ReplanTrigger::kDesiredVelocity: return "velocity";
    default: return "retry";
  }
}

struct ReplanEvent {
  ReplanTrigger trigger = ReplanTrigger::kInitial;
  PlanConstraint constraint = PlanConstraint::kNone;
  Fallback fallback = Fallback::kNone;

  /// "upper", or "upper+full_brake" when the optimization was infeasible.
  std::string str() const {
    std::string s(to_string(trigger));
    if (fallback != Fallback::kNone) s += "+" + std::string(to_string(fallback));
    return s;
  }
};

/// What an agent sees of the other vehicle at the start of a step.
struct Observation {
  double front_position = 0.0;
  double velocity = 0.0;
  double net_acceleration = 0.0;

  static Observation of(const VehicleState& s) { return {s.front_position, s.velocity, s.net_acceleration}; }
};

struct AgentOutput {
  double risk = std::numeric_limits<double>::quiet_NaN();
  double rho_l = std::numeric_limits<double>::quiet_NaN();
  double rho_u = std::numeric_limits<double>::quiet_NaN();
  double perceived_velocity = std::numeric_limits<double>::quiet_NaN();
  double executed_acceleration = 0.0;
  std::optional<ReplanEvent> event;
};

struct AgentOptions {
  Mode mode = Mode::kStochastic;
  bool incentives_enabled = true;
};

/// One CEI driver: perception, belief, risk evaluation of the held plan and
/// the re-plan triggers.
class Agent {
 public:
  Agent(Side side, const DriverParams& params, const ModelConfig& config, const Condition& condition,
        const VehicleState& own_initial, const Observation& other_initial, std::uint64_t seed,
        AgentOptions options = {})
      : side_(side),
        config_(&config),
        options_(options),
        desired_velocity_(own_initial.velocity),
        projected_dp_(condition.headway_for(side)),
        projected_dv_(condition.relative_velocity_for(side)),
        perception_rng_(combine_seed(seed, 1)),
        execution_rng_(combine_seed(seed, 2)),
        perceived_{other_initial.front_position, other_initial.velocity,
                   AccelerationMemory(config.constants.memory_span)} {
    thresholds_.theta_l = params.theta_l;
    thresholds_.theta_u = params.theta_u;
    thresholds_.lambda = options.incentives_enabled ? config.incentive : IncentiveCoefficients::disabled();
  }

  /// Advances perception and, once `control` is set, the plan/risk/trigger logic.
  /// Returns the acceleration to execute over the coming step.
  AgentOutput step(const VehicleState& own, const Observation& other, double t, bool control) {
    const auto& c = config_->constants;
    const double draw =
        options_.mode == Mode::kStochastic ? draw_wiener_increment(perception_rng_, c.dt) : 0.0;
    perceived_.perceived_velocity =
        update_perceived_velocity(perceived_.perceived_velocity, other.velocity, c.alpha, c.beta, draw);
    perceived_.position = other.front_position;
    perceived_.memory.push(other.net_acceleration, t);

    AgentOutput out;
    out.perceived_velocity = perceived_.perceived_velocity;
    if (!control) return out;

    const Belief belief = build_belief(perceived_, config_->belief(), t);
    const ThresholdPair rho = current_thresholds(own, other);
    out.rho_l = rho.rho_l;
    out.rho_u = rho.rho_u;
    const PlannerSettings planner = config_->planner();

    std::optional<ReplanEvent> event;
    if (!plan_) {
      // Forced plan at tunnel exit: unconstrained unless that already exceeds rho_u.
      auto candidate = optimize_plan(own, belief, 1.0, desired_velocity_, planner, config_->track);
      out.risk = candidate->risk_at_creation;
      if (out.risk > rho.rho_u) {
        event = replan(ReplanTrigger::kInitial, PlanConstraint::kBelowLowerFraction, own, other, belief, rho, t);
      } else {
        adopt(std::move(*candidate), PlanConstraint::kNone);
        event = ReplanEvent{ReplanTrigger::kInitial, PlanConstraint::kNone, Fallback::kNone};
      }
      previous_velocity_error_ = own.velocity - desired_velocity_;
    } else {
      out.risk = max_risk(planned_fronts(plan_->commanded_acceleration, own, planner), belief, config_->track);

      const double velocity_error = own.velocity - desired_velocity_;
      const bool crossed = (previous_velocity_error_ > 0.0 && velocity_error <= 0.0) ||
                           (previous_velocity_error_ < 0.0 && velocity_error >= 0.0);
      previous_velocity_error_ = velocity_error;

      if (out.risk < rho.rho_l) {
        if (!below_lower_since_) below_lower_since_ = t;
      } else {
        below_lower_since_.reset();
      }

      if (retry_constraint_) {
        event = replan(ReplanTrigger::kRetry, *retry_constraint_, own, other, belief, rho, t);
      } else if (out.risk > rho.rho_u) {
        event = replan(ReplanTrigger::kUpper, PlanConstraint::kBelowLowerFraction, own, other, belief, rho, t);
      } else if (below_lower_since_ && t - *below_lower_since_ >= c.tau - 1e-9) {
        event = replan(ReplanTrigger::kLower, PlanConstraint::kBelowUpperFraction, own, other, belief, rho, t);
      } else if (crossed && plan_->executed_acceleration != 0.0) {
        event = replan(ReplanTrigger::kDesiredVelocity, plan_->constraint, own, other, belief, rho, t);
      }
    }
    if (event) below_lower_since_.reset();

    out.event = event;
    out.executed_acceleration = plan_->executed_acceleration;
    return out;
  }

  Side side() const { return side_; }
  const std::optional<Plan>& plan() const { return plan_; }
  const PerceivedOther& perceived() const { return perceived_; }
  double desired_velocity() const { return desired_velocity_; }
  const std::optional<double>& below_lower_since() const { return below_lower_since_; }
  bool fallback_active() const { return retry_constraint_.has_value(); }

  ThresholdPair current_thresholds(const VehicleState& own, const Observation& other) const {
    if (config_->incentive_delta == IncentiveDelta::kProjected) {
      return evaluate_thresholds(thresholds_, projected_dp_, projected_dv_);
    }
    return evaluate_thresholds(thresholds_, own.front_position - other.front_position,
                               own.velocity - other.velocity);
  }

 private:
  double ceiling_for(PlanConstraint constraint, const ThresholdPair& rho) const {
    const auto& c = config_->constants;
    switch (constraint) {
      case PlanConstraint::kBelowLowerFraction: return c.upper_replan_fraction * rho.rho_l;
      case PlanConstraint::kBelowUpperFraction: return c.lower_replan_fraction * rho.rho_u;
      default: return 1.0;
    }
  }

  ReplanEvent replan(ReplanTrigger trigger, PlanConstraint constraint, const VehicleState& own,
                     const Observation& other, const Belief& belief, const ThresholdPair& rho, double t) {
    const PlannerSettings planner = config_->planner();
    auto plan = optimize_plan(own, belief, ceiling_for(constraint, rho), desired_velocity_, planner,
                              config_->track);
    if (plan) {
      retry_constraint_.reset();
      adopt(std::move(*plan), constraint);
    } else {
      // Re-optimized every step until a feasible plan exists again.
      retry_constraint_ = constraint;
      Plan fallback = fallback_plan(own, other.front_position, planner, t);
      fallback.risk_ceiling = ceiling_for(constraint, rho);
      fallback.risk_at_creation = max_risk(fallback.front_positions(), belief, config_->track);
      adopt(std::move(fallback), constraint);
    }
    return {trigger, constraint, plan_->fallback};
  }

  void adopt(Plan plan, PlanConstraint constraint) {
    plan.constraint = constraint;
    double draw = 0.0;
    if (options_.mode == Mode::kStochastic) {
      std::normal_distribution<double> normal(0.0, config_->constants.sigma_n);
      draw = normal(execution_rng_);
    }
    plan.executed_acceleration = apply_execution_noise(plan.commanded_acceleration, draw,
                                                       config_->constants.a_max, config_->execution_noise);
    plan_ = std::move(plan);
  }

  Side side_;
  const ModelConfig* config_;
  AgentOptions options_;
  RiskThresholds thresholds_;
  double desired_velocity_;
  double projected_dp_;
  double projected_dv_;
  std::mt19937_64 perception_rng_;
  std::mt19937_64 execution_rng_;
  PerceivedOther perceived_;
  std::optional<Plan> plan_;
  std::optional<double> below_lower_since_;
  std::optional<PlanConstraint> retry_constraint_;
  double previous_velocity_error_ = 0.0;
};

// ---------------------------------------------------------------------------
// Trial log

struct AgentRecord {
  double risk = std::numeric_limits<double>::quiet_NaN();
  double rho_l = std::numeric_limits<double>::quiet_NaN();
  double rho_u = std::numeric_limits<double>::quiet_NaN();
  double perceived_velocity = std::numeric_limits<double>::quiet_NaN();
  double executed_acceleration = std::numeric_limits<double>::quiet_NaN();
  std::string event;  // empty when no re-plan happened this step

  static AgentRecord from(const AgentOutput& o) {
    return {o.risk, o.rho_l, o.rho_u, o.perceived_velocity, o.executed_acceleration,
            o.event ? o.event->str() : std::string()};
  }
};

struct StepRecord {
  double t = 0.0;
  VehicleState left;
  VehicleState right;
  AgentRecord left_agent;
  AgentRecord right_agent;

  const VehicleState& vehicle(Side s) const { return s == Side::kLeft ? left : right; }
  const AgentRecord& agent(Side s) const { return s == Side::kLeft ? left_agent : right_agent; }
};

enum class Outcome { kCompleted, kCollision, kTimeout, kStopped };

constexpr std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kCompleted: return "completed";
    case Outcome::kCollision: return "collision";
    case Outcome::kTimeout: return "timeout";
    default: return "stopped";
  }
}

inline Outcome parse_outcome(std::string_view s) {
  if (s == "completed") return Outcome::kCompleted;
  if (s == "collision") return Outcome::kCollision;
  if (s == "timeout") return Outcome::kTimeout;
  if (s == "stopped") return Outcome::kStopped;
  throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

struct TrialLog {
  std::string source = "model";  // "model" or a tag for ingested external data
  int pair = 0;
  Condition condition;
  int repetition = 0;
  std::uint64_t seed = 0;
  Mode mode = Mode::kStochastic;
  double dt = 0.05;
  Outcome outcome = Outcome::kCompleted;
  std::optional<double> collision_time;
  std::vector<StepRecord> steps;

  bool external() const { return source != "model"; }
  bool collided() const { return outcome == Outcome::kCollision; }
};

struct TrialOptions {
  Mode mode = Mode::kStochastic;
  bool incentives_enabled = true;
  std::optional<Side> passive_side;          // constant-velocity opponent (calibration grids)
  std::optional<double> stop_after_exit;     // seconds of control before stopping
};

/// One coupled trial: tunnel phase at constant velocity with perception
/// running, then both agents act on start-of-step snapshots of each other.
inline TrialLog run_trial(const Condition& condition, const PairParams& pair, std::uint64_t seed,
                          const ModelConfig& config, const TrialOptions& options = {}) {
  const auto& c = config.constants;
  const Track& track = config.track;
  auto [left, right] = initial_states(condition, track);

  TrialLog log;
  log.pair = pair.pair;
  log.condition = condition;
  log.seed = seed;
  log.mode = options.mode;
  log.dt = c.dt;

  const AgentOptions agent_options{options.mode, options.incentives_enabled};
  Agent left_agent(Side::kLeft, pair.left, config, condition, left, Observation::of(right),
                   combine_seed(seed, 0x1e), agent_options);
  Agent right_agent(Side::kRight, pair.right, config, condition, right, Observation::of(left),
                    combine_seed(seed, 0x21), agent_options);

  const double finish = track.total_length() + track.vehicle_length;
  const auto max_steps = static_cast<long>(std::ceil(c.timeout / c.dt - 1e-9));
  std::optional<long> exit_step;
  log.steps.reserve(400);

  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * c.dt;
    StepRecord row{t, left, right, {}, {}};

    if (detect_collision(left, right, track)) {
      log.outcome = Outcome::kCollision;
      log.collision_time = t;
      log.steps.push_back(row);
      break;
    }
    if (left.front_position >= finish && right.front_position >= finish) {
      log.outcome = Outcome::kCompleted;
      log.steps.push_back(row);
      break;
    }
    if (k >= max_steps) {
      log.outcome = Outcome::kTimeout;
      log.steps.push_back(row);
      break;
    }
    if (!exit_step && left.front_position >= track.tunnel_length &&
        right.front_position >= track.tunnel_length) {
      exit_step = k;
    }
    if (exit_step && options.stop_after_exit &&
        static_cast<double>(k - *exit_step) * c.dt >= *options.stop_after_exit - 1e-9) {
      log.outcome = Outcome::kStopped;
      log.steps.push_back(row);
      break;
    }
    const bool control = exit_step.has_value();

    const Observation left_seen = Observation::of(left);
    const Observation right_seen = Observation::of(right);
    const bool left_passive = options.passive_side == Side::kLeft;
    const bool right_passive = options.passive_side == Side::kRight;
    const AgentOutput lo = left_passive ? AgentOutput{} : left_agent.step(left, right_seen, t, control);
    const AgentOutput ro = right_passive ? AgentOutput{} : right_agent.step(right, left_seen, t, control);
    row.left_agent = AgentRecord::from(lo);
    row.right_agent = AgentRecord::from(ro);
    log.steps.push_back(std::move(row));

    // A passive opponent keeps its velocity exactly (resistance-compensated).
    left = step_dynamics(left, lo.executed_acceleration, c.dt, !control || left_passive);
    right = step_dynamics(right, ro.executed_acceleration, c.dt, !control || right_passive);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Batches

struct BatchJob {
  PairParams params;
  Condition condition;
  int repetition = 0;
  std::uint64_t seed = 0;
};

/// Jobs ordered by (pair, condition, repetition).
inline std::vector<BatchJob> plan_batch(const std::vector<PairParams>& pairs,
                                        const std::vector<Condition>& conditions, int repetitions,
                                        std::uint64_t base_seed) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  std::vector<BatchJob> jobs;
  jobs.reserve(pairs.size() * conditions.size() * static_cast<std::size_t>(repetitions));
  for (const auto& p : pairs) {
    for (const auto& cond : conditions) {
      for (int r = 0; r < repetitions; ++r) {
        jobs.push_back({p, cond, r, derive_trial_seed(base_seed, p.pair, cond, r)});
      }
    }
  }
  return jobs;
}

/// Applies `fn(index)` for index in [0, count) on `workers` threads; results
/// are stored by index so output order never depends on scheduling.
template <class F>
auto parallel_map(std::size_t count, int workers, F&& fn) {
  using Result = std::decay_t<std::invoke_result_t<F&, std::size_t>>;
  std::vector<std::optional<Result>> slots(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) slots[i].emplace(fn(i));
  };
  const int n = std::max(1, workers);
  if (n == 1 || count < 2) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Runs every job and maps each finished TrialLog through `reduce`.
template <class Reduce>
auto run_batch_map(const std::vector<BatchJob>& jobs, const ModelConfig& config, Mode mode, int workers,
                   Reduce&& reduce) {
  return parallel_map(jobs.size(), workers, [&](std::size_t i) {
    const BatchJob& job = jobs[i];
    TrialOptions options;
    options.mode = mode;
    TrialLog log = run_trial(job.condition, job.params, job.seed, config, options);
    log.repetition = job.repetition;
    return reduce(std::move(log));
  });
}

inline std::vector<TrialLog> run_batch(const std::vector<PairParams>& pairs,
                                       const std::vector<Condition>& conditions, int repetitions,
                                       std::uint64_t base_seed, int workers, const ModelConfig& config,
                                       Mode mode = Mode::kStochastic) {
  const auto jobs = plan_batch(pairs, conditions, repetitions, base_seed);
  return run_batch_map(jobs, config, mode, workers, [](TrialLog log) { return log; });
}

}  // namespace cei
