#include <chrono>
#include <cmath>
#include <limits>

#include "stereoloc/backend.hpp"
#include "stereoloc/error.hpp"

namespace stereoloc {

PartTimes& PartTimes::operator+=(const PartTimes& o) {
  ju += o.ju;
  se += o.se;
  cfs += o.cfs;
  cc += o.cc;
  gre += o.gre;
  return *this;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kMaxIterations: return "max-iterations";
    case Termination::kRelativeCostChange: return "relative-cost-change";
    case Termination::kGradient: return "gradient";
    case Termination::kLambda: return "lambda";
    case Termination::kCost: return "cost";
  }
  return "unknown";
}

GainDecision gain_ratio(double cost_old, double cost_new, double predicted_reduction, double lambda,
                        double nu) {
  GainDecision d;
  if (!(predicted_reduction > 0)) {
    d.model_error = true;
    d.rho = 0;
  } else {
    d.rho = (cost_old - cost_new) / predicted_reduction;
    d.accept = d.rho > 0;
  }
  if (d.accept) {
    const double t = 2 * d.rho - 1;
    d.lambda = lambda * std::max(1.0 / 3.0, 1.0 - t * t * t);
    d.nu = 2;
  } else {
    d.lambda = lambda * nu;
    d.nu = 2 * nu;
  }
  return d;
}

double predicted_reduction(const Linearization& lin, const Increment& inc, double lambda) {
  double sum = 0;
  for (int j = 0; j < lin.num_pose_params; ++j) {
    const Vec6 d = inc.poses.segment<6>(6 * j);
    sum += d.dot(lambda * lin.pose_damping(j).cwiseProduct(d) + lin.pose_gradient[static_cast<std::size_t>(j)]);
  }
  for (std::size_t i = 0; i < inc.landmarks.size(); ++i) {
    const Vec3& d = inc.landmarks[i];
    sum += d.dot(lambda * lin.landmark_damping(static_cast<int>(i)).cwiseProduct(d) + lin.landmark_gradient[i]);
  }
  return sum;
}

BAState apply_increment(const BAState& state, const Linearization& lin, const Increment& inc) {
  BAState next = state;
  for (std::size_t j = 0; j < next.poses.size(); ++j) {
    const int p = lin.pose_param[j];
    if (p >= 0) next.poses[j] = se3_exp(Vec6(inc.poses.segment<6>(6 * p))) * next.poses[j];
  }
  for (std::size_t i = 0; i < next.landmarks.size(); ++i) next.landmarks[i] += inc.landmarks[i];
  return next;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CostEval {
  double cost = 0;
  std::size_t usable = 0;
};

CostEval evaluate(const BAProblem& problem, const BAState& state) {
  CostEval e;
  for (const auto& obs : problem.observations) {
    if (!obs.visible) continue;
    if (auto r = residual(problem, obs, state)) {
      e.cost += r->squaredNorm();
      ++e.usable;
    }
  }
  return e;
}

}  // namespace

LmResult lm_optimize(const BAProblem& problem, const LmConfig& config) {
  problem.validate();
  const auto start = Clock::now();
  LmReport report;
  BAState state = BAState::initial(problem);
  state.lambda = config.initial_lambda;
  double nu = 2;

  auto t = Clock::now();
  CostEval current = evaluate(problem, state);
  report.times.cc += seconds_since(t);
  state.cost = current.cost;
  report.initial_cost = current.cost;

  t = Clock::now();
  Linearization lin = jacobian_update(problem, state);
  report.times.ju += seconds_since(t);

  bool last_failed_numerically = false;
  report.termination = Termination::kMaxIterations;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (state.cost <= config.min_cost) {
      report.termination = Termination::kCost;
      break;
    }
    if (lin.gradient_max_norm() < config.gradient_tolerance) {
      report.termination = Termination::kGradient;
      break;
    }
    if (state.lambda > config.max_lambda) {
      if (last_failed_numerically) {
        throw Error(ErrorCode::kNumericalFailure, "damping exhausted without a solvable step");
      }
      report.termination = Termination::kLambda;
      break;
    }

    ++report.iterations;
    state.iteration = report.iterations;
    IterationRecord rec;
    rec.iteration = report.iterations;
    rec.lambda = state.lambda;

    Increment inc;
    bool solved = true;
    try {
      t = Clock::now();
      const ReducedSystem sys = schur_eliminate(lin, state.lambda);
      // Without free poses the system is block diagonal: inverting the
      // landmark blocks is the whole solve, not an elimination.
      (lin.num_pose_params > 0 ? report.times.se : report.times.cfs) += seconds_since(t);
      t = Clock::now();
      inc = cholesky_solve(sys);
      report.times.cfs += seconds_since(t);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumericalFailure && e.code() != ErrorCode::kIndefiniteSystem) throw;
      solved = false;
    }
    last_failed_numerically = !solved;

    BAState candidate;
    CostEval next{std::numeric_limits<double>::infinity(), 0};
    if (solved) {
      candidate = apply_increment(state, lin, inc);
      t = Clock::now();
      next = evaluate(problem, candidate);
      report.times.cc += seconds_since(t);
      // A step that pushes landmarks behind a camera would shrink the cost by
      // dropping terms; it is not a descent step.
      if (next.usable < current.usable) next.cost = std::numeric_limits<double>::infinity();
    }

    t = Clock::now();
    const double predicted = solved ? predicted_reduction(lin, inc, state.lambda) : 0.0;
    const GainDecision decision = gain_ratio(state.cost, next.cost, predicted, state.lambda, nu);
    report.times.gre += seconds_since(t);

    rec.rho = decision.rho;
    rec.accepted = decision.accept;
    nu = decision.nu;
    if (decision.accept) {
      const double old_cost = state.cost;
      candidate.lambda = decision.lambda;
      candidate.iteration = state.iteration;
      candidate.cost = next.cost;
      state = std::move(candidate);
      current = next;
      ++report.accepted;
      rec.cost = state.cost;
      report.trace.push_back(rec);

      if (old_cost > 0 && (old_cost - state.cost) / old_cost < config.relative_cost_tolerance) {
        report.termination = Termination::kRelativeCostChange;
        break;
      }
      t = Clock::now();
      lin = jacobian_update(problem, state);
      report.times.ju += seconds_since(t);
    } else {
      state.lambda = decision.lambda;
      rec.cost = state.cost;
      report.trace.push_back(rec);
    }
  }

  report.final_cost = state.cost;
  report.wall_time = seconds_since(start);
  return {std::move(state.poses), std::move(state.landmarks), std::move(report)};
}

double rms_reprojection(const BAProblem& problem, const std::vector<Pose>& poses,
                        const std::vector<Landmark>& landmarks) {
  BAState s;
  s.poses = poses;
  s.landmarks = landmarks;
  const CostEval e = evaluate(problem, s);
  return e.usable ? std::sqrt(e.cost / (2.0 * static_cast<double>(e.usable))) : 0.0;
}

}  // namespace stereoloc
