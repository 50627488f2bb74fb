#include "localdim/train.hpp"

#include <algorithm>
#include <cmath>

#include "localdim/jacobian.hpp"
#include "localdim/rank.hpp"
#include "localdim/shallow.hpp"

namespace localdim {

double loss_value(const Objective& obj, const Eigen::MatrixXd& output) {
  const double n = static_cast<double>(output.cols());
  switch (obj.kind) {
    case LossKind::MSE:
      return (output - obj.targets).squaredNorm() / n;
    case LossKind::CrossEntropy:
      return -(obj.targets.array() * output.array().log()).sum() / n;
  }
  return 0.0;
}

Eigen::MatrixXd loss_output_grad(const Objective& obj, const Eigen::MatrixXd& output) {
  const double n = static_cast<double>(output.cols());
  switch (obj.kind) {
    case LossKind::MSE:
      return (2.0 / n) * (output - obj.targets);
    case LossKind::CrossEntropy:
      return (-(obj.targets.array() / output.array()) / n).matrix();
  }
  return {};
}

namespace {

void check_objective(const Architecture& arch, const Sample& sample, const Objective& obj) {
  if (obj.targets.rows() != arch.output_dim() || obj.targets.cols() != sample.count())
    throw ConfigError("objective: target shape does not match output");
  if (obj.kind == LossKind::CrossEntropy && arch.out_act != OutputActivation::Softmax)
    throw ConfigError("objective: cross-entropy requires a softmax output");
}

}  // namespace

Eigen::VectorXd loss_gradient(const Architecture& arch, const Params& params,
                              const Sample& sample, const Objective& obj) {
  check_objective(arch, sample, obj);
  const ForwardTrace trace = forward(arch, params, sample);
  return backprop_gradient(arch, params, trace, loss_output_grad(obj, trace.output()));
}

Params gd_step(const Architecture& arch, const Params& params, const Sample& sample,
               const Objective& obj, double lr) {
  if (!(lr > 0.0)) throw DomainError("gd_step: learning rate must be positive");
  return Params::unflatten(arch, params.flatten() - lr * loss_gradient(arch, params, sample, obj));
}

namespace {

void apply_adam(AdamState& state, Eigen::VectorXd& flat, const Eigen::VectorXd& grad,
                double lr, double beta1, double beta2, double eps) {
  if (state.m.size() != grad.size()) {
    state.m = Eigen::VectorXd::Zero(grad.size());
    state.v = Eigen::VectorXd::Zero(grad.size());
    state.t = 0;
  }
  state.t += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  flat -= lr * ((state.m / c1).array() / ((state.v / c2).array().sqrt() + eps)).matrix();
}

}  // namespace

Params adam_step(AdamState& state, const Architecture& arch, const Params& params,
                 const Sample& sample, const Objective& obj, double lr,
                 double beta1, double beta2, double eps) {
  if (!(lr > 0.0)) throw DomainError("adam_step: learning rate must be positive");
  const Eigen::VectorXd grad = loss_gradient(arch, params, sample, obj);
  Eigen::VectorXd flat = params.flatten();
  apply_adam(state, flat, grad, lr, beta1, beta2, eps);
  return Params::unflatten(arch, flat);
}

namespace {

struct HookContext {
  bool have_ordered = false;
  OrderedSample ordered;
};

Snapshot take_snapshot(const Architecture& arch, const Params& params,
                       const Sample& sample, const ForwardTrace& trace, double loss,
                       long long iter, const TrajectoryConfig& cfg, HookContext& ctx) {
  Snapshot snap;
  snap.iteration = iter;
  snap.theta_hash = params.hash();
  snap.loss = loss;
  if (cfg.record_cones) {
    if (!ctx.have_ordered) {
      if (arch.input_dim() != 1)
        throw ConfigError("run_trajectory: cone recording needs 1-D inputs");
      ctx.ordered = OrderedSample::from(sample.X.row(0));
      ctx.have_ordered = true;
    }
    ActivationPattern pattern = activation_pattern(trace);
    // decode over the sorted sample order
    ActivationPattern sorted = pattern;
    for (int k = 0; k < ctx.ordered.n(); ++k)
      sorted.bits.col(k) = pattern.bits.col(ctx.ordered.perm[k]);
    snap.cones = cone_code(sorted, ctx.ordered).alpha;
    snap.seen_regions = seen_regions(pattern);
  }
  if (cfg.record_local_dim)
    snap.local_dim = numerical_rank(jacobian(arch, params, sample)).rank;
  if (cfg.record_projection && sample.count() == 3 && arch.output_dim() == 1) {
    const Eigen::Vector3d y(trace.output()(0, 0), trace.output()(0, 1),
                            trace.output()(0, 2));
    const Eigen::Vector2d p = project_output_plane(y);
    snap.proj_x = p.x();
    snap.proj_y = p.y();
  }
  return snap;
}

}  // namespace

Trajectory run_trajectory(const Architecture& arch, const Params& theta0,
                          const Sample& sample, const Objective& obj,
                          const TrajectoryConfig& config) {
  if (config.iters < 1) throw DomainError("run_trajectory: iters must be >= 1");
  if (config.record_every < 1) throw DomainError("run_trajectory: record_every must be >= 1");
  check_objective(arch, sample, obj);

  Trajectory traj;
  traj.config = config;
  HookContext ctx;

  Params params = theta0;
  ForwardTrace trace;
  forward_into(arch, params, sample.X, trace);
  double loss = loss_value(obj, trace.output());
  traj.losses.push_back(loss);
  traj.snapshots.push_back(take_snapshot(arch, params, sample, trace, loss, 0, config, ctx));

  AdamState adam;
  long long it = 0;
  while (it < config.iters) {
    const Eigen::VectorXd grad =
        backprop_gradient(arch, params, trace, loss_output_grad(obj, trace.output()));
    Eigen::VectorXd flat = params.flatten();
    if (config.optimizer == OptimizerKind::GradientDescent)
      flat -= config.lr * grad;
    else
      apply_adam(adam, flat, grad, config.lr, 0.9, 0.999, 1e-8);
    params = Params::unflatten(arch, flat);
    ++it;

    forward_into(arch, params, sample.X, trace);
    loss = loss_value(obj, trace.output());
    traj.losses.push_back(loss);

    const bool stop = (config.stop_loss >= 0.0 && loss < config.stop_loss);
    const bool diverged = !(loss <= config.divergence_loss);  // also catches NaN
    if (it % config.record_every == 0 || it == config.iters || stop || diverged)
      traj.snapshots.push_back(
          take_snapshot(arch, params, sample, trace, loss, it, config, ctx));
    if (diverged) {
      traj.aborted = true;
      break;
    }
    if (stop) break;
  }
  traj.final_iter = it;
  traj.final_params = std::move(params);
  return traj;
}

std::vector<std::pair<long long, long long>> detect_plateaus(
    const std::vector<double>& losses, long long window, double rel_drop) {
  std::vector<std::pair<long long, long long>> plateaus;
  const long long T = static_cast<long long>(losses.size()) - 1;
  if (window < 1 || T < window) return plateaus;

  auto flat = [&](long long t) {
    const double drop = losses[t] - losses[t + window];
    return drop <= rel_drop * std::max(losses[t], 1e-300);
  };

  long long t = 0;
  while (t <= T - window) {
    if (!flat(t)) {
      ++t;
      continue;
    }
    const long long start = t;
    while (t <= T - window && flat(t)) ++t;
    plateaus.emplace_back(start, (t - 1) + window);
  }
  return plateaus;
}

std::vector<std::pair<long long, long long>> detect_plateaus(const Trajectory& traj,
                                                             long long window,
                                                             double rel_drop) {
  return detect_plateaus(traj.losses, window, rel_drop);
}

}  // namespace localdim
