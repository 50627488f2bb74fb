#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "localdim/net.hpp"

namespace localdim {

enum class LossKind { MSE, CrossEntropy };

/// Learning objective with targets, one column per example.
/// MSE(theta) = (1/n) sum_i |f(x_i) - y_i|^2.
/// CrossEntropy(theta) = -(1/n) sum_i <y_i, log f(x_i)>; requires a softmax
/// output and column-stochastic (e.g. one-hot) targets.
struct Objective {
  LossKind kind = LossKind::MSE;
  Eigen::MatrixXd targets;
};

double loss_value(const Objective& obj, const Eigen::MatrixXd& output);

/// dR/dy at the network output, laid out like the output matrix. Feeding it
/// to backprop_gradient yields the full parameter gradient.
Eigen::MatrixXd loss_output_grad(const Objective& obj, const Eigen::MatrixXd& output);

Eigen::VectorXd loss_gradient(const Architecture& arch, const Params& params,
                              const Sample& sample, const Objective& obj);

/// One full-batch gradient-descent step theta - lr * grad.
Params gd_step(const Architecture& arch, const Params& params, const Sample& sample,
               const Objective& obj, double lr);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long t = 0;
};

/// Standard Adam with bias correction, full batch.
Params adam_step(AdamState& state, const Architecture& arch, const Params& params,
                 const Sample& sample, const Objective& obj, double lr,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

enum class OptimizerKind { GradientDescent, Adam };

struct TrajectoryConfig {
  OptimizerKind optimizer = OptimizerKind::GradientDescent;
  double lr = 0.1;
  long long iters = 300;
  long long record_every = 1;
  bool record_local_dim = false;
  bool record_cones = false;      // per-neuron cone codes (1-D shallow nets only)
  bool record_projection = false; // output projected onto the toy plane (n = 3)
  double stop_loss = -1.0;        // stop early once loss < stop_loss (if >= 0)
  double divergence_loss = 1e12;  // abort when the loss exceeds this
  std::uint64_t seed = 0;         // bookkeeping only; recorded in the output
};

struct Snapshot {
  long long iteration = 0;
  std::uint64_t theta_hash = 0;
  double loss = 0.0;
  std::vector<int> cones;  // empty unless record_cones
  int local_dim = -1;
  int seen_regions = -1;
  double proj_x = 0.0, proj_y = 0.0;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<double> losses;  // loss at every iteration 0..final_iter
  bool aborted = false;
  long long final_iter = 0;
  TrajectoryConfig config;
  Params final_params;
};

/// Deterministic optimization run with per-iteration loss recording and
/// optional geometry hooks at the snapshot iterations. The initial point and
/// the final point are always snapshotted.
Trajectory run_trajectory(const Architecture& arch, const Params& theta0,
                          const Sample& sample, const Objective& obj,
                          const TrajectoryConfig& config);

/// Maximal iteration intervals [start, end] on which the windowed relative
/// loss decrease stays below rel_drop. `losses[t]` is the loss at iteration t.
std::vector<std::pair<long long, long long>> detect_plateaus(
    const std::vector<double>& losses, long long window = 20, double rel_drop = 1e-3);

std::vector<std::pair<long long, long long>> detect_plateaus(
    const Trajectory& traj, long long window = 20, double rel_drop = 1e-3);

}  // namespace localdim
