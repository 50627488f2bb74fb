#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "localdim/net.hpp"
#include "localdim/shallow.hpp"
#include "localdim/train.hpp"

namespace localdim {

// ---- The width-1 example: f(x) = v relu(wx + b) + c on X = (0, 1, 2) ----

Architecture toy_architecture();
Sample toy_sample();

/// Region of the parameter plane in the figure numbering (1..6).
int toy_region(const Params& params);

/// Parameters in a requested toy region reaching that region's generic rank.
Params toy_params_in_region(int region);

/// Full-batch gradient descent census over random initializations:
/// region occupancy at initialization, after training, and conditional on
/// the initialization region.
struct ToyTableConfig {
  int runs = 10000;
  long long iters = 300;
  double lr = 0.1;
  std::array<double, 3> targets{0.0, 1.0, 3.0};
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;  // when set: table.csv + summary.json
};

struct ToyTableResult {
  std::array<double, 6> init_row{};
  std::array<double, 6> final_row{};
  std::array<std::array<double, 6>, 6> conditional{};  // [init][final]
  std::array<int, 6> init_counts{};
  std::array<int, 6> final_counts{};
  std::array<std::array<int, 6>, 6> joint_counts{};
  int runs = 0;
};

ToyTableResult run_toy_table(const ToyTableConfig& config);

/// Single-trajectory study of the plateau-and-drop dynamics on the toy
/// example with an asymmetric target; scans seeds for a run crossing the
/// all-active, tail-active and last-active regions in that order.
struct SaddleConfig {
  int seeds = 20;
  long long iters = 300;
  double lr = 0.1;
  std::array<double, 3> targets{1.0, 0.0, 5.0};
  long long plateau_window = 20;
  double plateau_rel_drop = 1e-3;
  std::uint64_t seed = 1;
  std::string out_dir;  // when set: run_<k>.csv per seed + manifest.json
};

struct SaddleRun {
  std::uint64_t seed = 0;
  std::vector<int> region_sequence;  // consecutive duplicates collapsed
  std::vector<std::pair<long long, long long>> plateaus;
  bool crossing = false;  // visits regions 4 -> 5 -> 6 in order
};

struct SaddleResult {
  std::vector<SaddleRun> runs;
  int first_crossing_with_plateaus = -1;  // index into runs, -1 when absent
};

SaddleResult run_saddle(const SaddleConfig& config);

// ---- Piecewise-linear recovery with a width-10 shallow net ----

/// Three-segment target on [1, 20] used by the recovery experiment.
double cpl_target(double x);

struct CplConfig {
  int runs = 50;
  int width = 10;
  int sample_size = 25;
  double x_lo = 1.0, x_hi = 20.0;
  double lr = 0.01;
  double stop_loss = 1e-5;
  long long max_iters = 200000;
  int grid = 10000;  // fine grid for the total-region count
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;  // when set: runs.csv + manifest.json
};

struct CplRun {
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  int local_dim = 0;
  int seen_regions = 0;
  int total_regions = 0;
  bool bounds_hold = false;  // seen/2 <= local_dim <= 2*seen
  bool converged = false;    // reached stop_loss
};

std::vector<CplRun> run_cpl_recovery(const CplConfig& config);

// ---- Desk-scale classification sweeps (synthetic stand-in for the
//      large-image experiments; IDX files can be supplied instead) ----

struct Dataset {
  Eigen::MatrixXd X;  // one column per example
  Eigen::MatrixXd Y;  // one-hot targets
  std::vector<int> labels;
};

/// Three Gaussian blobs in the plane, balanced classes.
Dataset make_blobs(int count, std::uint64_t seed);

/// Reads <dir>/(train|t10k)-(images|labels)-idx[31]-ubyte, first `count`.
Dataset load_idx_dataset(const std::string& dir, bool train, int count);

struct SweepConfig {
  std::vector<int> widths{2, 4, 6, 8, 12, 16};  // width sweep
  int width = 8;                                // epoch sweep
  int seeds = 10;                               // epoch sweep
  // The rank decline is a long-training effect: it emerges well after the
  // training error reaches zero, so the epoch sweep trains far past fitting.
  long long epochs = 6000;
  std::vector<long long> record_epochs{1, 1000, 3000, 6000};  // epoch sweep
  int batch = 256;
  double lr = 0.1;
  int n_train = 600;
  int n_test = 2000;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;
  std::string data_dir;  // optional IDX directory
};

struct SweepRow {
  int width = 0;
  std::uint64_t seed = 0;
  long long epoch = 0;
  int rank_train = 0;
  int rank_test = 0;
  int max_rank = 0;
  double train_loss = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
};

/// One row per width, measured at the end of training.
std::vector<SweepRow> run_width_sweep(const SweepConfig& config);

/// One row per (seed, recorded epoch) at fixed width.
std::vector<SweepRow> run_epoch_sweep(const SweepConfig& config);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace localdim
