#include "localdim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "localdim/io.hpp"
#include "localdim/jacobian.hpp"
#include "localdim/parallel.hpp"
#include "localdim/rank.hpp"
#include "localdim/rng.hpp"

namespace localdim {

namespace {

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

Architecture toy_architecture() { return Architecture({1, 1, 1}); }

Sample toy_sample() {
  Eigen::MatrixXd X(1, 3);
  X << 0.0, 1.0, 2.0;
  return Sample(X);
}

int toy_region(const Params& params) {
  static const OrderedSample xs = OrderedSample::from(toy_sample().X.row(0));
  const double w = params.weights[0](0, 0);
  const double b = params.biases[0](0);
  return toy_region_from_cone(classify_cone(w, b, xs));
}

Params toy_params_in_region(int region) {
  // (w, b) representatives, one per region of the figure; v = 1, c = 0.
  static const double wb[6][2] = {
      {0.0, -1.0},   // all pre-activations negative
      {-1.0, 0.5},   // first example active
      {-1.0, 1.5},   // first two active
      {1.0, 1.0},    // all active
      {1.0, -0.5},   // last two active
      {1.0, -1.5},   // last example active
  };
  if (region < 1 || region > 6) throw DomainError("toy_params_in_region: region in 1..6");
  Params p;
  p.weights = {Eigen::MatrixXd::Constant(1, 1, wb[region - 1][0]),
               Eigen::MatrixXd::Constant(1, 1, 1.0)};
  p.biases = {Eigen::VectorXd::Constant(1, wb[region - 1][1]),
              Eigen::VectorXd::Zero(1)};
  return p;
}

ToyTableResult run_toy_table(const ToyTableConfig& config) {
  const Architecture arch = toy_architecture();
  const Sample sample = toy_sample();
  Objective obj{LossKind::MSE, Eigen::Map<const Eigen::RowVectorXd>(
                                   config.targets.data(), 3)};

  std::vector<int> init_region(config.runs), final_region(config.runs);
  parallel_for(0, config.runs, config.jobs, [&](int r) {
    const std::uint64_t run_seed = Rng::derive(config.seed, r);
    const Params theta0 = init_params(arch, InitScheme::StdNormal, run_seed);
    TrajectoryConfig tc;
    tc.optimizer = OptimizerKind::GradientDescent;
    tc.lr = config.lr;
    tc.iters = config.iters;
    tc.record_every = config.iters;
    tc.seed = run_seed;
    const Trajectory traj = run_trajectory(arch, theta0, sample, obj, tc);
    init_region[r] = toy_region(theta0);
    final_region[r] = toy_region(traj.final_params);
  });

  ToyTableResult result;
  result.runs = config.runs;
  for (int r = 0; r < config.runs; ++r) {
    ++result.init_counts[init_region[r] - 1];
    ++result.final_counts[final_region[r] - 1];
    ++result.joint_counts[init_region[r] - 1][final_region[r] - 1];
  }
  for (int j = 0; j < 6; ++j) {
    result.init_row[j] = static_cast<double>(result.init_counts[j]) / config.runs;
    result.final_row[j] = static_cast<double>(result.final_counts[j]) / config.runs;
  }
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 6; ++j)
      result.conditional[k][j] =
          result.init_counts[k] == 0
              ? 0.0
              : static_cast<double>(result.joint_counts[k][j]) / result.init_counts[k];

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    std::ofstream csv(join(config.out_dir, "table.csv"));
    csv << "row,U1,U2,U3,U4,U5,U6\n";
    auto emit = [&](const std::string& label, const std::array<double, 6>& row) {
      csv << label;
      for (double v : row) csv << ',' << v;
      csv << '\n';
    };
    emit("P(init in Uj)", result.init_row);
    emit("P(final in Uj)", result.final_row);
    for (int k = 0; k < 6; ++k)
      emit("P(final in Uj | init in U" + std::to_string(k + 1) + ")",
           result.conditional[k]);

    nlohmann::json j;
    j["runs"] = config.runs;
    j["iters"] = config.iters;
    j["lr"] = config.lr;
    j["targets"] = config.targets;
    j["seed"] = config.seed;
    j["init_counts"] = result.init_counts;
    j["final_counts"] = result.final_counts;
    j["init_row"] = result.init_row;
    j["final_row"] = result.final_row;
    j["conditional"] = result.conditional;
    write_text_file(join(config.out_dir, "summary.json"), j.dump(2));
  }
  return result;
}

namespace {

std::vector<int> collapse_regions(const Trajectory& traj) {
  std::vector<int> seq;
  for (const Snapshot& s : traj.snapshots) {
    if (s.cones.empty()) continue;
    const int region = toy_region_from_cone(s.cones[0]);
    if (seq.empty() || seq.back() != region) seq.push_back(region);
  }
  return seq;
}

bool visits_in_order(const std::vector<int>& seq, std::initializer_list<int> want) {
  auto it = seq.begin();
  for (int target : want) {
    it = std::find(it, seq.end(), target);
    if (it == seq.end()) return false;
    ++it;
  }
  return true;
}

}  // namespace

SaddleResult run_saddle(const SaddleConfig& config) {
  const Architecture arch = toy_architecture();
  const Sample sample = toy_sample();
  Objective obj{LossKind::MSE, Eigen::Map<const Eigen::RowVectorXd>(
                                   config.targets.data(), 3)};
  ensure_dir(config.out_dir);

  SaddleResult result;
  nlohmann::json manifest;
  manifest["experiment"] = "saddle";
  manifest["targets"] = config.targets;
  manifest["iters"] = config.iters;
  manifest["lr"] = config.lr;
  manifest["seed"] = config.seed;
  manifest["runs"] = nlohmann::json::array();

  for (int k = 0; k < config.seeds; ++k) {
    const std::uint64_t run_seed = Rng::derive(config.seed, k);
    const Params theta0 = init_params(arch, InitScheme::StdNormal, run_seed);
    TrajectoryConfig tc;
    tc.optimizer = OptimizerKind::GradientDescent;
    tc.lr = config.lr;
    tc.iters = config.iters;
    tc.record_every = 1;
    tc.record_cones = true;
    tc.record_local_dim = true;
    tc.record_projection = true;
    tc.seed = run_seed;
    const Trajectory traj = run_trajectory(arch, theta0, sample, obj, tc);

    SaddleRun run;
    run.seed = run_seed;
    run.region_sequence = collapse_regions(traj);
    run.plateaus = detect_plateaus(traj, config.plateau_window, config.plateau_rel_drop);
    run.crossing = visits_in_order(run.region_sequence, {4, 5, 6});
    if (result.first_crossing_with_plateaus < 0 && run.crossing &&
        run.plateaus.size() >= 2)
      result.first_crossing_with_plateaus = k;

    if (!config.out_dir.empty()) {
      const std::string name = "run_" + std::to_string(k) + ".csv";
      std::ofstream csv(join(config.out_dir, name));
      csv << "iteration,loss,region,local_dim,seen_regions,proj_x,proj_y\n";
      csv.precision(17);
      for (const Snapshot& s : traj.snapshots)
        csv << s.iteration << ',' << s.loss << ','
            << toy_region_from_cone(s.cones[0]) << ',' << s.local_dim << ','
            << s.seen_regions << ',' << s.proj_x << ',' << s.proj_y << '\n';
      nlohmann::json entry;
      entry["csv"] = name;
      entry["seed"] = run_seed;
      entry["regions"] = run.region_sequence;
      entry["plateaus"] = run.plateaus;
      entry["crossing"] = run.crossing;
      manifest["runs"].push_back(entry);
    }
    result.runs.push_back(std::move(run));
  }
  if (!config.out_dir.empty())
    write_text_file(join(config.out_dir, "manifest.json"), manifest.dump(2));
  return result;
}

double cpl_target(double x) {
  // Three segments with hinges at 8 and 14.
  if (x <= 8.0) return 1.0 + (x - 1.0) * (5.0 / 7.0);
  if (x <= 14.0) return 6.0 - (x - 8.0) * (2.0 / 3.0);
  return 2.0 + (x - 14.0) * 0.5;
}

std::vector<CplRun> run_cpl_recovery(const CplConfig& config) {
  // One shared dataset across runs; only the initialization varies.
  Rng data_rng(Rng::derive(config.seed, 0xDA7Aull));
  Eigen::RowVectorXd raw(config.sample_size);
  for (int i = 0; i < config.sample_size; ++i)
    raw[i] = data_rng.uniform(config.x_lo, config.x_hi);
  const OrderedSample ordered = OrderedSample::from(raw);
  const Sample sample = ordered.as_sample();

  Eigen::RowVectorXd targets(config.sample_size);
  for (int i = 0; i < config.sample_size; ++i) targets[i] = cpl_target(ordered.xs[i]);

  const Architecture arch({1, config.width, 1});
  const Objective obj{LossKind::MSE, targets};

  Eigen::RowVectorXd grid(config.grid);
  for (int g = 0; g < config.grid; ++g)
    grid[g] = config.x_lo +
              (config.x_hi - config.x_lo) * g / static_cast<double>(config.grid - 1);
  const Sample grid_sample{Eigen::MatrixXd(grid)};

  std::vector<CplRun> runs(config.runs);
  parallel_for(0, config.runs, config.jobs, [&](int k) {
    const std::uint64_t run_seed = Rng::derive(config.seed, k + 1);
    const Params theta0 = init_params(arch, InitScheme::HeNormal, run_seed);
    TrajectoryConfig tc;
    tc.optimizer = OptimizerKind::Adam;
    tc.lr = config.lr;
    tc.iters = config.max_iters;
    tc.record_every = config.max_iters;
    tc.stop_loss = config.stop_loss;
    tc.seed = run_seed;
    const Trajectory traj = run_trajectory(arch, theta0, sample, obj, tc);

    CplRun run;
    run.seed = run_seed;
    run.final_loss = traj.losses.back();
    run.converged = run.final_loss < config.stop_loss;

    const ForwardTrace trace = forward(arch, traj.final_params, sample);
    run.seen_regions = seen_regions(activation_pattern(trace));
    run.local_dim = local_dimension(arch, traj.final_params, sample).rank;
    run.bounds_hold = 0.5 * run.seen_regions <= run.local_dim &&
                      run.local_dim <= 2.0 * run.seen_regions;
    run.total_regions =
        seen_regions(activation_pattern(forward(arch, traj.final_params, grid_sample)));
    runs[k] = std::move(run);
  });

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    std::ofstream csv(join(config.out_dir, "runs.csv"));
    csv << "seed,final_loss,local_dim,seen_regions,total_regions,bounds_hold,converged\n";
    csv.precision(17);
    for (const CplRun& r : runs)
      csv << r.seed << ',' << r.final_loss << ',' << r.local_dim << ','
          << r.seen_regions << ',' << r.total_regions << ',' << r.bounds_hold << ','
          << r.converged << '\n';
    nlohmann::json manifest;
    manifest["experiment"] = "cpl";
    manifest["runs"] = config.runs;
    manifest["width"] = config.width;
    manifest["sample_size"] = config.sample_size;
    manifest["lr"] = config.lr;
    manifest["stop_loss"] = config.stop_loss;
    manifest["max_iters"] = config.max_iters;
    manifest["seed"] = config.seed;
    manifest["csv"] = "runs.csv";
    write_text_file(join(config.out_dir, "manifest.json"), manifest.dump(2));
  }
  return runs;
}

Dataset make_blobs(int count, std::uint64_t seed) {
  Rng rng(seed);
  const double radius = 2.0, spread = 0.6;
  Dataset data;
  data.X.resize(2, count);
  data.Y = Eigen::MatrixXd::Zero(3, count);
  data.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    const int cls = i % 3;
    const double angle = 2.0 * M_PI * cls / 3.0 + M_PI / 2.0;
    data.X(0, i) = radius * std::cos(angle) + spread * rng.normal();
    data.X(1, i) = radius * std::sin(angle) + spread * rng.normal();
    data.Y(cls, i) = 1.0;
    data.labels[i] = cls;
  }
  return data;
}

Dataset load_idx_dataset(const std::string& dir, bool train, int count) {
  const std::string stem = train ? "train" : "t10k";
  const Eigen::MatrixXd images =
      read_idx_images(join(dir, stem + "-images-idx3-ubyte"));
  const std::vector<int> labels =
      read_idx_labels(join(dir, stem + "-labels-idx1-ubyte"));
  if (images.cols() != static_cast<Eigen::Index>(labels.size()))
    throw ConfigError("idx dataset: image/label count mismatch");
  count = std::min<int>(count, static_cast<int>(images.cols()));
  Dataset data;
  data.X = images.leftCols(count);
  data.labels.assign(labels.begin(), labels.begin() + count);
  const int classes = 1 + *std::max_element(data.labels.begin(), data.labels.end());
  data.Y = Eigen::MatrixXd::Zero(classes, count);
  for (int i = 0; i < count; ++i) data.Y(data.labels[i], i) = 1.0;
  return data;
}

namespace {

double classification_error(const Eigen::MatrixXd& output, const std::vector<int>& labels) {
  int wrong = 0;
  for (Eigen::Index i = 0; i < output.cols(); ++i) {
    Eigen::Index arg = 0;
    output.col(i).maxCoeff(&arg);
    if (static_cast<int>(arg) != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(output.cols());
}

struct SgdRun {
  Architecture arch;
  Params params;
};

// Mini-batch SGD on the cross-entropy; batches are drawn from a seeded
// shuffle, re-drawn every epoch.
SgdRun train_sgd(const Dataset& train, int width, long long epochs, int batch,
                 double lr, std::uint64_t seed,
                 const std::function<void(long long, const Architecture&, const Params&)>&
                     at_epoch) {
  const int d = static_cast<int>(train.X.rows());
  const int classes = static_cast<int>(train.Y.rows());
  const Architecture arch({d, width, width, width, classes}, OutputActivation::Softmax);
  Params params = init_params(arch, InitScheme::GlorotUniformZeroBias, seed);

  Rng shuffle_rng(Rng::derive(seed, 0x5D));
  const int n = static_cast<int>(train.X.cols());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (long long e = 1; e <= epochs; ++e) {
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    for (int start = 0; start < n; start += batch) {
      const int count = std::min(batch, n - start);
      Eigen::MatrixXd Xb(d, count), Yb(classes, count);
      for (int i = 0; i < count; ++i) {
        Xb.col(i) = train.X.col(order[start + i]);
        Yb.col(i) = train.Y.col(order[start + i]);
      }
      const Sample sb(Xb);
      const Objective ob{LossKind::CrossEntropy, Yb};
      const Eigen::VectorXd grad = loss_gradient(arch, params, sb, ob);
      params = Params::unflatten(arch, params.flatten() - lr * grad);
    }
    if (at_epoch) at_epoch(e, arch, params);
  }
  return {arch, std::move(params)};
}

SweepRow measure(const Architecture& arch, const Params& params, const Dataset& train,
                 const Dataset& test, int jobs) {
  SweepRow row;
  row.max_rank = arch.max_rank();
  JacobianOptions jopts;
  jopts.jobs = jobs;
  row.rank_train = local_dimension(arch, params, Sample(train.X), {}, jopts).rank;
  row.rank_test = local_dimension(arch, params, Sample(test.X), {}, jopts).rank;
  const Eigen::MatrixXd out_train = forward(arch, params, Sample(train.X)).output();
  const Eigen::MatrixXd out_test = forward(arch, params, Sample(test.X)).output();
  row.train_loss = loss_value({LossKind::CrossEntropy, train.Y}, out_train);
  row.train_error = classification_error(out_train, train.labels);
  row.test_error = classification_error(out_test, test.labels);
  return row;
}

std::pair<Dataset, Dataset> sweep_data(const SweepConfig& config) {
  if (!config.data_dir.empty())
    return {load_idx_dataset(config.data_dir, true, config.n_train),
            load_idx_dataset(config.data_dir, false, config.n_test)};
  return {make_blobs(config.n_train, Rng::derive(config.seed, 0x7121)),
          make_blobs(config.n_test, Rng::derive(config.seed, 0x7e57))};
}

}  // namespace

std::vector<SweepRow> run_width_sweep(const SweepConfig& config) {
  const auto [train, test] = sweep_data(config);
  std::vector<SweepRow> rows(config.widths.size());
  parallel_for(0, static_cast<int>(config.widths.size()), config.jobs, [&](int i) {
    const int width = config.widths[i];
    const SgdRun run = train_sgd(train, width, config.epochs, config.batch, config.lr,
                                 Rng::derive(config.seed, width), nullptr);
    SweepRow row = measure(run.arch, run.params, train, test, 1);
    row.width = width;
    row.seed = config.seed;
    row.epoch = config.epochs;
    rows[i] = row;
  });
  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    write_sweep_csv(join(config.out_dir, "width_sweep.csv"), rows);
  }
  return rows;
}

std::vector<SweepRow> run_epoch_sweep(const SweepConfig& config) {
  const auto [train, test] = sweep_data(config);
  // First and last epochs are always measured; other requested epochs are
  // kept when they fall inside the run.
  std::set<long long> record{1, config.epochs};
  for (long long e : config.record_epochs)
    if (e >= 1 && e <= config.epochs) record.insert(e);

  std::vector<std::vector<SweepRow>> per_seed(config.seeds);
  parallel_for(0, config.seeds, config.jobs, [&](int s) {
    const std::uint64_t run_seed = Rng::derive(config.seed, 1000 + s);
    std::vector<SweepRow>& rows = per_seed[s];
    train_sgd(train, config.width, config.epochs, config.batch, config.lr, run_seed,
              [&](long long epoch, const Architecture& arch, const Params& params) {
                if (!record.count(epoch)) return;
                SweepRow row = measure(arch, params, train, test, 1);
                row.width = config.width;
                row.seed = run_seed;
                row.epoch = epoch;
                rows.push_back(row);
              });
  });
  std::vector<SweepRow> rows;
  for (auto& block : per_seed)
    rows.insert(rows.end(), block.begin(), block.end());
  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    write_sweep_csv(join(config.out_dir, "epoch_sweep.csv"), rows);
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream csv(path);
  if (!csv) throw ConfigError("cannot write " + path);
  csv << "width,seed,epoch,rank_train,rank_test,max_rank,train_loss,train_error,test_error\n";
  csv.precision(17);
  for (const SweepRow& r : rows)
    csv << r.width << ',' << r.seed << ',' << r.epoch << ',' << r.rank_train << ','
        << r.rank_test << ',' << r.max_rank << ',' << r.train_loss << ','
        << r.train_error << ',' << r.test_error << '\n';
}

}  // namespace localdim
