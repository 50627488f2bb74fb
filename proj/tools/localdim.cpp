// Command-line driver: local-dimension reports for saved models plus the
// desk-scale experiment suite. Every command is reproducible from its
// (config, seed) pair; outputs are CSV/JSON only.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "localdim/experiments.hpp"
#include "localdim/io.hpp"
#include "localdim/jacobian.hpp"
#include "localdim/parallel.hpp"
#include "localdim/rank.hpp"
#include "localdim/shallow.hpp"

using namespace localdim;

namespace {

struct CommonOpts {
  std::uint64_t seed = 1;
  std::string out;
  int jobs = default_jobs();
  std::string tol_policy = "spectral";
  int sub_batch = 256;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Random seed; identical seeds reproduce runs bit-for-bit");
  cmd->add_option("--out", opts.out, "Output directory (CSV/JSON)");
  cmd->add_option("--jobs", opts.jobs, "Worker threads for independent runs/rows");
  cmd->add_option("--tol-policy", opts.tol_policy, "Rank tolerance policy: spectral|gap")
      ->check(CLI::IsMember({"spectral", "gap"}));
  cmd->add_option("--sub-batch", opts.sub_batch,
                  "Jacobian column-block size (bounds peak memory)");
}

int cmd_rank(const std::string& model_path, const std::string& sample_path,
             const CommonOpts& opts, const std::string& dump_jacobian) {
  auto [arch, params] = load_model(model_path);
  const Sample sample{load_sample_csv(sample_path)};
  JacobianOptions jopts;
  jopts.sub_batch = opts.sub_batch;
  jopts.jobs = opts.jobs;
  const LocalDimReport report =
      local_dimension(arch, params, sample, tol_policy_from_string(opts.tol_policy), jopts);
  std::cout << report.to_json() << "\n";
  if (!dump_jacobian.empty()) {
    std::ofstream csv(dump_jacobian);
    write_jacobian_csv(csv, arch, jacobian(arch, params, sample, jopts));
  }
  if (!opts.out.empty()) {
    std::filesystem::create_directories(opts.out);
    write_text_file((std::filesystem::path(opts.out) / "report.json").string(),
                    report.to_json());
  }
  return 0;
}

int cmd_shallow(const std::string& model_path, const std::string& sample_path,
                const CommonOpts& opts) {
  auto [arch, params] = load_model(model_path);
  Eigen::MatrixXd X = load_sample_csv(sample_path);
  if (X.rows() != 1)
    throw ConfigError("shallow-analyze: sample must be one row (1-D inputs)");
  // De-duplicate with a warning; duplicates add identical Jacobian rows and
  // cannot change any reported quantity.
  std::vector<double> vals(X.data(), X.data() + X.cols());
  std::sort(vals.begin(), vals.end());
  const auto last = std::unique(vals.begin(), vals.end());
  if (last != vals.end()) {
    std::cerr << "warning: dropping " << (vals.end() - last)
              << " duplicate sample value(s)\n";
    vals.erase(last, vals.end());
  }
  Eigen::RowVectorXd row =
      Eigen::Map<Eigen::RowVectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  const OrderedSample ordered = OrderedSample::from(row);
  const ShallowAnalysis analysis = analyze_shallow(arch, params, ordered);
  std::cout << analysis.to_json() << "\n";
  if (!opts.out.empty()) {
    std::filesystem::create_directories(opts.out);
    write_text_file((std::filesystem::path(opts.out) / "shallow.json").string(),
                    analysis.to_json());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local dimension of fully-connected ReLU networks: rank reports and desk-scale experiments"};
  app.require_subcommand(1);

  CommonOpts opts;

  // rank
  auto* rank_cmd = app.add_subcommand(
      "rank", "Numerical local dimension of a model on a sample.\n"
              "Model: JSON {widths, out_act, weights, biases}.\n"
              "Sample CSV: one column per example, optional header row.\n"
              "Output: JSON {rank, max_rank, margin, tolerance, singular_values}.");
  std::string model_path, sample_path, dump_jacobian;
  rank_cmd->add_option("--model", model_path, "Model JSON path")->required();
  rank_cmd->add_option("--sample", sample_path, "Sample CSV path")->required();
  rank_cmd->add_option("--dump-jacobian", dump_jacobian,
                       "Also write the Jacobian as CSV (columns L{l}.w{r}.{c} / L{l}.b{r})");
  add_common(rank_cmd, opts);

  // shallow-analyze
  auto* shallow_cmd = app.add_subcommand(
      "shallow-analyze",
      "Closed-form analysis of a (1,N1,1) identity-output model: exact rank,\n"
      "seen regions, effective neurons, and the rank bound chains.");
  shallow_cmd->add_option("--model", model_path, "Model JSON path")->required();
  shallow_cmd->add_option("--sample", sample_path, "Sample CSV path (one row)")->required();
  add_common(shallow_cmd, opts);

  // toy-table
  auto* table_cmd = app.add_subcommand(
      "toy-table", "Region-occupancy census of gradient descent on the width-1 example\n"
                   "(X = (0,1,2), target (0,1,3)). Emits table.csv + summary.json.");
  ToyTableConfig table_cfg;
  table_cmd->add_option("--runs", table_cfg.runs, "Number of random initializations");
  table_cmd->add_option("--iters", table_cfg.iters, "Gradient-descent iterations per run");
  table_cmd->add_option("--lr", table_cfg.lr, "Learning rate");
  add_common(table_cmd, opts);

  // saddle
  auto* saddle_cmd = app.add_subcommand(
      "saddle", "Plateau-and-drop trajectories on the width-1 example with target\n"
                "(1,0,5). Emits run_<k>.csv per seed + manifest.json.");
  SaddleConfig saddle_cfg;
  saddle_cmd->add_option("--seeds", saddle_cfg.seeds, "Number of seeded runs");
  saddle_cmd->add_option("--iters", saddle_cfg.iters, "Iterations per run");
  saddle_cmd->add_option("--lr", saddle_cfg.lr, "Learning rate");
  saddle_cmd->add_option("--window", saddle_cfg.plateau_window, "Plateau window (iterations)");
  saddle_cmd->add_option("--rel-drop", saddle_cfg.plateau_rel_drop,
                         "Relative decrease below which a window counts as flat");
  add_common(saddle_cmd, opts);

  // cpl
  auto* cpl_cmd = app.add_subcommand(
      "cpl", "Recovery of a 3-segment piecewise-linear target by a width-10\n"
             "shallow net, full-batch Adam. Emits runs.csv + manifest.json.");
  CplConfig cpl_cfg;
  cpl_cmd->add_option("--runs", cpl_cfg.runs, "Number of seeded runs");
  cpl_cmd->add_option("--width", cpl_cfg.width, "Hidden width");
  cpl_cmd->add_option("--n", cpl_cfg.sample_size, "Training sample size");
  cpl_cmd->add_option("--lr", cpl_cfg.lr, "Adam learning rate");
  cpl_cmd->add_option("--stop-loss", cpl_cfg.stop_loss, "Early-stop training loss");
  cpl_cmd->add_option("--max-iters", cpl_cfg.max_iters, "Iteration cap per run");
  cpl_cmd->add_option("--grid", cpl_cfg.grid, "Grid size for the total-region count");
  add_common(cpl_cmd, opts);

  // width-sweep / epoch-sweep
  auto* width_cmd = app.add_subcommand(
      "width-sweep", "Rank vs. width on synthetic 3-class blobs (or IDX data via\n"
                     "--data-dir): trains (d,w,w,w,C) softmax nets with SGD.\n"
                     "Emits width_sweep.csv.");
  SweepConfig width_cfg;
  width_cfg.epochs = 1000;  // end-of-training measurement only
  std::vector<int> widths;
  width_cmd->add_option("--widths", widths, "Widths to train (default 2 4 6 8 12 16)");
  width_cmd->add_option("--epochs", width_cfg.epochs, "Training epochs");
  width_cmd->add_option("--batch", width_cfg.batch, "Mini-batch size");
  width_cmd->add_option("--lr", width_cfg.lr, "SGD learning rate");
  width_cmd->add_option("--n-train", width_cfg.n_train, "Training sample size");
  width_cmd->add_option("--n-test", width_cfg.n_test, "Test sample size");
  width_cmd->add_option("--data-dir", width_cfg.data_dir,
                        "Directory with IDX files (train/t10k images+labels)");
  add_common(width_cmd, opts);

  auto* epoch_cmd = app.add_subcommand(
      "epoch-sweep", "Rank vs. epoch at fixed width over seeded runs.\n"
                     "Emits epoch_sweep.csv.");
  SweepConfig epoch_cfg;
  epoch_cmd->add_option("--width", epoch_cfg.width, "Hidden width");
  epoch_cmd->add_option("--seeds", epoch_cfg.seeds, "Number of seeded runs");
  epoch_cmd->add_option("--epochs", epoch_cfg.epochs, "Training epochs");
  std::vector<long long> record_epochs;
  epoch_cmd->add_option("--record-epochs", record_epochs,
                        "Epochs at which ranks are recorded (default 1 1000 3000 6000)");
  epoch_cmd->add_option("--batch", epoch_cfg.batch, "Mini-batch size");
  epoch_cmd->add_option("--lr", epoch_cfg.lr, "SGD learning rate");
  epoch_cmd->add_option("--n-train", epoch_cfg.n_train, "Training sample size");
  epoch_cmd->add_option("--n-test", epoch_cfg.n_test, "Test sample size");
  epoch_cmd->add_option("--data-dir", epoch_cfg.data_dir, "Directory with IDX files");
  add_common(epoch_cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (rank_cmd->parsed()) return cmd_rank(model_path, sample_path, opts, dump_jacobian);
    if (shallow_cmd->parsed()) return cmd_shallow(model_path, sample_path, opts);

    if (table_cmd->parsed()) {
      table_cfg.seed = opts.seed;
      table_cfg.jobs = opts.jobs;
      table_cfg.out_dir = opts.out.empty() ? "toy_table_out" : opts.out;
      const ToyTableResult r = run_toy_table(table_cfg);
      std::cout << "runs: " << r.runs << "\ninit:  ";
      for (double v : r.init_row) std::cout << v << ' ';
      std::cout << "\nfinal: ";
      for (double v : r.final_row) std::cout << v << ' ';
      std::cout << "\nwrote " << table_cfg.out_dir << "/table.csv\n";
      return 0;
    }
    if (saddle_cmd->parsed()) {
      saddle_cfg.seed = opts.seed;
      saddle_cfg.out_dir = opts.out.empty() ? "saddle_out" : opts.out;
      const SaddleResult r = run_saddle(saddle_cfg);
      std::cout << "runs: " << r.runs.size() << "\n";
      if (r.first_crossing_with_plateaus >= 0)
        std::cout << "crossing run with >=2 plateaus: index "
                  << r.first_crossing_with_plateaus << "\n";
      else
        std::cout << "no crossing run with >=2 plateaus found\n";
      std::cout << "wrote " << saddle_cfg.out_dir << "/manifest.json\n";
      return 0;
    }
    if (cpl_cmd->parsed()) {
      cpl_cfg.seed = opts.seed;
      cpl_cfg.jobs = opts.jobs;
      cpl_cfg.out_dir = opts.out.empty() ? "cpl_out" : opts.out;
      const auto runs = run_cpl_recovery(cpl_cfg);
      int converged = 0, max_dim = 0, max_seen = 0;
      for (const auto& r : runs) {
        converged += r.converged;
        max_dim = std::max(max_dim, r.local_dim);
        max_seen = std::max(max_seen, r.seen_regions);
      }
      std::cout << "converged " << converged << "/" << runs.size()
                << ", max local_dim " << max_dim << ", max seen_regions " << max_seen
                << "\nwrote " << cpl_cfg.out_dir << "/runs.csv\n";
      return 0;
    }
    if (width_cmd->parsed() || epoch_cmd->parsed()) {
      SweepConfig& cfg = width_cmd->parsed() ? width_cfg : epoch_cfg;
      cfg.seed = opts.seed;
      cfg.jobs = opts.jobs;
      if (!widths.empty()) cfg.widths = widths;
      if (!record_epochs.empty()) cfg.record_epochs = record_epochs;
      cfg.out_dir = opts.out.empty()
                        ? (width_cmd->parsed() ? "width_sweep_out" : "epoch_sweep_out")
                        : opts.out;
      const auto rows =
          width_cmd->parsed() ? run_width_sweep(cfg) : run_epoch_sweep(cfg);
      std::cout << "rows: " << rows.size() << "\nwrote " << cfg.out_dir << "/"
                << (width_cmd->parsed() ? "width_sweep.csv" : "epoch_sweep.csv") << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
