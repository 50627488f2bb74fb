#include <doctest.h>

#include <filesystem>

#include "localdim/experiments.hpp"
#include "localdim/io.hpp"
#include "testutil.hpp"

using namespace localdim;

TEST_CASE("toy table census at reduced scale") {
  ToyTableConfig cfg;
  cfg.runs = 1500;
  cfg.seed = 5;
  const ToyTableResult r = run_toy_table(cfg);

  // initialization occupancies follow the cone angles of the standard
  // normal; generous tolerances at this run count
  const double expected_init[6] = {0.33, 0.12, 0.05, 0.32, 0.13, 0.05};
  for (int j = 0; j < 6; ++j)
    CHECK(std::abs(r.init_row[j] - expected_init[j]) < 0.05);

  // dead-region runs can never escape
  CHECK(r.conditional[0][0] == 1.0);

  double init_sum = 0.0, final_sum = 0.0;
  for (int j = 0; j < 6; ++j) {
    init_sum += r.init_row[j];
    final_sum += r.final_row[j];
  }
  CHECK(init_sum == doctest::Approx(1.0));
  CHECK(final_sum == doctest::Approx(1.0));
}

TEST_CASE("toy table is reproducible and writes its files") {
  const std::string dir =
      (std::filesystem::temp_directory_path() / "localdim_toy_table").string();
  ToyTableConfig cfg;
  cfg.runs = 200;
  cfg.seed = 11;
  cfg.out_dir = dir;
  const ToyTableResult a = run_toy_table(cfg);
  const ToyTableResult b = run_toy_table(cfg);
  CHECK(a.init_counts == b.init_counts);
  CHECK(a.final_counts == b.final_counts);
  CHECK(std::filesystem::exists(dir + "/table.csv"));
  CHECK(std::filesystem::exists(dir + "/summary.json"));
  std::filesystem::remove_all(dir);

  ToyTableConfig par = cfg;
  par.out_dir.clear();
  par.jobs = 4;
  const ToyTableResult c = run_toy_table(par);
  CHECK(a.init_counts == c.init_counts);
  CHECK(a.final_counts == c.final_counts);
}

TEST_CASE("saddle scan finds the region crossing with two plateaus") {
  SaddleConfig cfg;
  cfg.seeds = 20;
  cfg.seed = 1;
  const SaddleResult r = run_saddle(cfg);
  REQUIRE(r.first_crossing_with_plateaus >= 0);
  const SaddleRun& hit = r.runs[r.first_crossing_with_plateaus];
  CHECK(hit.crossing);
  CHECK(hit.plateaus.size() >= 2);
}

TEST_CASE("cpl target shape") {
  // three segments, hinges at 8 and 14
  CHECK(cpl_target(1.0) == doctest::Approx(1.0));
  CHECK(cpl_target(8.0) == doctest::Approx(6.0));
  CHECK(cpl_target(14.0) == doctest::Approx(2.0));
  CHECK(cpl_target(20.0) == doctest::Approx(5.0));
  // linearity inside each segment
  CHECK(cpl_target(4.5) == doctest::Approx(0.5 * (cpl_target(1.0) + cpl_target(8.0))));
  CHECK(cpl_target(11.0) == doctest::Approx(0.5 * (cpl_target(8.0) + cpl_target(14.0))));
  CHECK(cpl_target(17.0) == doctest::Approx(0.5 * (cpl_target(14.0) + cpl_target(20.0))));
}

TEST_CASE("cpl recovery smoke run") {
  CplConfig cfg;
  cfg.runs = 4;
  cfg.max_iters = 30000;
  cfg.seed = 2;
  const auto runs = run_cpl_recovery(cfg);
  REQUIRE(runs.size() == 4);
  for (const auto& r : runs) {
    CHECK(r.local_dim <= 2 * r.seen_regions);
    CHECK(2 * r.local_dim >= r.seen_regions);
    CHECK(r.total_regions >= 1);
    CHECK(r.final_loss >= 0.0);
  }
}

TEST_CASE("blob data is balanced and reproducible") {
  const Dataset a = make_blobs(90, 3);
  const Dataset b = make_blobs(90, 3);
  CHECK((a.X.array() == b.X.array()).all());
  int counts[3] = {0, 0, 0};
  for (int lbl : a.labels) ++counts[lbl];
  CHECK(counts[0] == 30);
  CHECK(counts[1] == 30);
  CHECK(counts[2] == 30);
  for (int i = 0; i < 90; ++i) CHECK(a.Y(a.labels[i], i) == 1.0);
}

TEST_CASE("epoch sweep smoke run") {
  SweepConfig cfg;
  cfg.seeds = 2;
  cfg.epochs = 5;
  cfg.record_epochs = {1, 5};
  cfg.n_train = 120;
  cfg.n_test = 60;
  cfg.width = 4;
  cfg.seed = 9;
  const auto rows = run_epoch_sweep(cfg);
  REQUIRE(rows.size() == 4);  // 2 seeds x 2 recorded epochs
  for (const auto& row : rows) {
    CHECK(row.rank_train <= row.max_rank);
    CHECK(row.rank_test <= row.max_rank);
    CHECK(row.train_error >= 0.0);
    CHECK(row.train_error <= 1.0);
  }
}

TEST_CASE("width sweep smoke run") {
  SweepConfig cfg;
  cfg.widths = {2, 4};
  cfg.epochs = 5;
  cfg.n_train = 120;
  cfg.n_test = 60;
  cfg.seed = 9;
  const auto rows = run_width_sweep(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].width == 2);
  CHECK(rows[1].width == 4);
  for (const auto& row : rows) CHECK(row.rank_train <= row.max_rank);
}
