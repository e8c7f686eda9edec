#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ssvb/simulate.hpp"

using namespace ssvb;

TEST_CASE("generate: signal layout and determinism") {
  SimDesign d;
  d.n = 20;
  d.p = 5;
  d.s = 2;
  d.signal.value = 2.0;
  d.seed = 77;
  auto [data, theta0] = generate(d, 3);
  REQUIRE(theta0.size() == 5);
  CHECK(theta0[0] == 2.0);
  CHECK(theta0[1] == 2.0);
  CHECK(theta0[2] == 0.0);
  CHECK(theta0[4] == 0.0);
  data.validate();

  auto [data2, theta2] = generate(d, 3);
  CHECK((data.X - data2.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((data.y - data2.y).cwiseAbs().maxCoeff() == 0.0);
  auto [data3, theta3] = generate(d, 4);  // different replicate differs
  CHECK((data.X - data3.X).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generate: uniform signal stays in range") {
  SimDesign d;
  d.n = 5;
  d.p = 8;
  d.s = 6;
  d.signal.kind = Signal::Kind::uniform;
  d.signal.lo = -2.0;
  d.signal.hi = 2.0;
  auto [data, theta0] = generate(d, 0);
  for (Index j = 0; j < 6; ++j) {
    CHECK(theta0[j] >= -2.0);
    CHECK(theta0[j] <= 2.0);
  }
  CHECK(theta0[6] == 0.0);
}

TEST_CASE("generate: design moments match the sampling distribution") {
  SimDesign d;
  d.n = 1000;
  d.p = 100;
  d.s = 0;
  d.sigma_x = 1.7;
  d.seed = 123;
  // 10 replicates x 100k entries
  double sum = 0.0, sumsq = 0.0;
  const double total = 10.0 * 1000.0 * 100.0;
  for (int rep = 0; rep < 10; ++rep) {
    auto [data, theta0] = generate(d, rep);
    sum += data.X.sum();
    sumsq += data.X.squaredNorm();
  }
  const double mean = sum / total;
  const double sd = std::sqrt(sumsq / total - mean * mean);
  const double se_mean = d.sigma_x / std::sqrt(total);
  CHECK(std::fabs(mean - 0.0) < 3.0 * se_mean);
  CHECK(std::fabs(sd - d.sigma_x) < 3.0 * d.sigma_x / std::sqrt(2.0 * total));
}

TEST_CASE("metrics: perfect recovery") {
  SimDesign d;
  d.n = 30;
  d.p = 4;
  d.s = 2;
  auto [data, theta0] = generate(d, 0);
  Summary s;
  s.posterior_mean = theta0;
  s.selected = {0, 1};
  const RepMetrics m = metrics(theta0, s, data);
  CHECK(m.tpr == 1.0);
  CHECK(m.fdr == 0.0);
  CHECK(m.l2 == 0.0);
  CHECK(m.mspe == 0.0);
}

TEST_CASE("metrics: empty selection convention") {
  SimDesign d;
  d.n = 10;
  d.p = 3;
  d.s = 1;
  auto [data, theta0] = generate(d, 0);
  Summary s;
  s.posterior_mean = Vector::Zero(3);
  const RepMetrics m = metrics(theta0, s, data);
  CHECK(m.fdr == 0.0);  // 0/0 reads as zero
  CHECK(m.tpr == 0.0);
}

TEST_CASE("metrics: hand-counted selection") {
  // truth support {0, 1}; selected {0, 2}
  SimDesign d;
  d.n = 10;
  d.p = 3;
  d.s = 2;
  auto [data, theta0] = generate(d, 0);
  Summary s;
  s.posterior_mean = theta0;
  s.selected = {0, 2};
  const RepMetrics m = metrics(theta0, s, data);
  CHECK(m.tpr == 0.5);
  CHECK(m.fdr == 0.5);
}

TEST_CASE("metrics: FDR and precision add to one on nonempty selections") {
  SimDesign d;
  d.n = 25;
  d.p = 6;
  d.s = 3;
  auto [data, theta0] = generate(d, 2);
  Rng rng(55);
  for (int rep = 0; rep < 20; ++rep) {
    Summary s;
    s.posterior_mean = theta0;
    for (Index j = 0; j < 6; ++j)
      if (rng.bernoulli(0.5)) s.selected.push_back(j);
    if (s.selected.empty()) continue;
    const RepMetrics m = metrics(theta0, s, data);
    Index tp = 0;
    for (Index j : s.selected)
      if (theta0[j] != 0.0) ++tp;
    const double precision = static_cast<double>(tp) / s.selected.size();
    CHECK(m.fdr + precision == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(m.tpr <= 1.0);
  }
}

TEST_CASE("metrics: l2 and mspe against direct formulas") {
  SimDesign d;
  d.n = 40;
  d.p = 3;
  d.s = 2;
  auto [data, theta0] = generate(d, 1);
  Summary s;
  s.posterior_mean = theta0;
  s.posterior_mean[0] += 0.5;
  s.posterior_mean[2] -= 0.25;
  const RepMetrics m = metrics(theta0, s, data);
  CHECK(m.l2 == Catch::Approx(std::sqrt(0.25 + 0.0625)).epsilon(1e-14));
  double acc = 0.0;
  for (Index i = 0; i < 40; ++i) {
    const double a = sigmoid(data.X.row(i).dot(s.posterior_mean));
    const double b = sigmoid(data.X.row(i).dot(theta0));
    acc += (a - b) * (a - b);
  }
  CHECK(m.mspe == Catch::Approx(std::sqrt(acc / 40.0)).epsilon(1e-13));
}

TEST_CASE("run_experiment: deterministic metrics and sane aggregation") {
  SimDesign d;
  d.n = 60;
  d.p = 20;
  d.s = 2;
  d.n_reps = 3;
  d.seed = 9;
  FitConfig cfg;
  std::vector<MethodVariant> variants;
  variants.push_back({"vb-lap", cfg});
  FitConfig gauss = cfg;
  gauss.prior.slab = SlabFamily::gauss;
  variants.push_back({"vb-gauss", gauss});

  const ExperimentTable t1 = run_experiment(d, variants);
  const ExperimentTable t2 = run_experiment(d, variants);
  REQUIRE(t1.rows.size() == 2);
  CHECK(t1.failures.empty());
  for (std::size_t r = 0; r < t1.rows.size(); ++r) {
    CHECK(t1.rows[r].tpr.mean == t2.rows[r].tpr.mean);
    CHECK(t1.rows[r].fdr.mean == t2.rows[r].fdr.mean);
    CHECK(t1.rows[r].l2.mean == t2.rows[r].l2.mean);
    CHECK(t1.rows[r].mspe.sd == t2.rows[r].mspe.sd);
    CHECK(t1.rows[r].n_reps == 3);
    CHECK(t1.rows[r].tpr.mean >= 0.0);
    CHECK(t1.rows[r].tpr.mean <= 1.0);
    CHECK(t1.rows[r].fdr.mean >= 0.0);
    CHECK(t1.rows[r].fdr.mean <= 1.0);
  }
}

TEST_CASE("run_experiment: single replicate has zero sd") {
  SimDesign d;
  d.n = 40;
  d.p = 10;
  d.s = 1;
  d.n_reps = 1;
  FitConfig cfg;
  const ExperimentTable t = run_experiment(d, {{"vb-lap", cfg}});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].tpr.sd == 0.0);
  CHECK(t.rows[0].l2.sd == 0.0);
}

TEST_CASE("coverage_experiment: plumbing on a tiny design") {
  SimDesign d;
  d.n = 50;
  d.p = 10;
  d.s = 2;
  d.n_reps = 2;
  FitConfig cfg;
  const CoverageTable t = coverage_experiment(d, 0.95, {{"vb-lap", cfg}});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.failures.empty());
  const CoverageRow& row = t.rows[0];
  CHECK(row.zero_coverage.mean >= 0.0);
  CHECK(row.zero_coverage.mean <= 1.0);
  CHECK(row.nonzero_coverage.mean >= 0.0);
  CHECK(row.nonzero_coverage.mean <= 1.0);
  CHECK(row.zero_length.mean >= 0.0);
  CHECK(row.n_reps == 2);
}

TEST_CASE("coverage_experiment: prior-only state computes without error") {
  // degenerate all-zero design: every coordinate rests at the prior
  SimDesign d;
  d.n = 10;
  d.p = 4;
  d.s = 0;
  d.n_reps = 1;
  auto [data, theta0] = generate(d, 0);
  FitConfig cfg;
  cfg.max_iter = 1;
  Dataset zero;
  zero.X = Matrix::Zero(10, 4);
  zero.y = data.y;
  const FitResult res = fit(zero, cfg);
  const Summary s = make_summary(res.state, 0.5, 0.95);
  REQUIRE(s.intervals.size() == 4);
  for (const auto& iv : s.intervals) CHECK(iv[0] <= iv[1]);
}

TEST_CASE("model size stays within a small multiple of the truth") {
  // echoes the no-overselection behavior on a small design
  SimDesign d;
  d.n = 100;
  d.p = 60;
  d.s = 2;
  d.n_reps = 5;
  d.seed = 2026;
  FitConfig cfg;
  int ok = 0;
  for (int rep = 0; rep < d.n_reps; ++rep) {
    const RepRecord rec = run_replicate(d, rep, cfg, 0.5, 0.95);
    if (rec.model_size <= 5 * static_cast<std::size_t>(d.s)) ++ok;
  }
  CHECK(ok >= 4);
}
