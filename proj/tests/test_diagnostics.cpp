#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "oracles.hpp"
#include "ssvb/csv.hpp"
#include "ssvb/diagnostics.hpp"
#include "ssvb/rng.hpp"

using namespace ssvb;

namespace {

Matrix random_matrix(Index n, Index p, Rng& rng) {
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

/// Exhaustive subset extreme over size-exact-s supports, dense eigensolves.
double oracle_kappa_bar(const Matrix& X, int s) {
  double best = -1.0;
  oracle::for_each_subset(static_cast<int>(X.cols()), s, [&](const std::vector<int>& idx) {
    Matrix sub(X.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Index>(k)) = X.col(idx[k]);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub.transpose() * sub);
    best = std::max(best, eig.eigenvalues().maxCoeff());
  });
  const double xn = design_norm(X);
  return best / (xn * xn);
}

double oracle_kappa_s(const Matrix& X, const Vector& w, int s) {
  double best = std::numeric_limits<double>::infinity();
  oracle::for_each_subset(static_cast<int>(X.cols()), s, [&](const std::vector<int>& idx) {
    Matrix sub(X.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Index>(k)) = X.col(idx[k]);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sub.transpose() * w.asDiagonal() * sub);
    best = std::min(best, eig.eigenvalues().minCoeff());
  });
  const double xn = design_norm(X);
  return best / (xn * xn);
}

}  // namespace

TEST_CASE("w_matrix basics") {
  Rng rng(11);
  Dataset d;
  d.X = random_matrix(6, 3, rng);
  d.y = Vector::Zero(6);
  const Vector w0 = w_matrix(d, Vector::Zero(3));
  for (Index i = 0; i < 6; ++i) CHECK(w0[i] == 0.25);

  Vector big = Vector::Zero(3);
  big[0] = 1000.0;
  const Vector wsat = w_matrix(d, big);
  for (Index i = 0; i < 6; ++i) {
    CHECK(wsat[i] >= 0.0);
    CHECK(wsat[i] < 1e-8);
  }

  Vector theta(3);
  theta << 0.5, -1.0, 0.25;
  const Vector w = w_matrix(d, theta);
  for (Index i = 0; i < 6; ++i) {
    const double s = sigmoid(d.X.row(i).dot(theta));
    CHECK(w[i] == Catch::Approx(s * (1.0 - s)).epsilon(1e-15));
    CHECK(w[i] > 0.0);
    CHECK(w[i] <= 0.25);
  }
}

TEST_CASE("mutual_coherence special cases") {
  Matrix ortho = Matrix::Identity(5, 3);
  CHECK(mutual_coherence(ortho) == 0.0);

  Rng rng(13);
  Matrix dup = random_matrix(6, 3, rng);
  dup.col(2) = 2.5 * dup.col(0);
  CHECK(mutual_coherence(dup) == Catch::Approx(1.0).epsilon(1e-12));

  Matrix zero = dup;
  zero.col(1).setZero();
  CHECK_THROWS_AS(mutual_coherence(zero), std::invalid_argument);
}

TEST_CASE("mutual_coherence matches the pairwise oracle") {
  Rng rng(17);
  const Matrix X = random_matrix(10, 6, rng);
  double direct = 0.0;
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) {
      if (i == j) continue;
      direct = std::max(direct, std::fabs(X.col(i).dot(X.col(j))) /
                                    (X.col(i).norm() * X.col(j).norm()));
    }
  CHECK(mutual_coherence(X) == Catch::Approx(direct).epsilon(1e-13));
}

TEST_CASE("kappa_bar(1) is one for any design") {
  Rng rng(19);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix X = random_matrix(7, 5, rng);
    const KappaResult r = kappa_bar(X, 1);
    CHECK(r.exact);
    CHECK(r.value == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("kappa_bar is one for orthogonal equal-norm designs") {
  Matrix X = 3.0 * Matrix::Identity(6, 6);
  for (Index s = 1; s <= 4; ++s) {
    CHECK(kappa_bar(X, s).value == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("kappa_bar and kappa_s match the exhaustive oracle on 8x8") {
  Rng rng(23);
  const Matrix X = random_matrix(8, 8, rng);
  Dataset d;
  d.X = X;
  d.y = Vector::Zero(8);
  const Vector w = w_matrix(d, Vector::Constant(8, 0.1));
  for (int s = 1; s <= 3; ++s) {
    CHECK(kappa_bar(X, s).value == Catch::Approx(oracle_kappa_bar(X, s)).margin(1e-10));
    CHECK(kappa_s(X, w, s).value == Catch::Approx(oracle_kappa_s(X, w, s)).margin(1e-10));
  }
}

TEST_CASE("kappa monotonicity and the coherence bound") {
  Rng rng(29);
  for (int rep = 0; rep < 10; ++rep) {
    const Index p = 5 + static_cast<Index>(rng.below(6));  // up to 10
    const Matrix X = random_matrix(8, p, rng);
    const Vector w = Vector::Constant(8, 0.25);
    const double mc = mutual_coherence(X);
    double prev_bar = 0.0;
    double prev_s = std::numeric_limits<double>::infinity();
    for (Index s = 1; s <= std::min<Index>(4, p); ++s) {
      const double kb = kappa_bar(X, s).value;
      const double ks = kappa_s(X, w, s).value;
      CHECK(kb >= prev_bar - 1e-12);
      CHECK(ks <= prev_s + 1e-12);
      CHECK(kb <= 1.0 + static_cast<double>(s) * mc + 1e-9);
      prev_bar = kb;
      prev_s = ks;
    }
  }
}

TEST_CASE("sampled subsets bound the exact extremes from the right side") {
  Rng rng(31);
  const Matrix X = random_matrix(10, 12, rng);
  const Vector w = Vector::Constant(10, 0.25);
  SubsetOpts exact_opts;
  SubsetOpts sampled_opts;
  sampled_opts.enumeration_budget = 10;  // C(12,3) = 220 forces sampling
  sampled_opts.sample_count = 60;
  const KappaResult eb = kappa_bar(X, 3, exact_opts);
  const KappaResult sb = kappa_bar(X, 3, sampled_opts);
  CHECK(eb.exact);
  CHECK_FALSE(sb.exact);
  CHECK(sb.value <= eb.value + 1e-12);
  const KappaResult es = kappa_s(X, w, 3, exact_opts);
  const KappaResult ss = kappa_s(X, w, 3, sampled_opts);
  CHECK(ss.value >= es.value - 1e-12);

  SubsetOpts no_sampling;
  no_sampling.enumeration_budget = 10;
  no_sampling.allow_sampling = false;
  CHECK_THROWS_AS(kappa_bar(X, 3, no_sampling), std::invalid_argument);
}

TEST_CASE("kappa_cone_estimate: diagonal case") {
  // orthogonal design with equal column norms and W = I/4
  Matrix X = 2.0 * Matrix::Identity(6, 6);
  const Vector w = Vector::Constant(6, 0.25);
  const double est = kappa_cone_estimate(X, w, {0, 1}, 500, 3);
  CHECK(est == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("kappa_cone_estimate: min property and self-consistency") {
  Rng rng(37);
  const Matrix X = random_matrix(6, 6, rng);
  Dataset d;
  d.X = X;
  d.y = Vector::Zero(6);
  const Vector w = w_matrix(d, Vector::Zero(6));
  const std::vector<Index> support{0, 1};
  const double est = kappa_cone_estimate(X, w, support, 200000, 5);
  // estimate cannot exceed the ratio at an explicit cone point
  Vector theta = Vector::Zero(6);
  theta[0] = 1.0;
  theta[1] = -0.5;
  const double xn2 = design_norm(X) * design_norm(X);
  const double ratio =
      (w.cwiseSqrt().asDiagonal() * (X * theta)).squaredNorm() / (xn2 * theta.squaredNorm());
  CHECK(est <= ratio + 1e-12);
  // two seeds agree to within a few percent
  const double est2 = kappa_cone_estimate(X, w, support, 200000, 55);
  CHECK(std::fabs(est - est2) <= 0.05 * std::max(est, est2));
}

TEST_CASE("check_design_condition: hand-evaluated orthogonal case") {
  Matrix X = 2.0 * Matrix::Identity(4, 4);
  const Vector w = Vector::Constant(4, 0.25);
  const Index s0 = 1;
  const double alpha = 2.0, L = 1.0;
  const ConditionVerdict v = check_design_condition(X, w, s0, alpha, L);
  CHECK(v.lhs == Catch::Approx(2.0).epsilon(1e-14));
  // kappa((L+1) s0 = 2) = lambda_min(X_S' W X_S)/||X||^2 = (4 * 0.25)/4 = 0.25
  CHECK(v.kappa_sparse == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(v.kappa_cone == Catch::Approx(0.25).epsilon(1e-6));
  const double inf_term = 50.0 * 3.0 * 2.0 / 0.25;   // 1200
  const double cone_term = 64.0 / (3.0 * v.kappa_cone);  // ~85.3
  const double rhs = alpha * std::max(inf_term, cone_term) * 1.0 *
                     std::sqrt(std::log(4.0));
  CHECK(v.rhs == Catch::Approx(rhs).epsilon(1e-9));
  CHECK_FALSE(v.ok);  // tiny design cannot satisfy the bound
}

TEST_CASE("check_design_condition: degenerate design is flagged") {
  Matrix X = Matrix::Zero(4, 3);
  X(0, 0) = 1.0;  // only one informative column
  const Vector w = Vector::Zero(4);  // saturated weights: kappa terms collapse
  const ConditionVerdict v = check_design_condition(X, w, 1, 2.0, 1.0);
  CHECK_FALSE(v.ok);
  CHECK(std::isinf(v.rhs));
}

TEST_CASE("check_design_condition: scale equivariance on the entry-norm branch") {
  Rng rng(41);
  const Matrix X = random_matrix(6, 5, rng);
  const Vector w = Vector::Constant(6, 0.25);
  SubsetOpts opts;
  const ConditionVerdict v1 = check_design_condition(X, w, 1, 2.0, 1.0, opts, 20000);
  const ConditionVerdict v2 =
      check_design_condition(3.0 * X, w, 1, 2.0, 1.0, opts, 20000);
  // kappa quantities are scale-free
  CHECK(v2.kappa_sparse == Catch::Approx(v1.kappa_sparse).epsilon(1e-10));
  CHECK(v2.kappa_cone == Catch::Approx(v1.kappa_cone).epsilon(1e-10));
  // on this design the entry-norm term dominates, so both sides scale together
  REQUIRE(50.0 * 3.0 * design_max_entry(X) / v1.kappa_sparse >
          64.0 / (3.0 * v1.kappa_cone));
  CHECK(v2.lhs == Catch::Approx(3.0 * v1.lhs).epsilon(1e-12));
  CHECK(v2.rhs == Catch::Approx(3.0 * v1.rhs).epsilon(1e-10));
  CHECK(v1.ok == v2.ok);
}

TEST_CASE("diagnostics report matches the committed golden file") {
  const std::string dir = SSVB_TEST_DATA_DIR;
  const Matrix X = read_csv_matrix(dir + "/diag8.csv");
  REQUIRE(X.rows() == 8);
  REQUIRE(X.cols() == 8);
  Dataset d;
  d.X = X;
  d.y = Vector::Zero(8);
  const Vector w = w_matrix(d, Vector::Zero(8));
  SubsetOpts opts;  // C(8,s) enumerable for every s tested
  const DesignDiagnostics diag = design_diagnostics(X, w, 1, 2.0, 1.0, 3, opts);

  std::ifstream in(dir + "/diag8_golden.json");
  REQUIRE(in.good());
  nlohmann::json golden;
  in >> golden;
  CHECK(diag.x_norm == Catch::Approx(golden["x_norm"].get<double>()).margin(1e-10));
  CHECK(diag.x_inf == Catch::Approx(golden["x_inf"].get<double>()).margin(1e-10));
  CHECK(diag.mc == Catch::Approx(golden["mc"].get<double>()).margin(1e-10));
  for (Index s = 1; s <= 3; ++s) {
    const auto key = std::to_string(s);
    CHECK(diag.kappa_bar.at(s).value ==
          Catch::Approx(golden["kappa_bar"][key].get<double>()).margin(1e-10));
    CHECK(diag.kappa_s.at(s).value ==
          Catch::Approx(golden["kappa_s"][key].get<double>()).margin(1e-10));
    CHECK(diag.kappa_bar.at(s).exact);
    CHECK(diag.kappa_s.at(s).exact);
  }
}
