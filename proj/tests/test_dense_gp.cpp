#include <catch2/catch_amalgamated.hpp>

#include "vecdgp/conditioning.hpp"
#include "vecdgp/dense_gp.hpp"
#include "test_helpers.hpp"

using namespace vecdgp;

TEST_CASE("dense_loglik scalar cases") {
  Eigen::MatrixXd X(1, 1);
  X << 0.2;
  KernelSpec spec{KernelFamily::sqexp, 1.0, 1.0, 0.0};
  Eigen::VectorXd y0(1), y2(1);
  y0 << 0.0;
  y2 << 2.0;
  CHECK(dense_loglik(X, y0, spec) == Catch::Approx(0.0).margin(1e-15));
  CHECK(dense_loglik(X, y2, spec) == Catch::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("dense_loglik invariant under joint row permutation") {
  Rng rng(211);
  const int n = 40;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = rng.normal();
  KernelSpec spec{KernelFamily::matern52, 0.5, 1.2, 1e-6};
  const double base = dense_loglik(X, Y, spec);

  const auto perm = random_ordering(n, 5);
  Eigen::MatrixXd Xp(n, 2);
  Eigen::VectorXd Yp(n);
  for (int i = 0; i < n; ++i) {
    Xp.row(i) = X.row(perm[i]);
    Yp[i] = Y[perm[i]];
  }
  CHECK(dense_loglik(Xp, Yp, spec) == Catch::Approx(base).epsilon(1e-10));
}

TEST_CASE("dense_predict interpolates at g=0") {
  Rng rng(223);
  const int n = 25;
  const Eigen::MatrixXd X = testutil::random_design(n, 2, rng);
  Eigen::VectorXd Y(n);
  for (int i = 0; i < n; ++i) Y[i] = std::cos(4.0 * X(i, 0)) * X(i, 1);
  KernelSpec spec{KernelFamily::matern52, 0.4, 1.5, 0.0};
  DenseGP gp(X, Y, spec);
  const DensePrediction pred = dense_predict(gp, X);
  CHECK((pred.mean - Y).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(pred.cov.diagonal().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("dense_predict reverts to the prior far away") {
  Eigen::MatrixXd X(5, 1);
  X << 0.0, 0.1, 0.2, 0.3, 0.4;
  Eigen::VectorXd Y(5);
  Y << 1.0, 0.5, -0.2, 0.3, 0.8;
  KernelSpec spec{KernelFamily::sqexp, 0.05, 2.0, 1e-4};
  DenseGP gp(X, Y, spec);
  Eigen::MatrixXd far(1, 1);
  far << 500.0;
  const DensePrediction pred = dense_predict(gp, far);
  CHECK(std::abs(pred.mean[0]) < 1e-10);
  CHECK(pred.cov(0, 0) == Catch::Approx(spec.tau2 * (1.0 + spec.g)).epsilon(1e-10));
}

TEST_CASE("dense_predict variance never exceeds the prior variance") {
  Rng rng(227);
  const Eigen::MatrixXd X = testutil::random_design(30, 2, rng);
  Eigen::VectorXd Y(30);
  for (int i = 0; i < 30; ++i) Y[i] = rng.normal();
  KernelSpec spec{KernelFamily::matern52, 0.6, 1.7, 1e-6};
  DenseGP gp(X, Y, spec);
  const Eigen::MatrixXd Xt = testutil::random_design(50, 2, rng);
  const DensePrediction pred = dense_predict(gp, Xt);
  const double prior = spec.tau2 * (1.0 + spec.g);
  for (int i = 0; i < 50; ++i) {
    CHECK(pred.cov(i, i) <= prior + 1e-10);
    CHECK(pred.cov(i, i) >= -1e-10);
  }
  CHECK((pred.cov - pred.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("duplicate rows with zero nugget are exactly singular") {
  Eigen::MatrixXd X(3, 1);
  X << 0.5, 0.5, 0.9;
  KernelSpec spec{KernelFamily::sqexp, 1.0, 1.0, 0.0};
  // the raw factorization detects the singularity; the library's retry
  // policy then rescues it with diagonal jitter
  Eigen::LLT<Eigen::MatrixXd> raw(cov_matrix_sym(X, spec));
  CHECK(raw.info() != Eigen::Success);
  Eigen::VectorXd Y(3);
  Y << 0.0, 0.1, 0.2;
  CHECK_NOTHROW(DenseGP(X, Y, spec));
}

TEST_CASE("partitioned inverse identities") {
  SECTION("identity input") {
    const Eigen::MatrixXd I6 = Eigen::MatrixXd::Identity(6, 6);
    const PartitionedInverse inv = partitioned_inverse_check(I6, 4);
    CHECK(inv.A11.isApprox(Eigen::MatrixXd::Identity(4, 4)));
    CHECK(inv.A22.isApprox(Eigen::MatrixXd::Identity(2, 2)));
    CHECK(inv.A12.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(inv.A21.cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("diagonal input") {
    Eigen::VectorXd d(5);
    d << 2.0, 4.0, 0.5, 8.0, 10.0;
    const PartitionedInverse inv = partitioned_inverse_check(d.asDiagonal(), 3);
    for (int i = 0; i < 3; ++i) CHECK(inv.A11(i, i) == Catch::Approx(1.0 / d[i]));
    for (int i = 0; i < 2; ++i) CHECK(inv.A22(i, i) == Catch::Approx(1.0 / d[3 + i]));
  }
  SECTION("random SPD 6x6 split 4+2") {
    Rng rng(229);
    Eigen::MatrixXd A(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) A(i, j) = rng.normal();
    const Eigen::MatrixXd B = A * A.transpose() + 6.0 * Eigen::MatrixXd::Identity(6, 6);
    const PartitionedInverse inv = partitioned_inverse_check(B, 4);
    Eigen::MatrixXd full(6, 6);
    full.topLeftCorner(4, 4) = inv.A11;
    full.topRightCorner(4, 2) = inv.A12;
    full.bottomLeftCorner(2, 4) = inv.A21;
    full.bottomRightCorner(2, 2) = inv.A22;
    const Eigen::MatrixXd direct = B.inverse();
    CHECK((full - direct).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((full * B - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
  }
}
