#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "schurdirac/block_operator.hpp"
#include "schurdirac/linalg.hpp"

using namespace schurdirac;
using doctest::Approx;

namespace {

SparseMatrix scalar(double x) { return DenseMatrix::Constant(1, 1, x).sparseView(); }

BlockOperator unit_example() { return BlockOperator::assemble(scalar(2), scalar(1), scalar(1)); }

const double kRoot13 = (1.0 + std::sqrt(13.0)) / 2.0;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("assemble 1x1") {
  const BlockOperator op = unit_example();
  CHECK(op.half_dim() == 1);
  CHECK(DenseMatrix(op.q())(0, 0) == 1.0);
  CHECK(op.c1() == Approx(1.0));
  // dense eigendecomposition of [[2,1],[1,-1]]
  const Vector ev = oracle::dense_eigenvalues(oracle::dense_h(op));
  CHECK(ev(0) == Approx((1.0 - std::sqrt(13.0)) / 2.0).epsilon(1e-14));
  CHECK(ev(1) == Approx(kRoot13).epsilon(1e-14));
}

TEST_CASE("assemble rejects bad input") {
  CHECK(code_of([] { BlockOperator::assemble(scalar(2), scalar(1), scalar(-1)); }) == ErrorCode::NonPositiveS);
  CHECK(code_of([] { BlockOperator::assemble(identity(2), scalar(1), identity(2)); }) ==
        ErrorCode::DimensionMismatch);
  DenseMatrix p(2, 2);
  p << 1, 2, 3, 1;
  CHECK(code_of([&] { BlockOperator::assemble(p.sparseView(), identity(2), identity(2)); }) ==
        ErrorCode::NotSymmetric);
  // asserted c1 larger than lambda_min(S)
  CHECK(code_of([] {
          BlockOperator::assemble(identity(2), identity(2), identity(2), C1Policy::assert_bound(1.5));
        }) == ErrorCode::HypothesisFailed);
}

TEST_CASE("diagonal case") {
  const BlockOperator op = BlockOperator::assemble(identity(2), SparseMatrix(2, 2), 2.0 * identity(2));
  CHECK(op.c1() == Approx(2.0));
  CHECK(op.q().nonZeros() == 0);
}

TEST_CASE("structure holds exactly") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    const BlockOperator op = oracle::random_instance(rng, {2, 30});
    CHECK((DenseMatrix(op.q()).transpose() - DenseMatrix(op.t())).norm() == 0.0);
    const DenseMatrix h = oracle::dense_h(op);
    CHECK((h - h.transpose()).norm() == 0.0);
  }
}

TEST_CASE("apply") {
  const BlockOperator op = unit_example();
  StateVector w{Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)};
  const StateVector r = apply(op, w);
  CHECK(r.u(0) == 3.0);
  CHECK(r.v(0) == 0.0);

  const StateVector z = apply(op, {Vector::Zero(1), Vector::Zero(1)});
  CHECK(z.u(0) == 0.0);
  CHECK(z.v(0) == 0.0);

  const BlockOperator dec = BlockOperator::assemble(identity(3), SparseMatrix(3, 3), identity(3));
  const Vector u = Vector::LinSpaced(3, 1, 3), v = Vector::LinSpaced(3, -2, 4);
  const StateVector d = apply(dec, {u, v});
  CHECK((d.u - u).norm() == 0.0);
  CHECK((d.v + v).norm() == 0.0);

  CHECK(code_of([&] { apply(op, {Vector::Zero(2), Vector::Zero(1)}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("schur form matrix") {
  const BlockOperator op = unit_example();
  CHECK(DenseMatrix(schur_form_matrix(op, 0.0))(0, 0) == Approx(3.0));
  CHECK(DenseMatrix(schur_form_matrix(op, 1.0))(0, 0) == Approx(1.5));
  CHECK(code_of([&] { schur_form_matrix(op, -0.1); }) == ErrorCode::NegativeAlpha);

  std::mt19937_64 rng(3);
  const DenseMatrix p = oracle::random_spd(rng, 4, 1.0);
  const BlockOperator free = BlockOperator::assemble(p.sparseView(), SparseMatrix(4, 4), identity(4));
  const DenseMatrix m = schur_form_matrix(free, 0.7);
  CHECK((m - (p - 0.7 * DenseMatrix::Identity(4, 4))).norm() == Approx(0.0).epsilon(1e-14));
}

TEST_CASE("form/matrix consistency") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const BlockOperator op = oracle::random_instance(rng, {2, 40, i % 2 == 0});
    const double alpha = 0.5 * i;
    const Vector u = oracle::random_vector(rng, op.half_dim());
    const DenseMatrix m = schur_form_matrix(op, alpha);
    const double via_matrix = u.dot(m * u);
    const double via_form = schur_form_value(op, alpha, u);
    CHECK(std::abs(via_matrix - via_form) <= 1e-12 * std::max(1.0, std::abs(via_form)));
  }
}

TEST_CASE("positivity margin") {
  const BlockOperator op = unit_example();
  CHECK(positivity_margin(op, 0.0) == Approx(3.0));
  CHECK(std::abs(positivity_margin(op, kRoot13)) <= 1e-12);
  const BlockOperator free = BlockOperator::assemble(identity(3), SparseMatrix(3, 3), identity(3));
  CHECK(positivity_margin(free, 0.0) == Approx(1.0));

  std::mt19937_64 rng(17);
  for (int i = 0; i < 8; ++i) {
    const BlockOperator r = oracle::random_instance(rng, {2, 60, i % 2 == 0, 1.0});
    CHECK(positivity_margin(r, 0.25) == Approx(oracle::dense_lambda_min(r, 0.25)).epsilon(1e-9));
  }
}

TEST_CASE("form report") {
  const FormReport r = form_report(unit_example(), 0.0);
  CHECK(r.margin == Approx(3.0));
  CHECK(r.form_matrix_condition == Approx(1.0));
}

TEST_CASE("slope bound on random instances") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> a(0.0, 3.0);
  for (int i = 0; i < 10; ++i) {
    const BlockOperator op = oracle::random_instance(rng, {2, 40, i % 3 == 0, 1.0});
    for (int j = 0; j < 10; ++j) {
      double lo = a(rng), hi = a(rng);
      if (lo > hi) std::swap(lo, hi);
      CHECK(positivity_margin(op, hi) <= positivity_margin(op, lo) - (hi - lo) + 1e-10);
    }
  }
}

TEST_CASE("find_c2") {
  CHECK(find_c2(unit_example(), 1e-8) == Approx(kRoot13).epsilon(1e-8));
  const BlockOperator five = BlockOperator::assemble(5.0 * identity(2), SparseMatrix(2, 2), identity(2));
  CHECK(std::abs(find_c2(five, 1e-8) - 5.0) <= 1e-8);

  DenseMatrix p(2, 2);
  p << -3, 0, 0, 1;
  const BlockOperator neg = BlockOperator::assemble(p.sparseView(), SparseMatrix(2, 2), identity(2));
  CHECK(code_of([&] { find_c2(neg, 1e-8); }) == ErrorCode::HypothesisFailed);
}

TEST_CASE("inertia oracle") {
  CHECK(inertia_c2_oracle(unit_example()) == Approx(kRoot13).epsilon(1e-12));
  const BlockOperator dec = BlockOperator::assemble(identity(1), SparseMatrix(1, 1), identity(1));
  CHECK(inertia_c2_oracle(dec) == Approx(1.0));
  const BlockOperator big = BlockOperator::assemble(identity(501), SparseMatrix(501, 501), identity(501));
  CHECK(code_of([&] { inertia_c2_oracle(big); }) == ErrorCode::TooLarge);

  std::mt19937_64 rng(29);
  const BlockOperator op = oracle::random_instance(rng, {50, 50});
  const double oracle_c2 = inertia_c2_oracle(op);
  REQUIRE(oracle_c2 > 0.0);
  CHECK(std::abs(find_c2(op, 1e-9) - oracle_c2) <= 1e-8);
}

TEST_CASE("embedding delta") {
  const EmbeddingCertificate c = embedding_delta(unit_example());
  CHECK(c.delta == Approx(kRoot13 / (1.0 + kRoot13)).epsilon(1e-8));
  CHECK(c.delta == Approx(0.697224).epsilon(1e-6));
  CHECK(c.min_eigenvalue == Approx(3.0 - 2.0 * c.delta).epsilon(1e-8));
  CHECK(c.min_eigenvalue == Approx(1.605551).epsilon(1e-6));
  CHECK(c.certified);

  const BlockOperator five = BlockOperator::assemble(scalar(5), SparseMatrix(1, 1), scalar(1));
  const EmbeddingCertificate f = embedding_delta(five);
  CHECK(f.delta == Approx(5.0 / 6.0).epsilon(1e-8));
  CHECK(f.certified);
}

TEST_CASE("resolvent difference") {
  const BlockOperator one = BlockOperator::assemble(scalar(2), scalar(1), scalar(1));
  CHECK(resolvent_difference_check(one, 1.0, 0.5));
  CHECK(resolvent_difference_check(one, 1.0, 0.25));
  const BlockOperator two = BlockOperator::assemble(identity(3), identity(3), 2.0 * identity(3));
  CHECK(resolvent_difference_check(two, 2.0, 1.0));

  CHECK(code_of([&] { resolvent_difference_check(one, 1.0, 0.6); }) == ErrorCode::DeltaOutOfRange);
  CHECK(code_of([&] { resolvent_difference_check(one, 1.0, 0.0); }) == ErrorCode::DeltaOutOfRange);
  CHECK(code_of([&] { resolvent_difference_check(one, 0.0, 0.1); }) == ErrorCode::NegativeAlpha);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> a(0.01, 5.0);
  for (int i = 0; i < 10; ++i) {
    const BlockOperator op = oracle::random_instance(rng, {2, 30});
    const double alpha = a(rng);
    const double bound = op.c1() * alpha / (op.c1() + alpha);
    CHECK(resolvent_difference_check(op, alpha, bound));
    CHECK(resolvent_difference_check(op, alpha, 0.5 * bound));
  }
}

TEST_CASE("text round trip") {
  std::mt19937_64 rng(37);
  const BlockOperator op = oracle::random_instance(rng, {3, 12});
  const BlockOperator back = from_text(to_text(op));
  CHECK((DenseMatrix(back.p()) - DenseMatrix(op.p())).norm() == 0.0);
  CHECK((DenseMatrix(back.t()) - DenseMatrix(op.t())).norm() == 0.0);
  CHECK((DenseMatrix(back.s()) - DenseMatrix(op.s())).norm() == 0.0);
  CHECK(back.c1() == op.c1());
  CHECK(to_text(back) == to_text(op));

  CHECK(code_of([] { from_text("not a header\n"); }) == ErrorCode::ParseError);
  std::string broken = to_text(unit_example());
  broken.replace(broken.rfind('1'), 1, "x");
  CHECK(code_of([&] { from_text(broken); }) == ErrorCode::ParseError);
}

TEST_CASE("concurrent reads of a shared operator") {
  std::mt19937_64 rng(41);
  const BlockOperator op = oracle::random_instance(rng, {30, 30});
  const double expected = positivity_margin(op, 0.3);
  std::vector<double> got(4);
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < 4; ++i) pool.emplace_back([&, i] { got[i] = positivity_margin(op, 0.3); });
  }
  for (double g : got) CHECK(g == expected);
}

TEST_CASE("sparse lambda_min matches dense") {
  std::mt19937_64 rng(43);
  const DenseMatrix a = oracle::random_spd(rng, kDenseEigenCutoff + 20, -0.5);
  const double dense = oracle::dense_eigenvalues(a)(0);
  CHECK(smallest_eigenvalue(a.sparseView()) == Approx(dense).epsilon(1e-9));
}
