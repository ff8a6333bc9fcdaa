#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "schurdirac/schur_solver.hpp"

using namespace schurdirac;
using doctest::Approx;

namespace {

SparseMatrix scalar(double x) { return DenseMatrix::Constant(1, 1, x).sparseView(); }
BlockOperator unit_example() { return BlockOperator::assemble(scalar(2), scalar(1), scalar(1)); }
Vector one(double x) { return Vector::Constant(1, x); }

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

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

Vector stack(const StateVector& w) {
  Vector x(w.u.size() + w.v.size());
  x << w.u, w.v;
  return x;
}

}  // namespace

TEST_CASE("solve 1x1") {
  const SolveReport r = solve(unit_example(), {one(3), one(0)});
  CHECK(r.solution.u(0) == Approx(1.0));
  CHECK(r.solution.v(0) == Approx(1.0));
  CHECK(r.residual_norm <= 1e-15);
  const Vector direct = oracle::direct_solve(unit_example(), one(3), one(0));
  CHECK(direct(0) == Approx(1.0));
  CHECK(direct(1) == Approx(1.0));

  const SolveReport z = solve(unit_example(), {one(0), one(0)});
  CHECK(z.solution.u(0) == 0.0);
  CHECK(z.solution.v(0) == 0.0);
}

TEST_CASE("solve errors") {
  DenseMatrix p(2, 2);
  p << -3, 0, 0, 1;
  const BlockOperator neg = BlockOperator::assemble(p.sparseView(), SparseMatrix(2, 2), identity(2));
  CHECK(code_of([&] { solve(neg, {Vector::Ones(2), Vector::Ones(2)}); }) == ErrorCode::HypothesisFailed);
  CHECK(code_of([&] { solve(unit_example(), {Vector::Ones(2), one(1)}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("ill-conditioned flag") {
  DenseMatrix p(2, 2);
  p << 1, 0, 0, 1e-15;
  const BlockOperator op = BlockOperator::assemble(p.sparseView(), SparseMatrix(2, 2), identity(2));
  const SolveReport r = solve(op, {Vector::Ones(2), Vector::Ones(2)});
  CHECK(r.ill_conditioned);
  CHECK(r.schur_condition_estimate > 1e14);
  CHECK(!solve(unit_example(), {one(1), one(1)}).ill_conditioned);
}

TEST_CASE("random N=100 against direct solve") {
  std::mt19937_64 rng(101);
  for (bool diag : {false, true}) {
    const BlockOperator op = oracle::random_instance(rng, {100, 100, diag});
    const Vector f1 = oracle::random_vector(rng, 100), f2 = oracle::random_vector(rng, 100);
    const SolveReport r = solve(op, {f1, f2});
    CHECK(rel(stack(r.solution), oracle::direct_solve(op, f1, f2)) <= 1e-8);
    Vector f(200);
    f << f1, f2;
    CHECK(r.residual_norm <= 1e-8 * (1.0 + f.norm()));
  }
}

TEST_CASE("bijectivity round trip") {
  std::mt19937_64 rng(103);
  for (int i = 0; i < 10; ++i) {
    const BlockOperator op = oracle::random_instance(rng, {2, 60, i % 2 == 1});
    const Index n = op.half_dim();
    const RhsPair f{oracle::random_vector(rng, n), oracle::random_vector(rng, n)};
    const StateVector back = apply(op, solve(op, f).solution);
    CHECK(rel(stack(back), stack({f.f1, f.f2})) <= 1e-8);

    const StateVector w{oracle::random_vector(rng, n), oracle::random_vector(rng, n)};
    const StateVector hw = apply(op, w);
    CHECK(rel(stack(solve(op, {hw.u, hw.v}).solution), stack(w)) <= 1e-8);
  }
}

TEST_CASE("symmetry identity") {
  const SymmetryCheck c = symmetry_identity_check(unit_example(), {one(1), one(1)}, {one(1), one(0)});
  CHECK(c.lhs == Approx(3.0));
  CHECK(c.rhs == Approx(3.0));
  CHECK(c.absdiff <= 1e-15);

  std::mt19937_64 rng(107);
  for (int i = 0; i < 20; ++i) {
    const BlockOperator op = oracle::random_instance(rng, {2, 50, i % 2 == 0, 1.0});
    const Index n = op.half_dim();
    const StateVector w{oracle::random_vector(rng, n), oracle::random_vector(rng, n)};
    const StateVector wt{oracle::random_vector(rng, n), oracle::random_vector(rng, n)};
    const SymmetryCheck s = symmetry_identity_check(op, w, wt);
    CHECK(s.absdiff <= 1e-10 * (1.0 + std::abs(s.lhs)));
    CHECK(s.rhs_symmetric);
    const SymmetryCheck self = symmetry_identity_check(op, w, w);
    CHECK(self.absdiff <= 1e-10 * (1.0 + std::abs(self.lhs)));
  }
  CHECK(code_of([] {
          symmetry_identity_check(unit_example(), {Vector::Ones(2), one(1)}, {one(1), one(1)});
        }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("shifted operator") {
  const BlockOperator s = shifted_operator(unit_example(), 1.0);
  CHECK(DenseMatrix(s.p())(0, 0) == 1.0);
  CHECK(DenseMatrix(s.t())(0, 0) == 1.0);
  CHECK(DenseMatrix(s.s())(0, 0) == 2.0);
  CHECK(s.c1() == Approx(2.0));

  const BlockOperator same = shifted_operator(unit_example(), 0.0);
  CHECK(to_text(same) == to_text(unit_example()));
  CHECK(code_of([] { shifted_operator(unit_example(), -0.5); }) == ErrorCode::NegativeShiftUnsupported);

  std::mt19937_64 rng(109);
  const BlockOperator op = oracle::random_instance(rng, {20, 20});
  const Vector base = oracle::dense_eigenvalues(oracle::dense_h(op));
  const Vector moved = oracle::dense_eigenvalues(oracle::dense_h(shifted_operator(op, 0.8)));
  CHECK((moved - (base.array() - 0.8).matrix()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gap eigenvalues small") {
  const auto pairs = gap_eigenvalues(unit_example(), 2.0, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].value == Approx((1.0 + std::sqrt(13.0)) / 2.0).epsilon(1e-10));

  const BlockOperator dec = BlockOperator::assemble(identity(1), SparseMatrix(1, 1), identity(1));
  const auto d = gap_eigenvalues(dec, 0.5, 1);
  REQUIRE(d.size() == 1);
  CHECK(d[0].value == Approx(1.0));

  CHECK(code_of([] { gap_eigenvalues(unit_example(), -1.0, 1); }) == ErrorCode::NegativeShiftUnsupported);
  CHECK(code_of([] { gap_eigenvalues(unit_example(), 0.5, 3); }) == ErrorCode::ValidationError);
  CHECK(code_of([] { gap_eigenvalues(unit_example(), 2.5, 1); }) == ErrorCode::HypothesisFailed);
}

TEST_CASE("gap eigenvalues against dense spectrum") {
  std::mt19937_64 rng(113);
  for (int i = 0; i < 5; ++i) {
    const BlockOperator op = oracle::random_instance(rng, {30, 80, i % 2 == 0});
    const Vector ev = oracle::dense_eigenvalues(oracle::dense_h(op));
    const double c2 = ev(op.half_dim());
    const double sigma = 0.7 * c2;
    const auto pairs = gap_eigenvalues(op, sigma, 3);
    REQUIRE(pairs.size() == 3);
    std::vector<double> expect(ev.data(), ev.data() + ev.size());
    std::sort(expect.begin(), expect.end(),
              [&](double a, double b) { return std::abs(a - sigma) < std::abs(b - sigma); });
    for (int j = 0; j < 3; ++j) {
      CHECK(pairs[j].value == Approx(expect[j]).epsilon(1e-9));
      CHECK(pairs[j].residual <= 1e-8 * (1.0 + std::abs(pairs[j].value)));
    }
  }
}

TEST_CASE("gap eigenvalues shift consistency and determinism") {
  std::mt19937_64 rng(127);
  const BlockOperator op = oracle::random_instance(rng, {40, 40});
  const double c2 = find_c2(op, 1e-10);
  const double tau = 0.2 * c2;
  const auto base = gap_eigenvalues(op, 0.6 * c2, 2);
  const auto moved = gap_eigenvalues(shifted_operator(op, tau), 0.6 * c2 - tau, 2);
  REQUIRE(base.size() == moved.size());
  for (std::size_t j = 0; j < base.size(); ++j) CHECK(std::abs(base[j].value - tau - moved[j].value) <= 1e-8);

  const auto again = gap_eigenvalues(op, 0.6 * c2, 2);
  for (std::size_t j = 0; j < base.size(); ++j) {
    CHECK(base[j].value == again[j].value);
    CHECK((base[j].vector.u - again[j].vector.u).norm() == 0.0);
  }
}

TEST_CASE("cached factorization is shared and thread safe") {
  std::mt19937_64 rng(131);
  const BlockOperator op = oracle::random_instance(rng, {50, 50});
  const RhsPair f{oracle::random_vector(rng, 50), oracle::random_vector(rng, 50)};
  const StateVector expected = solve(op, f).solution;
  std::vector<StateVector> got(6);
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < 6; ++i) pool.emplace_back([&, i] { got[i] = solve(op, f).solution; });
  }
  for (const auto& g : got) CHECK((g.u - expected.u).norm() == 0.0);
  CHECK(cached_factorization(op, 0.0) == cached_factorization(op, 0.0));
}
