#include "qfuse/quantum_state.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace qfuse;

namespace {

DensityMatrix random_density(int qubit_count, std::mt19937_64& rng) {
  const Eigen::Index d = Eigen::Index{1} << qubit_count;
  std::normal_distribution<double> gauss;
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = {gauss(rng), gauss(rng)};
  Matrix rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix::from_matrix(rho);
}

DensityMatrix random_pure(int qubit_count, std::mt19937_64& rng) {
  const Eigen::Index d = Eigen::Index{1} << qubit_count;
  std::normal_distribution<double> gauss;
  Vector ket(d);
  for (Eigen::Index i = 0; i < d; ++i) ket(i) = {gauss(rng), gauss(rng)};
  return DensityMatrix::pure(ket);
}

}  // namespace

TEST_SUITE("quantum_state") {

TEST_CASE("bell kets are orthonormal") {
  for (BellKind a : kAllBellKinds) {
    for (BellKind b : kAllBellKinds) {
      const Complex overlap = bell_ket(a).dot(bell_ket(b));
      const double expected = a == b ? 1.0 : 0.0;
      CHECK(std::abs(overlap - expected) < kAlgebraTol);
    }
  }
  CHECK(std::string(to_string(BellKind::PhiPlus)) == "phi_plus");
  CHECK(std::string(to_string(BellKind::PsiMinus)) == "psi_minus");
}

TEST_CASE("bell states are pure and mutually orthogonal") {
  for (BellKind a : kAllBellKinds) {
    const DensityMatrix rho = bell_state(a);
    CHECK(rho.purity() == doctest::Approx(1.0).epsilon(1e-12));
    for (BellKind b : kAllBellKinds) {
      const double f = fidelity(rho, bell_state(b));
      CHECK(f == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("from_matrix rejects invalid operators") {
  Matrix ok = bell_state(BellKind::PhiPlus).matrix();

  SUBCASE("non-hermitian") {
    Matrix m = ok;
    m(0, 1) += Complex{0.1, 0.0};
    CHECK_THROWS_AS(DensityMatrix::from_matrix(m), std::invalid_argument);
  }
  SUBCASE("wrong trace") {
    CHECK_THROWS_AS(DensityMatrix::from_matrix(2.0 * ok),
                    std::invalid_argument);
  }
  SUBCASE("negative eigenvalue") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.5;
    m(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix::from_matrix(m), std::invalid_argument);
  }
  SUBCASE("unsupported dimension") {
    Matrix m = Matrix::Identity(3, 3) / 3.0;
    CHECK_THROWS_AS(DensityMatrix::from_matrix(m), std::invalid_argument);
  }
}

TEST_CASE("pure normalizes its ket") {
  Vector ket(2);
  ket << 3.0, 4.0;
  const DensityMatrix rho = DensityMatrix::pure(ket);
  CHECK(rho.matrix()(0, 0).real() == doctest::Approx(9.0 / 25.0));
  CHECK(rho.purity() == doctest::Approx(1.0));
}

TEST_CASE("maximally mixed state has purity 1/d") {
  for (int q : {1, 2}) {
    const DensityMatrix rho = DensityMatrix::maximally_mixed(q);
    CHECK(rho.purity() == doctest::Approx(1.0 / rho.dim()));
  }
}

TEST_CASE("werner states interpolate between bell and identity") {
  CHECK(werner_state(BellKind::PsiMinus, 1.0)
            .approx_equal(bell_state(BellKind::PsiMinus)));
  CHECK(werner_state(BellKind::PhiPlus, 0.0)
            .approx_equal(DensityMatrix::maximally_mixed(2)));
  for (double v : {-1.0 / 3.0, 0.25, 0.812, 1.0}) {
    const double f =
        fidelity(bell_state(BellKind::PhiPlus), werner_state(BellKind::PhiPlus, v));
    CHECK(f == doctest::Approx((1.0 + 3.0 * v) / 4.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(werner_state(BellKind::PhiPlus, 1.01), std::invalid_argument);
  CHECK_THROWS_AS(werner_state(BellKind::PhiPlus, -0.4), std::invalid_argument);
}

TEST_CASE("tensor matches an independent kronecker product") {
  std::mt19937_64 rng(7001);
  for (int rep = 0; rep < 5; ++rep) {
    const DensityMatrix a = random_density(1, rng);
    const DensityMatrix b = random_density(2, rng);
    const DensityMatrix ab = tensor(a, b);
    CHECK(ab.qubit_count() == 3);
    CHECK(approx_equal(ab.matrix(), oracle::kron(a.matrix(), b.matrix())));
  }
  const DensityMatrix four =
      tensor(bell_state(BellKind::PhiPlus), bell_state(BellKind::PhiPlus));
  CHECK(four.qubit_count() == 4);
  CHECK_THROWS_AS(tensor(four, DensityMatrix::maximally_mixed(1)),
                  std::length_error);
}

TEST_CASE("permute_qubits reorders tensor factors") {
  std::mt19937_64 rng(7002);
  const DensityMatrix a = random_pure(1, rng);
  const DensityMatrix b = random_pure(1, rng);
  const DensityMatrix c = random_pure(1, rng);
  const DensityMatrix d = random_pure(1, rng);

  SUBCASE("two-qubit swap") {
    const DensityMatrix swapped = permute_qubits(tensor(a, b), {1, 0});
    CHECK(swapped.approx_equal(tensor(b, a), 1e-10));
  }
  SUBCASE("four-qubit shuffle") {
    const DensityMatrix state = tensor(tensor(a, b), tensor(c, d));
    // New position k holds original qubit order[k].
    const DensityMatrix shuffled = permute_qubits(state, {2, 0, 3, 1});
    const DensityMatrix expected = tensor(tensor(c, a), tensor(d, b));
    CHECK(shuffled.approx_equal(expected, 1e-10));
  }
  SUBCASE("identity and inverse") {
    const DensityMatrix state = random_density(2, rng);
    CHECK(permute_qubits(state, {0, 1}).approx_equal(state));
    const DensityMatrix back =
        permute_qubits(permute_qubits(state, {1, 0}), {1, 0});
    CHECK(back.approx_equal(state, 1e-10));
  }
  SUBCASE("bad order throws") {
    CHECK_THROWS_AS(permute_qubits(tensor(a, b), {0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(permute_qubits(tensor(a, b), {0}), std::invalid_argument);
  }
}

TEST_CASE("partial_trace recovers tensor factors") {
  std::mt19937_64 rng(7003);
  const DensityMatrix a = random_density(1, rng);
  const DensityMatrix b = random_density(1, rng);
  const DensityMatrix c = random_density(1, rng);
  const DensityMatrix d = random_density(1, rng);
  const DensityMatrix state = tensor(tensor(a, b), tensor(c, d));

  CHECK(partial_trace(state, {0}).approx_equal(a, 1e-10));
  CHECK(partial_trace(state, {1, 3}).approx_equal(tensor(b, d), 1e-10));
  CHECK(partial_trace(state, {0, 1, 2}).approx_equal(tensor(tensor(a, b), c),
                                                     1e-10));
  CHECK_THROWS_AS(partial_trace(state, {0, 1, 2, 3}), std::invalid_argument);

  // Tracing half of an entangled pair leaves the maximally mixed state.
  const DensityMatrix half = partial_trace(bell_state(BellKind::PsiMinus), {0});
  CHECK(half.approx_equal(DensityMatrix::maximally_mixed(1), 1e-10));

  CHECK_THROWS_AS(partial_trace(state, {}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(state, {4}), std::invalid_argument);
}

TEST_CASE("bell_decompose matches the brute-force basis change") {
  std::mt19937_64 rng(7004);
  const std::array<std::array<int, 2>, 3> pairings_a = {
      {{0, 1}, {0, 2}, {1, 3}}};
  const std::array<std::array<int, 2>, 3> pairings_b = {
      {{2, 3}, {1, 3}, {0, 2}}};
  for (int rep = 0; rep < 4; ++rep) {
    const DensityMatrix state = random_density(4, rng);
    for (std::size_t p = 0; p < pairings_a.size(); ++p) {
      const auto got = bell_decompose(state, pairings_a[p], pairings_b[p]);
      const auto want =
          oracle::bell_weights(state.matrix(), pairings_a[p], pairings_b[p]);
      CHECK(got.total() == doctest::Approx(1.0).epsilon(1e-10));
      for (BellKind x : kAllBellKinds)
        for (BellKind y : kAllBellKinds)
          CHECK(got.at(x, y) == doctest::Approx(want.at(x, y)).epsilon(1e-10));
    }
  }
}

TEST_CASE("bell_decompose of a product of bell pairs") {
  const DensityMatrix state =
      tensor(bell_state(BellKind::PhiPlus), bell_state(BellKind::PsiMinus));
  const auto dist = bell_decompose(state, {0, 1}, {2, 3});
  CHECK(dist.at(BellKind::PhiPlus, BellKind::PsiMinus) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dist.total() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(bell_decompose(state, {0, 1}, {1, 3}),
                  std::invalid_argument);
}

TEST_CASE("project_and_trace implements the swap projection") {
  const DensityMatrix joint =
      tensor(bell_state(BellKind::PhiPlus), bell_state(BellKind::PhiPlus));

  SUBCASE("heralded branch and output state") {
    for (BellKind outcome : kAllBellKinds) {
      const auto [p, state] = project_and_trace(joint, outcome, {1, 3});
      CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(state.approx_equal(bell_state(outcome), 1e-12));
    }
  }
  SUBCASE("branch probability equals the bell weight marginal") {
    std::mt19937_64 rng(7005);
    const DensityMatrix state = random_density(4, rng);
    const auto dist = bell_decompose(state, {1, 3}, {0, 2});
    for (BellKind outcome : kAllBellKinds) {
      double marginal = 0.0;
      for (BellKind other : kAllBellKinds) marginal += dist.at(outcome, other);
      const auto [p, out] = project_and_trace(state, outcome, {1, 3});
      CHECK(p == doctest::Approx(marginal).epsilon(1e-10));
      CHECK(out.qubit_count() == 2);
    }
  }
  SUBCASE("vanishing branch throws") {
    Vector hhhh = Vector::Zero(16);
    hhhh(0) = 1.0;
    const DensityMatrix product = DensityMatrix::pure(hhhh);
    CHECK_THROWS_AS(project_and_trace(product, BellKind::PsiMinus, {1, 3}),
                    ImpossibleOutcomeError);
  }
}

TEST_CASE("analyzer projector matches the jones-matrix oracle") {
  const double pi = std::acos(-1.0);
  for (double hwp : {0.0, pi / 16, pi / 8, 0.3, pi / 4, 0.9, pi / 2}) {
    for (double qwp : {0.0, pi / 8, pi / 4, 0.7}) {
      for (AnalyzerPort port : {AnalyzerPort::TransmitH, AnalyzerPort::ReflectV}) {
        const Matrix got = analyzer_projector({hwp, qwp, port});
        const Matrix want = oracle::analyzer_projector(
            hwp, qwp, port == AnalyzerPort::TransmitH);
        CHECK(approx_equal(got, want, 1e-12));
      }
    }
  }
}

TEST_CASE("analyzer projector basics") {
  const double pi = std::acos(-1.0);

  // A half-wave plate at theta maps |H> to (cos 2t, sin 2t); the transmit
  // projector is the rank-1 projector on that axis.
  for (double t : {0.0, pi / 8, 0.2, pi / 4}) {
    Vector axis(2);
    axis << std::cos(2 * t), std::sin(2 * t);
    const Matrix p = analyzer_projector({t, 0.0, AnalyzerPort::TransmitH});
    CHECK(approx_equal(p, Matrix(axis * axis.adjoint()), 1e-12));
  }

  // The two ports of one setting resolve the identity.
  const Matrix sum = analyzer_projector({0.3, 0.5, AnalyzerPort::TransmitH}) +
                     analyzer_projector({0.3, 0.5, AnalyzerPort::ReflectV});
  CHECK(approx_equal(sum, Matrix(Matrix::Identity(2, 2)), 1e-12));

  // Angles live modulo pi.
  const AnalyzerSetting wrapped(pi + 0.25, 2 * pi + 0.5);
  CHECK(wrapped.hwp_angle == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(wrapped.qwp_angle == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fidelity properties") {
  std::mt19937_64 rng(7006);
  const DensityMatrix a = random_pure(2, rng);
  const DensityMatrix b = random_pure(2, rng);

  // Pure-pure fidelity is the squared overlap. Matrix square roots on
  // rank-deficient inputs carry sqrt(eps) noise, hence the tolerance.
  const double direct = expectation(a, b.matrix());
  CHECK(fidelity(a, b) == doctest::Approx(direct).epsilon(1e-7));

  const DensityMatrix m1 = random_density(2, rng);
  const DensityMatrix m2 = random_density(2, rng);
  CHECK(fidelity(m1, m1) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fidelity(m1, m2) == doctest::Approx(fidelity(m2, m1)).epsilon(1e-9));
  CHECK(fidelity(m1, m2) >= 0.0);
  CHECK(fidelity(m1, m2) <= 1.0 + 1e-12);
}

TEST_CASE("expectation of pauli observables") {
  Matrix sz(2, 2), sx(2, 2);
  sz << 1, 0, 0, -1;
  sx << 0, 1, 1, 0;
  Vector h(2), d(2);
  h << 1, 0;
  d << 1, 1;
  CHECK(expectation(DensityMatrix::pure(h), sz) == doctest::Approx(1.0));
  CHECK(expectation(DensityMatrix::pure(h), sx) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(expectation(DensityMatrix::pure(d), sx) == doctest::Approx(1.0));
  CHECK(expectation(DensityMatrix::maximally_mixed(1), sz) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

}  // TEST_SUITE
