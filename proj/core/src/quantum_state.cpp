#include "qfuse/quantum_state.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <string>

namespace qfuse {

namespace {

bool is_power_of_two_dim(Eigen::Index d) {
  return d == 2 || d == 4 || d == 8 || d == 16;
}

int log2_dim(Eigen::Index d) {
  int n = 0;
  while ((Eigen::Index{1} << n) < d) ++n;
  return n;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
  return out;
}

// Rotation of the (H, V) Jones vector by angle t.
Eigen::Matrix2cd jones_rotation(double t) {
  Eigen::Matrix2cd r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Eigen::Matrix2cd waveplate(double angle, Complex slow_axis_phase) {
  Eigen::Matrix2cd retarder = Eigen::Matrix2cd::Zero();
  retarder(0, 0) = 1.0;
  retarder(1, 1) = slow_axis_phase;
  return jones_rotation(angle) * retarder * jones_rotation(-angle);
}

}  // namespace

bool approx_equal(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

const char* to_string(BellKind kind) {
  switch (kind) {
    case BellKind::PhiPlus:
      return "phi_plus";
    case BellKind::PhiMinus:
      return "phi_minus";
    case BellKind::PsiPlus:
      return "psi_plus";
    case BellKind::PsiMinus:
      return "psi_minus";
  }
  return "unknown";
}

DensityMatrix DensityMatrix::from_matrix(Matrix m) {
  if (m.rows() != m.cols() || !is_power_of_two_dim(m.rows()))
    throw std::invalid_argument(
        "density matrix must be square with dimension 2, 4, 8 or 16, got " +
        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  if (!qfuse::approx_equal(m, m.adjoint(), kAlgebraTol))
    throw std::invalid_argument("density matrix must be Hermitian");
  if (std::abs(m.trace() - Complex{1.0, 0.0}) > kAlgebraTol)
    throw std::invalid_argument("density matrix must have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kPsdSlack)
    throw std::invalid_argument(
        "density matrix must be positive semidefinite, smallest eigenvalue " +
        std::to_string(solver.eigenvalues().minCoeff()));
  const int n = log2_dim(m.rows());
  return DensityMatrix(std::move(m), n);
}

DensityMatrix DensityMatrix::pure(const Vector& ket) {
  if (!is_power_of_two_dim(ket.size()))
    throw std::invalid_argument("ket dimension must be 2, 4, 8 or 16");
  const double norm = ket.norm();
  if (norm < kAlgebraTol)
    throw std::invalid_argument("cannot normalize a zero ket");
  Vector unit = ket / norm;
  Matrix m = unit * unit.adjoint();
  return DensityMatrix(std::move(m), log2_dim(ket.size()));
}

DensityMatrix DensityMatrix::maximally_mixed(int qubit_count) {
  if (qubit_count < 1 || qubit_count > 4)
    throw std::invalid_argument("qubit count must be between 1 and 4");
  const Eigen::Index d = Eigen::Index{1} << qubit_count;
  Matrix m = Matrix::Identity(d, d) / static_cast<double>(d);
  return DensityMatrix(std::move(m), qubit_count);
}

double DensityMatrix::purity() const { return (mat_ * mat_).trace().real(); }

bool DensityMatrix::approx_equal(const DensityMatrix& other, double tol) const {
  return qfuse::approx_equal(mat_, other.mat_, tol);
}

AnalyzerSetting::AnalyzerSetting(double hwp, double qwp, AnalyzerPort p)
    : hwp_angle(std::fmod(hwp, std::numbers::pi)),
      qwp_angle(std::fmod(qwp, std::numbers::pi)),
      port(p) {
  if (hwp_angle < 0) hwp_angle += std::numbers::pi;
  if (qwp_angle < 0) qwp_angle += std::numbers::pi;
}

Vector bell_ket(BellKind kind) {
  Vector v = Vector::Zero(4);
  const double s = 1.0 / std::numbers::sqrt2;
  switch (kind) {
    case BellKind::PhiPlus:
      v(0) = s;
      v(3) = s;
      break;
    case BellKind::PhiMinus:
      v(0) = s;
      v(3) = -s;
      break;
    case BellKind::PsiPlus:
      v(1) = s;
      v(2) = s;
      break;
    case BellKind::PsiMinus:
      v(1) = s;
      v(2) = -s;
      break;
  }
  return v;
}

DensityMatrix bell_state(BellKind kind) {
  return DensityMatrix::pure(bell_ket(kind));
}

DensityMatrix werner_state(BellKind kind, double visibility) {
  if (visibility < -1.0 / 3.0 - kAlgebraTol || visibility > 1.0 + kAlgebraTol)
    throw std::invalid_argument("Werner visibility must lie in [-1/3, 1]");
  Matrix m = visibility * bell_state(kind).matrix() +
             (1.0 - visibility) / 4.0 * Matrix::Identity(4, 4);
  return DensityMatrix::from_matrix(std::move(m));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.qubit_count() + b.qubit_count() > 4)
    throw std::length_error("tensor products are limited to 4 qubits total");
  Matrix m = kron(a.matrix(), b.matrix());
  return DensityMatrix::from_matrix(std::move(m));
}

DensityMatrix permute_qubits(const DensityMatrix& state,
                             const std::vector<int>& order) {
  const int n = state.qubit_count();
  if (static_cast<int>(order.size()) != n)
    throw std::invalid_argument("permutation length must match qubit count");
  std::vector<bool> seen(n, false);
  for (int q : order) {
    if (q < 0 || q >= n || seen[q])
      throw std::invalid_argument("permutation must list each qubit once");
    seen[q] = true;
  }
  const Eigen::Index d = state.dim();
  // new_index(j) gathers bit order[k] of the old index into position k,
  // with qubit 0 occupying the most significant bit.
  std::vector<Eigen::Index> map(d);
  for (Eigen::Index old = 0; old < d; ++old) {
    Eigen::Index fresh = 0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Index bit = (old >> (n - 1 - order[k])) & 1;
      fresh |= bit << (n - 1 - k);
    }
    map[old] = fresh;
  }
  Matrix out(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      out(map[r], map[c]) = state.matrix()(r, c);
  return DensityMatrix::from_matrix(std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& keep) {
  const int n = state.qubit_count();
  if (keep.empty() || static_cast<int>(keep.size()) >= n)
    throw std::invalid_argument("partial trace must keep a proper subset");
  std::vector<bool> kept(n, false);
  for (int q : keep) {
    if (q < 0 || q >= n || kept[q])
      throw std::invalid_argument("kept qubits must be distinct and in range");
    kept[q] = true;
  }
  std::vector<int> traced;
  for (int q = 0; q < n; ++q)
    if (!kept[q]) traced.push_back(q);

  // Reorder so kept qubits come first, then sum over the trailing block.
  std::vector<int> order(keep);
  order.insert(order.end(), traced.begin(), traced.end());
  DensityMatrix shuffled = permute_qubits(state, order);

  const int nk = static_cast<int>(keep.size());
  const Eigen::Index dk = Eigen::Index{1} << nk;
  const Eigen::Index dt = Eigen::Index{1} << (n - nk);
  Matrix out = Matrix::Zero(dk, dk);
  for (Eigen::Index r = 0; r < dk; ++r)
    for (Eigen::Index c = 0; c < dk; ++c)
      for (Eigen::Index t = 0; t < dt; ++t)
        out(r, c) += shuffled.matrix()(r * dt + t, c * dt + t);
  return DensityMatrix::from_matrix(std::move(out));
}

double BellPairDistribution::total() const {
  double sum = 0.0;
  for (const auto& row : probs)
    for (double p : row) sum += p;
  return sum;
}

BellPairDistribution bell_decompose(const DensityMatrix& state,
                                    std::array<int, 2> pair_a,
                                    std::array<int, 2> pair_b) {
  if (state.qubit_count() != 4)
    throw std::invalid_argument("Bell decomposition requires a 4-qubit state");
  std::array<int, 4> all = {pair_a[0], pair_a[1], pair_b[0], pair_b[1]};
  std::array<bool, 4> seen = {};
  for (int q : all) {
    if (q < 0 || q > 3 || seen[q])
      throw std::invalid_argument(
          "the two pairs must name four distinct qubits");
    seen[q] = true;
  }
  DensityMatrix grouped =
      permute_qubits(state, {pair_a[0], pair_a[1], pair_b[0], pair_b[1]});
  BellPairDistribution dist;
  for (BellKind a : kAllBellKinds) {
    const Vector ka = bell_ket(a);
    for (BellKind b : kAllBellKinds) {
      const Vector v = kron(ka, bell_ket(b));
      const Complex p = v.dot(grouped.matrix() * v);
      dist.probs[static_cast<int>(a)][static_cast<int>(b)] =
          std::max(0.0, p.real());
    }
  }
  return dist;
}

std::pair<double, DensityMatrix> project_and_trace(const DensityMatrix& state,
                                                   BellKind projector,
                                                   std::array<int, 2> onto) {
  if (state.qubit_count() != 4)
    throw std::invalid_argument("projection requires a 4-qubit state");
  if (onto[0] == onto[1] || onto[0] < 0 || onto[0] > 3 || onto[1] < 0 ||
      onto[1] > 3)
    throw std::invalid_argument("projected qubits must be distinct");
  std::vector<int> rest;
  for (int q = 0; q < 4; ++q)
    if (q != onto[0] && q != onto[1]) rest.push_back(q);

  // Move the projected pair in front; the remaining pair keeps its order.
  DensityMatrix grouped =
      permute_qubits(state, {onto[0], onto[1], rest[0], rest[1]});
  const Vector b = bell_ket(projector);

  // out(r, c) = sum_{u,v} conj[b_u] b_v rho[(u,r), (v,c)]
  Matrix out = Matrix::Zero(4, 4);
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index c = 0; c < 4; ++c)
      for (Eigen::Index u = 0; u < 4; ++u)
        for (Eigen::Index v = 0; v < 4; ++v)
          out(r, c) += std::conj(b(u)) * b(v) *
                       grouped.matrix()(u * 4 + r, v * 4 + c);

  const double p = out.trace().real();
  if (p < kAlgebraTol)
    throw ImpossibleOutcomeError(
        "projection outcome has vanishing probability");
  out /= p;
  return {p, DensityMatrix::from_matrix(std::move(out))};
}

Matrix analyzer_projector(const AnalyzerSetting& setting) {
  const Eigen::Matrix2cd hwp = waveplate(setting.hwp_angle, Complex{-1, 0});
  const Eigen::Matrix2cd qwp = waveplate(setting.qwp_angle, Complex{0, 1});
  const Eigen::Matrix2cd u = qwp * hwp;
  Eigen::Vector2cd port = Eigen::Vector2cd::Zero();
  port(setting.port == AnalyzerPort::TransmitH ? 0 : 1) = 1.0;
  const Eigen::Vector2cd back = u.adjoint() * port;
  return back * back.adjoint();
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("fidelity requires equal dimensions");
  Eigen::SelfAdjointEigenSolver<Matrix> sa(a.matrix());
  Vector sqrt_eig = sa.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<Complex>();
  Matrix root_a =
      sa.eigenvectors() * sqrt_eig.asDiagonal() * sa.eigenvectors().adjoint();
  Matrix inner = root_a * b.matrix() * root_a;
  Eigen::SelfAdjointEigenSolver<Matrix> si(inner, Eigen::EigenvaluesOnly);
  const double root_sum =
      si.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return root_sum * root_sum;
}

double expectation(const DensityMatrix& state, const Matrix& observable) {
  if (observable.rows() != state.dim() || observable.cols() != state.dim())
    throw std::invalid_argument("observable dimension mismatch");
  return (state.matrix() * observable).trace().real();
}

}  // namespace qfuse
