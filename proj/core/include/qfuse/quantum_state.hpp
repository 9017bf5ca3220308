#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qfuse {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Absolute tolerance for exact-algebra comparisons.
inline constexpr double kAlgebraTol = 1e-12;
/// Eigenvalue slack accepted when checking positive semidefiniteness.
inline constexpr double kPsdSlack = 1e-10;

bool approx_equal(const Matrix& a, const Matrix& b, double tol = kAlgebraTol);

/// The four maximally entangled two-qubit states. Basis order everywhere
/// is (HH, HV, VH, VV) with qubit 0 as the most significant slot.
enum class BellKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline constexpr std::array<BellKind, 4> kAllBellKinds = {
    BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus,
    BellKind::PsiMinus};

const char* to_string(BellKind kind);

/// Hermitian, trace-one, positive semidefinite operator on 1, 2 or 4
/// polarization qubits. All invariants are checked at construction;
/// instances are immutable afterwards.
class DensityMatrix {
 public:
  /// Validates Hermiticity (1e-12), unit trace (1e-12) and eigenvalues
  /// >= -1e-10; throws std::invalid_argument naming the violated
  /// invariant otherwise.
  static DensityMatrix from_matrix(Matrix m);

  /// |k><k| for a ket of dimension 2, 4 or 16; the ket is normalized.
  static DensityMatrix pure(const Vector& ket);

  static DensityMatrix maximally_mixed(int qubit_count);

  int qubit_count() const { return qubit_count_; }
  Eigen::Index dim() const { return mat_.rows(); }
  const Matrix& matrix() const { return mat_; }

  double purity() const;
  bool approx_equal(const DensityMatrix& other, double tol = kAlgebraTol) const;

 private:
  DensityMatrix(Matrix m, int qubit_count)
      : mat_(std::move(m)), qubit_count_(qubit_count) {}

  Matrix mat_;
  int qubit_count_;
};

enum class AnalyzerPort { TransmitH, ReflectV };

/// Polarization analyzer: light traverses the HWP, then the QWP, then a
/// PBS whose transmit port is |H> and reflect port is |V>. Angles are
/// stored modulo pi.
struct AnalyzerSetting {
  double hwp_angle = 0.0;
  double qwp_angle = 0.0;
  AnalyzerPort port = AnalyzerPort::TransmitH;

  AnalyzerSetting(double hwp, double qwp,
                  AnalyzerPort p = AnalyzerPort::TransmitH);
};

Vector bell_ket(BellKind kind);
DensityMatrix bell_state(BellKind kind);

/// Mixture v * |bell><bell| + (1 - v)/4 * I. Valid for -1/3 <= v <= 1.
DensityMatrix werner_state(BellKind kind, double visibility);

/// Kronecker product; qubit ordering is (a-qubits, then b-qubits), with
/// earlier qubits more significant in the basis index.
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// Reorders qubits so that new position k holds original qubit order[k].
DensityMatrix permute_qubits(const DensityMatrix& state,
                             const std::vector<int>& order);

/// Traces out every qubit not listed in `keep`; kept qubits stay in the
/// order given.
DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& keep);

struct BellPairDistribution {
  double probs[4][4] = {};
  double at(BellKind a, BellKind b) const {
    return probs[static_cast<int>(a)][static_cast<int>(b)];
  }
  double total() const;
};

/// Probability of finding Bell state X on the qubits `pair_a` jointly
/// with Bell state Y on `pair_b`, for every (X, Y). The two index pairs
/// must be disjoint and cover all four qubits.
BellPairDistribution bell_decompose(const DensityMatrix& state,
                                    std::array<int, 2> pair_a,
                                    std::array<int, 2> pair_b);

struct ImpossibleOutcomeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Projects the qubit pair `onto` of a 4-qubit state onto the given Bell
/// state and traces that pair out. Returns the branch probability and
/// the renormalized 2-qubit state of the remaining pair (kept in their
/// original relative order). Throws ImpossibleOutcomeError when the
/// branch probability vanishes.
std::pair<double, DensityMatrix> project_and_trace(const DensityMatrix& state,
                                                   BellKind projector,
                                                   std::array<int, 2> onto);

/// Rank-1 projector onto the polarization passed by the analyzer,
/// P = (J_qwp J_hwp)^dag |port><port| (J_qwp J_hwp).
/// HWP(t) = R(t) diag(1,-1) R(-t), QWP(t) = R(t) diag(1,i) R(-t).
Matrix analyzer_projector(const AnalyzerSetting& setting);

/// Uhlmann fidelity F = (tr sqrt(sqrt(a) b sqrt(a)))^2. Reduces to
/// <psi|b|psi> for pure a.
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

/// Real part of tr(rho * obs).
double expectation(const DensityMatrix& state, const Matrix& observable);

}  // namespace qfuse
