#pragma once

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace duality {

// Small dense complex algebra for the polarization (dim 2) and
// path x polarization (dim 4) spaces. Everything is fixed-size Eigen.
//
// Composite basis ordering (fixed everywhere):
//   0: (path 0, h)   1: (path 0, v)   2: (path 1, h)   3: (path 1, v)

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar, int Dim>
using Ket = Eigen::Matrix<Complex<Scalar>, Dim, 1>;

template <typename Scalar, int Dim>
using Op = Eigen::Matrix<Complex<Scalar>, Dim, Dim>;

template <typename Scalar>
using Ket2 = Ket<Scalar, 2>;
template <typename Scalar>
using Ket4 = Ket<Scalar, 4>;
template <typename Scalar>
using Op2 = Op<Scalar, 2>;
template <typename Scalar>
using Op4 = Op<Scalar, 4>;

using Ket2d = Ket2<double>;
using Ket4d = Ket4<double>;
using Op2d = Op2<double>;
using Op4d = Op4<double>;

inline constexpr double kPositivityTol = 1e-10;
inline constexpr double kCompletenessTol = 1e-10;

enum class Polarization : int { kH = 0, kV = 1 };

template <typename Scalar = double>
Ket2<Scalar> ket_h() {
  return Ket2<Scalar>(Complex<Scalar>(1), Complex<Scalar>(0));
}

template <typename Scalar = double>
Ket2<Scalar> ket_v() {
  return Ket2<Scalar>(Complex<Scalar>(0), Complex<Scalar>(1));
}

/// Path ket |0> or |1>.
template <typename Scalar = double>
Ket2<Scalar> ket_path(int path) {
  if (path != 0 && path != 1) throw std::invalid_argument("path index must be 0 or 1");
  return path == 0 ? ket_h<Scalar>() : ket_v<Scalar>();
}

constexpr int composite_index(int path, Polarization pol) {
  return 2 * path + static_cast<int>(pol);
}

template <typename Scalar = double>
Ket4<Scalar> ket_path_pol(int path, Polarization pol) {
  if (path != 0 && path != 1) throw std::invalid_argument("path index must be 0 or 1");
  Ket4<Scalar> k = Ket4<Scalar>::Zero();
  k(composite_index(path, pol)) = Complex<Scalar>(1);
  return k;
}

template <typename Scalar = double>
Op2<Scalar> sigma_x() {
  Op2<Scalar> m;
  m << Complex<Scalar>(0), Complex<Scalar>(1), Complex<Scalar>(1), Complex<Scalar>(0);
  return m;
}

template <typename Scalar = double>
Op2<Scalar> sigma_z() {
  Op2<Scalar> m;
  m << Complex<Scalar>(1), Complex<Scalar>(0), Complex<Scalar>(0), Complex<Scalar>(-1);
  return m;
}

/// Kronecker product. The result size is known at compile time whenever both
/// operands are fixed-size, so a 2 (x) 2 product is a 4-dim object.
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using ScalarT = typename DerivedA::Scalar;
  static_assert(std::is_same_v<ScalarT, typename DerivedB::Scalar>, "kron: scalar types differ");
  constexpr int kRa = DerivedA::RowsAtCompileTime, kRb = DerivedB::RowsAtCompileTime;
  constexpr int kCa = DerivedA::ColsAtCompileTime, kCb = DerivedB::ColsAtCompileTime;
  constexpr int kRows = (kRa == Eigen::Dynamic || kRb == Eigen::Dynamic) ? Eigen::Dynamic : kRa * kRb;
  constexpr int kCols = (kCa == Eigen::Dynamic || kCb == Eigen::Dynamic) ? Eigen::Dynamic : kCa * kCb;
  Eigen::Matrix<ScalarT, kRows, kCols> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// <a|b>, conjugate-linear in the first argument.
template <typename DerivedA, typename DerivedB>
auto inner(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner: dimension mismatch");
  return a.dot(b);  // Eigen's dot conjugates the first operand
}

template <typename Derived>
auto norm_sq(const Eigen::MatrixBase<Derived>& a) {
  return a.squaredNorm();
}

template <typename Derived>
auto adjoint(const Eigen::MatrixBase<Derived>& m) {
  return m.adjoint().eval();
}

/// |a><a|
template <typename Derived>
auto projector(const Eigen::MatrixBase<Derived>& a) {
  return (a * a.adjoint()).eval();
}

/// Largest |entry| of m.
template <typename Derived>
auto max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& m, double tol = 1e-12) {
  const auto id = Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime,
                                Derived::ColsAtCompileTime>::Identity(m.rows(), m.cols());
  return static_cast<double>(max_abs(m.adjoint() * m - id)) <= tol;
}

/// True when a == c * b for some unit-modulus c.
template <typename DerivedA, typename DerivedB>
bool equal_up_to_phase(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                       double tol = 1e-12) {
  Eigen::Index r = 0, c = 0;
  b.cwiseAbs().maxCoeff(&r, &c);
  if (std::abs(b(r, c)) <= tol) return static_cast<double>(max_abs(a)) <= tol;
  const auto phase = a(r, c) / b(r, c);
  if (std::abs(std::abs(phase) - 1.0) > tol) return false;
  return static_cast<double>(max_abs(a - phase * b)) <= tol;
}

template <typename Scalar, int Dim>
struct PovmElement {
  Op<Scalar, Dim> op;
  std::string label;    // detector name
  std::string meaning;  // what a click is taken to mean
};

/// Generalized measurement: positive operators that should sum to identity.
template <typename Scalar, int Dim>
struct PovmSet {
  std::vector<PovmElement<Scalar, Dim>> elements;

  std::size_t size() const { return elements.size(); }
  const PovmElement<Scalar, Dim>& operator[](std::size_t i) const { return elements[i]; }

  const PovmElement<Scalar, Dim>& find(const std::string& label) const {
    auto it = std::find_if(elements.begin(), elements.end(),
                           [&](const auto& e) { return e.label == label; });
    if (it == elements.end()) throw std::out_of_range("no POVM element labelled " + label);
    return *it;
  }
};

struct PovmReport {
  std::vector<double> min_eigenvalues;
  double hermiticity_residual = 0.0;
  double completeness_residual = 0.0;

  double min_eigenvalue() const {
    return *std::min_element(min_eigenvalues.begin(), min_eigenvalues.end());
  }
  bool valid(double positivity_tol = kPositivityTol,
             double completeness_tol = kCompletenessTol) const {
    return min_eigenvalue() >= -positivity_tol && completeness_residual <= completeness_tol &&
           hermiticity_residual <= completeness_tol;
  }
};

/// Reports per-element minimum eigenvalue and the completeness residual
/// max|sum_j E_j - I|. Never throws for a nonempty set.
template <typename Scalar, int Dim>
PovmReport validate_povm(const PovmSet<Scalar, Dim>& povm) {
  if (povm.elements.empty()) throw std::invalid_argument("validate_povm: empty POVM");
  PovmReport report;
  Op<Scalar, Dim> sum = Op<Scalar, Dim>::Zero();
  for (const auto& e : povm.elements) {
    report.hermiticity_residual =
        std::max(report.hermiticity_residual, static_cast<double>(max_abs(e.op - e.op.adjoint())));
    const Op<Scalar, Dim> herm = (e.op + e.op.adjoint()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Op<Scalar, Dim>> solver(herm, Eigen::EigenvaluesOnly);
    report.min_eigenvalues.push_back(static_cast<double>(solver.eigenvalues().minCoeff()));
    sum += e.op;
  }
  report.completeness_residual =
      static_cast<double>(max_abs(sum - Op<Scalar, Dim>::Identity()));
  return report;
}

/// Tr(rho E) for a pure state rho = |psi><psi|.
template <typename Scalar, int Dim>
Scalar expectation(const Op<Scalar, Dim>& op, const Ket<Scalar, Dim>& psi) {
  return std::real(psi.dot(op * psi));
}

}  // namespace duality
