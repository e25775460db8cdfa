#pragma once

#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace siv {

template <typename Scalar>
using ComplexMatrixT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ComplexVectorT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using CMatrix = ComplexMatrixT<double>;
using CVector = ComplexVectorT<double>;
using Vector3 = Eigen::Vector3d;

inline constexpr Complex I{0.0, 1.0};

/// Pauli matrices sigma_0..sigma_3 in the given scalar type.
template <typename Scalar = double>
ComplexMatrixT<Scalar> pauli(int k) {
    using C = std::complex<Scalar>;
    ComplexMatrixT<Scalar> m(2, 2);
    switch (k) {
        case 0: m << C(1), C(0), C(0), C(1); break;
        case 1: m << C(0), C(1), C(1), C(0); break;
        case 2: m << C(0), C(0, -1), C(0, 1), C(0); break;
        default: m << C(1), C(0), C(0), C(-1); break;
    }
    return m;
}

template <typename A, typename B>
auto kron(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    using Scalar = typename A::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
        Eigen::kroneckerProduct(a.derived(), b.derived());
    return out;
}

template <typename A, typename B>
auto commutator(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return (a * b - b * a).eval();
}

template <typename A, typename B>
auto anticommutator(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return (a * b + b * a).eval();
}

/// ||A - A^dagger|| relative to ||A|| (0 for the zero matrix).
template <typename A>
typename A::RealScalar hermiticity_defect(const Eigen::MatrixBase<A>& a) {
    const auto scale = a.norm();
    if (scale == 0) return 0;
    return (a - a.adjoint()).norm() / scale;
}

template <typename A>
bool is_hermitian(const Eigen::MatrixBase<A>& a, typename A::RealScalar rel_tol = 1e-12) {
    return a.rows() == a.cols() && hermiticity_defect(a) <= rel_tol;
}

/// |i><j| in dimension d.
inline CMatrix ket_bra(Eigen::Index d, Eigen::Index i, Eigen::Index j) {
    CMatrix m = CMatrix::Zero(d, d);
    m(i, j) = 1.0;
    return m;
}

inline CMatrix projector(Eigen::Index d, Eigen::Index i) { return ket_bra(d, i, i); }

/// Pure-state density matrix |i><i|.
inline CMatrix basis_state(Eigen::Index d, Eigen::Index i) { return projector(d, i); }

}  // namespace siv
