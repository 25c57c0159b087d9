#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <Eigen/Dense>

#include "dfc/errors.hpp"

namespace dfc {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

struct SvdResult {
    ComplexMatrix U;
    RealVector S;  // descending
    ComplexMatrix V;
};

struct EigResult {
    ComplexVector lambdas;
    ComplexMatrix R;  // right eigenvectors, unit-norm columns
    double conditionNumber = 1.0;
};

namespace linalg {

inline constexpr double kMaxEigCondition = 1e12;
inline constexpr double kDefaultPinvRtol = 1e-10;

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) {
            const auto v = m(i, j);
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Complex>) {
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
            } else {
                if (!std::isfinite(v)) return false;
            }
        }
    return true;
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
    if (!all_finite(m)) throw DimensionError(what + ": matrix contains NaN or Inf");
}

template <class Derived>
bool is_real(const Eigen::MatrixBase<Derived>& m) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (m(i, j).imag() != 0.0) return false;
    return true;
}

namespace detail {

inline lapack_int to_lapack(Index n) {
    if (n > static_cast<Index>(std::numeric_limits<lapack_int>::max()))
        throw DimensionError("matrix too large for LAPACK");
    return static_cast<lapack_int>(n);
}

// zgesvd fallback when the divide-and-conquer driver fails to converge
inline lapack_int gesvd(char job, ComplexMatrix& a, RealVector& s, ComplexMatrix& u, ComplexMatrix& vt) {
    const lapack_int m = to_lapack(a.rows()), n = to_lapack(a.cols());
    std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, std::min(m, n) - 1)));
    return LAPACKE_zgesvd(LAPACK_COL_MAJOR, job, job, m, n, a.data(), std::max<lapack_int>(1, m), s.data(),
                          u.data(), std::max<lapack_int>(1, to_lapack(u.rows())), vt.data(),
                          std::max<lapack_int>(1, to_lapack(vt.rows())), superb.data());
}

}  // namespace detail

// Thin SVD returns k = min(m, n) singular triplets; full returns square U, V.
inline SvdResult svd(const ComplexMatrix& M, bool full = false) {
    require_finite(M, "svd");
    const Index m = M.rows(), n = M.cols(), k = std::min(m, n);
    SvdResult out;
    if (k == 0) {
        out.U = ComplexMatrix::Identity(m, full ? m : 0);
        out.V = ComplexMatrix::Identity(n, full ? n : 0);
        out.S.resize(0);
        return out;
    }
    const char job = full ? 'A' : 'S';
    const Index ucols = full ? m : k, vtrows = full ? n : k;
    ComplexMatrix a = M;
    ComplexMatrix u(m, ucols), vt(vtrows, n);
    out.S.resize(k);
    lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, job, detail::to_lapack(m), detail::to_lapack(n), a.data(),
                                     detail::to_lapack(m), out.S.data(), u.data(), detail::to_lapack(m), vt.data(),
                                     detail::to_lapack(vtrows));
    if (info > 0) {
        a = M;
        info = detail::gesvd(job, a, out.S, u, vt);
    }
    if (info != 0) throw FactorizationError("SVD did not converge", m, n);
    out.U = std::move(u);
    out.V = vt.adjoint();
    return out;
}

inline RealVector singular_values(const ComplexMatrix& M) {
    require_finite(M, "singular_values");
    const Index m = M.rows(), n = M.cols(), k = std::min(m, n);
    RealVector s(k);
    if (k == 0) return s;
    ComplexMatrix a = M;
    Complex dummy{};
    lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', detail::to_lapack(m), detail::to_lapack(n), a.data(),
                                     detail::to_lapack(m), s.data(), &dummy, 1, &dummy, 1);
    if (info > 0) {
        a = M;
        ComplexMatrix u(1, 1), vt(1, 1);
        info = detail::gesvd('N', a, s, u, vt);
    }
    if (info != 0) throw FactorizationError("SVD did not converge", m, n);
    return s;
}

inline double condition_number(const ComplexMatrix& M) {
    const RealVector s = singular_values(M);
    if (s.size() == 0) return 1.0;
    const double smin = s(s.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

inline EigResult eig(const ComplexMatrix& M) {
    require_finite(M, "eig");
    if (M.rows() != M.cols()) throw DimensionError("eig: matrix must be square");
    const Index n = M.rows();
    EigResult out;
    out.lambdas.resize(n);
    out.R.resize(n, n);
    if (n == 0) return out;
    const lapack_int ln = detail::to_lapack(n);
    lapack_int info = 0;
    if (is_real(M)) {
        RealMatrix a = M.real();
        RealVector wr(n), wi(n);
        RealMatrix vr(n, n);
        double dummy = 0.0;
        info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', ln, a.data(), ln, wr.data(), wi.data(), &dummy, 1,
                             vr.data(), ln);
        if (info != 0) throw FactorizationError("eigendecomposition did not converge", n, n);
        for (Index j = 0; j < n; ++j) {
            if (wi(j) != 0.0 && j + 1 < n) {
                out.lambdas(j) = Complex(wr(j), wi(j));
                out.lambdas(j + 1) = Complex(wr(j + 1), wi(j + 1));
                for (Index i = 0; i < n; ++i) {
                    out.R(i, j) = Complex(vr(i, j), vr(i, j + 1));
                    out.R(i, j + 1) = Complex(vr(i, j), -vr(i, j + 1));
                }
                ++j;
            } else {
                out.lambdas(j) = Complex(wr(j), 0.0);
                out.R.col(j) = vr.col(j).cast<Complex>();
            }
        }
    } else {
        ComplexMatrix a = M;
        Complex dummy{};
        info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', ln, a.data(), ln, out.lambdas.data(), &dummy, 1,
                             out.R.data(), ln);
        if (info != 0) throw FactorizationError("eigendecomposition did not converge", n, n);
    }
    for (Index j = 0; j < n; ++j) {
        const double nrm = out.R.col(j).norm();
        if (nrm > 0.0) out.R.col(j) /= nrm;
    }
    out.conditionNumber = condition_number(out.R);
    if (!(out.conditionNumber <= kMaxEigCondition))
        throw DiagonalizabilityError("matrix is defective or nearly defective: eigenvector condition number " +
                                         std::to_string(out.conditionNumber),
                                     out.conditionNumber);
    return out;
}

inline ComplexMatrix pinv(const ComplexMatrix& M, double rtol = kDefaultPinvRtol) {
    if (!(rtol > 0.0)) throw DimensionError("pinv: rtol must be positive");
    const SvdResult s = svd(M);
    ComplexMatrix out = ComplexMatrix::Zero(M.cols(), M.rows());
    if (s.S.size() == 0 || s.S(0) == 0.0) return out;
    const double cut = rtol * s.S(0);
    Index r = 0;
    while (r < s.S.size() && s.S(r) > cut) ++r;
    const RealVector inv = s.S.head(r).cwiseInverse();
    out.noalias() = s.V.leftCols(r) * inv.asDiagonal() * s.U.leftCols(r).adjoint();
    return out;
}

inline double unitarity_defect(const ComplexMatrix& C) {
    if (C.rows() != C.cols()) return std::numeric_limits<double>::infinity();
    return (C.adjoint() * C - ComplexMatrix::Identity(C.rows(), C.cols())).norm();
}

inline double relative_error(const ComplexMatrix& a, const ComplexMatrix& b) {
    const double nb = b.norm();
    const double d = (a - b).norm();
    return nb > 0.0 ? d / nb : d;
}

}  // namespace linalg
}  // namespace dfc
