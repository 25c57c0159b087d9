#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dfc/assignment.hpp"
#include "dfc/errors.hpp"
#include "dfc/koopman.hpp"
#include "dfc/linalg.hpp"

namespace dfc {

enum class Normalization { none, referenceF, referenceG };

// Which eigenvalues enter r2: the discrete Lambda of K, or log(Lambda)/dt.
enum class SpectrumMode { discrete, continuous };

struct ParetoCorners {
    ComplexMatrix Cr1;
    ComplexMatrix Cr2;
    Permutation P;
    ComplexVector Gamma;
    double r1_at_Cr1 = 0.0;
    double r2_at_Cr1 = 0.0;
    double r1_at_Cr2 = 0.0;
    double r2_at_Cr2 = 0.0;
};

struct DeviationTriple {
    double dMin = 0.0;
    double dAvg = 0.0;
    double dMax = 0.0;
};

// Residuals of K_f = T^{-1} K_g T and Psi_g = T Psi_f; koopman is empty when T is singular.
struct PsiResiduals {
    std::optional<double> koopman;
    double trajectory = 0.0;
};

struct PsiTransform {
    ComplexMatrix T;
    ComplexVector omegaInv;
    std::vector<Index> flagged;  // Omega^{-1} entries replaced by 1
};

struct ConjugacyReport {
    ParetoCorners corners;
    DeviationTriple deviations;
    Normalization normalization = Normalization::none;
    SpectrumMode spectrum = SpectrumMode::discrete;
    double refPhiNorm = 1.0;
    double refLambdaNorm = 1.0;
    double cGap = 0.0;  // ||Cr1 - Cr2||_F / ||Cr2||_F

    bool hasPsiSpace = false;
    PsiTransform Tc_r1;
    PsiTransform Tc_r2;
    ComplexMatrix Tlsq;
    PsiResiduals res_Tc_r1;
    PsiResiduals res_Tc_r2;
    PsiResiduals res_Tlsq;
};

inline constexpr double kUnitaryTolerance = 1e-8;
inline constexpr double kGammaFloor = 1e-14;
inline constexpr double kOmegaFloor = 1e-14;
inline constexpr double kDominanceTolerance = 1e-9;

// ||Phi_g - C Phi_f||_F
inline double residual_r1(const ComplexMatrix& PhiF, const ComplexMatrix& PhiG, const ComplexMatrix& C) {
    if (PhiF.rows() != PhiG.rows() || PhiF.cols() != PhiG.cols() || C.rows() != PhiG.rows() ||
        C.cols() != PhiF.rows())
        throw DimensionError("residual_r1: dimension mismatch");
    return (PhiG - C * PhiF).norm();
}

// ||Lambda_f - C^H Lambda_g C||_F for diagonal Lambda and unitary C
inline double residual_r2(const ComplexVector& LambdaF, const ComplexVector& LambdaG, const ComplexMatrix& C) {
    if (LambdaF.size() != LambdaG.size() || C.rows() != LambdaG.size() || C.cols() != LambdaF.size())
        throw DimensionError("residual_r2: dimension mismatch");
    const double defect = linalg::unitarity_defect(C);
    if (!(defect <= kUnitaryTolerance))
        throw ContractError("residual_r2: C is not unitary (defect " + std::to_string(defect) + ")");
    ComplexMatrix M = -(C.adjoint() * LambdaG.asDiagonal() * C);
    M.diagonal() += LambdaF;
    return M.norm();
}

// Orthogonal Procrustes: U V^H from svd(Phi_g Phi_f^H).
inline ComplexMatrix solve_c_r1(const ComplexMatrix& PhiF, const ComplexMatrix& PhiG) {
    if (PhiF.rows() != PhiG.rows() || PhiF.cols() != PhiG.cols())
        throw DimensionError("solve_c_r1: dimension mismatch");
    const SvdResult s = linalg::svd(PhiG * PhiF.adjoint(), true);
    return s.U * s.V.adjoint();
}

inline Eigen::MatrixXd spectral_distance_matrix(const ComplexVector& LambdaF, const ComplexVector& LambdaG) {
    if (LambdaF.size() != LambdaG.size()) throw DimensionError("spectra have different lengths");
    const Index n = LambdaF.size();
    Eigen::MatrixXd D(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) D(i, j) = std::norm(LambdaF(i) - LambdaG(j));
    return D;
}

inline Permutation solve_permutation(const ComplexVector& LambdaF, const ComplexVector& LambdaG) {
    return solve_assignment(spectral_distance_matrix(LambdaF, LambdaG)).permutation;
}

// Phase of each diagonal entry of Phi_g (P Phi_f)^+; entries below the floor become 1.
inline ComplexVector solve_gamma(const ComplexMatrix& PhiF, const ComplexMatrix& PhiG, const Permutation& P) {
    if (PhiF.rows() != PhiG.rows() || PhiF.cols() != PhiG.cols() || P.size() != PhiF.rows())
        throw DimensionError("solve_gamma: dimension mismatch");
    const ComplexMatrix pinvPF = linalg::pinv(P.apply_rows(PhiF));
    const Index n = PhiF.rows();
    ComplexVector gamma(n);
    for (Index i = 0; i < n; ++i) {
        const Complex d = (PhiG.row(i) * pinvPF.col(i))(0);
        const double m = std::abs(d);
        gamma(i) = m < kGammaFloor ? Complex(1.0, 0.0) : d / m;
    }
    return gamma;
}

struct CR2Solution {
    ComplexMatrix C;
    Permutation P;
    ComplexVector Gamma;
};

inline CR2Solution solve_c_r2(const ComplexMatrix& PhiF, const ComplexMatrix& PhiG, const ComplexVector& LambdaF,
                              const ComplexVector& LambdaG) {
    if (LambdaF.size() != PhiF.rows()) throw DimensionError("solve_c_r2: spectrum does not match Phi");
    CR2Solution out;
    out.P = solve_permutation(LambdaF, LambdaG);
    out.Gamma = solve_gamma(PhiF, PhiG, out.P);
    out.C = out.Gamma.asDiagonal() * out.P.matrix();
    return out;
}

// A(d1, d2): mean distance from a corner over the d1/2 x d2/2 rectangle.
inline double mean_corner_distance(double d1, double d2) {
    if (!(d1 >= 0.0) || !(d2 >= 0.0)) throw DimensionError("mean_corner_distance: negative input");
    const double mx = std::max(d1, d2), mn = std::min(d1, d2);
    if (mx == 0.0) return 0.0;
    if (mn < 1e-12 * mx) return mx / 4.0;
    return (d2 * d2 * d2 * std::asinh(d1 / d2) + d1 * d1 * d1 * std::asinh(d2 / d1) +
            2.0 * d1 * d2 * std::hypot(d1, d2)) /
           (12.0 * d1 * d2);
}

namespace detail {

// Integral of sqrt(x^2 + y^2) over [0,a] x [0,b], i.e. a b A(2a, 2b).
inline double corner_integral(double a, double b) {
    if (a <= 0.0 || b <= 0.0) return 0.0;
    return a * b * mean_corner_distance(2.0 * a, 2.0 * b);
}

// Mean of sqrt(x^2 + y^2) over y in [y0, y1], 0 <= y0 <= y1, written without cancellation.
inline double segment_mean(double x, double y0, double y1) {
    x = std::abs(x);
    if (y1 < y0) std::swap(y0, y1);
    if (y1 == y0) return std::hypot(x, y0);
    if (x == 0.0) return 0.5 * (y0 + y1);
    const double r0 = std::hypot(x, y0), r1 = std::hypot(x, y1);
    const double a = y1 / x, b = y0 / x;
    const double q = (a + b) / (a * std::sqrt(1.0 + b * b) + b * std::sqrt(1.0 + a * a));
    const double z = (a - b) * q;
    const double shz = z < 1e-8 ? 1.0 - z * z / 6.0 : std::asinh(z) / z;
    return 0.5 * (r1 + y0 * (y1 + y0) / (r1 + r0)) + 0.5 * x * shz * q;
}

inline constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Mean distance from the origin over [x0,x1] x [y0,y1], all coordinates >= 0.
inline double rectangle_mean(double x0, double x1, double y0, double y1) {
    const double w = x1 - x0, h = y1 - y0;
    const double big = std::max(w, h);
    if (std::min(w, h) >= 1e-3 * big) {
        const double s = corner_integral(x1, y1) - corner_integral(x0, y1) - corner_integral(x1, y0) +
                         corner_integral(x0, y0);
        return s / (w * h);
    }
    // thin rectangle: quadrature across the short side of the exact long-side mean
    double acc = 0.0;
    for (std::size_t k = 0; k < kGaussNodes.size(); ++k) {
        if (w < h) {
            const double x = x0 + 0.5 * w * (1.0 + kGaussNodes[k]);
            acc += kGaussWeights[k] * segment_mean(x, y0, y1);
        } else {
            const double y = y0 + 0.5 * h * (1.0 + kGaussNodes[k]);
            acc += kGaussWeights[k] * segment_mean(y, x0, x1);
        }
    }
    return 0.5 * acc;
}

}  // namespace detail

inline double dominance_tolerance(const ParetoCorners& c) {
    const double scale = std::max({1.0, c.r1_at_Cr1, c.r1_at_Cr2, c.r2_at_Cr1, c.r2_at_Cr2});
    return kDominanceTolerance * scale;
}

inline DeviationTriple pareto_deviations(const ParetoCorners& c) {
    const double x0 = c.r1_at_Cr1, x1 = c.r1_at_Cr2, y0 = c.r2_at_Cr2, y1 = c.r2_at_Cr1;
    for (double v : {x0, x1, y0, y1})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("pareto_deviations: invalid residual");
    const double tol = dominance_tolerance(c);
    if (x0 > x1 + tol)
        throw ContractError("corner dominance violated: r1(Cr1) = " + std::to_string(x0) +
                            " exceeds r1(Cr2) = " + std::to_string(x1));
    if (y0 > y1 + tol)
        throw ContractError("corner dominance violated: r2(Cr2) = " + std::to_string(y0) +
                            " exceeds r2(Cr1) = " + std::to_string(y1));
    const double xh = std::max(x0, x1), yh = std::max(y0, y1);
    DeviationTriple d;
    d.dMin = std::hypot(x0, y0);
    d.dMax = std::hypot(xh, yh);
    const double w = xh - x0, h = yh - y0;
    const double degenerate = 1e-9 * d.dMax;
    if (w <= degenerate && h <= degenerate)
        d.dAvg = d.dMin;
    else if (w <= degenerate)
        d.dAvg = detail::segment_mean(0.5 * (x0 + xh), y0, yh);
    else if (h <= degenerate)
        d.dAvg = detail::segment_mean(0.5 * (y0 + yh), x0, xh);
    else
        d.dAvg = detail::rectangle_mean(x0, xh, y0, yh);
    d.dAvg = std::clamp(d.dAvg, d.dMin, d.dMax);
    return d;
}

inline ComplexMatrix lsq_transform(const ComplexMatrix& PsiF, const ComplexMatrix& PsiG) {
    if (PsiF.rows() != PsiG.rows() || PsiF.cols() != PsiG.cols())
        throw DimensionError("lsq_transform: dimension mismatch");
    return PsiG * linalg::pinv(PsiF);
}

// W scaled like Phi: diag(scales) W.
inline ComplexMatrix scaled_left_eigenvectors(const KoopmanModel& m) { return m.scales.asDiagonal() * m.W; }

// T_C = (Omega W_g)^{-1} C W_f with Omega^{-1} = Diag(W_g T_LSQ (C W_f)^+).
inline PsiTransform recover_T(const ComplexMatrix& C, const KoopmanModel& modelF, const KoopmanModel& modelG,
                              const ComplexMatrix& Tlsq) {
    const Index n = modelF.size();
    if (modelG.size() != n || C.rows() != n || C.cols() != n || Tlsq.rows() != n || Tlsq.cols() != n)
        throw DimensionError("recover_T: dimension mismatch");
    if (!(linalg::unitarity_defect(C) <= kUnitaryTolerance)) throw ContractError("recover_T: C is not unitary");
    const ComplexMatrix Wf = scaled_left_eigenvectors(modelF);
    const ComplexMatrix Wg = scaled_left_eigenvectors(modelG);
    Eigen::FullPivLU<ComplexMatrix> lu(Wg);
    if (!lu.isInvertible()) throw InvertibilityError("recover_T: W_g is not invertible");
    const ComplexMatrix CWf = C * Wf;
    const ComplexMatrix M = Wg * Tlsq * linalg::pinv(CWf);
    PsiTransform out;
    out.omegaInv = M.diagonal();
    for (Index i = 0; i < n; ++i)
        if (std::abs(out.omegaInv(i)) < kOmegaFloor) {
            out.omegaInv(i) = 1.0;
            out.flagged.push_back(i);
        }
    out.T = lu.solve(out.omegaInv.asDiagonal() * CWf);
    return out;
}

inline PsiTransform recover_T(const ComplexMatrix& C, const KoopmanModel& modelF, const KoopmanModel& modelG,
                              const ComplexMatrix& PsiF, const ComplexMatrix& PsiG) {
    return recover_T(C, modelF, modelG, lsq_transform(PsiF, PsiG));
}

inline PsiResiduals psi_residuals(const ComplexMatrix& T, const ComplexMatrix& Kf, const ComplexMatrix& Kg,
                                  const ComplexMatrix& PsiF, const ComplexMatrix& PsiG) {
    PsiResiduals r;
    r.trajectory = (PsiG - T * PsiF).norm();
    Eigen::FullPivLU<ComplexMatrix> lu(T);
    if (lu.isInvertible()) r.koopman = (Kf - lu.solve(Kg * T)).norm();
    return r;
}

inline ComplexVector spectrum(const KoopmanModel& m, SpectrumMode mode) {
    if (mode == SpectrumMode::discrete) return m.Lambda;
    if (!(m.dt > 0.0)) throw DimensionError("continuous spectrum needs dt > 0");
    ComplexVector out(m.Lambda.size());
    for (Index i = 0; i < out.size(); ++i) {
        if (m.Lambda(i) == Complex(0.0, 0.0))
            throw ContractError("continuous spectrum undefined for a zero eigenvalue");
        out(i) = std::log(m.Lambda(i)) / m.dt;
    }
    return out;
}

struct SystemView {
    const KoopmanModel& model;
    const ComplexMatrix& Phi;
    const ComplexMatrix* Psi = nullptr;  // enables Psi-space recovery
};

struct CompareOptions {
    Normalization normalization = Normalization::none;
    SpectrumMode spectrum = SpectrumMode::discrete;
    bool psiSpace = true;
};

inline ConjugacyReport compare(const SystemView& f, const SystemView& g, const CompareOptions& opt = {}) {
    const Index n = f.model.size();
    if (g.model.size() != n)
        throw DimensionError("compare: N_Psi differs (" + std::to_string(n) + " vs " +
                             std::to_string(g.model.size()) + ")");
    if (f.Phi.rows() != n || g.Phi.rows() != n) throw DimensionError("compare: Phi does not match its model");
    if (f.Phi.cols() != g.Phi.cols())
        throw DimensionError("compare: N_dt differs (" + std::to_string(f.Phi.cols()) + " vs " +
                             std::to_string(g.Phi.cols()) + ")");

    ConjugacyReport rep;
    rep.normalization = opt.normalization;
    rep.spectrum = opt.spectrum;
    const ComplexVector lf = spectrum(f.model, opt.spectrum);
    const ComplexVector lg = spectrum(g.model, opt.spectrum);

    ParetoCorners& c = rep.corners;
    c.Cr1 = solve_c_r1(f.Phi, g.Phi);
    CR2Solution s2 = solve_c_r2(f.Phi, g.Phi, lf, lg);
    c.Cr2 = std::move(s2.C);
    c.P = std::move(s2.P);
    c.Gamma = std::move(s2.Gamma);

    if (opt.normalization == Normalization::referenceF) {
        rep.refPhiNorm = f.Phi.norm();
        rep.refLambdaNorm = lf.norm();
    } else if (opt.normalization == Normalization::referenceG) {
        rep.refPhiNorm = g.Phi.norm();
        rep.refLambdaNorm = lg.norm();
    }
    if (!(rep.refPhiNorm > 0.0) || !(rep.refLambdaNorm > 0.0))
        throw ContractError("compare: reference system has zero norm");
    c.r1_at_Cr1 = residual_r1(f.Phi, g.Phi, c.Cr1) / rep.refPhiNorm;
    c.r1_at_Cr2 = residual_r1(f.Phi, g.Phi, c.Cr2) / rep.refPhiNorm;
    c.r2_at_Cr1 = residual_r2(lf, lg, c.Cr1) / rep.refLambdaNorm;
    c.r2_at_Cr2 = residual_r2(lf, lg, c.Cr2) / rep.refLambdaNorm;
    rep.deviations = pareto_deviations(c);
    rep.cGap = linalg::relative_error(c.Cr1, c.Cr2);

    if (opt.psiSpace && f.Psi && g.Psi) {
        const ComplexMatrix& PsiF = *f.Psi;
        const ComplexMatrix& PsiG = *g.Psi;
        rep.hasPsiSpace = true;
        rep.Tlsq = lsq_transform(PsiF, PsiG);
        rep.Tc_r1 = recover_T(c.Cr1, f.model, g.model, rep.Tlsq);
        rep.Tc_r2 = recover_T(c.Cr2, f.model, g.model, rep.Tlsq);
        rep.res_Tlsq = psi_residuals(rep.Tlsq, f.model.K, g.model.K, PsiF, PsiG);
        rep.res_Tc_r1 = psi_residuals(rep.Tc_r1.T, f.model.K, g.model.K, PsiF, PsiG);
        rep.res_Tc_r2 = psi_residuals(rep.Tc_r2.T, f.model.K, g.model.K, PsiF, PsiG);
    }
    return rep;
}

inline const char* to_string(Normalization n) {
    switch (n) {
        case Normalization::none: return "none";
        case Normalization::referenceF: return "referenceF";
        case Normalization::referenceG: return "referenceG";
    }
    return "none";
}

inline const char* to_string(SpectrumMode s) { return s == SpectrumMode::discrete ? "discrete" : "continuous"; }

}  // namespace dfc
