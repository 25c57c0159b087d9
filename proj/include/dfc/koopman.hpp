#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dfc/errors.hpp"
#include "dfc/linalg.hpp"

namespace dfc {

// Rows are observables, columns are time steps.
struct PrimarySeries {
    std::vector<std::string> names;
    RealMatrix values;
    double dt = 1.0;

    Index observables() const { return values.rows(); }
    Index steps() const { return values.cols(); }

    void validate() const {
        if (values.cols() < 2) throw DimensionError("primary series needs at least 2 time steps");
        if (values.rows() < 1) throw DimensionError("primary series needs at least one observable");
        if (!names.empty() && static_cast<Index>(names.size()) != values.rows())
            throw DimensionError("primary series: " + std::to_string(names.size()) + " names for " +
                                 std::to_string(values.rows()) + " rows");
        if (!(dt > 0.0)) throw DimensionError("primary series: dt must be positive");
        linalg::require_finite(values, "primary series");
    }

    PrimarySeries slice(Index first, Index count) const {
        if (first < 0 || count < 0 || first + count > steps())
            throw DimensionError("primary series: slice [" + std::to_string(first) + ", " +
                                 std::to_string(first + count) + ") out of range " + std::to_string(steps()));
        return PrimarySeries{names, values.middleCols(first, count), dt};
    }
};

struct AuxiliaryConfig {
    RealVector theta;
    bool enabled = false;

    void validate(Index nPrimary) const {
        if (!enabled) return;
        if (theta.size() != nPrimary)
            throw DimensionError("theta has " + std::to_string(theta.size()) + " entries for " +
                                 std::to_string(nPrimary) + " primary observables");
        for (Index k = 0; k < theta.size(); ++k)
            if (!(theta(k) > 0.0) || !std::isfinite(theta(k)))
                throw DimensionError("theta entries must be positive and finite");
    }
};

struct ObservableLayout {
    bool constantRow = true;
    Index primaryBegin = 1;
    Index primaryCount = 0;
    Index auxBegin = 0;
    Index auxCount = 0;
    std::vector<std::string> names;  // primary observable names

    Index rows() const { return (constantRow ? 1 : 0) + primaryCount + auxCount; }
};

struct ObservableMatrix {
    ComplexMatrix Psi;
    ObservableLayout layout;
    AuxiliaryConfig auxConfig;
    double dt = 1.0;
    RealMatrix centers;  // training primary snapshots the auxiliary rows are measured against

    Index rows() const { return Psi.rows(); }
    Index steps() const { return Psi.cols(); }
};

struct KoopmanModel {
    ComplexMatrix K;
    ComplexVector Lambda;
    ComplexMatrix W;  // rows are left eigenvectors: W K = diag(Lambda) W
    RealVector scales;
    double eigCondition = 1.0;
    double ridge = 0.0;
    double dt = 1.0;

    Index size() const { return K.rows(); }
};

struct EigenfunctionTrajectory {
    ComplexMatrix Phi;
    RealVector scales;
    std::vector<Index> flagged;  // rows whose maximum modulus was below the scaling floor
};

// rho(n, j) = prod_k max(0, 1 - theta_k |s_k,n - c_k,j|), one row per center j.
inline RealMatrix auxiliary_rows(const RealMatrix& states, const RealMatrix& centers, const RealVector& theta) {
    if (states.rows() != centers.rows() || theta.size() != states.rows())
        throw DimensionError("auxiliary_rows: dimension mismatch");
    const Index nc = centers.cols(), ns = states.cols(), nk = states.rows();
    RealMatrix out(nc, ns);
    for (Index n = 0; n < ns; ++n) {
        for (Index j = 0; j < nc; ++j) {
            double p = 1.0;
            for (Index k = 0; k < nk && p > 0.0; ++k)
                p *= std::max(0.0, 1.0 - theta(k) * std::abs(states(k, n) - centers(k, j)));
            out(j, n) = p;
        }
    }
    return out;
}

// Lifts a series against explicit centers; build_observables(primary, aux) uses the series itself.
inline ObservableMatrix build_observables(const PrimarySeries& primary, const AuxiliaryConfig& aux,
                                          const RealMatrix& centers) {
    primary.validate();
    aux.validate(primary.observables());
    if (aux.enabled && centers.rows() != primary.observables())
        throw DimensionError("auxiliary centers have wrong row count");
    ObservableMatrix obs;
    obs.dt = primary.dt;
    obs.auxConfig = aux;
    obs.layout.constantRow = true;
    obs.layout.primaryBegin = 1;
    obs.layout.primaryCount = primary.observables();
    obs.layout.auxBegin = 1 + primary.observables();
    obs.layout.auxCount = aux.enabled ? centers.cols() : 0;
    obs.layout.names = primary.names;
    if (obs.layout.names.empty())
        for (Index k = 0; k < primary.observables(); ++k) obs.layout.names.push_back("x" + std::to_string(k));
    const Index N = primary.steps();
    obs.Psi.resize(obs.layout.rows(), N);
    obs.Psi.row(0).setOnes();
    obs.Psi.middleRows(1, primary.observables()) = primary.values.cast<Complex>();
    if (aux.enabled) {
        obs.centers = centers;
        obs.Psi.bottomRows(obs.layout.auxCount) = auxiliary_rows(primary.values, centers, aux.theta).cast<Complex>();
    }
    return obs;
}

inline ObservableMatrix build_observables(const PrimarySeries& primary, const AuxiliaryConfig& aux) {
    return build_observables(primary, aux, primary.values);
}

// An observable matrix supplied directly (no constant row, no auxiliaries).
inline ObservableMatrix explicit_observables(const ComplexMatrix& Psi, std::vector<std::string> names, double dt) {
    if (Psi.cols() < 2) throw DimensionError("observable matrix needs at least 2 time steps");
    linalg::require_finite(Psi, "observable matrix");
    ObservableMatrix obs;
    obs.Psi = Psi;
    obs.dt = dt;
    obs.layout.constantRow = false;
    obs.layout.primaryBegin = 0;
    obs.layout.primaryCount = Psi.rows();
    obs.layout.auxBegin = Psi.rows();
    obs.layout.auxCount = 0;
    obs.layout.names = std::move(names);
    return obs;
}

// Lifted observable vector of one primary state, relative to a reference layout.
inline ComplexVector lift_state(const ObservableMatrix& reference, const RealVector& state) {
    const ObservableLayout& L = reference.layout;
    if (state.size() != L.primaryCount) throw DimensionError("lift_state: state length mismatch");
    ComplexVector psi(L.rows());
    if (L.constantRow) psi(0) = 1.0;
    psi.segment(L.primaryBegin, L.primaryCount) = state.cast<Complex>();
    if (L.auxCount > 0) {
        const RealMatrix col = state;
        psi.segment(L.auxBegin, L.auxCount) =
            auxiliary_rows(col, reference.centers, reference.auxConfig.theta).col(0).cast<Complex>();
    }
    return psi;
}

inline double default_ridge(const ComplexMatrix& Psi) {
    if (Psi.cols() < 2) throw DimensionError("identification needs at least 2 time steps");
    const auto X = Psi.leftCols(Psi.cols() - 1);
    return 1e-10 * X.squaredNorm() / static_cast<double>(Psi.rows());
}

inline double default_ridge(const ObservableMatrix& obs) { return default_ridge(obs.Psi); }

namespace detail {

inline constexpr double kMinGramRcond = 1e-14;

template <class Mat>
Mat ridge_solve(const Mat& X, const Mat& Y, double ridge) {
    using Scalar = typename Mat::Scalar;
    Mat G = X * X.adjoint();
    G.diagonal().array() += Scalar(ridge);
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success || (ridge == 0.0 && llt.rcond() < kMinGramRcond))
        throw IdentificationError(ridge == 0.0 ? "X*X^H is singular; identification needs a ridge > 0"
                                               : "regularized Gram matrix is not positive definite");
    Mat B = X * Y.adjoint();
    return llt.solve(B).adjoint();
}

}  // namespace detail

// K = Y X^H (X X^H + ridge I)^{-1}, X and Y the leading and trailing N-1 columns.
inline ComplexMatrix identify_operator(const ComplexMatrix& Psi, double ridge) {
    if (Psi.cols() < 2) throw DimensionError("identification needs at least 2 time steps");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw DimensionError("ridge must be finite and >= 0");
    linalg::require_finite(Psi, "identify_operator");
    const Index n = Psi.cols() - 1;
    if (linalg::is_real(Psi)) {
        const RealMatrix P = Psi.real();
        const RealMatrix X = P.leftCols(n), Y = P.rightCols(n);
        return detail::ridge_solve<RealMatrix>(X, Y, ridge).cast<Complex>();
    }
    const ComplexMatrix X = Psi.leftCols(n), Y = Psi.rightCols(n);
    return detail::ridge_solve<ComplexMatrix>(X, Y, ridge);
}

inline ComplexMatrix identify_operator(const ObservableMatrix& obs, double ridge) {
    return identify_operator(obs.Psi, ridge);
}

inline ComplexMatrix identify_operator(const ObservableMatrix& obs) {
    return identify_operator(obs.Psi, default_ridge(obs));
}

// ||Y - K X||_F / ||Y||_F
inline double one_step_residual(const ComplexMatrix& K, const ComplexMatrix& Psi) {
    const Index n = Psi.cols() - 1;
    const ComplexMatrix Y = Psi.rightCols(n);
    const double ny = Y.norm();
    const double r = (Y - K * Psi.leftCols(n)).norm();
    return ny > 0.0 ? r / ny : r;
}

inline KoopmanModel decompose(const ComplexMatrix& K, double dt, double ridge) {
    if (K.rows() != K.cols()) throw DimensionError("decompose: K must be square");
    EigResult e = linalg::eig(K);
    if (!(e.conditionNumber < linalg::kMaxEigCondition))
        throw InvertibilityError("left eigenvector matrix is not invertible: condition " +
                                 std::to_string(e.conditionNumber));
    KoopmanModel m;
    m.K = K;
    m.Lambda = std::move(e.lambdas);
    m.W = e.R.partialPivLu().inverse();
    m.scales = RealVector::Ones(K.rows());
    m.eigCondition = e.conditionNumber;
    m.ridge = ridge;
    m.dt = dt;
    return m;
}

// ||W K - diag(Lambda) W||_F / ||K||_F
inline double eigen_residual(const KoopmanModel& m) {
    const double nk = m.K.norm();
    const double r = (m.W * m.K - m.Lambda.asDiagonal() * m.W).norm();
    return nk > 0.0 ? r / nk : r;
}

inline constexpr double kScaleFloor = 1e-14;

// Phi = diag(scales) W Psi with each row scaled to unit maximum modulus; updates model.scales.
inline EigenfunctionTrajectory eigenfunction_trajectories(KoopmanModel& model, const ComplexMatrix& Psi) {
    if (Psi.rows() != model.size()) throw DimensionError("eigenfunction_trajectories: N_Psi mismatch");
    EigenfunctionTrajectory out;
    out.Phi = model.W * Psi;
    out.scales = RealVector::Ones(model.size());
    for (Index i = 0; i < out.Phi.rows(); ++i) {
        const double mx = out.Phi.row(i).cwiseAbs().maxCoeff();
        if (mx < kScaleFloor) {
            out.flagged.push_back(i);
            continue;
        }
        out.scales(i) = 1.0 / mx;
        out.Phi.row(i) *= out.scales(i);
    }
    model.scales = out.scales;
    return out;
}

inline EigenfunctionTrajectory eigenfunction_trajectories(KoopmanModel& model, const ObservableMatrix& obs) {
    return eigenfunction_trajectories(model, obs.Psi);
}

// Column n is K^n psi0.
inline ComplexMatrix predict(const KoopmanModel& model, const ComplexVector& psi0, Index steps) {
    if (psi0.size() != model.size()) throw DimensionError("predict: psi0 length mismatch");
    if (steps < 0) throw DimensionError("predict: negative step count");
    ComplexMatrix out(model.size(), steps + 1);
    out.col(0) = psi0;
    for (Index n = 1; n <= steps; ++n) out.col(n).noalias() = model.K * out.col(n - 1);
    return out;
}

// Multi-step primary prediction; auxiliaries are re-lifted from the predicted primary state each step.
// Column 0 is the initial state.
inline RealMatrix free_run(const ComplexMatrix& K, const ObservableMatrix& reference, const RealVector& state0,
                           Index steps) {
    const ObservableLayout& L = reference.layout;
    if (K.rows() != L.rows() || K.cols() != L.rows()) throw DimensionError("free_run: K does not match layout");
    RealMatrix out(L.primaryCount, steps + 1);
    out.col(0) = state0;
    const bool real = linalg::is_real(K);
    const RealMatrix Kr = real ? RealMatrix(K.real()) : RealMatrix();
    for (Index n = 1; n <= steps; ++n) {
        const ComplexVector psi = lift_state(reference, out.col(n - 1));
        if (real) {
            const RealVector next = Kr.middleRows(L.primaryBegin, L.primaryCount) * psi.real();
            out.col(n) = next;
        } else {
            const ComplexVector next = K.middleRows(L.primaryBegin, L.primaryCount) * psi;
            out.col(n) = next.real();
        }
        if (!linalg::all_finite(out.col(n))) {
            out.rightCols(steps + 1 - n).setConstant(std::numeric_limits<double>::quiet_NaN());
            break;
        }
    }
    return out;
}

// Per-row ||pred - truth|| / ||truth|| (absolute error for an all-zero row).
inline RealVector relative_row_errors(const RealMatrix& pred, const RealMatrix& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw DimensionError("relative_row_errors: shape mismatch");
    RealVector e(pred.rows());
    for (Index k = 0; k < pred.rows(); ++k) {
        const double nt = truth.row(k).norm();
        const double d = (pred.row(k) - truth.row(k)).norm();
        e(k) = nt > 0.0 ? d / nt : d;
    }
    return e;
}

// Free-running holdout error of the model identified with the given auxiliaries.
inline double holdout_error(const PrimarySeries& train, const PrimarySeries& holdout, const AuxiliaryConfig& aux,
                            std::optional<double> ridge = std::nullopt) {
    try {
        const ObservableMatrix obs = build_observables(train, aux);
        const ComplexMatrix K = identify_operator(obs, ridge ? *ridge : default_ridge(obs));
        const RealMatrix pred = free_run(K, obs, holdout.values.col(0), holdout.steps() - 1);
        if (!linalg::all_finite(pred)) return std::numeric_limits<double>::infinity();
        return relative_row_errors(pred, holdout.values).squaredNorm();
    } catch (const IdentificationError&) {
        return std::numeric_limits<double>::infinity();
    }
}

// One pass of coordinate descent over the grid, components in order; starts every theta_k
// at the median grid value.
inline AuxiliaryConfig fit_theta(const PrimarySeries& train, const PrimarySeries& holdout,
                                 const std::vector<double>& grid, std::optional<double> ridge = std::nullopt) {
    if (grid.empty()) throw DimensionError("fit_theta: empty grid");
    for (double g : grid)
        if (!(g > 0.0) || !std::isfinite(g)) throw DimensionError("fit_theta: grid values must be positive");
    if (holdout.observables() != train.observables())
        throw DimensionError("fit_theta: train and holdout observables differ");
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    AuxiliaryConfig cfg;
    cfg.enabled = true;
    cfg.theta = RealVector::Constant(train.observables(), sorted[(sorted.size() - 1) / 2]);
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < cfg.theta.size(); ++k) {
        double bestValue = cfg.theta(k);
        for (double g : grid) {
            AuxiliaryConfig trial = cfg;
            trial.theta(k) = g;
            const double err = holdout_error(train, holdout, trial, ridge);
            if (err < best) {
                best = err;
                bestValue = g;
            }
        }
        cfg.theta(k) = bestValue;
    }
    if (!std::isfinite(best)) throw FitError("fit_theta: every candidate model failed identification");
    return cfg;
}

}  // namespace dfc
