#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dfc/conjugacy.hpp"
#include "dfc/koopman.hpp"
#include "dfc/linalg.hpp"

namespace dfc::benchmark {

// Initial state of g: either the conjugate image h(x0), or an explicit y0.
enum class GInitial { explicitState, conjugate };

struct BenchmarkParams {
    Complex mu{-0.001, 1.0};
    Complex lambda{-0.1, 10.0};
    double alpha = 1.0;
    double beta = 1.0;
    double dt = 0.01;
    Index steps = 1000;
    Eigen::Vector2d x0{1.0, 0.5};
    // Matches the eigenfunction amplitude ratios of the printed conjugate transform.
    Eigen::Vector2d y0{-0.7035, 0.2035};
    GInitial gInitial = GInitial::explicitState;

    void validate() const {
        if (!(dt > 0.0)) throw DimensionError("benchmark: dt must be positive");
        if (steps < 2) throw DimensionError("benchmark: steps must be >= 2");
    }
};

inline Eigen::Matrix2d conjugate_h() {
    Eigen::Matrix2d h;
    h << 2.0, -1.0, -1.0, 1.0;
    return h;
}

inline Eigen::Matrix2d conjugate_h_inverse() {
    Eigen::Matrix2d h;
    h << 1.0, 1.0, 1.0, 2.0;
    return h;
}

struct Generators {
    ComplexMatrix Kf;
    ComplexMatrix Kg;
};

inline Generators analytic_generators(const BenchmarkParams& p) {
    const Complex mu = p.mu, la = p.lambda, a = p.alpha, b = p.beta;
    Generators out;
    out.Kf = ComplexMatrix::Zero(3, 3);
    out.Kf(0, 0) = mu;
    out.Kf(1, 1) = la;
    out.Kf(1, 2) = -la;
    out.Kf(2, 2) = 2.0 * mu;
    out.Kg = ComplexMatrix::Zero(3, 3);
    out.Kg(0, 0) = 2.0 * a * mu - b * la;
    out.Kg(0, 1) = 2.0 * a * mu - 2.0 * b * la;
    out.Kg(0, 2) = b * la;
    out.Kg(1, 0) = b * la - a * mu;
    out.Kg(1, 1) = 2.0 * b * la - a * mu;
    out.Kg(1, 2) = -b * la;
    out.Kg(2, 2) = 2.0 * a * mu;
    return out;
}

inline ComplexVector dictionary_f(const Eigen::Vector2d& x) {
    ComplexVector psi(3);
    psi << x(0), x(1), x(0) * x(0);
    return psi;
}

inline ComplexVector dictionary_g(const Eigen::Vector2d& y) {
    ComplexVector psi(3);
    const double s = y(0) + y(1);
    psi << y(0), y(1), s * s;
    return psi;
}

inline Eigen::Vector2d g_initial_state(const BenchmarkParams& p) {
    return p.gInitial == GInitial::conjugate ? Eigen::Vector2d(conjugate_h() * p.x0) : p.y0;
}

// exp(Kcont dt) through the eigendecomposition of the generator.
inline ComplexMatrix discrete_operator(const ComplexMatrix& Kcont, double dt) {
    const EigResult e = linalg::eig(Kcont);
    ComplexVector z(e.lambdas.size());
    for (Index i = 0; i < z.size(); ++i) z(i) = std::exp(e.lambdas(i) * dt);
    return e.R * z.asDiagonal() * e.R.partialPivLu().inverse();
}

// Psi_n = exp(Kcont n dt) psi0, each column evaluated in closed form.
inline ObservableMatrix simulate_observables(const ComplexMatrix& Kcont, const ComplexVector& psi0,
                                             const BenchmarkParams& p, std::vector<std::string> names) {
    p.validate();
    if (Kcont.rows() != psi0.size()) throw DimensionError("simulate_observables: psi0 length mismatch");
    const EigResult e = linalg::eig(Kcont);
    const ComplexVector c = e.R.partialPivLu().solve(psi0);
    ComplexMatrix Psi(psi0.size(), p.steps);
    for (Index n = 0; n < p.steps; ++n) {
        ComplexVector modes(c.size());
        for (Index i = 0; i < c.size(); ++i) modes(i) = c(i) * std::exp(e.lambdas(i) * (p.dt * static_cast<double>(n)));
        Psi.col(n) = e.R * modes;
    }
    return explicit_observables(Psi, std::move(names), p.dt);
}

inline ObservableMatrix simulate_f(const BenchmarkParams& p) {
    return simulate_observables(analytic_generators(p).Kf, dictionary_f(p.x0), p, {"x1", "x2", "x1^2"});
}

inline ObservableMatrix simulate_g(const BenchmarkParams& p) {
    return simulate_observables(analytic_generators(p).Kg, dictionary_g(g_initial_state(p)), p,
                                {"y1", "y2", "(y1+y2)^2"});
}

struct System {
    ObservableMatrix obs;
    KoopmanModel model;
    EigenfunctionTrajectory phi;
};

inline System make_system(const ComplexMatrix& Kcont, ObservableMatrix obs, double dt) {
    System s;
    s.obs = std::move(obs);
    s.model = decompose(discrete_operator(Kcont, dt), dt, 0.0);
    s.phi = eigenfunction_trajectories(s.model, s.obs);
    return s;
}

struct PairResult {
    System f;
    System g;
    ConjugacyReport report;
};

inline CompareOptions benchmark_compare_options() {
    CompareOptions o;
    o.normalization = Normalization::referenceF;
    o.spectrum = SpectrumMode::continuous;
    o.psiSpace = true;
    return o;
}

inline PairResult evaluate_pair(const BenchmarkParams& p, const CompareOptions& opt = benchmark_compare_options()) {
    p.validate();
    const Generators gen = analytic_generators(p);
    PairResult r;
    r.f = make_system(gen.Kf, simulate_f(p), p.dt);
    r.g = make_system(gen.Kg, simulate_g(p), p.dt);
    r.report = compare(SystemView{r.f.model, r.f.phi.Phi, &r.f.obs.Psi},
                       SystemView{r.g.model, r.g.phi.Phi, &r.g.obs.Psi}, opt);
    return r;
}

// Inclusive grid min, min + step, ... up to max (with rounding slack).
inline std::vector<double> grid_values(double lo, double hi, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw DimensionError("grid step must be positive");
    if (!(hi >= lo)) throw DimensionError("grid range is empty");
    const auto n = static_cast<Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + static_cast<double>(i) * step;
    return v;
}

struct SweepRow {
    double alpha = 0.0;
    double beta = 0.0;
    DeviationTriple d;
    double r1_cr1 = 0.0;
    double r2_cr1 = 0.0;
    double r1_cr2 = 0.0;
    double r2_cr2 = 0.0;
    double c_gap = 0.0;
    std::string error;

    bool ok() const { return error.empty(); }
};

inline SweepRow sweep_point(double alpha, double beta, const BenchmarkParams& base) {
    SweepRow row;
    row.alpha = alpha;
    row.beta = beta;
    try {
        BenchmarkParams p = base;
        p.alpha = alpha;
        p.beta = beta;
        const PairResult r = evaluate_pair(p);
        const ParetoCorners& c = r.report.corners;
        row.d = r.report.deviations;
        row.r1_cr1 = c.r1_at_Cr1;
        row.r2_cr1 = c.r2_at_Cr1;
        row.r1_cr2 = c.r1_at_Cr2;
        row.r2_cr2 = c.r2_at_Cr2;
        row.c_gap = r.report.cGap;
    } catch (const std::exception& e) {
        row.error = e.what();
        if (row.error.empty()) row.error = "failure";
    }
    return row;
}

// Rows come back alpha-major in grid order regardless of worker count.
inline std::vector<SweepRow> sweep(const std::vector<double>& alphas, const std::vector<double>& betas,
                                   const BenchmarkParams& p, unsigned workers = 1) {
    if (alphas.empty() || betas.empty()) throw DimensionError("sweep: empty grid");
    const std::size_t total = alphas.size() * betas.size();
    std::vector<SweepRow> rows(total);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < total; k = next++)
            rows[k] = sweep_point(alphas[k / betas.size()], betas[k % betas.size()], p);
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(total)));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return rows;
}

inline std::string format_g9(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string csv_safe(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
    return s;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "alpha,beta,d_min,d_avg,d_max,r1_cr1,r2_cr1,r1_cr2,r2_cr2,c_gap,error\n";
    for (const SweepRow& r : rows) {
        out << format_g9(r.alpha) << ',' << format_g9(r.beta);
        if (r.ok()) {
            for (double v : {r.d.dMin, r.d.dAvg, r.d.dMax, r.r1_cr1, r.r2_cr1, r.r1_cr2, r.r2_cr2, r.c_gap})
                out << ',' << format_g9(v);
        } else {
            for (int i = 0; i < 8; ++i) out << ",nan";
        }
        out << ',' << csv_safe(r.error) << '\n';
    }
}

}  // namespace dfc::benchmark
