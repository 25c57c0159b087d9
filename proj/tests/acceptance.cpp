// Acceptance run: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>

#include "dfc/assignment.hpp"
#include "dfc/benchmark.hpp"
#include "dfc/hopping.hpp"
#include "test_support.hpp"

using namespace dfc;
using dfc::testing::Rng;
using dfc::testing::Synthetic;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

benchmark::BenchmarkParams at(double alpha, double beta) {
    benchmark::BenchmarkParams p;
    p.alpha = alpha;
    p.beta = beta;
    return p;
}

Synthetic similar(const Synthetic& s, const ComplexMatrix& S) {
    return dfc::testing::synthetic_system(S * s.K * S.inverse(), S * s.Psi.col(0), s.Psi.cols());
}

Outcome c1() {
    const auto r = benchmark::evaluate_pair(at(1.0, 1.0));
    const DeviationTriple& d = r.report.deviations;
    return {d.dMin < 1e-9 && d.dAvg < 1e-9 && d.dMax < 1e-9,
            fmt("dMin %.2e dAvg %.2e dMax %.2e", d.dMin, d.dAvg, d.dMax)};
}

Outcome c2() {
    const auto r = benchmark::evaluate_pair(at(1.0, 1.0));
    ComplexMatrix T(3, 3);
    T << -1.0, -Complex(0.813, 0.002), Complex(0.703, 0.004), 0.5, Complex(0.813, 0.002), -Complex(0.703, 0.004), 0.0,
        0.0, 0.25;
    const double entry = (r.report.Tc_r1.T - T).cwiseAbs().maxCoeff();
    const double rel = linalg::relative_error(r.report.Tc_r1.T, r.report.Tlsq);
    return {entry < 1e-2 && rel < 1e-6, fmt("max |T_C - T_ex| %.2e, ||T_C - T_LSQ||/||T_LSQ|| %.2e", entry, rel)};
}

Outcome c3() {
    const auto a = benchmark::evaluate_pair(at(1.0, 1.2)).report;
    const auto b = benchmark::evaluate_pair(at(1.85, 0.94)).report;
    auto near = [](double v, double target, double tol) { return std::abs(v - target) <= tol; };
    const bool values = near(a.deviations.dMin, 0.58, 0.05) && near(a.deviations.dAvg, 0.58, 0.05) &&
                        near(a.deviations.dMax, 0.58, 0.05) && near(a.corners.r2_at_Cr2, 0.20, 0.05) &&
                        near(b.corners.r1_at_Cr1, 1.03, 0.1) && near(b.corners.r1_at_Cr2, 1.28, 0.1) &&
                        near(b.deviations.dMin, 1.05, 0.1) && near(b.deviations.dAvg, 1.24, 0.1) &&
                        near(b.deviations.dMax, 1.31, 0.1);
    const bool ordinal = b.deviations.dMin > a.deviations.dMin && b.deviations.dAvg > a.deviations.dAvg &&
                         b.deviations.dMax > a.deviations.dMax && b.corners.r1_at_Cr2 > b.corners.r1_at_Cr1;
    std::string detail = fmt("(1,1.2) d %.3f/%.3f/%.3f", a.deviations.dMin, a.deviations.dAvg, a.deviations.dMax) +
                         fmt(" r2(Cr2) %.3f; ", a.corners.r2_at_Cr2) +
                         fmt("(1.85,0.94) d %.3f/%.3f/%.3f", b.deviations.dMin, b.deviations.dAvg, b.deviations.dMax) +
                         fmt(" r1 %.3f/%.3f", b.corners.r1_at_Cr1, b.corners.r1_at_Cr2);
    detail += values ? " [value gate]" : ordinal ? " [ordinal gate]" : "";
    return {values || ordinal, detail};
}

Outcome c4() {
    Rng rng(401);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Index n = 3 + t % 8;
        const Synthetic f = dfc::testing::random_system(n, 50, rng);
        const Synthetic g = similar(f, dfc::testing::random_well_conditioned(n, rng));
        worst = std::max(worst, dfc::testing::compare_synthetic(f, g).deviations.dMax);
    }
    return {worst < 1e-8, fmt("50 systems, worst dMax %.2e", worst)};
}

Outcome c5() {
    Rng rng(501);
    int mismatches = 0;
    for (int t = 0; t < 200; ++t) {
        const Index n = 1 + t % 8;
        const ComplexVector a = dfc::testing::random_spectrum(n, rng, 0.0, 2.0);
        const ComplexVector b = dfc::testing::random_spectrum(n, rng, 0.0, 2.0);
        const Eigen::MatrixXd D = spectral_distance_matrix(a, b);
        const Assignment s = solve_assignment(D);
        if (s.cost != dfc::testing::brute_force_assignment(D)) ++mismatches;
    }
    return {mismatches == 0, fmt("200 spectra, %.0f mismatches", mismatches)};
}

Outcome c6() {
    Rng rng(601);
    int violations = 0;
    for (int t = 0; t < 20; ++t) {
        const Index n = 2 + t % 6;
        const ComplexMatrix F = dfc::testing::random_complex(n, 30, rng), G = dfc::testing::random_complex(n, 30, rng);
        const double best = residual_r1(F, G, solve_c_r1(F, G));
        for (int k = 0; k < 1000; ++k)
            if (residual_r1(F, G, dfc::testing::random_unitary(n, rng)) < best) ++violations;
    }
    return {violations == 0, fmt("20000 unitaries, %.0f violations", violations)};
}

Outcome c7() {
    Rng rng(701);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const double x0 = u(rng), y0 = u(rng), x1 = x0 + u(rng), y1 = y0 + u(rng);
        ParetoCorners c;
        c.r1_at_Cr1 = x0;
        c.r2_at_Cr1 = y1;
        c.r1_at_Cr2 = x1;
        c.r2_at_Cr2 = y0;
        const double d = pareto_deviations(c).dAvg;
        const double m = dfc::testing::monte_carlo_rectangle(x0, x1, y0, y1, 1000000, rng).first;
        worst = std::max(worst, std::abs(d - m) / m);
    }
    return {worst < 0.005, fmt("50 rectangles, worst relative error %.2e", worst)};
}

Outcome c8() {
    Rng rng(801);
    double asym = 0.0, excess = 0.0;
    for (int t = 0; t < 30; ++t) {
        const Index n = 3 + t % 6;
        const Synthetic a = dfc::testing::random_system(n, 40, rng), b = dfc::testing::random_system(n, 40, rng),
                        c = dfc::testing::random_system(n, 40, rng);
        const DeviationTriple ab = dfc::testing::compare_synthetic(a, b).deviations;
        const DeviationTriple ba = dfc::testing::compare_synthetic(b, a).deviations;
        const DeviationTriple ac = dfc::testing::compare_synthetic(a, c).deviations;
        const DeviationTriple cb = dfc::testing::compare_synthetic(c, b).deviations;
        asym = std::max(asym, std::abs(ab.dMin - ba.dMin));
        excess = std::max({excess, ab.dMin - ac.dMin - cb.dMin, ab.dAvg - ac.dAvg - cb.dAvg, ab.dMax - ac.dMax - cb.dMax});
    }
    return {asym <= 1e-8 && excess <= 1e-8,
            fmt("30 triples, max |dMin(f,g)-dMin(g,f)| %.2e, max triangle excess %.2e", asym, excess)};
}

Outcome c9() {
    const std::vector<double> grid = benchmark::grid_values(0.1, 2.0, 0.05);
    const auto rows = benchmark::sweep(grid, grid, benchmark::BenchmarkParams{}, 8);
    int violations = 0;
    std::size_t best = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        if (!r.ok() || !(r.d.dMin <= r.d.dAvg && r.d.dAvg <= r.d.dMax)) {
            ++violations;
            continue;
        }
        if (r.d.dAvg < rows[best].d.dAvg) best = k;
    }
    const bool atOne = std::abs(rows[best].alpha - 1.0) < 1e-9 && std::abs(rows[best].beta - 1.0) < 1e-9;
    return {violations == 0 && atOne && rows.size() == 39u * 39u,
            fmt("%.0f points, %.0f violations, ", double(rows.size()), violations) +
                fmt("argmin dAvg at (%.2f, %.2f)", rows[best].alpha, rows[best].beta)};
}

Outcome c10() {
    using namespace dfc::hopping;
    Rng rng(1001);
    const std::vector<double> joint{0.4, 0.1, 0.15, 0.35};
    auto h = [](std::initializer_list<double> p) {
        double s = 0.0;
        for (double v : p)
            if (v > 0.0) s -= v * std::log2(v);
        return s;
    };
    const double exact = h({0.5, 0.5}) + h({0.55, 0.45}) - h({0.4, 0.1, 0.15, 0.35});
    std::discrete_distribution<int> d(joint.begin(), joint.end());
    std::vector<std::int64_t> xs, ys;
    for (int i = 0; i < 100000; ++i) {
        const int k = d(rng);
        xs.push_back(k / 2);
        ys.push_back(k % 2);
    }
    const double miErr = std::abs(mutual_information(xs, ys, 2, 2) - exact);

    double identity = 0.0, worstFree = 0.0;
    double mean[3] = {0, 0, 0};
    int i = 0;
    for (Actuator a : {Actuator::nonlinearMuscle, Actuator::linearizedMuscle, Actuator::dcMotor}) {
        const HopperConfig c = HopperConfig::defaults(a);
        HopperTrace tr;
        if (a == Actuator::dcMotor) {
            const HopperTrace ref = muscle_reference(c);
            tr = simulate_hopping(c, &ref);
        } else {
            tr = simulate_hopping(c);
        }
        const McSeries mc = morphological_computation(tr);
        const std::vector<std::int64_t> next(mc.w.begin() + 1, mc.w.end()), prev(mc.w.begin(), mc.w.end() - 1);
        const std::int64_t S = mc.bins * mc.bins * mc.bins;
        identity = std::max(identity, std::abs(mc.iWorld.mean() - mutual_information(next, prev, S, S)));
        mean[i++] = mc.mean_mc();

        const PrimarySplit s = split_primary(export_primary(tr, mc));
        const ObservableMatrix obs = build_observables(s.train, default_hopping_aux());
        const RealMatrix pred = free_run(identify_operator(obs), obs, s.test.values.col(0), s.test.steps() - 1);
        const RealVector e = relative_row_errors(pred, s.test.values);
        worstFree = std::max({worstFree, e(0), e(1)});
    }
    const bool pass = miErr <= 0.01 && identity <= 1e-9 && mean[0] > mean[1] && mean[0] > mean[2] && worstFree < 0.15;
    return {pass, fmt("MI error %.4f bits, mean identity %.1e, ", miErr, identity) +
                      fmt("MC nlm/lm/dc %.3f/%.3f/%.3f, ", mean[0], mean[1], mean[2]) +
                      fmt("worst free-run error %.3f", worstFree)};
}

double compare_seconds(Index n, Rng& rng) {
    const Synthetic f = dfc::testing::random_system(n, 400, rng), g = dfc::testing::random_system(n, 400, rng);
    CompareOptions o;
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const ConjugacyReport r =
            compare(SystemView{f.model, f.phi.Phi, &f.Psi}, SystemView{g.model, g.phi.Phi, &g.Psi}, o);
        (void)r;
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

Outcome c11() {
    Rng rng(1101);
    const double t64 = compare_seconds(64, rng), t128 = compare_seconds(128, rng);
    return {t128 / t64 <= 10.0, fmt("N=64 %.4f s, N=128 %.4f s, ratio %.2f", t64, t128, t128 / t64)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, "conjugacy zero", 1, c1},
        {2, "conjugate transform recovery", 1, c2},
        {3, "benchmark point values", 5, c3},
        {4, "similarity-transform invariance", 30, c4},
        {5, "assignment oracle", 10, c5},
        {6, "Procrustes optimality", 30, c6},
        {7, "dAvg Monte-Carlo oracle", 60, c7},
        {8, "pseudometric properties", 60, c8},
        {9, "sweep integrity", 120, c9},
        {10, "morphological computation", 120, c10},
        {11, "compare scaling", 120, c11},
    };
    int failed = 0;
    for (const Criterion& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = o.pass && s < c.budget;
        if (!ok) ++failed;
        std::printf("%s %2d %-32s %s (%.2f s / %.0f s)\n", ok ? "✓" : "✗", c.id, c.name, o.detail.c_str(), s,
                    c.budget);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
