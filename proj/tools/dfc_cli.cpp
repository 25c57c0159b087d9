// dfc: identify Koopman models, compare them, run the benchmark sweep and the hopping example.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfc/benchmark.hpp"
#include "dfc/conjugacy.hpp"
#include "dfc/hopping.hpp"
#include "dfc/io.hpp"
#include "dfc/koopman.hpp"

namespace fs = std::filesystem;
using namespace dfc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return benchmark::format_g9(v); }

// ---------- identify ----------

struct IdentifyArgs {
    std::string input, output;
    std::optional<double> ridge, dt;
    bool aux = false;
    bool noAux = false;
    std::vector<double> theta;
    bool fitTheta = false;
    std::vector<double> thetaGrid{0.001, 0.01, 0.1, 1.0, 10.0, 100.0};
    std::optional<Index> trainSteps, holdoutSteps;
};

int cmd_identify(const IdentifyArgs& a) {
    if (!fs::exists(a.input)) throw io::IoError("input file not found: " + a.input);
    const PrimarySeries series = io::read_trajectory_csv(a.input, a.dt);
    const Index train = a.trainSteps.value_or(series.steps());
    if (train < 2 || train > series.steps())
        throw UsageError("--train-steps " + std::to_string(train) + " outside [2, " + std::to_string(series.steps()) +
                         "]");
    const PrimarySeries trainSeries = series.slice(0, train);

    AuxiliaryConfig aux;
    aux.enabled = a.aux && !a.noAux;
    if (aux.enabled) {
        if (a.fitTheta) {
            const Index rest = series.steps() - train;
            const Index hold = a.holdoutSteps.value_or(rest);
            if (hold < 2 || hold > rest)
                throw UsageError("--fit-theta needs at least 2 holdout steps after the training segment");
            aux = fit_theta(trainSeries, series.slice(train, hold), a.thetaGrid, a.ridge);
            std::cout << "fitted theta:";
            for (Index k = 0; k < aux.theta.size(); ++k) std::cout << ' ' << fmt(aux.theta(k));
            std::cout << '\n';
        } else {
            if (a.theta.empty()) throw UsageError("--aux needs --theta or --fit-theta");
            if (a.theta.size() == 1)
                aux.theta = RealVector::Constant(series.observables(), a.theta[0]);
            else
                aux.theta = Eigen::Map<const RealVector>(a.theta.data(), static_cast<Index>(a.theta.size()));
        }
    }
    const ObservableMatrix obs = build_observables(trainSeries, aux);
    const double ridge = a.ridge.value_or(default_ridge(obs));
    const ComplexMatrix K = identify_operator(obs, ridge);
    const double residual = one_step_residual(K, obs.Psi);
    KoopmanModel model = decompose(K, series.dt, ridge);
    eigenfunction_trajectories(model, obs);
    io::save_model(a.output, io::model_file_from(model, obs, residual, &trainSeries.values));

    const RealVector mod = model.Lambda.cwiseAbs();
    Index outside = 0;
    for (Index i = 0; i < mod.size(); ++i) outside += mod(i) > 1.0 + 1e-9 ? 1 : 0;
    std::cout << "N_Psi: " << model.size() << " (1 constant + " << obs.layout.primaryCount << " primary + "
              << obs.layout.auxCount << " auxiliary)\n"
              << "training steps: " << train << ", ridge: " << fmt(ridge) << '\n'
              << "eigenvalues: |lambda| in [" << fmt(mod.minCoeff()) << ", " << fmt(mod.maxCoeff()) << "], "
              << outside << " outside the unit circle, eigenvector condition " << fmt(model.eigCondition) << '\n'
              << "identification residual: " << fmt(residual) << '\n'
              << "wrote " << a.output << '\n';
    return kExitOk;
}

// ---------- compare ----------

struct CompareArgs {
    std::string modelA, modelB, output;
    std::string reference = "none";
    std::string spectrum = "discrete";
    bool emitMatrices = false;
    bool noPsiSpace = false;
};

int cmd_compare(const CompareArgs& a) {
    CompareOptions opt;
    if (a.reference == "a")
        opt.normalization = Normalization::referenceF;
    else if (a.reference == "b")
        opt.normalization = Normalization::referenceG;
    else if (a.reference == "none")
        opt.normalization = Normalization::none;
    else
        throw UsageError("--reference must be a, b or none");
    if (a.spectrum == "discrete")
        opt.spectrum = SpectrumMode::discrete;
    else if (a.spectrum == "continuous")
        opt.spectrum = SpectrumMode::continuous;
    else
        throw UsageError("--spectrum must be discrete or continuous");
    opt.psiSpace = !a.noPsiSpace;

    const auto t0 = std::chrono::steady_clock::now();
    io::ModelFile fa = io::load_model(a.modelA);
    io::ModelFile fb = io::load_model(a.modelB);
    if (fa.model.size() != fb.model.size())
        throw DimensionError("N_Psi mismatch: " + a.modelA + " has " + std::to_string(fa.model.size()) + ", " +
                             a.modelB + " has " + std::to_string(fb.model.size()));
    const ObservableMatrix oa = fa.observables(), ob = fb.observables();
    io::ReportTimings timings;
    timings.loadMs = ms_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const EigenfunctionTrajectory pa = eigenfunction_trajectories(fa.model, oa);
    const EigenfunctionTrajectory pb = eigenfunction_trajectories(fb.model, ob);
    const ConjugacyReport rep =
        compare(SystemView{fa.model, pa.Phi, &oa.Psi}, SystemView{fb.model, pb.Phi, &ob.Psi}, opt);
    timings.compareMs = ms_since(t1);

    const std::vector<io::SystemInfo> systems{{a.modelA, io::file_hash(a.modelA)}, {a.modelB, io::file_hash(a.modelB)}};
    if (!a.output.empty()) io::save_report(a.output, rep, systems, timings, a.emitMatrices);

    const auto& c = rep.corners;
    const auto& d = rep.deviations;
    std::cout << "d_min " << fmt(d.dMin) << "  d_avg " << fmt(d.dAvg) << "  d_max " << fmt(d.dMax) << '\n'
              << "r1(Cr1) " << fmt(c.r1_at_Cr1) << "  r2(Cr1) " << fmt(c.r2_at_Cr1) << "  r1(Cr2) "
              << fmt(c.r1_at_Cr2) << "  r2(Cr2) " << fmt(c.r2_at_Cr2) << '\n'
              << "normalization " << to_string(rep.normalization) << ", spectrum " << to_string(rep.spectrum)
              << ", compare " << fmt(timings.compareMs) << " ms\n";
    if (!a.output.empty()) std::cout << "wrote " << a.output << '\n';
    return kExitOk;
}

// ---------- benchmark ----------

struct SweepArgs {
    double alphaMin = 0.1, alphaMax = 2.0, betaMin = 0.1, betaMax = 2.0, step = 0.05;
    double dt = 0.01;
    Index steps = 1000;
    std::vector<double> x0{1.0, 0.5};
    std::vector<double> y0;
    std::string gInitial = "explicit";
    std::string output;
    unsigned parallel = 1;
};

benchmark::BenchmarkParams params_from(const std::vector<double>& x0, const std::vector<double>& y0,
                                       const std::string& gInitial, double dt, Index steps) {
    benchmark::BenchmarkParams p;
    p.dt = dt;
    p.steps = steps;
    if (x0.size() != 2) throw UsageError("--x0 takes two values");
    p.x0 = Eigen::Vector2d(x0[0], x0[1]);
    if (!y0.empty()) {
        if (y0.size() != 2) throw UsageError("--y0 takes two values");
        p.y0 = Eigen::Vector2d(y0[0], y0[1]);
    }
    if (gInitial == "explicit")
        p.gInitial = benchmark::GInitial::explicitState;
    else if (gInitial == "conjugate")
        p.gInitial = benchmark::GInitial::conjugate;
    else
        throw UsageError("--g-initial must be explicit or conjugate");
    p.validate();
    return p;
}

int cmd_sweep(const SweepArgs& a) {
    const auto p = params_from(a.x0, a.y0, a.gInitial, a.dt, a.steps);
    std::vector<double> alphas, betas;
    try {
        alphas = benchmark::grid_values(a.alphaMin, a.alphaMax, a.step);
        betas = benchmark::grid_values(a.betaMin, a.betaMax, a.step);
    } catch (const DimensionError& e) {
        throw UsageError(std::string("empty grid: ") + e.what());
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = benchmark::sweep(alphas, betas, p, std::max(1u, a.parallel));
    io::write_atomic(a.output, [&](std::ostream& o) { benchmark::write_sweep_csv(rows, o); });

    const benchmark::SweepRow* lo = nullptr;
    const benchmark::SweepRow* hi = nullptr;
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (!r.ok()) {
            ++failed;
            continue;
        }
        if (!lo || r.d.dAvg < lo->d.dAvg) lo = &r;
        if (!hi || r.d.dAvg > hi->d.dAvg) hi = &r;
    }
    std::cout << rows.size() << " points (" << alphas.size() << " x " << betas.size() << "), " << failed
              << " failed, " << fmt(ms_since(t0) / 1000.0) << " s\n";
    if (lo)
        std::cout << "min d_avg " << fmt(lo->d.dAvg) << " at (alpha, beta) = (" << fmt(lo->alpha) << ", "
                  << fmt(lo->beta) << ")\n"
                  << "max d_avg " << fmt(hi->d.dAvg) << " at (alpha, beta) = (" << fmt(hi->alpha) << ", "
                  << fmt(hi->beta) << ")\n";
    std::cout << "wrote " << a.output << '\n';
    return failed == rows.size() ? kExitCompute : kExitOk;
}

struct BenchModelsArgs {
    double alpha = 1.0, beta = 1.0, dt = 0.01;
    Index steps = 1000;
    std::vector<double> x0{1.0, 0.5};
    std::vector<double> y0;
    std::string gInitial = "explicit";
    std::string prefix;
};

int cmd_benchmark_models(const BenchModelsArgs& a) {
    auto p = params_from(a.x0, a.y0, a.gInitial, a.dt, a.steps);
    p.alpha = a.alpha;
    p.beta = a.beta;
    const auto gen = benchmark::analytic_generators(p);
    const auto f = benchmark::make_system(gen.Kf, benchmark::simulate_f(p), p.dt);
    const auto g = benchmark::make_system(gen.Kg, benchmark::simulate_g(p), p.dt);
    const std::string pf = a.prefix + "_f.json", pg = a.prefix + "_g.json";
    io::save_model(pf, io::model_file_from(f.model, f.obs, one_step_residual(f.model.K, f.obs.Psi), nullptr));
    io::save_model(pg, io::model_file_from(g.model, g.obs, one_step_residual(g.model.K, g.obs.Psi), nullptr));
    std::cout << "wrote " << pf << " and " << pg << '\n';
    return kExitOk;
}

// ---------- hopping ----------

struct HoppingArgs {
    std::string actuator = "nlm";
    Index steps = 3501;
    double dt = 0.002;
    double y0 = 1.1;
    Index bins = hopping::kDefaultBins;
    std::string prefix;
    std::vector<std::string> params;
    std::string referenceTrace;
    bool autoReference = false;
};

hopping::HopperTrace read_reference_trace(const std::string& path) {
    if (!fs::exists(path)) throw io::IoError("reference trace not found: " + path);
    const io::CsvTable t = io::read_csv(path);
    auto col = [&](const std::string& name) -> const std::vector<double>& {
        for (std::size_t c = 0; c < t.header.size(); ++c)
            if (t.header[c] == name) return t.columns[c];
        throw io::IoError(path + ": reference trace lacks column '" + name + "'");
    };
    hopping::HopperTrace tr;
    auto load = [](const std::vector<double>& v) {
        return RealVector(Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size())));
    };
    tr.y = load(col("y"));
    tr.ydot = load(col("ydot"));
    tr.F_L = load(col("F_L"));
    if (tr.y.size() < 1) throw io::IoError(path + ": reference trace is empty");
    return tr;
}

int cmd_hopping(const HoppingArgs& a) {
    hopping::HopperConfig cfg = hopping::HopperConfig::defaults(hopping::parse_actuator(a.actuator));
    cfg.steps = a.steps;
    cfg.dt = a.dt;
    cfg.y0 = a.y0;
    for (const auto& kv : a.params) {
        const auto eq = kv.find('=');
        double v = 0.0;
        if (eq == std::string::npos || !io::detail::parse_double(kv.substr(eq + 1), v))
            throw UsageError("--param expects key=value, got '" + kv + "'");
        try {
            cfg.set_param(kv.substr(0, eq), v);
        } catch (const DimensionError& e) {
            throw UsageError(e.what());
        }
    }
    std::optional<hopping::HopperTrace> ref;
    if (cfg.actuator == hopping::Actuator::dcMotor) {
        if (!a.referenceTrace.empty())
            ref = read_reference_trace(a.referenceTrace);
        else if (a.autoReference)
            ref = hopping::muscle_reference(cfg);
        else
            throw UsageError("--actuator dc needs --reference-trace <csv> or --auto-reference");
    }
    const hopping::HopperTrace tr = hopping::simulate_hopping(cfg, ref ? &*ref : nullptr);
    const hopping::McSeries mc = hopping::morphological_computation(tr, a.bins);
    const PrimarySeries primary = hopping::export_primary(tr, mc);

    const std::string tracePath = a.prefix + "_trace.csv", mcPath = a.prefix + "_mc.csv",
                      primaryPath = a.prefix + "_primary.csv";
    RealVector contact(tr.size());
    for (Index i = 0; i < tr.size(); ++i) contact(i) = tr.contact[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    io::write_atomic(tracePath, [&](std::ostream& o) {
        io::write_csv(o, {"t", "y", "ydot", "yddot", "u", "F_L", "sensor", "contact"},
                      {&tr.t, &tr.y, &tr.ydot, &tr.yddot, &tr.u, &tr.F_L, &tr.sensor, &contact}, tr.size());
    });
    const Index n = mc.mc.size();
    RealVector t = tr.t.head(n), w(n);
    for (Index i = 0; i < n; ++i) w(i) = static_cast<double>(mc.w[static_cast<std::size_t>(i)]);
    io::write_atomic(mcPath, [&](std::ostream& o) {
        io::write_csv(o, {"t", "w", "i_world", "i_control", "mc"}, {&t, &w, &mc.iWorld, &mc.iControl, &mc.mc}, n);
    });
    io::write_primary_csv(primaryPath, primary);

    for (const auto& warn : mc.warnings) std::cerr << "warning: " << warn << '\n';
    const auto apex = hopping::apex_heights(tr);
    std::cout << "actuator " << a.actuator << ", " << tr.size() << " steps, " << apex.size() << " apexes";
    if (!apex.empty()) std::cout << ", last apex " << fmt(apex.back()) << " m";
    std::cout << '\n'
              << "mean MC " << fmt(mc.mean_mc()) << " bits (I_world " << fmt(mc.iWorld.mean()) << ", I_control "
              << fmt(mc.iControl.mean()) << ")\n"
              << "wrote " << tracePath << ", " << mcPath << ", " << primaryPath << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deviation-from-conjugacy pseudometrics on data-driven Koopman models"};
    app.require_subcommand(1);

    IdentifyArgs ia;
    auto* identify = app.add_subcommand("identify", "Identify a Koopman model from a trajectory CSV");
    identify->add_option("--input", ia.input, "Trajectory CSV (rows are time steps)")->required();
    identify->add_option("--output", ia.output, "Model file to write")->required();
    identify->add_option("--ridge", ia.ridge, "Ridge parameter (default 1e-10 trace(XX*)/N_Psi)");
    identify->add_flag("--aux", ia.aux, "Add correlation auxiliary observables");
    identify->add_flag("--no-aux", ia.noAux, "No auxiliary observables (default)");
    identify->add_option("--theta", ia.theta, "Auxiliary widths, one per observable or a single shared value")
        ->delimiter(',');
    identify->add_flag("--fit-theta", ia.fitTheta, "Fit theta on the holdout segment");
    identify->add_option("--theta-grid", ia.thetaGrid, "Grid for --fit-theta")->delimiter(',');
    identify->add_option("--train-steps", ia.trainSteps, "Leading steps used for identification");
    identify->add_option("--holdout-steps", ia.holdoutSteps, "Steps after training used by --fit-theta");
    identify->add_option("--dt", ia.dt, "Time step (default: from a 't' column, else 1)");

    CompareArgs ca;
    auto* cmp = app.add_subcommand("compare", "Compare two model files");
    cmp->add_option("--model-a", ca.modelA)->required();
    cmp->add_option("--model-b", ca.modelB)->required();
    cmp->add_option("--reference", ca.reference, "Normalize by a, b or none")->check(CLI::IsMember({"a", "b", "none"}));
    cmp->add_option("--spectrum", ca.spectrum, "Eigenvalues for r2: discrete or continuous")
        ->check(CLI::IsMember({"discrete", "continuous"}));
    cmp->add_option("--output", ca.output, "Report file to write");
    cmp->add_flag("--emit-matrices", ca.emitMatrices, "Include C and T matrices in the report");
    cmp->add_flag("--no-psi-space", ca.noPsiSpace, "Skip T recovery");

    SweepArgs sa;
    auto* sw = app.add_subcommand("benchmark-sweep", "Alpha-beta sweep of the analytic benchmark pair");
    sw->add_option("--alpha-min", sa.alphaMin);
    sw->add_option("--alpha-max", sa.alphaMax);
    sw->add_option("--beta-min", sa.betaMin);
    sw->add_option("--beta-max", sa.betaMax);
    sw->add_option("--step", sa.step);
    sw->add_option("--dt", sa.dt);
    sw->add_option("--steps", sa.steps);
    sw->add_option("--x0", sa.x0)->expected(2)->delimiter(',');
    sw->add_option("--y0", sa.y0, "Initial state of g")->expected(2)->delimiter(',');
    sw->add_option("--g-initial", sa.gInitial, "explicit (use --y0) or conjugate (h(x0))");
    sw->add_option("--output", sa.output)->required();
    sw->add_option("--parallel", sa.parallel, "Worker threads");

    BenchModelsArgs ba;
    auto* bm = app.add_subcommand("benchmark-models", "Write model files for one benchmark pair");
    bm->add_option("--alpha", ba.alpha);
    bm->add_option("--beta", ba.beta);
    bm->add_option("--dt", ba.dt);
    bm->add_option("--steps", ba.steps);
    bm->add_option("--x0", ba.x0)->expected(2)->delimiter(',');
    bm->add_option("--y0", ba.y0)->expected(2)->delimiter(',');
    bm->add_option("--g-initial", ba.gInitial);
    bm->add_option("--output-prefix", ba.prefix)->required();

    HoppingArgs ha;
    auto* hop = app.add_subcommand("hopping", "Simulate the hopper and its morphological computation");
    hop->add_option("--actuator", ha.actuator)->check(CLI::IsMember({"nlm", "lm", "dc"}));
    hop->add_option("--steps", ha.steps);
    hop->add_option("--dt", ha.dt);
    hop->add_option("--y0", ha.y0, "Drop height");
    hop->add_option("--bins", ha.bins);
    hop->add_option("--output-prefix", ha.prefix)->required();
    hop->add_option("--param", ha.params, "Actuator parameter override key=value");
    hop->add_option("--reference-trace", ha.referenceTrace, "Muscle trace CSV the dc motor tracks");
    hop->add_flag("--auto-reference", ha.autoReference, "Simulate the muscle reference for dc");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*identify) return cmd_identify(ia);
        if (*cmp) return cmd_compare(ca);
        if (*sw) return cmd_sweep(sa);
        if (*bm) return cmd_benchmark_models(ba);
        if (*hop) return cmd_hopping(ha);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const io::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCompute;
    }
    return kExitUsage;
}
