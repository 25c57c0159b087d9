#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dfc/errors.hpp"
#include "dfc/koopman.hpp"
#include "dfc/linalg.hpp"

namespace dfc::hopping {

enum class Actuator { nonlinearMuscle, linearizedMuscle, dcMotor };

inline constexpr Index kDefaultBins = 30;
inline constexpr Index kDefaultTrainSteps = 2500;

inline const char* to_string(Actuator a) {
    switch (a) {
        case Actuator::nonlinearMuscle: return "nlm";
        case Actuator::linearizedMuscle: return "lm";
        case Actuator::dcMotor: return "dc";
    }
    return "?";
}

inline Actuator parse_actuator(const std::string& s) {
    if (s == "nlm") return Actuator::nonlinearMuscle;
    if (s == "lm") return Actuator::linearizedMuscle;
    if (s == "dc") return Actuator::dcMotor;
    throw DimensionError("unknown actuator '" + s + "' (expected nlm, lm or dc)");
}

inline bool is_muscle(Actuator a) { return a != Actuator::dcMotor; }

// Parameter sets tuned for stable periodic hopping from a 1.1 m drop.
inline std::map<std::string, double> default_actuator_params(Actuator a) {
    if (is_muscle(a))
        return {
            {"f_max", 5000.0},         // N
            {"fl_opt", 0.05},          // leg compression of peak force, m
            {"fl_width", 0.2},         // m
            {"v_max", 10.0},           // m/s
            {"hill_k", 0.25},          // Hill curvature
            {"ecc_max", 1.8},          // eccentric force asymptote, multiples of isometric
            {"ecc_slope", 7.56},
            {"feedback_gain", 1.0},
            {"feedback_bias", 0.2},
            {"feedback_delay", 0.02},  // s
        };
    return {
        {"k_t", 200.0},        // N/A
        {"resistance", 2.0},   // ohm
        {"inductance", 0.004}, // H
        {"k_e", 20.0},         // V s/m
        {"v_supply", 100.0},   // V
        {"kp", 40.0},
        {"kd", 2.0},
        {"feedforward", 1.0},
    };
}

struct HopperConfig {
    double m = 80.0;
    double g = 9.81;
    double l0 = 1.0;
    double dt = 0.002;
    Index steps = 3501;
    double y0 = 1.1;
    Actuator actuator = Actuator::nonlinearMuscle;
    std::map<std::string, double> actuatorParams = default_actuator_params(Actuator::nonlinearMuscle);

    static HopperConfig defaults(Actuator a) {
        HopperConfig c;
        c.actuator = a;
        c.actuatorParams = default_actuator_params(a);
        return c;
    }

    double param(const std::string& key) const {
        auto it = actuatorParams.find(key);
        if (it == actuatorParams.end())
            throw DimensionError(std::string("missing actuator parameter '") + key + "' for " + to_string(actuator));
        return it->second;
    }

    // Overrides must name parameters the actuator knows.
    void set_param(const std::string& key, double value) {
        const auto known = default_actuator_params(actuator);
        if (!known.count(key))
            throw DimensionError("unknown parameter '" + key + "' for actuator " + to_string(actuator));
        actuatorParams[key] = value;
    }

    void validate() const {
        if (!(m > 0.0) || !(l0 > 0.0) || !(dt > 0.0)) throw DimensionError("hopper: m, l0 and dt must be positive");
        if (steps < 3) throw DimensionError("hopper: steps must be >= 3");
        if (!(y0 > l0)) throw DimensionError("hopper: initial drop height must exceed l0");
        for (const auto& [k, v] : actuatorParams)
            if (!std::isfinite(v)) throw DimensionError("hopper: parameter '" + k + "' is not finite");
    }
};

struct HopperTrace {
    RealVector t, y, ydot, yddot, u, F_L, sensor;
    std::vector<bool> contact;
    Actuator actuator = Actuator::nonlinearMuscle;
    double dt = 0.002;

    Index size() const { return y.size(); }
};

// Parabolic force-length relation in leg compression dl = l0 - y.
inline double force_length(const HopperConfig& c, double dl) {
    const double z = (dl - c.param("fl_opt")) / c.param("fl_width");
    return std::max(0.0, 1.0 - z * z);
}

// Hill force-velocity relation; positive ydot is muscle shortening.
inline double force_velocity(const HopperConfig& c, double ydot, bool linearized) {
    const double x = ydot / c.param("v_max");
    const double k = c.param("hill_k");
    if (linearized) return std::max(0.0, 1.0 - (1.0 + 1.0 / k) * x);
    if (x >= 0.0) return std::max(0.0, (1.0 - x) / (1.0 + x / k));
    const double em = c.param("ecc_max");
    return em - (em - 1.0) * (1.0 + x) / (1.0 - c.param("ecc_slope") * x / k);
}

// Muscle force for the given stimulation, or k_t i for the motor (u is then the current).
inline double actuator_force(const HopperConfig& c, double y, double ydot, double u) {
    switch (c.actuator) {
        case Actuator::nonlinearMuscle:
        case Actuator::linearizedMuscle: {
            if (u <= 0.0) return 0.0;
            const bool lin = c.actuator == Actuator::linearizedMuscle;
            return std::max(0.0, u * c.param("f_max") * force_length(c, c.l0 - y) * force_velocity(c, ydot, lin));
        }
        case Actuator::dcMotor: return std::max(0.0, c.param("k_t") * u);
    }
    throw DimensionError("unknown actuator kind");
}

namespace detail {

inline HopperTrace allocate(const HopperConfig& c) {
    HopperTrace tr;
    const Index n = c.steps;
    for (RealVector* v : {&tr.t, &tr.y, &tr.ydot, &tr.yddot, &tr.u, &tr.F_L, &tr.sensor}) v->resize(n);
    tr.contact.assign(static_cast<std::size_t>(n), false);
    tr.actuator = c.actuator;
    tr.dt = c.dt;
    return tr;
}

inline void record(HopperTrace& tr, Index n, double dt, double y, double v, double a, double u, double F,
                   bool contact) {
    tr.t(n) = dt * static_cast<double>(n);
    tr.y(n) = y;
    tr.ydot(n) = v;
    tr.yddot(n) = a;
    tr.u(n) = u;
    tr.F_L(n) = F;
    tr.contact[static_cast<std::size_t>(n)] = contact;
    if (!std::isfinite(y) || !std::isfinite(v) || !std::isfinite(a) || !std::isfinite(F))
        throw IntegrationError("hopper simulation produced a non-finite state", n);
}

}  // namespace detail

inline Index equal_width_bin(double x, double lo, double hi, Index B) {
    if (!(hi > lo)) return 0;
    const auto b = static_cast<Index>(std::floor((x - lo) / (hi - lo) * static_cast<double>(B)));
    return std::clamp<Index>(b, 0, B - 1);
}

// Equal-width bins over the observed range; a constant signal maps to bin 0.
inline std::vector<std::int64_t> bin_signal(const RealVector& x, Index B, bool* constant = nullptr) {
    if (B < 2) throw DimensionError("bin count must be >= 2");
    std::vector<std::int64_t> out(static_cast<std::size_t>(x.size()), 0);
    if (x.size() == 0) return out;
    const double lo = x.minCoeff(), hi = x.maxCoeff();
    if (constant) *constant = !(hi > lo);
    for (Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = equal_width_bin(x(i), lo, hi, B);
    return out;
}

// bin(y) + B bin(ydot) from the motor's state sensor.
inline std::vector<std::int64_t> state_sensor_symbols(const RealVector& y, const RealVector& ydot, Index B) {
    const auto by = bin_signal(y, B), bv = bin_signal(ydot, B);
    std::vector<std::int64_t> s(by.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = by[i] + B * bv[i];
    return s;
}

// Semi-implicit Euler; dc tracks (y, ydot, F_L) of the reference trace one step ahead.
// For dc the sensor column holds the (y, ydot) symbol at the default bin count.
inline HopperTrace simulate_hopping(const HopperConfig& c, const HopperTrace* reference = nullptr) {
    c.validate();
    HopperTrace tr = detail::allocate(c);
    double y = c.y0, v = 0.0;

    if (is_muscle(c.actuator)) {
        const auto delay = static_cast<std::size_t>(std::llround(c.param("feedback_delay") / c.dt));
        const double G = c.param("feedback_gain"), bias = c.param("feedback_bias"), fmax = c.param("f_max");
        std::deque<double> history(delay + 1, 0.0);  // front is F from delay + 1 steps back
        for (Index n = 0; n < c.steps; ++n) {
            const double u = std::clamp(G * history.front() / fmax + bias, 0.0, 1.0);
            const bool contact = y <= c.l0;
            const double F = contact ? actuator_force(c, y, v, u) : 0.0;
            const double a = -c.g + F / c.m;
            detail::record(tr, n, c.dt, y, v, a, u, F, contact);
            tr.sensor(n) = F;
            history.pop_front();
            history.push_back(F);
            v += a * c.dt;
            y += v * c.dt;
        }
        return tr;
    }

    if (!reference) throw DimensionError("dc actuator needs a reference trace to track");
    if (reference->size() < 1) throw DimensionError("reference trace is empty");
    const double kt = c.param("k_t"), R = c.param("resistance"), L = c.param("inductance");
    const double ke = c.param("k_e"), Vs = c.param("v_supply"), kp = c.param("kp"), kd = c.param("kd");
    const double ffGain = c.param("feedforward");
    if (!(R > 0.0) || !(L > 0.0) || !(Vs > 0.0) || !(kt > 0.0))
        throw DimensionError("dc motor: k_t, resistance, inductance and v_supply must be positive");
    const double decay = std::exp(-R * c.dt / L);
    double i = 0.0, u = 0.0;
    for (Index n = 0; n < c.steps; ++n) {
        const bool contact = y <= c.l0;
        const double F = contact ? actuator_force(c, y, v, i) : 0.0;
        const double a = -c.g + F / c.m;
        detail::record(tr, n, c.dt, y, v, a, u, F, contact);
        // exact update of L di/dt = V - R i - k_e v (back-EMF only while loaded)
        const double iInf = (Vs * u - (contact ? ke * v : 0.0)) / R;
        i = iInf + (i - iInf) * decay;
        v += a * c.dt;
        y += v * c.dt;
        const Index k = std::min<Index>(n + 1, reference->size() - 1);
        if (y <= c.l0) {
            const double ff = ffGain * (R * reference->F_L(k) / kt + ke * v) / Vs;
            u = std::clamp(kp * (reference->y(k) - y) + kd * (reference->ydot(k) - v) + ff, -1.0, 1.0);
        } else {
            u = 0.0;
        }
    }
    const auto s = state_sensor_symbols(tr.y, tr.ydot, kDefaultBins);
    for (Index n = 0; n < c.steps; ++n) tr.sensor(n) = static_cast<double>(s[static_cast<std::size_t>(n)]);
    return tr;
}

// Nonlinear-muscle reference sharing the body and timing of c.
inline HopperTrace muscle_reference(const HopperConfig& c) {
    HopperConfig r = HopperConfig::defaults(Actuator::nonlinearMuscle);
    r.m = c.m;
    r.g = c.g;
    r.l0 = c.l0;
    r.dt = c.dt;
    r.steps = c.steps;
    r.y0 = c.y0;
    return simulate_hopping(r);
}

// Apex heights: samples where ydot turns from positive to non-positive.
inline std::vector<double> apex_heights(const HopperTrace& tr) {
    std::vector<double> out;
    for (Index n = 1; n < tr.size(); ++n)
        if (tr.ydot(n - 1) > 0.0 && tr.ydot(n) <= 0.0) out.push_back(tr.y(n));
    return out;
}

// w = bin(y) + B bin(ydot) + B^2 bin(yddot)
inline std::vector<std::int64_t> world_states(const HopperTrace& tr, Index B, std::vector<std::string>* warnings = nullptr) {
    bool cy = false, cv = false, ca = false;
    const auto by = bin_signal(tr.y, B, &cy), bv = bin_signal(tr.ydot, B, &cv), ba = bin_signal(tr.yddot, B, &ca);
    if (warnings) {
        if (cy) warnings->push_back("y is constant; mapped to bin 0");
        if (cv) warnings->push_back("ydot is constant; mapped to bin 0");
        if (ca) warnings->push_back("yddot is constant; mapped to bin 0");
    }
    std::vector<std::int64_t> w(by.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = by[i] + B * bv[i] + B * B * ba[i];
    return w;
}

namespace detail {

struct JointCounts {
    std::unordered_map<std::int64_t, std::int64_t> xy, x, y;
    std::int64_t ySupport = 0;
};

inline JointCounts count(const std::vector<std::int64_t>& xs, const std::vector<std::int64_t>& ys,
                         std::int64_t xSupport, std::int64_t ySupport) {
    if (xs.size() != ys.size()) throw DimensionError("mutual information: length mismatch");
    if (xs.size() < 2) throw DimensionError("mutual information needs at least 2 samples");
    if (xSupport < 1 || ySupport < 1) throw DimensionError("mutual information: support must be positive");
    JointCounts c;
    c.ySupport = ySupport;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < 0 || xs[i] >= xSupport || ys[i] < 0 || ys[i] >= ySupport)
            throw DimensionError("mutual information: symbol outside its support at sample " + std::to_string(i));
        ++c.xy[xs[i] * ySupport + ys[i]];
        ++c.x[xs[i]];
        ++c.y[ys[i]];
    }
    return c;
}

}  // namespace detail

// Plug-in estimate in bits.
inline double mutual_information(const std::vector<std::int64_t>& xs, const std::vector<std::int64_t>& ys,
                                 std::int64_t xSupport, std::int64_t ySupport) {
    const detail::JointCounts c = detail::count(xs, ys, xSupport, ySupport);
    const double n = static_cast<double>(xs.size());
    double mi = 0.0;
    for (const auto& [key, cxy] : c.xy) {
        const std::int64_t xv = key / ySupport, yv = key % ySupport;
        const double pxy = static_cast<double>(cxy) / n;
        mi += pxy * std::log2(static_cast<double>(cxy) * n /
                              (static_cast<double>(c.x.at(xv)) * static_cast<double>(c.y.at(yv))));
    }
    return std::max(0.0, mi);
}

// log2(p(x, y) / (p(x) p(y))) per sample; its mean is the plug-in mutual information.
inline std::vector<double> pointwise_information(const std::vector<std::int64_t>& xs,
                                                 const std::vector<std::int64_t>& ys, std::int64_t xSupport,
                                                 std::int64_t ySupport) {
    const detail::JointCounts c = detail::count(xs, ys, xSupport, ySupport);
    const double n = static_cast<double>(xs.size());
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cxy = static_cast<double>(c.xy.at(xs[i] * ySupport + ys[i]));
        out[i] = std::log2(cxy * n / (static_cast<double>(c.x.at(xs[i])) * static_cast<double>(c.y.at(ys[i]))));
    }
    return out;
}

struct McSeries {
    Index bins = kDefaultBins;
    std::vector<std::int64_t> w;  // one per trace step
    RealVector iWorld;            // length steps - 1
    RealVector iControl;
    RealVector mc;
    std::vector<std::string> warnings;

    double mean_mc() const { return mc.size() ? mc.mean() : 0.0; }
};

// Step n pairs (w_{n+1}, w_n) with (bin(u_n), s_n), n = 0 .. N-2.
inline McSeries morphological_computation(const HopperTrace& tr, Index B = kDefaultBins) {
    if (tr.size() < 3) throw DimensionError("morphological computation needs at least 3 steps");
    McSeries out;
    out.bins = B;
    out.w = world_states(tr, B, &out.warnings);
    const std::size_t n = out.w.size() - 1;
    const std::int64_t wSupport = B * B * B;
    std::vector<std::int64_t> next(out.w.begin() + 1, out.w.end()), prev(out.w.begin(), out.w.end() - 1);

    const std::vector<std::int64_t> uSym = bin_signal(tr.u, B);
    std::vector<std::int64_t> sSym;
    std::int64_t sSupport = B;
    if (is_muscle(tr.actuator)) {
        sSym = bin_signal(tr.F_L, B);
    } else {
        sSym = state_sensor_symbols(tr.y, tr.ydot, B);
        sSupport = B * B;
    }
    std::vector<std::int64_t> uu(uSym.begin(), uSym.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::int64_t> ss(sSym.begin(), sSym.begin() + static_cast<std::ptrdiff_t>(n));

    const auto iw = pointwise_information(next, prev, wSupport, wSupport);
    const auto ic = pointwise_information(uu, ss, B, sSupport);
    out.iWorld.resize(static_cast<Index>(n));
    out.iControl.resize(static_cast<Index>(n));
    out.mc.resize(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        out.iWorld(static_cast<Index>(i)) = iw[i];
        out.iControl(static_cast<Index>(i)) = ic[i];
        out.mc(static_cast<Index>(i)) = iw[i] - ic[i];
    }
    return out;
}

// (y, ydot, u, mc) over the N-1 steps that carry an mc value.
inline PrimarySeries export_primary(const HopperTrace& tr, const McSeries& mc) {
    const Index n = mc.mc.size();
    if (n + 1 != tr.size()) throw DimensionError("export_primary: mc series does not match the trace");
    PrimarySeries p;
    p.names = {"y", "ydot", "u", "mc"};
    p.dt = tr.dt;
    p.values.resize(4, n);
    p.values.row(0) = tr.y.head(n).transpose();
    p.values.row(1) = tr.ydot.head(n).transpose();
    p.values.row(2) = tr.u.head(n).transpose();
    p.values.row(3) = mc.mc.transpose();
    return p;
}

struct PrimarySplit {
    PrimarySeries train;
    PrimarySeries test;
};

inline PrimarySplit split_primary(const PrimarySeries& p, Index trainSteps = kDefaultTrainSteps) {
    if (trainSteps < 2 || trainSteps >= p.steps())
        throw DimensionError("split: training length " + std::to_string(trainSteps) + " invalid for " +
                             std::to_string(p.steps()) + " steps");
    return {p.slice(0, trainSteps), p.slice(trainSteps, p.steps() - trainSteps)};
}

// Kernel widths for (y, ydot, u, mc): the kernels resolve position and velocity, not u and mc.
inline AuxiliaryConfig default_hopping_aux() {
    AuxiliaryConfig a;
    a.enabled = true;
    a.theta.resize(4);
    a.theta << 10.0, 1.0, 1e-3, 1e-3;
    return a;
}

}  // namespace dfc::hopping
