#include "galerkin/control.hpp"

#include <algorithm>
#include <numeric>
#include <boost/math/special_functions/lambert_w.hpp>
#include <cmath>
#include <random>
#include <set>

#include "galerkin/parallel.hpp"
#include "galerkin/reports.hpp"
#include "galerkin/simplex.hpp"

namespace galerkin {

double l1_norm(const Eigen::VectorXd& v) { return v.lpNorm<1>(); }

namespace {

IntegratorOptions quiet(double tol) {
    IntegratorOptions o;
    o.tol = tol;
    o.record = false;
    return o;
}

IntegratorOptions recorded(double tol) {
    IntegratorOptions o;
    o.tol = tol;
    return o;
}

std::vector<int> positions(const GalerkinSystem& sys, const ModeSet& modes) {
    std::vector<int> out;
    for (const auto& k : modes) {
        const int p = sys.layout().find(k);
        if (p < 0) throw std::invalid_argument("mode " + k.str() + " is outside the mode set");
        out.push_back(p);
    }
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& pos) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t i = 0; i < pos.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[pos[i]];
    return out;
}

void scatter(Eigen::VectorXd& full, const Eigen::VectorXd& part, const std::vector<int>& pos) {
    for (std::size_t i = 0; i < pos.size(); ++i) full[pos[i]] = part[static_cast<Eigen::Index>(i)];
}

double h_norm(const GalerkinSystem& sys, const Eigen::VectorXd& v) {
    return norm_dense(v, sys.layout(), sys.geometry(), NormKind::H);
}

}  // namespace

// ---------------------------------------------------------------- endpoint maps

EndpointExperiment::EndpointExperiment(const GalerkinSystem& s, ModeSet obs, SpectralField init, double radius,
                                       double inflation, double horizon, double tolerance)
    : sys(s), observed(normalize(std::move(obs))), u0(std::move(init)), R(radius), gamma_infl(inflation), T(horizon),
      tol(tolerance) {
    if (observed.empty()) throw std::invalid_argument("observed set is empty");
    if (!is_subset(observed, s.mode_set())) throw std::invalid_argument("observed set leaves the mode set");
    if (!(gamma_infl > 1.0)) throw std::invalid_argument("inflation must exceed 1");
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(R > 0.0)) throw std::invalid_argument("radius must be positive");
    sys = s.with_controlled(observed);
}

Eigen::VectorXd EndpointExperiment::observed_part(const SpectralField& u) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(observed.size()));
    for (std::size_t i = 0; i < observed.size(); ++i) out[static_cast<Eigen::Index>(i)] = u[observed[i]];
    return out;
}

Eigen::VectorXd endpoint_map_at(const EndpointExperiment& exp, const Eigen::VectorXd& p, double T) {
    if (static_cast<std::size_t>(p.size()) != exp.observed.size())
        throw std::invalid_argument("endpoint parameter has the wrong dimension");
    const auto tr = integrate_dense(exp.sys, exp.sys.to_dense(exp.u0), ControlSignal::constant(p / T, T), T,
                                    quiet(exp.tol));
    return gather(tr.end_dense(), exp.sys.control_positions());
}

Eigen::VectorXd endpoint_map(const EndpointExperiment& exp, const Eigen::VectorXd& p) {
    if (l1_norm(p) >= exp.gamma_infl * exp.R) throw std::invalid_argument("endpoint parameter leaves the gamma R ball");
    return endpoint_map_at(exp, p, exp.T);
}

Eigen::VectorXd reference_map(const EndpointExperiment& exp, const Eigen::VectorXd& p) { return exp.center() + p; }

std::vector<Eigen::VectorXd> deviation_probes(const EndpointExperiment& exp, int random_points, unsigned seed) {
    const auto d = static_cast<Eigen::Index>(exp.observed.size());
    const double rad = 0.99 * exp.gamma_infl * exp.R;
    std::vector<Eigen::VectorXd> out;
    for (Eigen::Index i = 0; i < d; ++i)
        for (double s : {1.0, -1.0}) {
            Eigen::VectorXd p = Eigen::VectorXd::Zero(d);
            p[i] = s * rad;
            out.push_back(p);
        }
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> ex(1.0);
    std::uniform_real_distribution<double> un(0.0, 1.0);
    for (int k = 0; k < random_points; ++k) {
        Eigen::VectorXd p(d);
        for (Eigen::Index i = 0; i < d; ++i) p[i] = ex(rng) * (un(rng) < 0.5 ? -1.0 : 1.0);
        p *= rad * std::pow(un(rng), 1.0 / static_cast<double>(d)) / l1_norm(p);
        out.push_back(p);
    }
    return out;
}

static DeviationRow deviation_at(const EndpointExperiment& exp, double T, const std::vector<Eigen::VectorXd>& probes,
                                 unsigned jobs) {
    std::vector<double> dev(probes.size());
    parallel_for(probes.size(), jobs, [&](std::size_t i) {
        dev[i] = l1_norm(endpoint_map_at(exp, probes[i], T) - reference_map(exp, probes[i]));
    });
    DeviationRow row;
    row.T = T;
    const auto it = std::max_element(dev.begin(), dev.end());
    row.sup_deviation = *it;
    row.worst_p = probes[static_cast<std::size_t>(it - dev.begin())];
    return row;
}

DeviationFit deviation_sweep(const EndpointExperiment& exp, const std::vector<double>& horizons,
                             const std::vector<Eigen::VectorXd>& probes, double slope_lo, double slope_hi,
                             unsigned jobs) {
    if (horizons.size() < 2) throw std::invalid_argument("deviation sweep needs at least two horizons");
    DeviationFit fit;
    std::vector<double> x, y;
    for (double T : horizons) {
        fit.rows.push_back(deviation_at(exp, T, probes, jobs));
        x.push_back(T * std::exp(T));
        y.push_back(fit.rows.back().sup_deviation);
        fit.C = std::max(fit.C, y.back() / std::sqrt(x.back()));
    }
    fit.slope = loglog_fit(x, y).slope;
    std::vector<double> xs, ys;
    for (double T : horizons) {
        const double t = T / 1000.0;
        xs.push_back(t * std::exp(t));
        ys.push_back(deviation_at(exp, t, probes, jobs).sup_deviation);
    }
    fit.small_T_slope = loglog_fit(xs, ys).slope;
    fit.pass = fit.slope >= slope_lo && fit.slope <= slope_hi;
    return fit;
}

double viscous_window_horizon(const EndpointExperiment& exp, double factor) {
    double lam = 0.0;
    for (const auto& k : exp.observed) lam = std::max(lam, -kbar(k, exp.sys.geometry()));
    return factor / (exp.sys.nu() * lam);
}

double covering_horizon(const EndpointExperiment& exp, double C) {
    if (!(C > 0.0)) throw std::invalid_argument("deviation constant must be positive");
    const double rhs = (exp.gamma_infl - 1.0) * exp.R / (2.0 * static_cast<double>(exp.observed.size()) * C);
    return boost::math::lambert_w0(rhs * rhs);
}

std::vector<Eigen::VectorXd> covering_targets(const EndpointExperiment& exp, bool axis_vertices) {
    const std::size_t d = exp.observed.size();
    if (d > 12) throw std::invalid_argument("cube grid is limited to 12 observed modes");
    const double h = exp.R / static_cast<double>(d);
    const Eigen::VectorXd c = exp.center();
    std::vector<Eigen::VectorXd> out;
    std::size_t count = 1;
    for (std::size_t i = 0; i < d; ++i) count *= 3;
    for (std::size_t idx = 0; idx < count; ++idx) {
        Eigen::VectorXd t = c;
        std::size_t r = idx;
        for (std::size_t i = 0; i < d; ++i) {
            t[static_cast<Eigen::Index>(i)] += h * (static_cast<double>(r % 3) - 1.0);
            r /= 3;
        }
        out.push_back(t);
    }
    if (axis_vertices)
        for (std::size_t i = 0; i < d; ++i)
            for (double s : {1.0, -1.0}) {
                Eigen::VectorXd t = c;
                t[static_cast<Eigen::Index>(i)] += s * exp.R;
                out.push_back(t);
            }
    return out;
}

CoveringTarget solve_endpoint(const EndpointExperiment& exp, const Eigen::VectorXd& target, const CoveringOptions& opt) {
    CoveringTarget res;
    res.target = target;
    Eigen::VectorXd p = target - exp.center();
    auto eval = [&](const Eigen::VectorXd& q) { return endpoint_map_at(exp, q, exp.T); };
    Eigen::VectorXd r = target - eval(p);
    double rn = l1_norm(r);
    int stall = 0;
    while (rn >= opt.residual_tol && res.iterations < opt.max_iterations) {
        p += opt.damping * r;
        ++res.iterations;
        Eigen::VectorXd rnew = target - eval(p);
        const double nn = l1_norm(rnew);
        stall = nn > 0.5 * rn ? stall + 1 : 0;
        r = rnew;
        rn = nn;
        if (!std::isfinite(rn) || (opt.newton_fallback && stall >= 3)) break;
    }
    if ((rn >= opt.residual_tol || !std::isfinite(rn)) && opt.newton_fallback) {
        res.newton = true;
        if (!std::isfinite(rn)) {
            p = target - exp.center();
            r = target - eval(p);
            rn = l1_norm(r);
        }
        const auto d = p.size();
        for (int it = 0; it < 30 && rn >= opt.residual_tol; ++it) {
            Eigen::MatrixXd J(d, d);
            const Eigen::VectorXd g0 = eval(p);
            for (Eigen::Index j = 0; j < d; ++j) {
                const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
                Eigen::VectorXd q = p;
                q[j] += h;
                J.col(j) = (eval(q) - g0) / h;
            }
            p += J.fullPivLu().solve(target - g0);
            ++res.iterations;
            r = target - eval(p);
            rn = l1_norm(r);
        }
    }
    res.p = p;
    res.residual = rn;
    res.pass = rn < opt.residual_tol;
    return res;
}

CoveringReport covering_check(const EndpointExperiment& exp_in, double C, const CoveringOptions& opt) {
    CoveringReport rep;
    rep.C = C;
    rep.T = covering_horizon(exp_in, C);
    EndpointExperiment exp = exp_in;
    exp.T = rep.T;
    rep.bound = exp.R * (exp.gamma_infl - 1.0) / (2.0 * static_cast<double>(exp.observed.size()));
    const auto targets = covering_targets(exp, opt.axis_vertices);
    rep.targets.resize(targets.size());
    parallel_for(targets.size(), opt.jobs, [&](std::size_t i) { rep.targets[i] = solve_endpoint(exp, targets[i], opt); });
    rep.pass = true;
    for (const auto& t : rep.targets) {
        rep.max_residual = std::max(rep.max_residual, t.residual);
        rep.pass = rep.pass && t.pass;
        rep.sup_deviation =
            std::max(rep.sup_deviation, l1_norm(endpoint_map_at(exp, t.p, exp.T) - reference_map(exp, t.p)));
    }
    // the center is the all-zero offset of the grid
    std::size_t center = 0, mult = 1;
    for (std::size_t i = 0; i < exp.observed.size(); ++i, mult *= 3) center += mult;
    rep.center_p = l1_norm(rep.targets[center].p);
    const double h = exp.R / static_cast<double>(exp.observed.size());
    Eigen::VectorXd q = rep.targets[center].p;
    q[0] += h;
    rep.probe_ratio = l1_norm(endpoint_map_at(exp, q, exp.T) - endpoint_map_at(exp, rep.targets[center].p, exp.T)) / h;
    return rep;
}

// ---------------------------------------------------------------- tracking

namespace {

struct TrackData {
    GalerkinSystem sys;
    ControlSignal q;
    DenseTrajectory U;
    std::vector<int> jpos, cpos;

    Eigen::VectorXd full(const Eigen::VectorXd& qv, const Eigen::VectorXd& Uv) const {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
        scatter(u, qv, jpos);
        scatter(u, Uv, cpos);
        return u;
    }
    Eigen::VectorXd U_at(double t) const {
        if (cpos.empty()) return Eigen::VectorXd(0);
        return U.value(t);
    }
};

}  // namespace

TrackingResult tracking_control(const GalerkinSystem& sys, const ModeSet& J_in, const ControlSignal& q,
                                const Eigen::VectorXd& Q_init, double t0, double t1, double tol) {
    TrackingResult res;
    res.J = normalize(J_in);
    res.complement = set_difference(sys.mode_set(), res.J);
    if (q.dim() != res.J.size()) throw std::invalid_argument("tracked signal has the wrong dimension");
    if (!q.has_derivative()) throw std::invalid_argument("tracked signal needs a derivative");
    if (static_cast<std::size_t>(Q_init.size()) != res.complement.size())
        throw std::invalid_argument("complement initial state has the wrong dimension");
    auto data = std::make_shared<TrackData>(TrackData{sys, q, {}, positions(sys, res.J), positions(sys, res.complement)});

    std::vector<double> knots{t0, t1};
    for (double k : q.knots())
        if (k > t0 && k < t1) knots.push_back(k);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(), [&](double a, double b) { return b - a <= 1e-14 * std::max(1.0, std::abs(t1)); }),
                knots.end());
    knots.back() = t1;

    if (!data->cpos.empty()) {
        IFProblem prob;
        prob.lambda = gather(sys.linear_rates(), data->cpos);
        const TrackData* d = data.get();
        prob.rhs = [d, &knots](double t, const Eigen::VectorXd& y, std::size_t seg, Eigen::VectorXd& out) {
            Eigen::VectorXd f;
            d->sys.rhs_dense(d->full(d->q.value_in(t, knots[seg], knots[seg + 1]), y), nullptr, f);
            out = gather(f, d->cpos);
        };
        prob.second = [d, &knots](double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy, std::size_t seg,
                                  Eigen::VectorXd& out) {
            const double lo = knots[seg], hi = knots[seg + 1];
            const Eigen::VectorXd u = d->full(d->q.value_in(t, lo, hi), y);
            const Eigen::VectorXd du = d->full(d->q.derivative_in(t, lo, hi), dy);
            out = gather(d->sys.rhs_rate(u, du, nullptr), d->cpos);
        };
        data->U = integrate_if(prob, Q_init, knots, recorded(tol), &res.stats);
        res.U = data->U;
    }

    std::vector<ControlSignal> pieces;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        const double lo = knots[s], hi = knots[s + 1];
        auto value = [data, lo, hi](double t) {
            const Eigen::VectorXd qv = data->q.value_in(t, lo, hi);
            Eigen::VectorXd f;
            data->sys.rhs_dense(data->full(qv, data->U_at(std::clamp(t, lo, hi))), nullptr, f);
            return Eigen::VectorXd(data->q.derivative_in(t, lo, hi) - gather(f, data->jpos));
        };
        pieces.push_back(ControlSignal::smooth(res.J.size(), value, {}, {}));
    }
    res.v = ControlSignal::concat(knots, std::move(pieces));
    const Eigen::VectorXd Uend = data->cpos.empty() ? Eigen::VectorXd(0) : Eigen::VectorXd(data->U.end_state());
    res.end_state = data->full(q.value_in(t1, knots[knots.size() - 2], t1), Uend);
    return res;
}

ReplayCheck replay_tracking(const GalerkinSystem& sys, const TrackingResult& tr, const ControlSignal& q,
                            const Eigen::VectorXd& Q_init, double t0, double t1, double tol) {
    const auto sysJ = sys.with_controlled(tr.J);
    const auto jpos = positions(sys, tr.J), cpos = positions(sys, tr.complement);
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
    scatter(u0, q.value(t0), jpos);
    scatter(u0, Q_init, cpos);
    ReplayCheck rc{0.0, integrate_window(sysJ, u0, tr.v, t0, t1, recorded(tol))};
    const auto& dn = rc.replay.dense;
    for (std::size_t i = 0; i < dn.t.size(); ++i) {
        const double t = dn.t[i];
        // one-sided evaluation matching the stored sample
        const bool left = i + 1 < dn.t.size() && dn.t[i + 1] == t;
        const double lo = left ? t - 1e-9 : t, hi = left ? t : t + 1e-9;
        const Eigen::VectorXd qv = q.value_in(t, lo, hi);
        rc.max_error = std::max(rc.max_error, l1_norm(gather(dn.y[i], jpos) - qv));
    }
    return rc;
}

ControlSignal random_smooth_target(std::size_t dim, double T, unsigned seed, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    struct Term {
        double a, w, ph;
    };
    auto terms = std::make_shared<std::vector<std::vector<Term>>>(dim);
    for (auto& row : *terms)
        for (int l = 0; l < 3; ++l)
            row.push_back({amplitude * un(rng) / (l + 1), (l + 1) * pi / T * (1.0 + 0.3 * un(rng)), pi * un(rng)});
    auto value = [terms](double t) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(terms->size()));
        for (std::size_t j = 0; j < terms->size(); ++j) {
            double s = 0.0;
            for (const auto& x : (*terms)[j]) s += x.a * std::sin(x.w * t + x.ph);
            v[static_cast<Eigen::Index>(j)] = s;
        }
        return v;
    };
    auto deriv = [terms](double t) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(terms->size()));
        for (std::size_t j = 0; j < terms->size(); ++j) {
            double s = 0.0;
            for (const auto& x : (*terms)[j]) s += x.a * x.w * std::cos(x.w * t + x.ph);
            v[static_cast<Eigen::Index>(j)] = s;
        }
        return v;
    };
    return ControlSignal::smooth(dim, value, deriv, {});
}

// ---------------------------------------------------------------- oscillator

OscillatorProfile make_phi_w(std::vector<double> breakpoints, double w) {
    if (!(w >= 3.0)) throw std::invalid_argument("oscillator frequency must be at least 3");
    if (breakpoints.size() < 2) throw std::invalid_argument("oscillator needs at least one interval");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1])) throw std::invalid_argument("breakpoints must increase strictly");
    OscillatorProfile p;
    p.alpha = std::move(breakpoints);
    p.w = w;
    for (std::size_t i = 1; i < p.alpha.size(); ++i) {
        p.x.push_back(p.alpha[i] - p.alpha[i - 1]);
        p.rho.push_back(p.x.back() / w);
    }
    return p;
}

static std::size_t piece_of(const std::vector<double>& alpha, double t) {
    auto it = std::upper_bound(alpha.begin(), alpha.end(), t);
    std::size_t i = it == alpha.begin() ? 0 : static_cast<std::size_t>(it - alpha.begin()) - 1;
    return std::min(i, alpha.size() - 2);
}

double OscillatorProfile::value(double t) const {
    if (t <= alpha.front() || t >= alpha.back()) return 0.0;
    const std::size_t i = piece_of(alpha, t);
    const double a0 = alpha[i], a1 = alpha[i + 1], r = rho[i];
    if (t <= a0 + r) return std::sin(w * (a0 + r)) / r * (t - a0);
    if (t >= a1 - r) return std::sin(w * (a1 - r)) / (-r) * (t - a1);
    return std::sin(w * t);
}

double OscillatorProfile::derivative(double t, double lo, double hi) const {
    const double mid = 0.5 * (lo + hi);
    if (mid <= alpha.front() || mid >= alpha.back()) return 0.0;
    const std::size_t i = piece_of(alpha, mid);
    const double a0 = alpha[i], a1 = alpha[i + 1], r = rho[i];
    if (mid <= a0 + r) return std::sin(w * (a0 + r)) / r;
    if (mid >= a1 - r) return std::sin(w * (a1 - r)) / (-r);
    return w * std::cos(w * t);
}

std::vector<double> OscillatorProfile::knots() const {
    std::vector<double> k = alpha;
    for (std::size_t i = 0; i + 1 < alpha.size(); ++i) {
        k.push_back(alpha[i] + rho[i]);
        k.push_back(alpha[i + 1] - rho[i]);
    }
    std::sort(k.begin(), k.end());
    return k;
}

double OscillatorProfile::theta() const { return *std::min_element(x.begin(), x.end()); }

double OscillatorProfile::ramp_measure() const {
    double s = 0.0;
    for (double r : rho) s += 2.0 * r;
    return s;
}

OscillatorProfile::Check OscillatorProfile::verify(int samples_per_piece) const {
    Check c;
    for (double a : alpha) c.max_at_breakpoints = std::max(c.max_at_breakpoints, std::abs(value(a)));
    const auto k = knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        const double lo = k[i], hi = k[i + 1];
        if (!(hi > lo)) continue;
        for (int s = 0; s <= samples_per_piece; ++s) {
            const double t = lo + (hi - lo) * s / samples_per_piece;
            c.sup_value = std::max(c.sup_value, std::abs(value(t)));
            c.sup_derivative = std::max(c.sup_derivative, std::abs(derivative(t, lo, hi)));
        }
    }
    const double th = theta();
    c.derivative_bound = w * (1.0 + th) / th;
    c.ramp_measure = ramp_measure();
    c.ramp_bound = 2.0 * (alpha.back() - alpha.front()) / w;
    c.pass = c.max_at_breakpoints == 0.0 && c.sup_value <= 1.0 + 1e-15 && c.sup_derivative <= c.derivative_bound &&
             c.ramp_measure <= c.ramp_bound * (1.0 + 1e-14);
    return c;
}

// ---------------------------------------------------------------- relaxed controls

static std::vector<double> merged_breaks(const PiecewiseSignal& a, const PiecewiseSignal& b) {
    std::vector<double> k = a.breaks;
    k.insert(k.end(), b.breaks.begin(), b.breaks.end());
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
}

static const Eigen::VectorXd& value_on(const PiecewiseSignal& g, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    auto it = std::upper_bound(g.breaks.begin(), g.breaks.end(), mid);
    std::size_t i = it == g.breaks.begin() ? 0 : static_cast<std::size_t>(it - g.breaks.begin()) - 1;
    return g.values[std::min(i, g.values.size() - 1)];
}

PiecewiseSignal subtract(const PiecewiseSignal& a, const PiecewiseSignal& b) {
    if (a.breaks.front() != b.breaks.front() || a.breaks.back() != b.breaks.back())
        throw std::invalid_argument("signals live on different intervals");
    PiecewiseSignal out;
    out.breaks = merged_breaks(a, b);
    for (std::size_t i = 0; i + 1 < out.breaks.size(); ++i)
        out.values.push_back(value_on(a, out.breaks[i], out.breaks[i + 1]) - value_on(b, out.breaks[i], out.breaks[i + 1]));
    return out;
}

double rx_norm(const PiecewiseSignal& g) {
    const std::size_t B = g.breaks.size();
    const auto d = g.values.front().size();
    std::vector<Eigen::VectorXd> S(B, Eigen::VectorXd::Zero(d));
    for (std::size_t i = 0; i + 1 < B; ++i) S[i + 1] = S[i] + (g.breaks[i + 1] - g.breaks[i]) * g.values[i];
    const double bd = static_cast<double>(B), dd = static_cast<double>(d);
    double best = 0.0;
    if (d <= 20 && std::ldexp(1.0, static_cast<int>(d) - 1) * bd <= 0.5 * bd * bd * dd) {
        // the l1 norm is the max of sigma . x over sign vectors
        const std::uint64_t count = std::uint64_t{1} << (d - 1);
        for (std::uint64_t mask = 0; mask < count; ++mask) {
            double lo = 0.0, hi = 0.0;
            for (std::size_t i = 0; i < B; ++i) {
                double s = 0.0;
                for (Eigen::Index j = 0; j < d; ++j) s += ((mask >> j) & 1u) ? -S[i][j] : S[i][j];
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            best = std::max(best, hi - lo);
        }
        return best;
    }
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t k = i + 1; k < B; ++k) best = std::max(best, (S[k] - S[i]).lpNorm<1>());
    return best;
}

double delta_metric(const PiecewiseSignal& g, const PiecewiseSignal& h) {
    const auto d = subtract(g, h);
    double m = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i)
        if (d.values[i].lpNorm<Eigen::Infinity>() != 0.0) m += d.breaks[i + 1] - d.breaks[i];
    return m;
}

PiecewiseSignal canonical(const PiecewiseSignal& g) {
    PiecewiseSignal out;
    out.breaks.push_back(g.breaks.front());
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (!out.values.empty() && out.values.back() == g.values[i]) {
            out.breaks.back() = g.breaks[i + 1];
            continue;
        }
        out.values.push_back(g.values[i]);
        out.breaks.push_back(g.breaks[i + 1]);
    }
    return out;
}

std::vector<Rational> p_zero_theta(const Eigen::VectorXd& weights, int n) {
    if (n < 1) throw std::invalid_argument("grid count must be positive");
    const auto r = weights.size();
    std::vector<Rational> x(static_cast<std::size_t>(r));
    Rational sum = 0;
    for (Eigen::Index j = 0; j < r; ++j) {
        if (weights[j] < -1e-12) throw std::invalid_argument("barycentric weights must be nonnegative");
        x[static_cast<std::size_t>(j)] = Rational(std::max(0.0, weights[j]));
        sum += x[static_cast<std::size_t>(j)];
    }
    if (sgn(sum) <= 0) throw std::invalid_argument("barycentric weights sum to zero");
    const Rational inv_r(1, static_cast<unsigned long>(r));
    const Rational keep = Rational(n - 1, n);
    for (auto& v : x) {
        v = keep * (v / sum - inv_r) + inv_r;
        v.canonicalize();
    }
    return x;
}

RelaxedApproxResult approximate_relaxed(const std::vector<Eigen::VectorXd>& vertices,
                                        const std::vector<PiecewiseSignal>& family, double eps, int n_cap) {
    if (vertices.empty() || family.empty()) throw std::invalid_argument("relaxed approximation needs vertices and controls");
    if (!(eps > 0.0)) throw std::invalid_argument("approximation accuracy must be positive");
    const double T = family.front().T(), t0 = family.front().breaks.front();
    for (const auto& f : family) {
        if (f.breaks.front() != t0 || f.T() != T) throw std::invalid_argument("family members need one common interval");
        for (const auto& v : f.values)
            if (static_cast<std::size_t>(v.size()) != vertices.size())
                throw std::invalid_argument("weights need one entry per vertex");
    }
    RelaxedApproxResult res;
    auto& P = res.params;
    P.r = vertices.size();
    for (const auto& v : vertices) P.D = std::max(P.D, l1_norm(v));
    const double span = T - t0;

    auto barycentric = [&](const PiecewiseSignal& f) {
        PiecewiseSignal s;
        s.breaks = f.breaks;
        for (const auto& wv : f.values) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(vertices.front().size());
            for (std::size_t j = 0; j < vertices.size(); ++j) v += wv[static_cast<Eigen::Index>(j)] * vertices[j];
            s.values.push_back(v);
        }
        return s;
    };
    auto is_vertex = [](const Eigen::VectorXd& wv) {
        int ones = 0;
        for (Eigen::Index j = 0; j < wv.size(); ++j) {
            if (wv[j] == 1.0) ++ones;
            else if (wv[j] != 0.0) return false;
        }
        return ones == 1;
    };
    const bool all_vertex = std::all_of(family.begin(), family.end(), [&](const PiecewiseSignal& f) {
        return std::all_of(f.values.begin(), f.values.end(), is_vertex);
    });
    if (all_vertex) {
        P.n = 1;
        for (const auto& f : family) {
            const auto c = canonical(barycentric(f));
            res.outputs.push_back(c);
            std::vector<std::size_t> idx;
            for (const auto& v : c.values)
                for (std::size_t j = 0; j < vertices.size(); ++j)
                    if (v == vertices[j]) {
                        idx.push_back(j);
                        break;
                    }
            res.vertex_index.push_back(idx);
            res.rx_distance.push_back(rx_norm(subtract(c, barycentric(f))));
            res.interval_count.push_back(c.intervals());
        }
        res.min_interval = span;
        for (const auto& o : res.outputs)
            for (std::size_t i = 0; i < o.intervals(); ++i)
                res.min_interval = std::min(res.min_interval, o.breaks[i + 1] - o.breaks[i]);
        res.pass = *std::max_element(res.rx_distance.begin(), res.rx_distance.end()) < eps;
        return res;
    }

    P.gamma = eps / (4.0 * span * P.D * static_cast<double>(P.r));
    const double nd = std::ceil(1.0 / P.gamma) + 1.0;
    if (nd > n_cap)
        throw CapacityError("relaxed approximation needs n = " + std::to_string(static_cast<long long>(nd)) +
                            ", above the cap " + std::to_string(n_cap));
    P.n = static_cast<int>(nd);
    P.theta = 1.0 / (P.n * static_cast<double>(P.r));
    const std::size_t cells = static_cast<std::size_t>(P.n) * static_cast<std::size_t>(P.n);
    const double cell = span / static_cast<double>(cells);
    P.theta_eps = P.theta * cell;
    const Rational theta_q(1, static_cast<unsigned long>(P.n) * P.r);

    res.min_interval = span;
    for (const auto& f : family) {
        std::vector<Eigen::VectorXd> mapped;
        for (const auto& wv : f.values) {
            const auto q = p_zero_theta(wv, P.n);
            Rational mass = 0;
            Eigen::VectorXd m(static_cast<Eigen::Index>(P.r));
            for (std::size_t j = 0; j < P.r; ++j) {
                mass += q[j];
                if (q[j] < theta_q) res.weights_in_simplex = false;
                m[static_cast<Eigen::Index>(j)] = q[j].get_d();
            }
            if (mass != 1) res.weights_in_simplex = false;
            mapped.push_back(m);
        }
        PiecewiseSignal out;
        std::vector<std::size_t> idx;
        out.breaks.push_back(t0);
        std::size_t piece = 0;
        for (std::size_t c = 0; c < cells; ++c) {
            const double lo = t0 + span * static_cast<double>(c) / static_cast<double>(cells);
            const double hi = c + 1 == cells ? T : t0 + span * static_cast<double>(c + 1) / static_cast<double>(cells);
            Eigen::VectorXd dur = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P.r));
            while (piece + 1 < f.breaks.size() - 1 && f.breaks[piece + 1] <= lo) ++piece;
            for (std::size_t k = piece; k + 1 < f.breaks.size() && f.breaks[k] < hi; ++k) {
                const double ov = std::min(hi, f.breaks[k + 1]) - std::max(lo, f.breaks[k]);
                if (ov > 0.0) dur += ov * mapped[k];
            }
            // rounding: the cell is filled exactly, the last vertex absorbs the remainder
            double t = lo;
            for (std::size_t j = 0; j < P.r; ++j) {
                const double next = j + 1 == P.r ? hi : t + dur[static_cast<Eigen::Index>(j)];
                res.min_interval = std::min(res.min_interval, next - t);
                out.values.push_back(vertices[j]);
                out.breaks.push_back(next);
                idx.push_back(j);
                t = next;
            }
        }
        res.rx_distance.push_back(rx_norm(subtract(out, barycentric(f))));
        res.interval_count.push_back(out.intervals());
        res.outputs.push_back(std::move(out));
        res.vertex_index.push_back(std::move(idx));
    }
    const bool same_count = std::all_of(res.interval_count.begin(), res.interval_count.end(),
                                        [&](std::size_t c) { return c == res.interval_count.front(); });
    res.pass = same_count && res.weights_in_simplex && res.min_interval >= P.theta_eps * (1.0 - 1e-9) &&
               *std::max_element(res.rx_distance.begin(), res.rx_distance.end()) < eps;
    return res;
}

// ---------------------------------------------------------------- vertex scale

GaugeResult compute_xi(const std::vector<Eigen::VectorXd>& values, const std::vector<Eigen::VectorXd>& generators) {
    if (generators.empty()) throw std::invalid_argument("no generators");
    const auto d = generators.front().size();
    const auto m = static_cast<Eigen::Index>(generators.size());
    Eigen::MatrixXd A(d, 2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
        A.col(j) = generators[static_cast<std::size_t>(j)];
        A.col(m + j) = -generators[static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXd c = Eigen::VectorXd::Ones(2 * m);
    GaugeResult g;
    for (const auto& v : values) {
        if (v.size() != d) throw std::invalid_argument("value dimension does not match the generators");
        if (v.lpNorm<Eigen::Infinity>() == 0.0) {
            g.lambda.push_back(Eigen::VectorXd::Zero(2 * m));
            continue;
        }
        const auto lp = solve_lp(A, v, c);
        g.xi = std::max(g.xi, lp.objective);
        g.lambda.push_back(lp.x);
    }
    return g;
}

// ---------------------------------------------------------------- imitation

std::string VertexLabel::str() const {
    return std::string(sign > 0 ? "+" : "-") + (delta ? "delta" + pair_str(pair) : "e" + k.str());
}

Eigen::VectorXd vertex_value(const VertexLabel& v, double xi, const GalerkinSystem& sys) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.dim()));
    if (v.delta) {
        out = sys.to_dense(interaction_coeffs(v.pair.first, v.pair.second, sys.geometry()).contribution(sys.geometry()));
    } else {
        const int p = sys.layout().find(v.k);
        if (p < 0) throw std::invalid_argument("vertex mode " + v.k.str() + " is outside the mode set");
        out[p] = 1.0;
    }
    return (v.sign * xi) * out;
}

static bool pair_allowed(const ModePair& p, int level) {
    for (bool sq : {false, true}) {
        const auto s = selection_S(level, sq);
        if (std::find(s.begin(), s.end(), p) != s.end()) return true;
    }
    return false;
}

namespace {

// reference trajectory pieces of the fully actuated system
struct ReferencePieces {
    std::vector<DenseTrajectory> pieces;
    std::vector<Eigen::VectorXd> states;  // at every breakpoint
};

// coordinates `from` of s moved to `to` in dimension out_dim, plus a piecewise-constant offset, on [t0, t1]
ControlSignal remap(const ControlSignal& s, const std::vector<int>& from, std::size_t out_dim, const std::vector<int>& to,
                    const PiecewiseSignal& offset) {
    const double t0 = offset.breaks.front(), t1 = offset.breaks.back();
    std::vector<double> kn = offset.breaks;
    for (double k : s.knots())
        if (k > t0 && k < t1) kn.push_back(k);
    std::sort(kn.begin(), kn.end());
    kn.erase(std::unique(kn.begin(), kn.end()), kn.end());
    const bool deriv = s.has_derivative();
    const ControlSignal offsig = offset.signal();
    auto src = std::make_shared<ControlSignal>(s);
    std::vector<ControlSignal> pieces;
    for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
        const double a = kn[i], b = kn[i + 1];
        const Eigen::VectorXd off = offset.values[offsig.interval_of(0.5 * (a + b))];
        auto place = [from, to, out_dim](const Eigen::VectorXd& v) {
            Eigen::VectorXd o = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out_dim));
            for (std::size_t k = 0; k < from.size(); ++k) o[to[k]] = v[from[k]];
            return o;
        };
        ControlSignal::Fn val = [=](double t) { return Eigen::VectorXd(place(src->value_in(t, a, b)) + off); };
        ControlSignal::Fn der;
        if (deriv) der = [=](double t) { return place(src->derivative_in(t, a, b)); };
        pieces.push_back(ControlSignal::smooth(out_dim, val, der, {}));
    }
    return ControlSignal::concat(kn, std::move(pieces));
}

ReferencePieces reference_run(const GalerkinSystem& full, const Eigen::VectorXd& u0, const VertexControl& z,
                              const std::vector<int>& lowpos, double tol) {
    ReferencePieces r;
    r.states.push_back(u0);
    Eigen::VectorXd s = u0;
    std::vector<int> ident(lowpos.size());
    std::iota(ident.begin(), ident.end(), 0);
    for (std::size_t i = 0; i < z.labels.size(); ++i) {
        const double lo = z.breaks[i], hi = z.breaks[i + 1];
        const Eigen::VectorXd vert = vertex_value(z.labels[i], z.scale(i), full);
        const auto c = z.base ? remap(*z.base, ident, full.dim(), lowpos, PiecewiseSignal{{lo, hi}, {vert}})
                              : ControlSignal::piecewise({lo, hi}, {vert});
        auto tr = integrate_window(full, s, c, lo, hi, recorded(tol));
        s = tr.end_dense();
        r.pieces.push_back(std::move(tr.dense));
        r.states.push_back(s);
    }
    return r;
}

}  // namespace

ImitationResult imitate(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const VertexControl& z, int N, double w,
                        double tol, bool replay) {
    if (N < 2) throw std::invalid_argument("imitation needs N >= 2");
    if (z.breaks.size() != z.labels.size() + 1) throw std::invalid_argument("vertex control needs m+1 breakpoints");
    const ModeSet low = mode_set_K(N - 1);
    if (!is_subset(mode_set_K(N), sys.mode_set())) throw std::invalid_argument("mode set must contain K^N");
    for (const auto& l : z.labels) {
        if (l.delta && !pair_allowed(l.pair, N - 1))
            throw std::invalid_argument("pair " + pair_str(l.pair) + " is not selected at level " + std::to_string(N - 1));
        if (!l.delta && !contains(low, l.k))
            throw std::invalid_argument("unit vertex " + l.k.str() + " is outside K^" + std::to_string(N - 1));
    }
    const auto full = sys.with_controlled(sys.mode_set());
    const auto jpos = positions(sys, low);
    if (z.base && z.base->dim() != low.size()) throw std::invalid_argument("base signal must live on K^(N-1)");
    const auto ref = reference_run(full, u0, z, jpos, tol);
    const ModeSet comp = set_difference(sys.mode_set(), low);
    const auto cpos = positions(sys, comp);
    const auto osc = std::make_shared<OscillatorProfile>(make_phi_w(z.breaks, w));

    ImitationResult res;
    res.reference_states = ref.states;
    res.end_reference = ref.states.back();
    Eigen::VectorXd cur = u0;
    std::vector<ControlSignal> pieces;
    for (std::size_t i = 0; i < z.labels.size(); ++i) {
        const double lo = z.breaks[i], hi = z.breaks[i + 1];
        auto refp = std::make_shared<DenseTrajectory>(ref.pieces[i]);
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(low.size()));
        double amp = 0.0;
        const auto& lab = z.labels[i];
        if (lab.delta) {
            const auto mi = std::lower_bound(low.begin(), low.end(), lab.pair.first) - low.begin();
            const auto ni = std::lower_bound(low.begin(), low.end(), lab.pair.second) - low.begin();
            dir[mi] = 1.0;
            dir[ni] = lab.sign > 0 ? 1.0 : -1.0;
            amp = std::sqrt(2.0 * z.scale(i));
        }
        auto value = [refp, jpos, osc, dir, amp](double t) {
            Eigen::VectorXd v = gather(refp->value(t), jpos);
            if (amp != 0.0) v += amp * osc->value(t) * dir;
            return v;
        };
        auto deriv_piece = [refp, jpos, osc, dir, amp](double lo2, double hi2) {
            return [=](double t) {
                Eigen::VectorXd v = gather(refp->derivative(t), jpos);
                if (amp != 0.0) v += amp * osc->derivative(t, lo2, hi2) * dir;
                return v;
            };
        };
        // split at the oscillator knots so that derivatives are one-sided
        std::vector<double> kn{lo, hi};
        if (lab.delta)
            for (double k : osc->knots())
                if (k > lo && k < hi) kn.push_back(k);
        std::sort(kn.begin(), kn.end());
        std::vector<ControlSignal> qp;
        for (std::size_t s = 0; s + 1 < kn.size(); ++s)
            qp.push_back(ControlSignal::smooth(low.size(), value, deriv_piece(kn[s], kn[s + 1]), {}));
        const auto q = ControlSignal::concat(kn, std::move(qp));
        auto tr = tracking_control(sys, low, q, gather(cur, cpos), lo, hi, tol);
        cur = tr.end_state;
        pieces.push_back(tr.v);
    }
    res.zw = ControlSignal::concat(z.breaks, std::move(pieces));
    res.end_imitated = cur;
    res.gap_cointegrated = h_norm(sys, cur - res.end_reference);
    res.gap = res.gap_cointegrated;
    if (replay) {
        const auto lowsys = sys.with_controlled(low);
        const auto tr = integrate_window(lowsys, u0, res.zw, z.breaks.front(), z.breaks.back(), recorded(tol));
        res.end_imitated = tr.end_dense();
        res.gap = h_norm(sys, res.end_imitated - res.end_reference);
        for (std::size_t i = 0; i < z.breaks.size(); ++i) {
            const Eigen::VectorXd s = tr.dense.value(z.breaks[i]);
            res.pin_errors.push_back(l1_norm(gather(s, jpos) - gather(ref.states[i], jpos)));
        }
        res.max_pin_error = *std::max_element(res.pin_errors.begin(), res.pin_errors.end());
    }
    return res;
}

ImitationStudy imitation_study(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const VertexControl& z, int N,
                               const std::vector<double>& ws, double tol, double slope_max, double pin_tol,
                               unsigned jobs) {
    ImitationStudy st;
    st.rows.resize(ws.size());
    parallel_for(ws.size(), jobs, [&](std::size_t i) {
        const auto r = imitate(sys, u0, z, N, ws[i], tol, true);
        st.rows[i] = {ws[i], r.gap, r.max_pin_error};
    });
    std::vector<double> x, y;
    for (const auto& r : st.rows) {
        x.push_back(r.w);
        y.push_back(r.gap);
    }
    st.slope = loglog_fit(x, y).slope;
    st.monotone = true;
    for (std::size_t i = 1; i < st.rows.size(); ++i) st.monotone = st.monotone && st.rows[i].gap < st.rows[i - 1].gap;
    const double ptol = pin_tol > 0.0 ? pin_tol : 10.0 * tol;
    st.pins = std::all_of(st.rows.begin(), st.rows.end(), [&](const auto& r) { return r.max_pin_error <= ptol; });
    st.pass = st.slope <= slope_max && st.monotone && st.pins;
    return st;
}

// ---------------------------------------------------------------- cascade

namespace {

// the step K^{L-1} -> K^L: delta directions of the selection, restricted to K^L \ K^{L-1}
struct StepGenerators {
    std::vector<VertexLabel> labels;
    std::vector<Eigen::VectorXd> high;  // on K^L \ K^{L-1}
    std::vector<Eigen::VectorXd> low;   // on K^{L-1}
};

StepGenerators step_generators(const GalerkinSystem& sys, int L) {
    const ModeSet lo = mode_set_K(L - 1), hi = set_difference(mode_set_K(L), lo);
    const auto lpos = positions(sys, lo), hpos = positions(sys, hi);
    StepGenerators g;
    for (const auto& p : selection_S(L - 1, false)) {
        VertexLabel v;
        v.delta = true;
        v.pair = p;
        const Eigen::VectorXd d = vertex_value(v, 1.0, sys);
        g.labels.push_back(v);
        g.high.push_back(gather(d, hpos));
        g.low.push_back(gather(d, lpos));
    }
    return g;
}

// piecewise-constant cell averages of a signal, Gauss rule inside each smooth piece
PiecewiseSignal sample_cells(const ControlSignal& s, double t0, double t1, int cells) {
    const auto [gx, gw] = gauss_legendre(6);
    auto kn = s.knots();
    PiecewiseSignal out;
    out.breaks.push_back(t0);
    for (int c = 0; c < cells; ++c) {
        const double lo = t0 + (t1 - t0) * c / cells, hi = c + 1 == cells ? t1 : t0 + (t1 - t0) * (c + 1) / cells;
        std::vector<double> sub{lo, hi};
        for (auto it = std::upper_bound(kn.begin(), kn.end(), lo); it != kn.end() && *it < hi; ++it) sub.push_back(*it);
        std::sort(sub.begin(), sub.end());
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.dim()));
        for (std::size_t k = 0; k + 1 < sub.size(); ++k) {
            const double a = sub[k], b = sub[k + 1];
            if (!(b > a)) continue;
            for (std::size_t q = 0; q < gx.size(); ++q) {
                const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
                acc += (0.5 * (b - a) * gw[q]) * s.value_in(t, a, b);
            }
        }
        out.values.push_back(acc / (hi - lo));
        out.breaks.push_back(hi);
    }
    return out;
}

struct ChatterPlan {
    VertexControl z;
    double xi = 0.0;
};

// The K^{L-1} part of c stays in the base signal. The K^L \ K^{L-1} part is averaged on `cells` cells,
// written in the delta directions by the gauge LP, and chattered inside each cell with the local scale.
// Consecutive cells run the parts in opposite orders. The base absorbs the K^{L-1} part of the deltas.
ChatterPlan chatter(const ControlSignal& c, double T, const StepGenerators& gens, const ModeSet& lo, const ModeSet& hi,
                    const ModeSet& level, int cells, double drop) {
    std::vector<int> lidx, hidx;
    for (const auto& k : lo) lidx.push_back(static_cast<int>(std::lower_bound(level.begin(), level.end(), k) - level.begin()));
    for (const auto& k : hi) hidx.push_back(static_cast<int>(std::lower_bound(level.begin(), level.end(), k) - level.begin()));
    std::vector<int> hto(hidx.size());
    std::iota(hto.begin(), hto.end(), 0);
    const auto highsig = remap(c, hidx, hi.size(), hto, PiecewiseSignal{{0.0, T}, {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hi.size()))}});
    const auto avg = sample_cells(highsig, 0.0, T, cells);
    const auto gauge = compute_xi(avg.values, gens.high);
    const std::size_t m = gens.labels.size();

    ChatterPlan plan;
    plan.xi = gauge.xi;
    auto& z = plan.z;
    z.xi = gauge.xi;
    z.breaks.push_back(0.0);
    PiecewiseSignal offset;
    offset.breaks = avg.breaks;
    for (std::size_t i = 0; i < avg.intervals(); ++i) {
        Eigen::VectorXd lam = gauge.lambda[i];
        const double full_mass = lam.sum();
        for (Eigen::Index j = 0; j < lam.size(); ++j)
            if (lam[j] <= drop * full_mass) lam[j] = 0.0;
        const double local = lam.sum();
        Eigen::VectorXd off = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lo.size()));
        std::vector<std::pair<VertexLabel, double>> parts;
        for (std::size_t j = 0; local > 0.0 && j < 2 * m; ++j) {
            const double l = lam[static_cast<Eigen::Index>(j)];
            if (l <= 0.0) continue;
            VertexLabel v = gens.labels[j % m];
            v.sign = j < m ? 1 : -1;
            off -= (v.sign * l) * gens.low[j % m];
            parts.push_back({v, l / local});
        }
        offset.values.push_back(off);
        if (parts.empty()) {
            VertexLabel idle;
            idle.k = lo.front();
            parts.push_back({idle, 1.0});
        }
        const double clo = avg.breaks[i], chi = avg.breaks[i + 1];
        double t = clo;
        for (std::size_t kk = 0; kk < parts.size(); ++kk) {
            const std::size_t k = i % 2 == 0 ? kk : parts.size() - 1 - kk;
            const double next = kk + 1 == parts.size() ? chi : t + (chi - clo) * parts[k].second;
            if (next - t > 1e-9 * (chi - clo)) {
                z.labels.push_back(parts[k].first);
                z.scales.push_back(parts.size() == 1 && !parts[k].first.delta ? 0.0 : local);
                z.breaks.push_back(next);
            }
            t = next;
        }
        z.breaks.back() = chi;
    }
    std::vector<int> lto(lidx.size());
    std::iota(lto.begin(), lto.end(), 0);
    z.base = remap(c, lidx, lo.size(), lto, offset);
    return plan;
}

}  // namespace

CascadeReport cascade_to_K1(const GalerkinSystem& sys, const SpectralField& u0, const SpectralField& target, double eps,
                            const CascadeOptions& opt) {
    if (!(eps > 0.0)) throw std::invalid_argument("cascade accuracy must be positive");
    CascadeReport rep;
    rep.eps = eps;
    // smallest M whose truncation error is below eps / 2
    rep.M = 1;
    auto tail_of = [&](int M) {
        SpectralField t(target.geometry());
        for (const auto& [k, v] : target.coeffs())
            if (!contains(mode_set_K(M), k)) t.set(k, v);
        return norm(t, NormKind::H);
    };
    while (tail_of(rep.M) >= 0.5 * eps) ++rep.M;
    rep.tail = tail_of(rep.M);
    if (!is_subset(mode_set_K(rep.M), sys.mode_set()))
        throw std::invalid_argument("mode set must contain K^" + std::to_string(rep.M));
    rep.T = opt.T > 0.0 ? opt.T : 1.0;
    const double T = rep.T;
    const double budget = eps / (2.0 * rep.M);
    const auto full = sys.with_controlled(sys.mode_set());
    const Eigen::VectorXd x0 = sys.to_dense(u0), xt = sys.to_dense(target);
    auto distance_to_target = [&](const Eigen::VectorXd& x) { return h_norm(sys, x - xt); };
    auto log = [&](const std::string& m) {
        if (opt.progress) opt.progress(m);
    };

    // first step: fully actuated inversion on K^M
    EndpointExperiment exp(sys, mode_set_K(rep.M), u0, 1.0, 1e9, T, opt.tol);
    CoveringOptions copt;
    copt.residual_tol = 1e-10;
    SpectralField tM(sys.geometry());
    for (const auto& k : mode_set_K(rep.M)) tM.set(k, target[k]);
    const auto sol = solve_endpoint(exp, exp.observed_part(tM), copt);
    if (!sol.pass) throw CascadeFailure("first-step inversion did not converge", 0);
    ControlSignal current = ControlSignal::constant(sol.p / T, T);
    const auto sysM = sys.with_controlled(mode_set_K(rep.M));
    Eigen::VectorXd prev_end = integrate_window(sysM, x0, current, 0.0, T, quiet(opt.tol)).end_dense();
    {
        Eigen::VectorXd diff = Eigen::VectorXd::Zero(x0.size());
        const auto mpos = positions(sys, mode_set_K(rep.M));
        scatter(diff, gather(prev_end - xt, mpos), mpos);
        rep.covering_residual = h_norm(sys, diff);
    }
    log("K^" + std::to_string(rep.M) + " covering residual " + std::to_string(rep.covering_residual));

    rep.pass = true;
    for (int L = rep.M; L >= 2; --L) {
        CascadeStep st;
        st.from_level = L;
        st.to_level = L - 1;
        st.budget = budget;
        const ModeSet lo = mode_set_K(L - 1), level = mode_set_K(L), hi = set_difference(level, lo);
        const auto gens = step_generators(sys, L);
        // refine the chattering grid until the relaxed trajectory is within half the budget
        int cells = opt.chatter_cells > 0 ? opt.chatter_cells : 1;
        ChatterPlan plan;
        while (true) {
            plan = chatter(current, T, gens, lo, hi, level, cells, opt.drop_weight);
            const auto ref = reference_run(full, x0, plan.z, positions(sys, lo), opt.tol);
            st.chatter_gap = h_norm(sys, ref.states.back() - prev_end);
            log("K^" + std::to_string(L) + " chatter cells " + std::to_string(cells) + " intervals " +
                std::to_string(plan.z.labels.size()) + " gap " + std::to_string(st.chatter_gap));
            if (opt.chatter_cells > 0 || st.chatter_gap <= 0.5 * budget || 2 * cells > opt.max_cells) break;
            cells *= 2;
        }
        st.chatter_cells = cells;
        st.xi = plan.xi;
        st.intervals = static_cast<int>(plan.z.labels.size());
        double w = opt.w_start;
        ImitationResult im;
        while (true) {
            im = imitate(sys, x0, plan.z, L, w, opt.tol, true);
            st.w = w;
            st.imitation_gap = im.gap;
            st.gap = h_norm(sys, im.end_imitated - prev_end);
            log("K^" + std::to_string(L) + " w " + std::to_string(w) + " imitation gap " + std::to_string(im.gap) +
                " step gap " + std::to_string(st.gap));
            if (st.gap <= budget || 2.0 * w > opt.w_cap) break;
            w *= 2.0;
        }
        st.within_budget = st.gap <= budget;
        rep.steps.push_back(st);
        current = im.zw;
        prev_end = im.end_imitated;
        if (!st.within_budget) {
            rep.pass = false;
            rep.failure = "step " + std::to_string(rep.M - L + 1) + " (K^" + std::to_string(L) + " -> K^" +
                          std::to_string(L - 1) + ") gap " + std::to_string(st.gap) + " exceeds budget " +
                          std::to_string(budget) + " at the w cap";
            break;
        }
    }
    rep.control = current;
    rep.distance = distance_to_target(prev_end);
    rep.pass = rep.pass && rep.distance < eps;
    if (rep.pass == false && rep.failure.empty())
        rep.failure = "final distance " + std::to_string(rep.distance) + " is not below " + std::to_string(eps);
    return rep;
}

// ---------------------------------------------------------------- reports

static nlohmann::json vec_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

nlohmann::json to_json(const DeviationFit& f) {
    nlohmann::json j;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : f.rows) rows.push_back({{"T", r.T}, {"sup_deviation", r.sup_deviation}, {"worst_p", vec_json(r.worst_p)}});
    j["rows"] = rows;
    j["slope"] = f.slope;
    j["C"] = f.C;
    j["small_T_slope"] = f.small_T_slope;
    j["verdict"] = f.pass ? "pass" : "fail";
    return j;
}

nlohmann::json to_json(const CoveringReport& r, bool with_targets) {
    nlohmann::json j{{"T", r.T},
                     {"C", r.C},
                     {"deviation_bound", r.bound},
                     {"sup_deviation", r.sup_deviation},
                     {"targets", r.targets.size()},
                     {"max_residual", r.max_residual},
                     {"center_preimage_l1", r.center_p},
                     {"jacobian_probe_ratio", r.probe_ratio},
                     {"newton_fallbacks", std::count_if(r.targets.begin(), r.targets.end(), [](const auto& t) { return t.newton; })},
                     {"verdict", r.pass ? "pass" : "fail"}};
    if (with_targets) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& t : r.targets)
            a.push_back({{"target", vec_json(t.target)}, {"p", vec_json(t.p)}, {"residual", t.residual},
                         {"iterations", t.iterations}, {"newton", t.newton}});
        j["target_rows"] = a;
    }
    return j;
}

nlohmann::json to_json(const ImitationStudy& s) {
    nlohmann::json j;
    j["label"] = s.label;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows) rows.push_back({{"w", r.w}, {"gap", r.gap}, {"max_pin_error", r.max_pin_error}});
    j["rows"] = rows;
    j["slope"] = s.slope;
    j["monotone"] = s.monotone;
    j["pinning"] = s.pins;
    j["verdict"] = s.pass ? "pass" : "fail";
    return j;
}

nlohmann::json to_json(const RelaxedApproxResult& r) {
    nlohmann::json j;
    j["n"] = r.params.n;
    j["vertices"] = r.params.r;
    j["gamma"] = r.params.gamma;
    j["theta"] = r.params.theta;
    j["theta_eps"] = r.params.theta_eps;
    j["D"] = r.params.D;
    j["rx_distance"] = r.rx_distance;
    j["interval_count"] = r.interval_count;
    j["min_interval"] = r.min_interval;
    j["weights_in_simplex"] = r.weights_in_simplex;
    j["verdict"] = r.pass ? "pass" : "fail";
    return j;
}

nlohmann::json to_json(const CascadeReport& r) {
    nlohmann::json j;
    j["M"] = r.M;
    j["eps"] = r.eps;
    j["T"] = r.T;
    j["tail"] = r.tail;
    j["covering_residual"] = r.covering_residual;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"from", s.from_level}, {"to", s.to_level}, {"budget", s.budget}, {"w", s.w}, {"xi", s.xi}, {"chatter_cells", s.chatter_cells},
                         {"intervals", s.intervals}, {"chatter_gap", s.chatter_gap},
                         {"imitation_gap", s.imitation_gap}, {"gap", s.gap}, {"within_budget", s.within_budget}});
    j["steps"] = steps;
    j["distance"] = r.distance;
    if (!r.failure.empty()) j["failure"] = r.failure;
    j["verdict"] = r.pass ? "pass" : "fail";
    return j;
}

}  // namespace galerkin
