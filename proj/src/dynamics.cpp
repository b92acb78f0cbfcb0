#include "galerkin/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace galerkin {

GalerkinSystem::GalerkinSystem(RectGeometry g, double nu, SpectralField forcing, ModeSet mode_set,
                               ModeSet controlled_set)
    : geom_(g), nu_(nu), forcing_(std::move(forcing)), layout_(std::move(mode_set)),
      controlled_(normalize(std::move(controlled_set))) {
    if (!(nu_ > 0.0)) throw std::invalid_argument("viscosity must be positive");
    if (!is_subset(controlled_, layout_.modes())) throw std::invalid_argument("controlled set must lie in the mode set");
    for (const auto& k : controlled_) ctrl_pos_.push_back(layout_.find(k));
    const auto n = static_cast<Eigen::Index>(layout_.size());
    lambda_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) lambda_[i] = nu_ * kbar(layout_[static_cast<std::size_t>(i)], geom_);
    F_ = forcing_.dense(layout_);  // throws when F leaves the mode set
    op_ = std::make_shared<QuadraticOperator>(geom_, layout_);
}

GalerkinSystem GalerkinSystem::with_controlled(ModeSet controlled) const {
    GalerkinSystem s = *this;
    s.controlled_ = normalize(std::move(controlled));
    if (!is_subset(s.controlled_, layout_.modes()))
        throw std::invalid_argument("controlled set must lie in the mode set");
    s.ctrl_pos_.clear();
    for (const auto& k : s.controlled_) s.ctrl_pos_.push_back(layout_.find(k));
    return s;
}

GalerkinSystem GalerkinSystem::with_nu(double nu) const {
    if (!(nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
    GalerkinSystem s = *this;
    s.nu_ = nu;
    s.lambda_ = lambda_ * (nu / nu_);
    return s;
}

GalerkinSystem GalerkinSystem::with_forcing(SpectralField forcing) const {
    GalerkinSystem s = *this;
    s.F_ = forcing.dense(layout_);
    s.forcing_ = std::move(forcing);
    return s;
}

Eigen::VectorXd GalerkinSystem::embed_control(const Eigen::VectorXd& v) const {
    if (static_cast<std::size_t>(v.size()) != ctrl_pos_.size())
        throw std::invalid_argument("control has dimension " + std::to_string(v.size()) + ", expected " +
                                    std::to_string(ctrl_pos_.size()));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < ctrl_pos_.size(); ++i) out[ctrl_pos_[i]] = v[static_cast<Eigen::Index>(i)];
    return out;
}

Eigen::VectorXd GalerkinSystem::restrict_control(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(ctrl_pos_.size()));
    for (std::size_t i = 0; i < ctrl_pos_.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[ctrl_pos_[i]];
    return out;
}

void GalerkinSystem::rhs_dense(const Eigen::VectorXd& u, const Eigen::VectorXd* v, Eigen::VectorXd& out) const {
    op_->apply(u, out);
    out += lambda_.cwiseProduct(u) + F_;
    if (v) {
        if (static_cast<std::size_t>(v->size()) != ctrl_pos_.size())
            throw std::invalid_argument("control has dimension " + std::to_string(v->size()) + ", expected " +
                                        std::to_string(ctrl_pos_.size()));
        for (std::size_t i = 0; i < ctrl_pos_.size(); ++i) out[ctrl_pos_[i]] += (*v)[static_cast<Eigen::Index>(i)];
    }
}

Eigen::VectorXd GalerkinSystem::rhs_dense(const Eigen::VectorXd& u, const Eigen::VectorXd* v) const {
    Eigen::VectorXd out;
    rhs_dense(u, v, out);
    return out;
}

Eigen::VectorXd GalerkinSystem::rhs_rate(const Eigen::VectorXd& u, const Eigen::VectorXd& du,
                                         const Eigen::VectorXd* dv) const {
    Eigen::VectorXd out;
    op_->apply_bilinear(u, du, out);
    out += lambda_.cwiseProduct(du);
    if (dv)
        for (std::size_t i = 0; i < ctrl_pos_.size(); ++i) out[ctrl_pos_[i]] += (*dv)[static_cast<Eigen::Index>(i)];
    return out;
}

SpectralField GalerkinSystem::rhs(const SpectralField& u, const Eigen::VectorXd& v, double) const {
    return to_field(rhs_dense(to_dense(u), &v));
}

ControlSignal ControlSignal::zero(std::size_t dim, double T) {
    return piecewise({0.0, T}, {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))});
}

ControlSignal ControlSignal::constant(const Eigen::VectorXd& value, double T) { return piecewise({0.0, T}, {value}); }

ControlSignal ControlSignal::piecewise(std::vector<double> breakpoints, std::vector<Eigen::VectorXd> values) {
    if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
        throw std::invalid_argument("piecewise control needs m+1 breakpoints for m values");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1])) throw std::invalid_argument("breakpoints must increase strictly");
    const auto d = values.front().size();
    for (const auto& v : values)
        if (v.size() != d) throw std::invalid_argument("control values must share one dimension");
    ControlSignal c;
    c.kind_ = Kind::PiecewiseConstant;
    c.dim_ = static_cast<std::size_t>(d);
    c.breaks_ = std::move(breakpoints);
    c.values_ = std::move(values);
    return c;
}

ControlSignal ControlSignal::smooth(std::size_t dim, Fn value, Fn derivative, std::vector<double> knots) {
    if (!value) throw std::invalid_argument("smooth control needs a value evaluator");
    ControlSignal c;
    c.kind_ = Kind::Smooth;
    c.dim_ = dim;
    c.value_ = std::move(value);
    c.deriv_ = std::move(derivative);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    c.knots_ = std::move(knots);
    return c;
}

ControlSignal ControlSignal::concat(std::vector<double> breakpoints, std::vector<ControlSignal> pieces) {
    if (breakpoints.size() < 2 || pieces.size() + 1 != breakpoints.size())
        throw std::invalid_argument("concatenated control needs m+1 breakpoints for m pieces");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1])) throw std::invalid_argument("breakpoints must increase strictly");
    for (const auto& p : pieces)
        if (p.dim() != pieces.front().dim()) throw std::invalid_argument("control pieces must share one dimension");
    ControlSignal c;
    c.kind_ = Kind::Smooth;
    c.dim_ = pieces.front().dim();
    c.breaks_ = std::move(breakpoints);
    std::vector<double> k = c.breaks_;
    for (std::size_t i = 0; i < pieces.size(); ++i)
        for (double x : pieces[i].knots())
            if (x > c.breaks_[i] && x < c.breaks_[i + 1]) k.push_back(x);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    c.knots_ = std::move(k);
    c.pieces_ = std::make_shared<const std::vector<ControlSignal>>(std::move(pieces));
    return c;
}

bool ControlSignal::has_derivative() const {
    if (kind_ == Kind::PiecewiseConstant) return true;
    if (pieces_) return std::all_of(pieces_->begin(), pieces_->end(), [](const auto& p) { return p.has_derivative(); });
    return static_cast<bool>(deriv_);
}

std::size_t ControlSignal::interval_of(double t) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    std::size_t i = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
    return std::min(i, breaks_.size() - 2);
}

Eigen::VectorXd ControlSignal::value(double t) const {
    if (pieces_) return (*pieces_)[interval_of(t)].value(t);
    if (kind_ == Kind::Smooth) return value_(t);
    return values_[interval_of(t)];
}

Eigen::VectorXd ControlSignal::value_in(double t, double lo, double hi) const {
    if (pieces_) return (*pieces_)[interval_of(0.5 * (lo + hi))].value_in(t, lo, hi);
    if (kind_ == Kind::Smooth) return value_(std::clamp(t, lo, hi));
    return values_[interval_of(0.5 * (lo + hi))];
}

Eigen::VectorXd ControlSignal::derivative_in(double t, double lo, double hi) const {
    if (kind_ == Kind::PiecewiseConstant) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    if (pieces_) return (*pieces_)[interval_of(0.5 * (lo + hi))].derivative_in(t, lo, hi);
    if (!deriv_) throw std::logic_error("control has no derivative evaluator");
    return deriv_(std::clamp(t, lo, hi));
}

std::vector<double> ControlSignal::knots() const { return kind_ == Kind::Smooth ? knots_ : breaks_; }

std::size_t DenseTrajectory::segment(double s) const {
    if (t.size() < 2) throw std::logic_error("trajectory has fewer than two samples");
    auto it = std::upper_bound(t.begin(), t.end(), s);
    std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    if (i >= t.size() - 1) {
        i = t.size() - 2;
        while (i > 0 && t[i] == t[i + 1]) --i;
    }
    return i;
}

namespace {
constexpr double kQuintic[6][6] = {
    {1, 0, 0, -10, 15, -6}, {0, 1, 0, -6, 8, -3}, {0, 0, 0.5, -1.5, 1.5, -0.5},
    {0, 0, 0, 10, -15, 6},  {0, 0, 0, -4, 7, -3}, {0, 0, 0, 0.5, -1, 0.5}};
constexpr double kCubic[4][4] = {{1, 0, -3, 2}, {0, 1, -2, 1}, {0, 0, 3, -2}, {0, 0, -1, 1}};

template <std::size_t N>
double poly(const double (&c)[N], double s, int order) {
    double v = 0.0;
    for (std::size_t p = static_cast<std::size_t>(order); p < N; ++p) {
        double f = 1.0;
        for (int q = 0; q < order; ++q) f *= static_cast<double>(p - static_cast<std::size_t>(q));
        v += c[p] * f * std::pow(s, static_cast<double>(p - static_cast<std::size_t>(order)));
    }
    return v;
}
}  // namespace

Eigen::VectorXd DenseTrajectory::eval(double s, int order) const {
    const std::size_t i = segment(s);
    const double h = t[i + 1] - t[i];
    const double x = std::clamp((s - t[i]) / h, 0.0, 1.0);
    const double scale = std::pow(h, -order);
    if (!d2y.empty()) {
        double b[6];
        for (int k = 0; k < 6; ++k) b[k] = poly(kQuintic[k], x, order);
        return scale * (b[0] * y[i] + h * b[1] * dy[i] + h * h * b[2] * d2y[i] + b[3] * y[i + 1] +
                        h * b[4] * dy[i + 1] + h * h * b[5] * d2y[i + 1]);
    }
    double b[4];
    for (int k = 0; k < 4; ++k) b[k] = poly(kCubic[k], x, order);
    return scale * (b[0] * y[i] + h * b[1] * dy[i] + b[2] * y[i + 1] + h * b[3] * dy[i + 1]);
}

Eigen::VectorXd DenseTrajectory::value(double s) const { return eval(s, 0); }
Eigen::VectorXd DenseTrajectory::derivative(double s) const { return eval(s, 1); }
Eigen::VectorXd DenseTrajectory::second_derivative(double s) const { return eval(s, 2); }

std::vector<std::size_t> DenseTrajectory::distinct_samples() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (i + 1 == t.size() || t[i + 1] != t[i]) out.push_back(i);
    return out;
}

namespace {

struct Stepper {
    const IFProblem& prob;
    Eigen::VectorXd k1, k2, k3, k4, tmp, Eh, Eh2;

    void N(double t, const Eigen::VectorXd& y, std::size_t seg, Eigen::VectorXd& out) {
        prob.rhs(t, y, seg, out);
        out -= prob.lambda.cwiseProduct(y);
    }

    // one Lawson RK4 step; k1 at (t, y) supplied by the caller
    Eigen::VectorXd step(double t, const Eigen::VectorXd& y, double h, const Eigen::VectorXd& k1in, std::size_t seg) {
        Eh = (prob.lambda * h).array().exp().matrix();
        Eh2 = (prob.lambda * (0.5 * h)).array().exp().matrix();
        tmp = Eh2.cwiseProduct(y + 0.5 * h * k1in);
        N(t + 0.5 * h, tmp, seg, k2);
        tmp = Eh2.cwiseProduct(y) + 0.5 * h * k2;
        N(t + 0.5 * h, tmp, seg, k3);
        tmp = Eh.cwiseProduct(y) + h * Eh2.cwiseProduct(k3);
        N(t + h, tmp, seg, k4);
        return Eh.cwiseProduct(y) + (h / 6.0) * (Eh.cwiseProduct(k1in) + 2.0 * Eh2.cwiseProduct(k2 + k3) + k4);
    }
};

}  // namespace

DenseTrajectory integrate_if(const IFProblem& prob, const Eigen::VectorXd& y0, std::vector<double> knots,
                             const IntegratorOptions& opt, IntegrationStats* stats) {
    if (knots.size() < 2) throw std::invalid_argument("integration needs a start and an end time");
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i] > knots[i - 1])) throw std::invalid_argument("integration knots must increase strictly");
    if (!(opt.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const double span = knots.back() - knots.front();
    IntegrationStats local;
    IntegrationStats& st = stats ? *stats : local;
    Stepper S{prob, {}, {}, {}, {}, {}, {}, {}};
    DenseTrajectory out;
    Eigen::VectorXd y = y0, dy, d2y, kfirst, half, small, big;

    auto record = [&](double t, std::size_t seg) {
        if (!opt.record) return;
        prob.rhs(t, y, seg, dy);
        out.t.push_back(t);
        out.y.push_back(y);
        out.dy.push_back(dy);
        if (prob.second) {
            prob.second(t, y, dy, seg, d2y);
            out.d2y.push_back(d2y);
        }
    };

    double h = opt.h_init > 0.0 ? opt.h_init : 1e-3 * span;
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
        const double lo = knots[seg], hi = knots[seg + 1];
        double t = lo;
        record(t, seg);
        while (t < hi) {
            if (st.accepted + st.rejected >= opt.max_steps)
                throw StiffnessError("step budget exhausted at t = " + std::to_string(t));
            const double proposal = h;
            h = std::min(h, hi - t);
            if (hi - (t + h) < 1e-12 * std::max(1.0, std::abs(hi))) h = hi - t;
            S.N(t, y, seg, kfirst);
            big = S.step(t, y, h, kfirst, seg);
            half = S.step(t, y, 0.5 * h, kfirst, seg);
            S.N(t + 0.5 * h, half, seg, S.k1);
            small = S.step(t + 0.5 * h, half, 0.5 * h, S.k1, seg);
            const double err = (small - big).lpNorm<Eigen::Infinity>() / 15.0;
            const double floor = 256.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, y.lpNorm<Eigen::Infinity>());
            const double allowed = std::max(opt.tol * h / span, floor);
            if (!std::isfinite(err)) {
                h *= 0.25;
                ++st.rejected;
            } else if (err <= allowed) {
                y = small + (small - big) / 15.0;
                t = (h == hi - t) ? hi : t + h;
                ++st.accepted;
                st.max_error_estimate = std::max(st.max_error_estimate, err);
                if (t < hi) record(t, seg);
                const double fac = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.25) : 4.0;
                const bool truncated = h < proposal;
                h *= std::clamp(fac, 0.2, 4.0);
                if (truncated) h = std::max(h, proposal);
            } else {
                ++st.rejected;
                h *= std::clamp(0.9 * std::pow(allowed / err, 0.25), 0.1, 0.9);
            }
            if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
            if (t < hi && h < opt.h_min * span && h < hi - t) {
                std::ostringstream msg;
                msg << "step size underflow at t = " << t << " (h = " << h << ", error estimate " << err
                    << ", allowed " << allowed << ", |y|_inf = " << y.lpNorm<Eigen::Infinity>() << ")";
                throw StiffnessError(msg.str());
            }
        }
        record(hi, seg);
    }
    if (!opt.record) {
        out.t = {knots.front(), knots.back()};
        out.y = {y0, y};
    }
    return out;
}

static std::vector<double> merged_knots(double t0, double t1, const std::vector<double>& extra) {
    std::vector<double> k{t0, t1};
    for (double x : extra)
        if (x > t0 && x < t1) k.push_back(x);
    std::sort(k.begin(), k.end());
    std::vector<double> out;
    const double eps = 1e-14 * std::max({1.0, std::abs(t0), std::abs(t1)});
    for (double x : k)
        if (out.empty() || x - out.back() > eps) out.push_back(x);
    out.back() = t1;
    return out;
}

Trajectory integrate_window(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const ControlSignal& v, double t0,
                            double t1, const IntegratorOptions& opt) {
    if (!(t1 > t0)) throw std::invalid_argument("horizon must be positive");
    if (v.dim() != sys.control_dim())
        throw std::invalid_argument("control has dimension " + std::to_string(v.dim()) + ", expected " +
                                    std::to_string(sys.control_dim()));
    if (static_cast<std::size_t>(u0.size()) != sys.dim()) throw std::invalid_argument("initial state has wrong size");
    const auto knots = merged_knots(t0, t1, v.knots());
    IFProblem prob;
    prob.lambda = sys.linear_rates();
    prob.rhs = [&](double t, const Eigen::VectorXd& y, std::size_t seg, Eigen::VectorXd& out) {
        const Eigen::VectorXd c = v.value_in(t, knots[seg], knots[seg + 1]);
        sys.rhs_dense(y, &c, out);
    };
    if (v.has_derivative())
        prob.second = [&](double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy, std::size_t seg,
                          Eigen::VectorXd& out) {
            const Eigen::VectorXd dc = v.derivative_in(t, knots[seg], knots[seg + 1]);
            out = sys.rhs_rate(y, dy, &dc);
        };
    Trajectory tr{sys.geometry(), sys.layout(), {}, {}};
    tr.dense = integrate_if(prob, u0, knots, opt, &tr.stats);
    return tr;
}

Trajectory integrate_dense(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const ControlSignal& v, double T,
                           const IntegratorOptions& opt) {
    return integrate_window(sys, u0, v, 0.0, T, opt);
}

Trajectory integrate(const GalerkinSystem& sys, const SpectralField& u0, const ControlSignal& v, double T, double tol,
                     IntegratorOptions opt) {
    opt.tol = tol;
    return integrate_dense(sys, sys.to_dense(u0), v, T, opt);
}

SpectralField Trajectory::state_at(double t) const {
    return SpectralField::from_dense(geom, layout, dense.value(t));
}

std::vector<double> Trajectory::sample_times() const {
    std::vector<double> out;
    for (auto i : dense.distinct_samples()) out.push_back(dense.t[i]);
    return out;
}

std::vector<double> energy_bound(const GalerkinSystem& sys, const SpectralField& u0, const ControlSignal& v,
                                 const std::vector<double>& times) {
    const auto [gx, gw] = gauss_legendre(8);
    auto density = [&](double t, double lo, double hi) {
        const Eigen::VectorXd f = sys.forcing_dense() + sys.embed_control(v.value_in(t, lo, hi));
        const double d = vprime_dense(f, sys.layout(), sys.geometry());
        return d * d;
    };
    const auto knots = v.knots();
    const double u0n = norm(u0, NormKind::H);
    std::vector<double> out;
    double acc = 0.0, last = times.empty() ? 0.0 : std::min(0.0, times.front());
    for (double t : times) {
        if (t < last) throw std::invalid_argument("energy bound times must be nondecreasing");
        std::vector<double> sub{last, t};
        for (double k : knots)
            if (k > last && k < t) sub.push_back(k);
        std::sort(sub.begin(), sub.end());
        for (std::size_t i = 0; i + 1 < sub.size(); ++i) {
            const double lo = sub[i], hi = sub[i + 1];
            if (!(hi > lo)) continue;
            for (std::size_t q = 0; q < gx.size(); ++q)
                acc += 0.5 * (hi - lo) * gw[q] * density(0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[q], lo, hi);
        }
        last = t;
        out.push_back(std::sqrt(u0n * u0n + acc / sys.nu()));
    }
    return out;
}

double c0h_distance(const Trajectory& x, const Trajectory& y, int n) {
    const double T = std::min(x.dense.t1(), y.dense.t1());
    std::vector<double> ts;
    for (int i = 0; i < n; ++i) ts.push_back(T * i / (n - 1));
    double worst = 0.0;
    for (double t : ts)
        worst = std::max(worst, norm_dense(x.dense.value(t) - y.dense.value(t), x.layout, x.geom, NormKind::H));
    return worst;
}

std::vector<ContinuityRow> data_continuity_probe(const GalerkinSystem& sys, const SpectralField& u0,
                                                 const ControlSignal& v, double T, const std::vector<double>& deltas,
                                                 double tol) {
    IntegratorOptions opt;
    opt.tol = tol;
    const Eigen::VectorXd base0 = sys.to_dense(u0);
    const Trajectory ref = integrate_dense(sys, base0, v, T, opt);

    // unit H-norm direction spread over every mode
    Eigen::VectorXd dir = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sys.dim()));
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = (i % 2 == 0 ? 1.0 : -0.5);
    dir /= norm_dense(dir, sys.layout(), sys.geometry(), NormKind::H);
    const SpectralField fdir = sys.to_field(dir);

    std::vector<ContinuityRow> rows;
    for (double d : deltas) {
        ContinuityRow r;
        r.delta = d;
        if (d == 0.0) {
            rows.push_back(r);
            continue;
        }
        r.dev_u0 = c0h_distance(integrate_dense(sys, base0 + d * dir, v, T, opt), ref);
        r.dev_forcing = c0h_distance(integrate_dense(sys.with_forcing(sys.forcing() + d * fdir), base0, v, T, opt), ref);
        r.dev_nu_plus = c0h_distance(integrate_dense(sys.with_nu(sys.nu() * (1.0 + d)), base0, v, T, opt), ref);
        r.dev_nu_minus = c0h_distance(integrate_dense(sys.with_nu(sys.nu() * (1.0 - d)), base0, v, T, opt), ref);
        rows.push_back(r);
    }
    return rows;
}

std::string trajectory_csv(const Trajectory& tr, const std::vector<std::string>& extra_names,
                           const std::vector<std::vector<double>>& extra_columns) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "t";
    for (const auto& k : tr.layout.modes()) os << ", " << mode_label(k);
    for (const auto& n : extra_names) os << ", " << n;
    os << "\n";
    std::size_t row = 0;
    for (auto i : tr.dense.distinct_samples()) {
        os << tr.dense.t[i];
        for (Eigen::Index j = 0; j < tr.dense.y[i].size(); ++j) os << ", " << tr.dense.y[i][j];
        for (const auto& col : extra_columns) os << ", " << (row < col.size() ? col[row] : 0.0);
        os << "\n";
        ++row;
    }
    return os.str();
}

}  // namespace galerkin
