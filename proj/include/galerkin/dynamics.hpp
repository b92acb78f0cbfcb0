#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "galerkin/nonlinearity.hpp"
#include "galerkin/spectral.hpp"

namespace galerkin {

struct StiffnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class GalerkinSystem {
public:
    GalerkinSystem(RectGeometry g, double nu, SpectralField forcing, ModeSet mode_set, ModeSet controlled_set);

    const RectGeometry& geometry() const { return geom_; }
    double nu() const { return nu_; }
    const SpectralField& forcing() const { return forcing_; }
    const ModeSet& mode_set() const { return layout_.modes(); }
    const ModeSet& controlled_set() const { return controlled_; }
    const ModeLayout& layout() const { return layout_; }
    std::size_t dim() const { return layout_.size(); }
    std::size_t control_dim() const { return controlled_.size(); }
    const std::vector<int>& control_positions() const { return ctrl_pos_; }
    const Eigen::VectorXd& linear_rates() const { return lambda_; }  // nu * kbar per mode
    const Eigen::VectorXd& forcing_dense() const { return F_; }
    const QuadraticOperator& quadratic_op() const { return *op_; }

    GalerkinSystem with_controlled(ModeSet controlled) const;
    GalerkinSystem with_nu(double nu) const;
    GalerkinSystem with_forcing(SpectralField forcing) const;

    Eigen::VectorXd embed_control(const Eigen::VectorXd& v) const;
    Eigen::VectorXd restrict_control(const Eigen::VectorXd& full) const;
    // quadratic + nu kbar u + F (+ embedded v)
    void rhs_dense(const Eigen::VectorXd& u, const Eigen::VectorXd* v, Eigen::VectorXd& out) const;
    Eigen::VectorXd rhs_dense(const Eigen::VectorXd& u, const Eigen::VectorXd* v = nullptr) const;
    // derivative of the right-hand side along du, plus the control rate
    Eigen::VectorXd rhs_rate(const Eigen::VectorXd& u, const Eigen::VectorXd& du, const Eigen::VectorXd* dv) const;

    SpectralField rhs(const SpectralField& u, const Eigen::VectorXd& v, double t = 0.0) const;
    Eigen::VectorXd to_dense(const SpectralField& u) const { return u.dense(layout_); }
    SpectralField to_field(const Eigen::VectorXd& u) const { return SpectralField::from_dense(geom_, layout_, u); }

private:
    RectGeometry geom_;
    double nu_;
    SpectralField forcing_;
    ModeLayout layout_;
    ModeSet controlled_;
    std::vector<int> ctrl_pos_;
    Eigen::VectorXd lambda_, F_;
    std::shared_ptr<const QuadraticOperator> op_;
};

class ControlSignal {
public:
    using Fn = std::function<Eigen::VectorXd(double)>;
    enum class Kind { PiecewiseConstant, Smooth };

    static ControlSignal zero(std::size_t dim, double T);
    static ControlSignal constant(const Eigen::VectorXd& value, double T);
    static ControlSignal piecewise(std::vector<double> breakpoints, std::vector<Eigen::VectorXd> values);
    // derivative may be empty; knots are times where value or derivative may jump
    static ControlSignal smooth(std::size_t dim, Fn value, Fn derivative, std::vector<double> knots);
    // concatenation of signals, piece i active on [breakpoints[i], breakpoints[i+1])
    static ControlSignal concat(std::vector<double> breakpoints, std::vector<ControlSignal> pieces);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    bool has_derivative() const;

    Eigen::VectorXd value(double t) const;  // right-continuous for piecewise signals
    // value as seen from inside the segment (lo, hi)
    Eigen::VectorXd value_in(double t, double lo, double hi) const;
    Eigen::VectorXd derivative_in(double t, double lo, double hi) const;
    std::vector<double> knots() const;

    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<Eigen::VectorXd>& values() const { return values_; }
    std::size_t interval_of(double t) const;

private:
    Kind kind_ = Kind::PiecewiseConstant;
    std::size_t dim_ = 0;
    std::vector<double> breaks_;
    std::vector<Eigen::VectorXd> values_;
    Fn value_, deriv_;
    std::vector<double> knots_;
    std::shared_ptr<const std::vector<ControlSignal>> pieces_;
};

// Piecewise Hermite interpolant. Quintic when second derivatives are stored, cubic otherwise.
// A knot may appear twice (left and right one-sided data at a control discontinuity).
class DenseTrajectory {
public:
    std::vector<double> t;
    std::vector<Eigen::VectorXd> y, dy, d2y;

    bool empty() const { return t.empty(); }
    double t0() const { return t.front(); }
    double t1() const { return t.back(); }
    const Eigen::VectorXd& end_state() const { return y.back(); }
    Eigen::VectorXd value(double s) const;
    Eigen::VectorXd derivative(double s) const;
    Eigen::VectorXd second_derivative(double s) const;
    // indices of distinct sample times (drops the left copy of duplicated knots)
    std::vector<std::size_t> distinct_samples() const;

private:
    std::size_t segment(double s) const;
    Eigen::VectorXd eval(double s, int order) const;
};

struct IntegratorOptions {
    double tol = 1e-8;
    double h_init = 0.0;
    double h_min = 1e-13;
    std::size_t max_steps = 50'000'000;
    bool record = true;
    double max_step = 0.0;  // 0: no cap
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double max_error_estimate = 0.0;
};

// y' = lambda .* y + N(t, y) with an integrating factor around classical RK4 and
// step-doubling error control. `rhs` returns the full right-hand side; the
// nonlinear part is recovered by subtracting lambda .* y.
struct IFProblem {
    Eigen::VectorXd lambda;
    std::function<void(double t, const Eigen::VectorXd& y, std::size_t segment, Eigen::VectorXd& out)> rhs;
    // optional: second time derivative for quintic dense output
    std::function<void(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& dy, std::size_t segment,
                       Eigen::VectorXd& out)>
        second;
};

DenseTrajectory integrate_if(const IFProblem& prob, const Eigen::VectorXd& y0, std::vector<double> knots,
                             const IntegratorOptions& opt, IntegrationStats* stats = nullptr);

struct Trajectory {
    RectGeometry geom;
    ModeLayout layout;
    DenseTrajectory dense;
    IntegrationStats stats;

    const Eigen::VectorXd& end_dense() const { return dense.end_state(); }
    SpectralField end_state() const { return SpectralField::from_dense(geom, layout, dense.end_state()); }
    SpectralField state_at(double t) const;
    std::vector<double> sample_times() const;
};

Trajectory integrate(const GalerkinSystem& sys, const SpectralField& u0, const ControlSignal& v, double T,
                     double tol = 1e-8, IntegratorOptions opt = {});
Trajectory integrate_dense(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const ControlSignal& v, double T,
                           const IntegratorOptions& opt);
// same on [t0, t1]
Trajectory integrate_window(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const ControlSignal& v, double t0,
                            double t1, const IntegratorOptions& opt);

// sup over [0, T] of the H-distance, evaluated on a uniform grid of n points plus all knots of both
// sqrt(|u0|_H^2 + (1/nu) int_0^t |F + v|_{V'}^2) at each time
std::vector<double> energy_bound(const GalerkinSystem& sys, const SpectralField& u0, const ControlSignal& v,
                                 const std::vector<double>& times);

double c0h_distance(const Trajectory& x, const Trajectory& y, int n = 401);

struct ContinuityRow {
    double delta = 0.0;
    double dev_u0 = 0.0;
    double dev_forcing = 0.0;
    double dev_nu_plus = 0.0;
    double dev_nu_minus = 0.0;
};

// perturbs u0, F and nu by delta along fixed unit directions
std::vector<ContinuityRow> data_continuity_probe(const GalerkinSystem& sys, const SpectralField& u0,
                                                 const ControlSignal& v, double T, const std::vector<double>& deltas,
                                                 double tol = 1e-10);

std::string trajectory_csv(const Trajectory& tr, const std::vector<std::string>& extra_names = {},
                           const std::vector<std::vector<double>>& extra_columns = {});

}  // namespace galerkin
