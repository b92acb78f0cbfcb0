#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "galerkin/dynamics.hpp"
#include "galerkin/exact.hpp"
#include "galerkin/saturation.hpp"

namespace galerkin {

double l1_norm(const Eigen::VectorXd& v);

// ---------------------------------------------------------------- endpoint maps

struct EndpointExperiment {
    GalerkinSystem sys;  // re-targeted so that the observed modes are the controlled ones
    ModeSet observed;
    SpectralField u0;
    double R = 0.1;
    double gamma_infl = 2.0;
    double T = 0.1;
    double tol = 1e-11;

    EndpointExperiment(const GalerkinSystem& s, ModeSet obs, SpectralField init, double radius, double inflation,
                       double horizon, double tolerance = 1e-11);
    Eigen::VectorXd observed_part(const SpectralField& u) const;
    Eigen::VectorXd center() const { return observed_part(u0); }
};

// Pi_O u(T) under the constant control p / T on the observed modes
Eigen::VectorXd endpoint_map(const EndpointExperiment& exp, const Eigen::VectorXd& p);
Eigen::VectorXd endpoint_map_at(const EndpointExperiment& exp, const Eigen::VectorXd& p, double T);
Eigen::VectorXd reference_map(const EndpointExperiment& exp, const Eigen::VectorXd& p);

struct DeviationRow {
    double T = 0.0;
    double sup_deviation = 0.0;  // l1 over the observed coefficients
    Eigen::VectorXd worst_p;
};

struct DeviationFit {
    std::vector<DeviationRow> rows;
    double slope = 0.0;   // log sup-deviation against log(T e^T)
    double C = 0.0;       // max over rows of deviation / (T e^T)^(1/2)
    double small_T_slope = 0.0;  // same fit at T/1000 .. T/8000, diagnostic
    bool pass = false;
};

// probe points: the 2#O vertices of the l1 ball of radius 0.99 gamma R plus `random_points` interior points
std::vector<Eigen::VectorXd> deviation_probes(const EndpointExperiment& exp, int random_points, unsigned seed);
DeviationFit deviation_sweep(const EndpointExperiment& exp, const std::vector<double>& horizons,
                             const std::vector<Eigen::VectorXd>& probes, double slope_lo = 0.35,
                             double slope_hi = 0.65, unsigned jobs = 1);
// horizon where viscous relaxation of the fastest observed mode is under way
double viscous_window_horizon(const EndpointExperiment& exp, double factor = 8.0);
// solves T e^T = ((gamma - 1) R / (2 #O C))^2
double covering_horizon(const EndpointExperiment& exp, double C);

struct CoveringOptions {
    bool axis_vertices = true;   // add the 2#O points +-R e_k to the cube grid
    int max_iterations = 200;
    double residual_tol = 1e-6;
    double damping = 1.0;
    bool newton_fallback = true;
    unsigned jobs = 1;
};

struct CoveringTarget {
    Eigen::VectorXd target, p;
    double residual = 0.0;
    int iterations = 0;
    bool newton = false;
    bool pass = false;
};

struct CoveringReport {
    double T = 0.0;
    double C = 0.0;
    double bound = 0.0;  // R (gamma - 1) / (2 #O)
    double sup_deviation = 0.0;  // measured over the solved preimages
    std::vector<CoveringTarget> targets;
    double max_residual = 0.0;
    double center_p = 0.0;      // l1 norm of the preimage of the center
    double probe_ratio = 0.0;   // endpoint displacement / preimage perturbation along the lattice spacing
    bool pass = false;
};

// targets: center + {-R/#O, 0, R/#O}^#O plus +-R e_k, all in the closed l1 ball of radius R
std::vector<Eigen::VectorXd> covering_targets(const EndpointExperiment& exp, bool axis_vertices);
CoveringTarget solve_endpoint(const EndpointExperiment& exp, const Eigen::VectorXd& target, const CoveringOptions& opt);
CoveringReport covering_check(const EndpointExperiment& exp, double C, const CoveringOptions& opt = {});

// ---------------------------------------------------------------- tracking

struct TrackingResult {
    ControlSignal v;          // over J
    ModeSet J, complement;
    DenseTrajectory U;        // complement trajectory
    IntegrationStats stats;
    Eigen::VectorXd end_state;  // full state q(t1) + U(t1)
};

// q: signal over J with derivative evaluator, defined on [t0, t1]
TrackingResult tracking_control(const GalerkinSystem& sys, const ModeSet& J, const ControlSignal& q,
                                const Eigen::VectorXd& Q_init, double t0, double t1, double tol = 1e-10);

struct ReplayCheck {
    double max_error = 0.0;  // l1 over J at the replay sample times
    Trajectory replay;
};
ReplayCheck replay_tracking(const GalerkinSystem& sys, const TrackingResult& tr, const ControlSignal& q,
                            const Eigen::VectorXd& Q_init, double t0, double t1, double tol);

// random smooth target over J: sum of a few sines per coordinate, with derivative
ControlSignal random_smooth_target(std::size_t dim, double T, unsigned seed, double amplitude = 0.5);

// ---------------------------------------------------------------- oscillator

struct OscillatorProfile {
    std::vector<double> alpha;  // breakpoints
    double w = 3.0;
    std::vector<double> x, rho;

    double value(double t) const;
    double derivative(double t, double lo, double hi) const;  // one-sided inside (lo, hi)
    std::vector<double> knots() const;
    double theta() const;
    double ramp_measure() const;  // measure of {phi != sin(wt)}
    struct Check {
        double max_at_breakpoints = 0.0;
        double sup_value = 0.0;
        double sup_derivative = 0.0;
        double derivative_bound = 0.0;
        double ramp_measure = 0.0;
        double ramp_bound = 0.0;
        bool pass = false;
    };
    Check verify(int samples_per_piece = 64) const;
};

OscillatorProfile make_phi_w(std::vector<double> breakpoints, double w);

// ---------------------------------------------------------------- relaxed controls

// piecewise constant with exact cumulative integrals
struct PiecewiseSignal {
    std::vector<double> breaks;
    std::vector<Eigen::VectorXd> values;
    double T() const { return breaks.back(); }
    std::size_t intervals() const { return values.size(); }
    ControlSignal signal() const { return ControlSignal::piecewise(breaks, values); }
};

PiecewiseSignal subtract(const PiecewiseSignal& a, const PiecewiseSignal& b);
double rx_norm(const PiecewiseSignal& g);
double delta_metric(const PiecewiseSignal& g, const PiecewiseSignal& h);
// merges adjacent equal pieces
PiecewiseSignal canonical(const PiecewiseSignal& g);

// P_{0,theta} with total mass one over r weights, exact
std::vector<Rational> p_zero_theta(const Eigen::VectorXd& weights, int n);

struct RelaxedApproxParams {
    int n = 1;            // n^2 cells
    std::size_t r = 0;    // vertex count
    double gamma = 0.0;
    double theta = 0.0;   // weight floor 1/(n r)
    double theta_eps = 0.0;  // interval floor theta T / n^2
    double D = 0.0;       // max vertex l1 norm
};

struct RelaxedApproxResult {
    RelaxedApproxParams params;
    std::vector<PiecewiseSignal> outputs;  // vertex valued
    std::vector<std::vector<std::size_t>> vertex_index;  // per output interval
    std::vector<double> rx_distance;
    std::vector<std::size_t> interval_count;
    double min_interval = 0.0;
    bool weights_in_simplex = true;  // every P_{0,theta} output >= theta with mass exactly one
    bool pass = false;
};

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// family members are barycentric weight signals over the vertices
RelaxedApproxResult approximate_relaxed(const std::vector<Eigen::VectorXd>& vertices,
                                        const std::vector<PiecewiseSignal>& weights, double eps, int n_cap = 4096);

// ---------------------------------------------------------------- vertex scale

struct GaugeResult {
    double xi = 0.0;                       // max over values of the gauge
    std::vector<Eigen::VectorXd> lambda;  // nonnegative weights over the signed generators, per value
};
// generators g_i enter as +g_i and -g_i
GaugeResult compute_xi(const std::vector<Eigen::VectorXd>& values, const std::vector<Eigen::VectorXd>& generators);

// ---------------------------------------------------------------- imitation

struct VertexLabel {
    bool delta = false;
    ModeIndex k{1, 1};   // unit vertex
    ModePair pair{};     // delta vertex
    int sign = 1;
    std::string str() const;
};

struct VertexControl {
    std::vector<double> breaks;
    std::vector<VertexLabel> labels;
    double xi = 1.0;
    std::vector<double> scales;  // per-interval vertex scale; empty means xi on every interval
    std::optional<ControlSignal> base;  // signal over K^{N-1} added on every interval
    double T() const { return breaks.back(); }
    double scale(std::size_t i) const { return scales.empty() ? xi : scales[i]; }
};

// value of the vertex in the coordinates of `layout`
Eigen::VectorXd vertex_value(const VertexLabel& v, double xi, const GalerkinSystem& sys);

struct ImitationResult {
    ControlSignal zw;  // over K^{N-1}
    Eigen::VectorXd end_imitated, end_reference;
    double gap = 0.0;        // H distance of the replayed end states
    double gap_cointegrated = 0.0;
    std::vector<double> pin_errors;  // l1 over K^{N-1} at every breakpoint
    double max_pin_error = 0.0;
    std::vector<Eigen::VectorXd> reference_states;  // at the breakpoints
};

// sys: truncation containing K^N; the imitated system is controlled on K^{N-1}
ImitationResult imitate(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const VertexControl& z, int N,
                        double w, double tol = 1e-10, bool replay = true);

struct ImitationStudyRow {
    double w = 0.0;
    double gap = 0.0;
    double max_pin_error = 0.0;
};

struct ImitationStudy {
    std::string label;
    std::vector<ImitationStudyRow> rows;
    double slope = 0.0;
    bool monotone = false;
    bool pins = false;
    bool pass = false;
};

ImitationStudy imitation_study(const GalerkinSystem& sys, const Eigen::VectorXd& u0, const VertexControl& z, int N,
                               const std::vector<double>& ws, double tol, double slope_max = -0.8,
                               double pin_tol = -1.0, unsigned jobs = 1);

// ---------------------------------------------------------------- cascade

struct CascadeOptions {
    double T = 0.0;       // 0: one time unit
    double tol = 1e-10;
    double w_start = 8.0;
    double w_cap = 4096.0;
    int chatter_cells = 0;  // 0: refined until the chattering gap is within half the budget
    int max_cells = 4096;
    double drop_weight = 0.0;  // gauge weights below this fraction of the local mass are dropped
    unsigned jobs = 1;
    std::function<void(const std::string&)> progress;  // optional log sink
};

struct CascadeStep {
    int from_level = 0, to_level = 0;
    double budget = 0.0;
    double w = 0.0;
    double xi = 0.0;
    int chatter_cells = 0;  // per piece of the sampled control
    int intervals = 0;
    double chatter_gap = 0.0;
    double imitation_gap = 0.0;
    double gap = 0.0;  // H distance of end states before and after this step
    bool within_budget = false;
};

struct CascadeReport {
    int M = 1;
    double eps = 0.0;
    double T = 0.0;
    double tail = 0.0;               // |target - Pi_{K^M} target|
    double covering_residual = 0.0;  // H distance of the first-step endpoint to Pi_{K^M} target
    std::vector<CascadeStep> steps;
    ControlSignal control;           // over K^1
    double distance = 0.0;           // replayed H distance to the target
    std::string failure;
    bool pass = false;
};

struct CascadeFailure : std::runtime_error {
    int step;
    CascadeFailure(const std::string& w, int s) : std::runtime_error(w), step(s) {}
};

CascadeReport cascade_to_K1(const GalerkinSystem& sys, const SpectralField& u0, const SpectralField& target,
                            double eps, const CascadeOptions& opt = {});

nlohmann::json to_json(const DeviationFit& f);
nlohmann::json to_json(const CoveringReport& r, bool with_targets = false);
nlohmann::json to_json(const ImitationStudy& s);
nlohmann::json to_json(const RelaxedApproxResult& r);
nlohmann::json to_json(const CascadeReport& r);

}  // namespace galerkin
