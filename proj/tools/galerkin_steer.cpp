// galerkin_steer: batch front end for the Galerkin controllability experiments.
#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "galerkin/control.hpp"
#include "galerkin/dynamics.hpp"
#include "galerkin/lie_rank.hpp"
#include "galerkin/nonlinearity.hpp"
#include "galerkin/parallel.hpp"
#include "galerkin/reports.hpp"
#include "galerkin/saturation.hpp"
#include "galerkin/spectral.hpp"

namespace fs = std::filesystem;
using namespace galerkin;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON config with field-path diagnostics
class Config {
public:
    Config(json j, std::string path) : j_(std::move(j)), path_(std::move(path)) {}

    static Config load(const fs::path& file) {
        const std::string text = read_text(file);
        try {
            return Config(json::parse(text), "");
        } catch (const json::parse_error& e) {
            std::size_t line = 1;
            for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
                if (text[i] == '\n') ++line;
            throw ConfigError(file.string() + ":" + std::to_string(line) + ": " + e.what());
        }
    }

    bool has(const std::string& k) const { return j_.is_object() && j_.contains(k); }
    std::string where(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    Config sub(const std::string& k) const {
        if (!has(k)) throw ConfigError("config field '" + where(k) + "' is required");
        return Config(j_.at(k), where(k));
    }
    const json& raw() const { return j_; }

    template <class V>
    V get(const std::string& k) const {
        if (!has(k)) throw ConfigError("config field '" + where(k) + "' is required");
        try {
            return j_.at(k).get<V>();
        } catch (const json::exception& e) {
            throw ConfigError("config field '" + where(k) + "': " + e.what());
        }
    }
    template <class V>
    V get(const std::string& k, V fallback) const {
        return has(k) ? get<V>(k) : fallback;
    }
    double positive(const std::string& k, double fallback) const {
        const double v = get<double>(k, fallback);
        if (!(v > 0.0)) throw ConfigError("config field '" + where(k) + "' must be positive");
        return v;
    }

private:
    json j_;
    std::string path_;
};

struct RunContext {
    std::string command;
    fs::path out;
    unsigned jobs = 1;
    std::string config_text;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::vector<fs::path> outputs;

    void write(const fs::path& name, const std::string& content) {
        write_text(out / name, content);
        outputs.push_back(name);
    }
    void write_json(const fs::path& name, const json& j) { write(name, j.dump(2) + "\n"); }
    void finish(const json& extra = json::object()) {
        RunManifest m;
        m.command = command;
        m.config_hash = blob_hash(config_text);
        m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        m.outputs = outputs;
        m.extra = extra;
        write_text(out / "manifest.json", to_json(m, out).dump(2) + "\n");
    }
};

ModeSet modes_from(const Config& c, const std::string& key, int default_level) {
    if (!c.has(key)) return mode_set_K(default_level);
    const json& v = c.raw().at(key);
    if (v.is_number_integer()) {
        if (v.get<int>() < 1) throw ConfigError("config field '" + c.where(key) + "' must be a level >= 1");
        return mode_set_K(v.get<int>());
    }
    ModeSet out;
    for (const auto& row : v) {
        if (!row.is_array() || row.size() != 2)
            throw ConfigError("config field '" + c.where(key) + "' must be a level or a list of [k1, k2]");
        out.push_back({row[0].get<int>(), row[1].get<int>()});
    }
    try {
        return normalize(out);
    } catch (const std::exception& e) {
        throw ConfigError("config field '" + c.where(key) + "': " + e.what());
    }
}

SpectralField field_from(const Config& c, const std::string& key, const RectGeometry& g, const ModeSet& modes,
                         std::mt19937_64& rng) {
    SpectralField u(g);
    if (!c.has(key)) return u;
    const Config f = c.sub(key);
    if (f.has("random")) {
        const double amp = f.sub("random").get<double>("amplitude", 0.1);
        std::normal_distribution<double> nd;
        for (const auto& k : modes) u.set(k, amp * nd(rng));
        return u;
    }
    for (auto it = f.raw().begin(); it != f.raw().end(); ++it) {
        const std::string lab = it.key();
        const auto dot = lab.find('.');
        if (dot == std::string::npos) throw ConfigError("config field '" + f.where(lab) + "': mode labels are k1.k2");
        const ModeIndex k{std::stoi(lab.substr(0, dot)), std::stoi(lab.substr(dot + 1))};
        if (!contains(modes, k)) throw ConfigError("config field '" + f.where(lab) + "': mode outside the mode set");
        u.set(k, it.value().get<double>());
    }
    return u;
}

GalerkinSystem system_from(const Config& c, std::mt19937_64& rng) {
    const RectGeometry g(c.positive("a", 1.0), c.positive("b", 1.0));
    const double nu = c.positive("nu", 1.0);
    const ModeSet modes = modes_from(c, "modes", 1);
    ModeSet ctrl = c.has("controlled") ? modes_from(c, "controlled", 1) : ModeSet{};
    if (!is_subset(ctrl, modes)) throw ConfigError("config field 'controlled' leaves the mode set");
    return GalerkinSystem(g, nu, field_from(c, "forcing", g, modes, rng), modes, ctrl);
}

ControlSignal control_from(const Config& c, const GalerkinSystem& sys, double T) {
    const auto d = static_cast<Eigen::Index>(sys.control_dim());
    if (!c.has("control")) return ControlSignal::zero(sys.control_dim(), T);
    const Config k = c.sub("control");
    const auto kind = k.get<std::string>("kind", "zero");
    auto vec = [&](const json& a, const std::string& where) {
        if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != d)
            throw ConfigError("config field '" + where + "' needs " + std::to_string(d) + " entries");
        Eigen::VectorXd v(d);
        for (Eigen::Index i = 0; i < d; ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
        return v;
    };
    if (kind == "zero") return ControlSignal::zero(sys.control_dim(), T);
    if (kind == "constant") return ControlSignal::constant(vec(k.raw().at("value"), k.where("value")), T);
    if (kind == "piecewise") {
        auto breaks = k.get<std::vector<double>>("breaks");
        std::vector<Eigen::VectorXd> vals;
        for (const auto& v : k.raw().at("values")) vals.push_back(vec(v, k.where("values")));
        try {
            return ControlSignal::piecewise(breaks, vals);
        } catch (const std::exception& e) {
            throw ConfigError("config field 'control': " + std::string(e.what()));
        }
    }
    throw ConfigError("config field 'control.kind' must be zero, constant or piecewise");
}

ModeSet parse_mode_list(const std::string& s) {
    ModeSet out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto dot = tok.find('.');
        if (dot == std::string::npos) throw ConfigError("mode '" + tok + "' must be written k1.k2");
        out.push_back({std::stoi(tok.substr(0, dot)), std::stoi(tok.substr(dot + 1))});
    }
    return normalize(out);
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

// ---------------------------------------------------------------- commands

int cmd_simulate(RunContext& ctx, const Config& c) {
    std::mt19937_64 rng(c.get<unsigned>("seed", 1));
    const auto sys = system_from(c, rng);
    const double T = c.positive("T", 1.0), tol = c.positive("tol", 1e-8);
    const SpectralField u0 = field_from(c, "u0", sys.geometry(), sys.mode_set(), rng);
    const auto v = control_from(c, sys, T);
    const auto tr = integrate(sys, u0, v, T, tol);
    const auto times = tr.sample_times();
    std::vector<double> hn;
    for (double t : times) hn.push_back(norm(tr.state_at(t), NormKind::H));
    const auto bound = energy_bound(sys, u0, v, times);
    ctx.write("trajectory.csv", trajectory_csv(tr, {"H_norm", "energy_bound"}, {hn, bound}));
    bool monotone = true, bounded = true;
    for (std::size_t i = 0; i < hn.size(); ++i) {
        bounded = bounded && hn[i] <= bound[i] * (1.0 + 10.0 * tol) + tol;
        if (i > 0) monotone = monotone && hn[i] <= hn[i - 1] * (1.0 + tol) + tol;
    }
    const bool undriven = sys.forcing().empty() && v.kind() == ControlSignal::Kind::PiecewiseConstant &&
                          std::all_of(v.values().begin(), v.values().end(),
                                      [](const Eigen::VectorXd& x) { return x.lpNorm<Eigen::Infinity>() == 0.0; });
    json s{{"samples", times.size()},
           {"accepted_steps", tr.stats.accepted},
           {"rejected_steps", tr.stats.rejected},
           {"end_state", to_json(tr.end_state())},
           {"energy_bound", bounded ? "pass" : "fail"}};
    if (undriven) s["h_norm_nonincreasing"] = monotone ? "pass" : "fail";
    const bool ok = bounded && (!undriven || monotone);
    s["verdict"] = ok ? "pass" : "fail";
    ctx.write_json("summary.json", s);
    ctx.finish();
    return ok ? 0 : 1;
}

int cmd_saturate(RunContext& ctx, const std::string& a, const std::string& b, const std::string& targets, bool square) {
    ExactGeometry g;
    try {
        g = ExactGeometry::from_sides(parse_rational(a), parse_rational(b));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("geometry: ") + e.what());
    }
    const ModeSet target = parse_mode_list(targets);
    json out;
    bool ok = true;
    try {
        const auto chain = build_chain(target, g, square);
        out = to_json(chain);
        for (const auto& s : chain.steps) std::cout << summary(s) << "\n";
        ok = chain.pass;
    } catch (const ChainFailure& f) {
        out = {{"verdict", "fail"}, {"failure", f.what()}, {"failed_step", to_json(f.certificate)}};
        std::cout << summary(f.certificate) << "\n";
        ok = false;
    }
    if (target.empty() || chain_level_for(target) == 1) out["note"] = "target inside K^1, empty chain";
    ctx.write_json("certificate.json", out);
    ctx.finish();
    return ok ? 0 : 1;
}

int cmd_steer(RunContext& ctx, const Config& c) {
    std::mt19937_64 rng(c.get<unsigned>("seed", 7));
    auto sys = system_from(c, rng);
    const ModeSet obs = modes_from(c, "observed", 1);
    const SpectralField u0 = field_from(c, "u0", sys.geometry(), sys.mode_set(), rng);
    EndpointExperiment exp(sys, obs, u0, c.positive("R", 0.1), c.positive("gamma", 2.0), 1.0,
                           c.positive("tol", 1e-11));
    const double T0 = c.has("T0") ? c.positive("T0", 1.0) : viscous_window_horizon(exp, c.positive("window", 8.0));
    exp.T = T0;
    const auto probes = deviation_probes(exp, c.get<int>("random_probes", 8), c.get<unsigned>("seed", 7));
    const auto fit = deviation_sweep(exp, {T0, T0 / 2, T0 / 4, T0 / 8}, probes, 0.35, 0.65, ctx.jobs);
    std::vector<double> ts, ds;
    for (const auto& r : fit.rows) {
        ts.push_back(r.T);
        ds.push_back(r.sup_deviation);
    }
    ctx.write("deviation.csv", csv_table({"T", "sup_deviation"}, {ts, ds}));
    CoveringOptions copt;
    copt.jobs = ctx.jobs;
    copt.residual_tol = c.positive("residual_tol", 1e-6);
    const auto cov = covering_check(exp, fit.C, copt);
    std::vector<double> idx, res, iters;
    for (std::size_t i = 0; i < cov.targets.size(); ++i) {
        idx.push_back(static_cast<double>(i));
        res.push_back(cov.targets[i].residual);
        iters.push_back(cov.targets[i].iterations);
    }
    ctx.write("covering.csv", csv_table({"target", "residual", "iterations"}, {idx, res, iters}));
    const bool ok = fit.pass && cov.pass;
    ctx.write_json("summary.json", {{"deviation", to_json(fit)}, {"covering", to_json(cov)}, {"verdict", ok ? "pass" : "fail"}});
    std::cout << "deviation slope " << fit.slope << " [" << (fit.pass ? "pass" : "fail") << "], covering "
              << cov.targets.size() << " targets, max residual " << cov.max_residual << " ["
              << (cov.pass ? "pass" : "fail") << "]\n";
    ctx.finish();
    return ok ? 0 : 1;
}

int cmd_cascade(RunContext& ctx, const Config& c) {
    std::mt19937_64 rng(c.get<unsigned>("seed", 5));
    const auto sys = system_from(c, rng);
    const SpectralField u0 = field_from(c, "u0", sys.geometry(), sys.mode_set(), rng);
    SpectralField target = field_from(c, "target", sys.geometry(), sys.mode_set(), rng);
    if (c.has("target_h_norm")) {
        const double h = norm(target, NormKind::H);
        if (h == 0.0) throw ConfigError("config field 'target' is zero and cannot be rescaled");
        target *= c.positive("target_h_norm", 1.0) / h;
    }
    CascadeOptions opt;
    opt.T = c.positive("T", 1.0);
    opt.tol = c.positive("tol", 1e-9);
    opt.w_start = c.positive("w_start", 8.0);
    opt.w_cap = c.positive("w_cap", 1024.0);
    opt.max_cells = c.get<int>("max_cells", 4096);
    opt.jobs = ctx.jobs;
    opt.progress = [](const std::string& m) { std::cerr << m << "\n"; };
    const auto rep = cascade_to_K1(sys, u0, target, c.positive("eps", 0.05), opt);
    std::vector<double> lv, bud, w, gap, cg, xi;
    for (const auto& st : rep.steps) {
        lv.push_back(st.from_level);
        bud.push_back(st.budget);
        w.push_back(st.w);
        gap.push_back(st.gap);
        cg.push_back(st.chatter_gap);
        xi.push_back(st.xi);
    }
    ctx.write("steps.csv", csv_table({"from_level", "budget", "w", "gap", "chatter_gap", "xi"}, {lv, bud, w, gap, cg, xi}));
    auto j = to_json(rep);
    j.erase("control");
    ctx.write_json("summary.json", j);
    std::cout << "M = " << rep.M << ", distance " << rep.distance << " [" << (rep.pass ? "pass" : "fail") << "]\n";
    ctx.finish();
    return rep.pass ? 0 : 1;
}

VertexControl vertex_control_from(const Config& c) {
    VertexControl z;
    z.breaks = c.get<std::vector<double>>("breaks");
    z.xi = c.positive("xi", 1.0);
    for (const auto& l : c.raw().at("labels")) {
        const std::string s = l.get<std::string>();
        VertexLabel v;
        if (s.empty() || (s[0] != '+' && s[0] != '-')) throw ConfigError("vertex label '" + s + "' needs a sign");
        v.sign = s[0] == '+' ? 1 : -1;
        const std::string body = s.substr(1);
        if (body.rfind("delta", 0) == 0) {
            // +delta1.2:2.1
            const auto p1 = body.substr(5, body.find(':') - 5), p2 = body.substr(body.find(':') + 1);
            const auto m = parse_mode_list(p1).front(), n = parse_mode_list(p2).front();
            v.delta = true;
            v.pair = m < n ? ModePair{m, n} : ModePair{n, m};
        } else if (body.rfind('e', 0) == 0) {
            v.k = parse_mode_list(body.substr(1)).front();
        } else {
            throw ConfigError("vertex label '" + s + "' must be +-eK1.K2 or +-deltaM1.M2:N1.N2");
        }
        z.labels.push_back(v);
    }
    return z;
}

int cmd_imitate(RunContext& ctx, const Config& c, const std::string& wlist) {
    std::mt19937_64 rng(c.get<unsigned>("seed", 3));
    const int N = c.get<int>("N", 2);
    std::vector<int> levels = c.get<std::vector<int>>("truncations", {N, N + 1});
    std::vector<double> ws = wlist.empty() ? c.get<std::vector<double>>("w", {3, 6, 12, 24, 48}) : parse_doubles(wlist);
    const double tol = c.positive("tol", 1e-10);
    const VertexControl z = vertex_control_from(c.sub("z"));
    json studies = json::array();
    bool ok = true;
    for (int lvl : levels) {
        json cj = c.raw();
        cj["modes"] = lvl;
        const Config cc(cj, "");
        const auto sys = system_from(cc, rng);
        const SpectralField u0 = field_from(c, "u0", sys.geometry(), sys.mode_set(), rng);
        auto st = imitation_study(sys, sys.to_dense(u0), z, N, ws, tol, -0.8, c.get<double>("pin_tol", 10 * tol), ctx.jobs);
        st.label = "K^" + std::to_string(lvl);
        std::vector<double> wv, gv, pv;
        for (const auto& r : st.rows) {
            wv.push_back(r.w);
            gv.push_back(r.gap);
            pv.push_back(r.max_pin_error);
        }
        ctx.write("gaps_K" + std::to_string(lvl) + ".csv", csv_table({"w", "gap", "max_pin_error"}, {wv, gv, pv}));
        std::cout << st.label << ": slope " << st.slope << " [" << (st.pass ? "pass" : "fail") << "]\n";
        studies.push_back(to_json(st));
        ok = ok && st.pass;
    }
    ctx.write_json("summary.json", {{"studies", studies}, {"verdict", ok ? "pass" : "fail"}});
    ctx.finish();
    return ok ? 0 : 1;
}

int cmd_lierank(RunContext& ctx, int N, const std::string& a, const std::string& b, double nu, int points, unsigned seed,
                bool no_repair) {
    const auto eg = ExactGeometry::from_sides(parse_rational(a), parse_rational(b));
    const RectGeometry g(eg.a(), eg.b());
    const GalerkinSystem sys(g, nu, SpectralField(g), mode_set_K(N), mode_set_K(1));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    LieRankOptions opt;
    opt.square_repair = !no_repair;
    opt.exact = eg;
    json reps = json::array();
    bool ok = true;
    for (int p = 0; p < points; ++p) {
        SpectralField u(g);
        for (const auto& k : sys.mode_set()) u.set(k, nd(rng));
        const auto r = full_rank_check(sys, u, opt);
        reps.push_back(to_json(r));
        ok = ok && r.pass;
        std::cout << "point " << r.point_hash << ": rank " << r.rank << "/" << r.kappa << " [" << (r.pass ? "pass" : "fail")
                  << "]\n";
    }
    ctx.write_json("lierank.json", {{"points", reps}, {"verdict", ok ? "pass" : "fail"}});
    ctx.finish();
    return ok ? 0 : 1;
}

int cmd_oracle(RunContext& ctx, int max_index, double a, double b) {
    const auto rows = oracle_sweep(RectGeometry(a, b), max_index);
    std::ostringstream os;
    os << std::setprecision(17) << "m, n, target, closed_form, quadrature, rel_err, pass\n";
    std::size_t failing = 0;
    for (const auto& r : rows) {
        os << r.m.str() << ", " << r.n.str() << ", " << r.target.str() << ", " << r.closed_form << ", " << r.quadrature
           << ", " << r.rel_err << ", " << (r.pass ? 1 : 0) << "\n";
        if (!r.pass) ++failing;
    }
    ctx.write("oracle.csv", os.str());
    ctx.write_json("summary.json", {{"comparisons", rows.size()}, {"failing", failing}, {"verdict", failing ? "fail" : "pass"}});
    std::cout << rows.size() << " comparisons, " << failing << " failing\n";
    ctx.finish();
    return failing ? 1 : 0;
}

int cmd_project(RunContext& ctx, const Config& c) {
    const RectGeometry g(c.positive("a", 1.0), c.positive("b", 1.0));
    auto table = [&](const std::string& key) {
        CoeffTable t;
        if (!c.has(key)) return t;
        for (const auto& row : c.raw().at(key)) {
            if (!row.is_array() || row.size() != 3) throw ConfigError("config field '" + key + "' rows are [k1, k2, value]");
            t[{row[0].get<int>(), row[1].get<int>()}] = row[2].get<double>();
        }
        return t;
    };
    const auto [u, q] = leray_project(table("v1"), table("v2"), g);
    json qj{{"axis_x1", json::array()}, {"axis_x2", json::array()}, {"interior", json::array()}};
    for (const auto& [k, v] : q.axis_coeffs_x1) qj["axis_x1"].push_back({k, v});
    for (const auto& [k, v] : q.axis_coeffs_x2) qj["axis_x2"].push_back({k, v});
    for (const auto& [k, v] : q.interior_coeffs) qj["interior"].push_back({k.k1, k.k2, v});
    ctx.write_json("projection.json", {{"solenoidal", to_json(u)}, {"gradient_potential", qj}});
    ctx.finish();
    return 0;
}

int cmd_norms(RunContext& ctx, const Config& c) {
    const SpectralField u = field_from_json(c.raw());
    const json out{{"H", norm(u, NormKind::H)},
                   {"V", norm(u, NormKind::V)},
                   {"DA", norm(u, NormKind::DA)},
                   {"Vprime", dual_norm_Vprime(u)}};
    ctx.write_json("norms.json", out);
    std::cout << out.dump() << "\n";
    ctx.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Galerkin Navier-Stokes controllability experiments"};
    app.set_version_flag("--version", GALERKIN_VERSION);
    app.require_subcommand(1);
    app.fallthrough();
    std::string out = "out";
    unsigned jobs = 1;
    app.add_option("--out", out, "output directory");
    app.add_option("--jobs", jobs, "parallel jobs (GALERKIN_STEER_JOBS overrides)");

    std::string config;
    auto add_cfg = [&](CLI::App* s) { s->add_option("--config", config, "JSON experiment config")->required()->check(CLI::ExistingFile); };
    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    add_cfg(sim);
    auto* sat = app.add_subcommand("saturate", "exact saturation certificate");
    std::string sa = "1", sb = "2", targets = "5.5";
    bool square = false;
    sat->add_option("--a", sa, "side a (rational)");
    sat->add_option("--b", sb, "side b (rational)");
    sat->add_option("--target-modes", targets, "comma separated k1.k2 list");
    sat->add_flag("--square", square, "use the repair path for a square first step");
    auto* steer = app.add_subcommand("steer", "endpoint deviation sweep and covering");
    add_cfg(steer);
    auto* imi = app.add_subcommand("imitate", "imitation w-convergence study");
    add_cfg(imi);
    std::string wlist;
    imi->add_option("--w", wlist, "comma separated frequencies");
    auto* lr = app.add_subcommand("lierank", "bracket rank at random points");
    int N = 1, points = 10;
    unsigned seed = 1;
    double nu = 1.0;
    bool no_repair = false;
    std::string la = "1", lb = "2";
    lr->add_option("--N", N, "truncation level")->check(CLI::Range(1, 12));
    lr->add_option("--a", la, "side a (rational)");
    lr->add_option("--b", lb, "side b (rational)");
    lr->add_option("--nu", nu, "viscosity");
    lr->add_option("--points", points, "evaluation points");
    lr->add_option("--seed", seed, "seed");
    lr->add_flag("--no-repair", no_repair, "skip the square repair generation");
    auto* orc = app.add_subcommand("oracle", "closed-form coefficients against quadrature");
    int max_index = 5;
    double oa = 1.0, ob = 1.0;
    orc->add_option("--max-index", max_index, "largest mode component")->check(CLI::Range(1, 12));
    orc->add_option("--a", oa, "side a");
    orc->add_option("--b", ob, "side b");
    auto* cas = app.add_subcommand("cascade", "imitation cascade from K^M down to K^1");
    add_cfg(cas);
    auto* prj = app.add_subcommand("project", "Leray projection of coefficient tables");
    add_cfg(prj);
    auto* nrm = app.add_subcommand("norms", "H, V, DA and V' norms of a field");
    add_cfg(nrm);

    CLI11_PARSE(app, argc, argv);

    RunContext ctx;
    ctx.out = out;
    ctx.jobs = resolve_jobs(jobs);
    ctx.command = "";
    for (int i = 1; i < argc; ++i) ctx.command += (i > 1 ? " " : "") + std::string(argv[i]);
    try {
        fs::create_directories(ctx.out);
        if (!config.empty()) ctx.config_text = read_text(config);
        else ctx.config_text = ctx.command;
        auto load = [&]() { return Config::load(config); };
        if (*sim) return cmd_simulate(ctx, load());
        if (*sat) return cmd_saturate(ctx, sa, sb, targets, square);
        if (*steer) return cmd_steer(ctx, load());
        if (*imi) return cmd_imitate(ctx, load(), wlist);
        if (*lr) return cmd_lierank(ctx, N, la, lb, nu, points, seed, no_repair);
        if (*orc) return cmd_oracle(ctx, max_index, oa, ob);
        if (*cas) return cmd_cascade(ctx, load());
        if (*prj) return cmd_project(ctx, load());
        if (*nrm) return cmd_norms(ctx, load());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
