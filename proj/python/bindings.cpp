#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "galerkin/dynamics.hpp"
#include "galerkin/lie_rank.hpp"
#include "galerkin/nonlinearity.hpp"
#include "galerkin/saturation.hpp"
#include "galerkin/spectral.hpp"

namespace py = pybind11;
using namespace galerkin;

namespace {

SpectralField field_of(const RectGeometry& g, const std::map<std::pair<int, int>, double>& c) {
    SpectralField u(g);
    for (const auto& [k, v] : c) u.set({k.first, k.second}, v);
    return u;
}

std::map<std::pair<int, int>, double> coeffs_of(const SpectralField& u) {
    std::map<std::pair<int, int>, double> out;
    for (const auto& [k, v] : u.coeffs()) out[{k.k1, k.k2}] = v;
    return out;
}

ExactGeometry exact_of(const std::string& a, const std::string& b) {
    return ExactGeometry::from_sides(parse_rational(a), parse_rational(b));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Galerkin Navier-Stokes controllability kernels";
    m.attr("__version__") = GALERKIN_VERSION;

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

    m.def("kbar", [](int k1, int k2, double a, double b) { return kbar({k1, k2}, RectGeometry(a, b)); });
    m.def(
        "mode_set_K",
        [](int level) {
            std::vector<std::pair<int, int>> out;
            for (const auto& k : mode_set_K(level)) out.emplace_back(k.k1, k.k2);
            return out;
        },
        py::arg("level"));
    m.def(
        "norm",
        [](const std::map<std::pair<int, int>, double>& c, double a, double b, const std::string& kind) {
            const auto u = field_of(RectGeometry(a, b), c);
            if (kind == "Vprime") return dual_norm_Vprime(u);
            return norm(u, parse_norm_kind(kind));
        },
        py::arg("coeffs"), py::arg("a") = 1.0, py::arg("b") = 1.0, py::arg("kind") = "H");
    m.def(
        "interaction_coeffs",
        [](std::pair<int, int> mm, std::pair<int, int> nn, double a, double b) {
            const auto ic = interaction_coeffs({mm.first, mm.second}, {nn.first, nn.second}, RectGeometry(a, b));
            py::dict out;
            for (int i = 0; i < 4; ++i) {
                const auto br = static_cast<Branch>(i);
                if (ic.target(br)) {
                    const auto t = *ic.target(br);
                    out[branch_name(br)] = py::make_tuple(py::make_tuple(t.k1, t.k2), ic.value(br));
                }
            }
            return out;
        },
        py::arg("m"), py::arg("n"), py::arg("a") = 1.0, py::arg("b") = 1.0);
    m.def(
        "quadratic",
        [](const std::map<std::pair<int, int>, double>& c, int level, double a, double b) {
            return coeffs_of(quadratic(field_of(RectGeometry(a, b), c), mode_set_K(level)));
        },
        py::arg("coeffs"), py::arg("level"), py::arg("a") = 1.0, py::arg("b") = 1.0);
    m.def(
        "delta_vector",
        [](std::pair<int, int> mm, std::pair<int, int> nn, const std::string& a, const std::string& b) {
            const auto d = delta_vector({mm.first, mm.second}, {nn.first, nn.second}, exact_of(a, b));
            std::map<std::pair<int, int>, std::string> out;
            for (const auto& [k, q] : d.entries) out[{k.k1, k.k2}] = to_string(q);
            return out;
        },
        py::arg("m"), py::arg("n"), py::arg("a") = "1", py::arg("b") = "1");
    m.def(
        "verify_step_json",
        [](int j, const std::string& a, const std::string& b, bool square) {
            return to_json(verify_step(j, exact_of(a, b), square)).dump();
        },
        py::arg("j"), py::arg("a") = "1", py::arg("b") = "2", py::arg("square_mode") = false);
    m.def(
        "lie_rank_json",
        [](int N, double a, double b, const std::map<std::pair<int, int>, double>& point) {
            const RectGeometry g(a, b);
            const GalerkinSystem sys(g, 1.0, SpectralField(g), mode_set_K(N), mode_set_K(1));
            return to_json(full_rank_check(sys, field_of(g, point))).dump();
        },
        py::arg("N"), py::arg("a"), py::arg("b"), py::arg("point"));
    m.def(
        "simulate",
        [](int level, double a, double b, double nu, const std::map<std::pair<int, int>, double>& u0, double T,
           double tol) {
            const RectGeometry g(a, b);
            const GalerkinSystem sys(g, nu, SpectralField(g), mode_set_K(level), {});
            return coeffs_of(integrate(sys, field_of(g, u0), ControlSignal::zero(0, T), T, tol).end_state());
        },
        py::arg("level"), py::arg("a"), py::arg("b"), py::arg("nu"), py::arg("u0"), py::arg("T"),
        py::arg("tol") = 1e-10);
}
