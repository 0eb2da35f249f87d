// Property suites that check the closed forms against independent routes:
// lattice-form identities from ambient data, theta periodicity by reindexing,
// quadrature inner products, truncated basis series for the kernel.

#ifndef THETAFOCK_VERIFY_HPP
#define THETAFOCK_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "space.hpp"
#include "theta.hpp"

namespace thetafock
{

struct PropertyResult {
    std::string name;
    bool passed = false;
    double defect = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    double tol = 1e-12;
    NodeCounts nodes{};
    int n_radius = 2;
    int k_max = 2;
};

/// Truncated sum_{n,k} e_{n,k}(u) conj(e_{n,k}(v)) / ||e_{n,k}||^2 over n in [-n_radius, n_radius]^r, |k| <= k_max.
inline Complex kernel_series(const SpaceConfig& config, const PointCoordinates& u, const PointCoordinates& v,
                             int n_radius, int k_max)
{
    CompensatedSum acc;
    for (const auto& idx : enumerate_basis(config, n_radius, k_max)) {
        const double inv_norm = std::exp(-basis_norm_sq(config, idx).log_value);
        acc.add(basis_eval(config, idx, u, Reduction::none) * std::conj(basis_eval(config, idx, v, Reduction::none)) *
                inv_norm);
    }
    return acc.value();
}

/// kernel_series with the truncation grown until two successive values agree to `tol` (absolute).
inline Complex kernel_series_converged(const SpaceConfig& config, const PointCoordinates& u,
                                       const PointCoordinates& v, double tol = 1e-14)
{
    const bool has_n = config.r() > 0;
    const bool has_k = config.g() > config.r();
    int n_radius = has_n ? 2 : 0;
    int k_max = has_k ? 8 : 0;
    Complex previous = kernel_series(config, u, v, n_radius, k_max);
    int stable = 0;
    for (int step = 0; step < 40 && stable < 2; ++step) {
        if (has_n) n_radius += 1;
        if (has_k) k_max += 4;
        const Complex next = kernel_series(config, u, v, n_radius, k_max);
        stable = std::abs(next - previous) <= tol * (1.0 + std::abs(next)) ? stable + 1 : 0;
        previous = next;
    }
    return previous;
}

namespace detail
{

inline PropertyResult make_result(std::string name, double defect, double threshold, std::string detail = {})
{
    return {std::move(name), defect <= threshold, defect, threshold, std::move(detail)};
}

inline double relative_gap(Complex a, Complex b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline CVector random_ambient(int g, Rng& rng, double half_width)
{
    CVector u(g);
    for (int j = 0; j < g; ++j) u(j) = rng.complex_in_box(half_width);
    return u;
}

inline std::vector<int> random_lattice_index(int r, Rng& rng, int radius)
{
    std::vector<int> m(r);
    for (int j = 0; j < r; ++j) m[j] = rng.integer(-radius, radius);
    return m;
}

} // namespace detail

inline std::vector<PropertyResult> verify_geometry(const SpaceConfig& config, const VerifyOptions& opts = {})
{
    const IsotropicLattice& lattice = config.lattice();
    const HermitianSpace& space = lattice.space();
    const int g = lattice.g();
    const int r = lattice.r();
    Rng rng(opts.seed);
    std::vector<PropertyResult> out;

    double iso = 0.0;
    for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k)
            iso = std::max(iso, std::abs(symplectic_form(space, lattice.generators()[j], lattice.generators()[k])));
    out.push_back(detail::make_result("isotropy", iso, space.tol_form()));

    if (r > 0) {
        out.push_back({"b_positive_definite", lattice.min_eigenvalue_b() > 0.0, -lattice.min_eigenvalue_b(), 0.0,
                       "min eigenvalue " + std::to_string(lattice.min_eigenvalue_b())});
        const double inv = (lattice.b() * lattice.b_inverse() - RMatrix::Identity(r, r)).cwiseAbs().maxCoeff();
        out.push_back(detail::make_result("b_inverse", inv, 1e-10));
    }

    double comp = 0.0;
    for (int j = r; j < g; ++j) {
        for (int k = 0; k < g; ++k) {
            const Complex h = hermitian_form(space, lattice.basis_matrix().col(j), lattice.basis_matrix().col(k));
            comp = std::max(comp, std::abs(h - (j == k ? Complex(1.0) : Complex(0.0))));
        }
    }
    out.push_back(detail::make_result("complement_orthonormal", comp, 1e-10));

    double round_trip = 0.0, conj_sym = 0.0, h_gamma = 0.0, b_shift = 0.0, decomp = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const CVector u = detail::random_ambient(g, rng, 2.0);
        const CVector v = detail::random_ambient(g, rng, 2.0);
        round_trip = std::max(round_trip, (to_ambient(lattice, coordinates(lattice, u)) - u).norm() / u.norm());

        const PointCoordinates pu = coordinates(lattice, u), pv = coordinates(lattice, v);
        decomp = std::max(decomp, detail::relative_gap(hermitian_form(space, u, v), hermitian_form_coords(lattice, pu, pv)));

        if (r == 0) continue;
        // u, v restricted to span_C(Gamma_r)
        const CVector uw = to_ambient(lattice, {pu.z, CVector::Zero(g - r)});
        const CVector vw = to_ambient(lattice, {pv.z, CVector::Zero(g - r)});
        // conjugation in omega-coordinates swaps the arguments: H(conj u, conj v) = H(v, u)
        conj_sym = std::max(conj_sym, detail::relative_gap(hermitian_form(space, vw, uw),
                                                           hermitian_form(space, conjugate_in_basis(lattice, uw),
                                                                          conjugate_in_basis(lattice, vw))));
        const auto m = detail::random_lattice_index(r, rng, 3);
        const CVector gamma = lattice_vector(lattice, m);
        h_gamma = std::max(h_gamma, detail::relative_gap(hermitian_form(space, u, gamma), b_tilde(lattice, u, gamma)));
        const Complex lhs = b_tilde(lattice, u + gamma, u + gamma) - b_tilde(lattice, u, u);
        const Complex rhs = 2.0 * hermitian_form(space, u + 0.5 * gamma, gamma);
        b_shift = std::max(b_shift, detail::relative_gap(lhs, rhs));
    }
    out.push_back(detail::make_result("coordinates_round_trip", round_trip, 1e-12));
    out.push_back(detail::make_result("hermitian_decomposition", decomp, 1e-10));
    if (r > 0) {
        out.push_back(detail::make_result("conjugation_symmetry", conj_sym, 1e-10));
        out.push_back(detail::make_result("hermitian_equals_b_on_lattice", h_gamma, 1e-10));
        out.push_back(detail::make_result("b_translation_identity", b_shift, 1e-10));
    }

    double rdq = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        RVector alpha(r);
        for (int j = 0; j < r; ++j) alpha(j) = rng.uniform(-3.0, 3.0);
        const Character chi(alpha);
        rdq = std::max(rdq, check_rdq(lattice, chi, config.nu(), 2).max_defect);
    }
    out.push_back(detail::make_result("rdq_characters", rdq, 1e-10));

    if (r > 0) {
        const Character chi(config.alpha());
        auto broken = [&](std::span<const int> m) {
            const double cross = (r >= 2) ? static_cast<double>(m[0]) * m[1] : static_cast<double>(m[0]) * m[0];
            return chi(m) * std::polar(1.0, cross);
        };
        const RdqReport report = check_rdq(lattice, broken, config.nu(), 2);
        out.push_back({"rdq_rejects_non_character", !report.passes && report.max_defect > 1e-3, report.max_defect, 1e-3,
                       "defect must exceed threshold"});
    }
    return out;
}

/// Tail soundness: |S(R) - S(R_max)| <= tail_bound(R) on a grid of radii.
inline PropertyResult verify_tail_soundness(const ThetaParameters& params, const CVector& z, double r_max = 9.0)
{
    const TruncationPlan reference = plan_truncation(params, z, r_max);
    const Complex truth = sum_plan(params, reference, z);
    double worst = 0.0; // largest |S(R) - truth| / tail_bound(R)
    const double start = 2.0 * params.cell_radius();
    for (double radius = start; radius < r_max; radius += 0.125) {
        const TruncationPlan plan = plan_truncation(params, z, radius);
        const double gap = std::abs(sum_plan(params, plan, z) - truth);
        const double slack = 1e-14 * std::exp(reference.log_scale) * static_cast<double>(reference.size());
        worst = std::max(worst, (gap - slack) / plan.tail_bound);
    }
    return detail::make_result("tail_soundness", worst, 1.0, "max ratio of empirical tail to certified bound");
}

inline std::vector<PropertyResult> verify_theta(const SpaceConfig& config, const VerifyOptions& opts = {})
{
    const int r = config.r();
    Rng rng(opts.seed + 101);
    std::vector<PropertyResult> out;
    const ThetaParameters& params = config.kernel_theta();
    const double tol = std::max(opts.tol, 1e-13);

    double quasi = 0.0, shift = 0.0;
    bool deterministic = true;
    for (int trial = 0; trial < 20; ++trial) {
        CVector z(r);
        for (int j = 0; j < r; ++j) z(j) = rng.complex_in_box(0.5);
        IVector m(r), m2(r);
        for (int j = 0; j < r; ++j) {
            m(j) = rng.integer(-3, 3);
            m2(j) = rng.integer(-1, 1);
        }
        quasi = std::max(quasi, theta_quasiperiodicity_defect(params, z, m, m2, tol));
        RVector shifted = params.alpha() + m.cast<double>();
        const ThetaParameters moved(params.f(), shifted, params.beta());
        shift = std::max(shift, std::abs(theta_eval(moved, z, tol).value - theta_eval(params, z, tol).value));
        const Complex a = theta_eval(params, z, tol).value, b = theta_eval(params, z, tol).value;
        deterministic = deterministic && a.real() == b.real() && a.imag() == b.imag();
    }
    out.push_back(detail::make_result("theta_quasi_periodicity", quasi, 2.0 * tol));
    out.push_back(detail::make_result("theta_characteristic_shift", shift, 2.0 * tol));
    out.push_back({"theta_deterministic", deterministic, 0.0, 0.0, "repeated evaluations bit-identical"});
    if (r > 0 && r <= 2) {
        CVector z(r);
        for (int j = 0; j < r; ++j) z(j) = rng.complex_in_box(0.5);
        out.push_back(verify_tail_soundness(params, z));
    }
    return out;
}

inline std::vector<PropertyResult> verify_orthogonality(const SpaceConfig& config, const VerifyOptions& opts = {})
{
    GridOptions grid_opts;
    grid_opts.nodes = opts.nodes;
    const QuadratureGrid grid = build_grid(config, 1e-10, grid_opts);
    const auto indices = enumerate_basis(config, config.r() > 0 ? opts.n_radius : 0, opts.k_max);
    std::vector<Integrand> family;
    for (const auto& idx : indices) {
        family.push_back([&config, idx](const PointCoordinates& u) { return basis_eval(config, idx, u, Reduction::none); });
    }
    const GramResult gram = gram_matrix(config, family, grid, ErrorEstimate::none);
    std::vector<double> norms;
    for (const auto& idx : indices) norms.push_back(basis_norm_sq(config, idx).value());
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        diag = std::max(diag, std::abs(gram.values(i, i).real() - norms[i]) / norms[i]);
        for (std::size_t j = 0; j < indices.size(); ++j) {
            if (i != j) off = std::max(off, std::abs(gram.values(i, j)) / std::sqrt(norms[i] * norms[j]));
        }
    }
    std::ostringstream os;
    os << indices.size() << " basis functions, " << gram.nodes << " nodes";
    return {detail::make_result("basis_norms", diag, 1e-6, os.str()),
            detail::make_result("basis_orthogonality", off, 1e-6, os.str())};
}

inline std::vector<PropertyResult> verify_reproducing(const SpaceConfig& config, const VerifyOptions& opts = {})
{
    Rng rng(opts.seed + 202);
    GridOptions grid_opts;
    grid_opts.nodes = opts.nodes;
    const QuadratureGrid grid = build_grid(config, 1e-10, grid_opts);
    double reproducing = 0.0, parseval = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        const CoefficientField coeffs = random_coefficients(config, rng, 3, 1, 2);
        const PointCoordinates v = random_point(config, rng, 0.3);
        Integrand f = [&config, coeffs](const PointCoordinates& u) { return synthesize(config, coeffs, u, Reduction::none); };
        Integrand k = KernelSection(config, v, 1e-13);
        const GramResult gram = gram_matrix(config, {f, k}, grid, ErrorEstimate::none);
        const Complex fv = synthesize(config, coeffs, v);
        reproducing = std::max(reproducing, std::abs(gram.values(0, 1) - fv) / (1.0 + std::abs(fv)));
        const double norm = growth_functional(config, coeffs);
        parseval = std::max(parseval, std::abs(gram.values(0, 0).real() - norm) / norm);
    }
    return {detail::make_result("reproducing_property", reproducing, 1e-5),
            detail::make_result("parseval", parseval, 1e-6)};
}

inline std::vector<PropertyResult> verify_bounds(const SpaceConfig& config, const VerifyOptions& opts = {})
{
    Rng rng(opts.seed + 303);
    const double tol = std::max(opts.tol, 1e-13);
    std::vector<PropertyResult> out;

    int violations = 0;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const CoefficientField coeffs = random_coefficients(config, rng, rng.integer(1, 5), 2, 3);
        const PointCoordinates u = random_point(config, rng, 1.0);
        const EvaluationBoundReport rep = evaluation_bound_check(config, coeffs, u, tol);
        if (!rep.holds) ++violations;
        worst_ratio = std::max(worst_ratio, rep.lhs / rep.rhs);
    }
    out.push_back({"evaluation_bound", violations == 0, worst_ratio, 1.0 + 1e-9,
                   std::to_string(violations) + " violations in 100 trials"});

    double series = 0.0, diagonal = 0.0, symmetry = 0.0;
    std::vector<PointCoordinates> points;
    for (int trial = 0; trial < 10; ++trial) {
        const PointCoordinates u = random_point(config, rng, 0.5);
        const PointCoordinates v = random_point(config, rng, 0.5);
        points.push_back(u);
        const Complex closed = kernel_eval(config, u, v, tol).value;
        series = std::max(series, std::abs(closed - kernel_series_converged(config, u, v)));
        symmetry = std::max(symmetry, std::abs(closed - std::conj(kernel_eval(config, v, u, tol).value)));
        diagonal = std::max(diagonal, std::abs(kernel_diagonal(config, u, tol) - kernel_series_converged(config, u, u).real()));
    }
    out.push_back(detail::make_result("kernel_series", series, 1e-8));
    out.push_back(detail::make_result("kernel_diagonal_series", diagonal, 1e-8));
    out.push_back(detail::make_result("kernel_hermitian_symmetry", symmetry, 2.0 * tol));

    const auto n = static_cast<Eigen::Index>(points.size());
    CMatrix gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = kernel_eval(config, points[i], points[j], tol).value;
    gram = (0.5 * (gram + gram.adjoint())).eval();
    const double min_eig = Eigen::SelfAdjointEigenSolver<CMatrix>(gram, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const double trace = gram.trace().real();
    out.push_back({"kernel_positive_semidefinite", min_eig >= -1e-8 * trace, -min_eig / trace, 1e-8,
                   "min eigenvalue " + std::to_string(min_eig)});
    return out;
}

inline const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"geometry", "theta", "orthogonality", "reproducing", "bounds"};
    return names;
}

inline std::vector<PropertyResult> run_suite(const std::string& suite, const SpaceConfig& config,
                                             const VerifyOptions& opts = {})
{
    if (suite == "geometry") return verify_geometry(config, opts);
    if (suite == "theta") return verify_theta(config, opts);
    if (suite == "orthogonality") return verify_orthogonality(config, opts);
    if (suite == "reproducing") return verify_reproducing(config, opts);
    if (suite == "bounds") return verify_bounds(config, opts);
    if (suite == "all") {
        std::vector<PropertyResult> all;
        for (const auto& name : suite_names()) {
            auto part = run_suite(name, config, opts);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown suite '" + suite + "'");
}

} // namespace thetafock

#endif
