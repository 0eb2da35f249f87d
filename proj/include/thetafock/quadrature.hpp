// Quadrature oracle for the weighted inner product
//
//   <f, h> = int_{Lambda(Gamma_r)} f(u) conj(h(u)) exp(-nu H(u,u)) dlambda(u),
//   Lambda(Gamma_r) = ([t, 1+t] x R)^r x C^{g-r}   (adapted-basis coordinates),
//
// by a tensor rule: Gauss-Legendre along Re z, Gauss-Hermite along Im z (after
// diagonalising 2 nu B) and along Re/Im z_perp (weight exp(-nu |z_perp|^2)).
// The Gaussian weights are divided out of exp(-nu H(u,u)) at every node, with
// H(u,u) evaluated from ambient coordinates, so the rule stays independent of
// the closed forms in space.hpp.

#ifndef THETAFOCK_QUADRATURE_HPP
#define THETAFOCK_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "core.hpp"
#include "geometry.hpp"
#include "space.hpp"

namespace thetafock
{

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [0, 1].
inline QuadratureRule gauss_legendre(int n)
{
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "Gauss-Legendre needs at least one node");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (x * p1 - p2) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) <= 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root on [-1, 1]
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.weights[i] = rule.weights[n - 1 - i] = 0.5 * w;
    }
    return rule;
}

/// n-point Gauss-Hermite rule for the weight exp(-t^2) on R, nodes ascending.
///
/// Newton iteration on the orthonormal Hermite recurrence keeps the tail weights
/// accurate to full relative precision.
inline QuadratureRule gauss_hermite(int n)
{
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "Gauss-Hermite needs at least one node");
    const double pim4 = std::pow(pi, -0.25);
    std::vector<double> x(n), w(n);
    double z = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[i - 2];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    QuadratureRule rule;
    rule.nodes.assign(x.rbegin(), x.rend());
    rule.weights.assign(w.rbegin(), w.rend());
    return rule;
}

/// int_{R^r} exp(-a y^T A y + b^T y) dy = (det A)^{-1/2} (pi/a)^{r/2} exp(b^T A^{-1} b / (4a)).
///
/// (det A)^{-1/2} is taken as the product of principal roots of the eigenvalues of A, the branch
/// obtained by continuation from real A; it agrees with the principal root of det A for r <= 2.
inline Complex gaussian_integral(double a, const CMatrix& A, const CVector& b)
{
    if (!(a > 0.0)) throw Error(ErrorKind::InvalidArgument, "a must be positive");
    const auto r = A.rows();
    if (A.cols() != r) throw Error(ErrorKind::DimensionMismatch, "A must be square");
    require_size(b.size(), r, "b");
    if (r == 0) return 1.0;
    const RMatrix re = 0.5 * (A.real() + A.real().transpose());
    const RVector eig = Eigen::SelfAdjointEigenSolver<RMatrix>(re, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(eig(0) > 0.0)) {
        std::ostringstream os;
        os << "Re(A) has minimal eigenvalue " << eig(0);
        throw Error(ErrorKind::RealPartNotPositiveDefinite, os.str());
    }
    const CVector lambda = Eigen::ComplexEigenSolver<CMatrix>(A, false).eigenvalues();
    Complex root = 1.0;
    for (Eigen::Index j = 0; j < r; ++j) root *= std::sqrt(lambda(j));
    const CVector sol = A.fullPivLu().solve(b);
    const Complex quad = (b.transpose() * sol)(0, 0);
    return std::pow(pi / a, 0.5 * static_cast<double>(r)) * std::exp(quad / (4.0 * a)) / root;
}

/// Adaptive Gauss-Kronrod integral of a complex function over [lo, hi] (infinite limits allowed).
inline Complex integrate_line(const std::function<Complex(double)>& f, double lo, double hi, double tol = 1e-13)
{
    using boost::math::quadrature::gauss_kronrod;
    const double re = gauss_kronrod<double, 61>::integrate([&](double t) { return f(t).real(); }, lo, hi, 20, tol);
    const double im = gauss_kronrod<double, 61>::integrate([&](double t) { return f(t).imag(); }, lo, hi, 20, tol);
    return {re, im};
}

struct NodeCounts {
    int compact = 32;    // per Re z_j axis
    int transverse = 48; // per Im z_j axis
    int perp = 48;       // per Re/Im z_perp axis

    NodeCounts scaled(double factor) const
    {
        auto s = [factor](int n) { return std::max(2, static_cast<int>(std::lround(n * factor))); };
        return {s(compact), s(transverse), s(perp)};
    }
};

struct GridOptions {
    NodeCounts nodes{};
    /// Compact box is [offset, 1 + offset] in every Re z_j direction.
    double offset = 0.0;
    int dimension_cap = 2;
    double tail_fraction = 1e-14;
};

struct FundamentalDomain {
    int r = 0;
    int g = 0;
    double offset = 0.0;
    /// Extent |node| of the outermost node per unbounded direction (Im z eigen-directions, then z_perp).
    std::vector<double> radii;
    /// Gaussian weight mass outside the node span, relative to the total, per unbounded direction.
    std::vector<double> omitted_mass;
};

enum class AxisKind { compact, transverse, perp_real, perp_imag };

struct GridAxis {
    AxisKind kind;
    int index = 0;                 // which z_j / eigen-direction / z_perp component
    std::vector<double> nodes;     // physical coordinate
    std::vector<double> weights;   // physical weight, Jacobian included
    std::vector<double> exponents; // t^2 of the standardised Hermite node (0 on compact axes)
};

struct QuadratureGrid {
    int r = 0;
    int g = 0;
    double nu = 0.0;
    NodeCounts counts;
    FundamentalDomain domain;
    std::vector<GridAxis> axes;
    RMatrix rotation; // y = rotation * s
    long long node_count = 0;
    double estimated_error = 0.0;
};

namespace detail
{

inline int thread_count()
{
    if (const char* env = std::getenv("THETAFOCK_THREADS")) {
        const int requested = std::atoi(env);
        if (requested > 0) return requested;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline QuadratureGrid make_grid(const SpaceConfig& config, const NodeCounts& counts, double offset)
{
    QuadratureGrid grid;
    grid.r = config.r();
    grid.g = config.g();
    grid.nu = config.nu();
    grid.counts = counts;
    grid.domain.r = grid.r;
    grid.domain.g = grid.g;
    grid.domain.offset = offset;
    const int r = grid.r;
    const double nu = grid.nu;

    const QuadratureRule legendre = gauss_legendre(counts.compact);
    for (int j = 0; j < r; ++j) {
        GridAxis axis{AxisKind::compact, j, {}, {}, {}};
        for (double x : legendre.nodes) axis.nodes.push_back(offset + x);
        axis.weights = legendre.weights;
        axis.exponents.assign(legendre.nodes.size(), 0.0);
        grid.axes.push_back(std::move(axis));
    }

    auto hermite_axis = [&](AxisKind kind, int index, const QuadratureRule& rule, double curvature) {
        // weight exp(-curvature s^2): s = t / sqrt(curvature)
        GridAxis axis{kind, index, {}, {}, {}};
        const double scale = 1.0 / std::sqrt(curvature);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            axis.nodes.push_back(rule.nodes[i] * scale);
            axis.weights.push_back(rule.weights[i] * scale);
            axis.exponents.push_back(rule.nodes[i] * rule.nodes[i]);
        }
        const double t_max = rule.nodes.back();
        grid.domain.radii.push_back(t_max * scale);
        grid.domain.omitted_mass.push_back(std::erfc(t_max));
        return axis;
    };

    if (r > 0) {
        Eigen::SelfAdjointEigenSolver<RMatrix> eig(config.lattice().b());
        grid.rotation = eig.eigenvectors();
        const QuadratureRule hermite = gauss_hermite(counts.transverse);
        for (int j = 0; j < r; ++j) {
            grid.axes.push_back(hermite_axis(AxisKind::transverse, j, hermite, 2.0 * nu * eig.eigenvalues()(j)));
        }
    } else {
        grid.rotation.resize(0, 0);
    }
    const QuadratureRule hermite_perp = gauss_hermite(counts.perp);
    for (int j = 0; j < grid.g - r; ++j) {
        grid.axes.push_back(hermite_axis(AxisKind::perp_real, j, hermite_perp, nu));
        grid.axes.push_back(hermite_axis(AxisKind::perp_imag, j, hermite_perp, nu));
    }
    grid.node_count = 1;
    for (const auto& axis : grid.axes) grid.node_count *= static_cast<long long>(axis.nodes.size());
    return grid;
}

/// Gram matrix G_ij = <f_i, f_j> on one grid. Deterministic for any thread count.
inline CMatrix integrate_gram(const SpaceConfig& config, const QuadratureGrid& grid,
                              const std::vector<std::function<Complex(const PointCoordinates&)>>& family)
{
    const int dims = static_cast<int>(grid.axes.size());
    const int count = static_cast<int>(family.size());
    const int r = grid.r;
    const int g = grid.g;
    const int perp_dim = g - r;
    const double nu = config.nu();
    const CMatrix& basis = config.lattice().basis_matrix();
    const CMatrix& h = config.lattice().space().matrix();
    const int outer = static_cast<int>(grid.axes[0].nodes.size());

    std::vector<CMatrix> partial(outer, CMatrix::Zero(count, count));

    auto work = [&](int first, int last) {
        auto local = family; // callables may carry per-thread caches
        PointCoordinates pc{CVector::Zero(r), CVector::Zero(perp_dim)};
        CVector coords(g), ambient(g);
        RVector s(r);
        std::vector<int> idx(dims, 0);
        std::vector<Complex> values(count);
        for (int o = first; o < last; ++o) {
            CMatrix& acc = partial[o];
            std::fill(idx.begin(), idx.end(), 0);
            idx[0] = o;
            for (;;) {
                double weight = 1.0;
                double exponent = 0.0;
                for (int d = 0; d < dims; ++d) {
                    const GridAxis& axis = grid.axes[d];
                    const int i = idx[d];
                    weight *= axis.weights[i];
                    exponent += axis.exponents[i];
                    switch (axis.kind) {
                    case AxisKind::compact: pc.z(axis.index).real(axis.nodes[i]); break;
                    case AxisKind::transverse: s(axis.index) = axis.nodes[i]; break;
                    case AxisKind::perp_real: pc.z_perp(axis.index).real(axis.nodes[i]); break;
                    case AxisKind::perp_imag: pc.z_perp(axis.index).imag(axis.nodes[i]); break;
                    }
                }
                for (int j = 0; j < r; ++j) {
                    double yj = 0.0;
                    for (int k = 0; k < r; ++k) yj += grid.rotation(j, k) * s(k);
                    pc.z(j).imag(yj);
                }
                for (int j = 0; j < r; ++j) coords(j) = pc.z(j);
                for (int j = 0; j < perp_dim; ++j) coords(r + j) = pc.z_perp(j);
                for (int a = 0; a < g; ++a) {
                    Complex sum = 0.0;
                    for (int b = 0; b < g; ++b) sum += basis(a, b) * coords(b);
                    ambient(a) = sum;
                }
                double huu = 0.0;
                for (int a = 0; a < g; ++a) {
                    Complex row = 0.0;
                    for (int b = 0; b < g; ++b) row += h(a, b) * std::conj(ambient(b));
                    huu += (ambient(a) * row).real();
                }
                const double factor = weight * std::exp(exponent - nu * huu);
                for (int i = 0; i < count; ++i) values[i] = local[i](pc);
                for (int i = 0; i < count; ++i) {
                    const Complex vi = factor * values[i];
                    for (int j = i; j < count; ++j) acc(i, j) += vi * std::conj(values[j]);
                }
                int d = dims - 1;
                while (d > 0 && ++idx[d] == static_cast<int>(grid.axes[d].nodes.size())) idx[d--] = 0;
                if (d == 0) break;
            }
        }
    };

    const int threads = std::min(thread_count(), outer);
    if (threads <= 1) {
        work(0, outer);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (outer + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int first = t * chunk;
            const int last = std::min(outer, first + chunk);
            if (first < last) pool.emplace_back(work, first, last);
        }
        for (auto& th : pool) th.join();
    }

    CMatrix gram = CMatrix::Zero(count, count);
    for (const auto& p : partial) gram += p;
    for (int i = 0; i < count; ++i) {
        gram(i, i) = gram(i, i).real();
        for (int j = 0; j < i; ++j) gram(i, j) = std::conj(gram(j, i));
    }
    return gram;
}

} // namespace detail

/// Tensor grid for the fundamental domain of `config`, self-checked on a Gaussian-times-polynomial integrand.
inline QuadratureGrid build_grid(const SpaceConfig& config, double requested_tol = 1e-10,
                                 const GridOptions& opts = {})
{
    if (config.g() > opts.dimension_cap) {
        throw Error(ErrorKind::DimensionCapExceeded, "quadrature grids are limited to g <= " +
                                                         std::to_string(opts.dimension_cap) + ", got g = " +
                                                         std::to_string(config.g()));
    }
    QuadratureGrid grid = detail::make_grid(config, opts.nodes, opts.offset);
    for (double m : grid.domain.omitted_mass) {
        if (m > opts.tail_fraction) {
            throw Error(ErrorKind::GridTooCoarse, "Hermite nodes leave Gaussian mass " + std::to_string(m) +
                                                      " outside the node span");
        }
    }

    // Test integrand |psi_nu|^2 exp(b.y) (1 + |x|^2)(1 + |z_perp|^2); its weighted integral is
    // (1 + r/3) * gaussian_integral(2nu, B, b) * (pi/nu)^{g-r} (1 + (g-r)/nu).
    const int r = config.r();
    const int perp_dim = config.g() - r;
    const double nu = config.nu();
    const RVector b = RVector::Constant(r, -2.0 * pi);
    const double t = opts.offset;
    std::function<Complex(const PointCoordinates&)> test = [&config, b, nu](const PointCoordinates& u) {
        const Complex bzz = b_form(config.lattice(), u.z, u.z);
        double x2 = 0.0, lin = 0.0;
        for (Eigen::Index j = 0; j < u.z.size(); ++j) {
            x2 += u.z(j).real() * u.z(j).real();
            lin += b(j) * u.z(j).imag();
        }
        return Complex(std::exp(nu * bzz.real() + lin) * (1.0 + x2) * (1.0 + u.z_perp.squaredNorm()));
    };
    std::function<Complex(const PointCoordinates&)> one = [](const PointCoordinates&) { return Complex(1.0); };
    const CMatrix gram = detail::integrate_gram(config, grid, {test, one});
    // int_t^{1+t} x^2 dx = ((1+t)^3 - t^3)/3, summed over the r compact axes.
    const double box = 1.0 + r * ((1.0 + t) * (1.0 + t) * (1.0 + t) - t * t * t) / 3.0;
    const Complex exact = box * gaussian_integral(2.0 * nu, config.lattice().b().cast<Complex>(), b.cast<Complex>()) *
                          std::pow(pi / nu, perp_dim) * (1.0 + perp_dim / nu);
    grid.estimated_error = std::abs(gram(0, 1) - exact) / std::abs(exact);
    if (grid.estimated_error > requested_tol) {
        std::ostringstream os;
        os << "calibration integrand reproduced only to " << grid.estimated_error << " (requested " << requested_tol
           << ")";
        throw Error(ErrorKind::GridTooCoarse, os.str());
    }
    return grid;
}

enum class ErrorEstimate {
    /// Compare against the grid with doubled node counts.
    doubled,
    /// Compare against the grid with halved node counts (cheap, pessimistic).
    halved,
    none,
};

struct InnerProductOptions {
    ErrorEstimate estimate = ErrorEstimate::doubled;
    /// GridTooCoarse when error_estimate > max_ratio * scale.
    double max_ratio = 1e-6;
};

struct InnerProductResult {
    Complex value;
    double error_estimate = 0.0;
    /// sqrt(<f,f><h,h>) on the same grid.
    double scale = 0.0;
    long long nodes = 0;
};

using Integrand = std::function<Complex(const PointCoordinates&)>;

struct GramResult {
    CMatrix values;
    RMatrix error_estimate;
    long long nodes = 0;
};

/// All pairwise inner products of a family on one grid, with an optional refinement-based error estimate.
inline GramResult gram_matrix(const SpaceConfig& config, const std::vector<Integrand>& family,
                              const QuadratureGrid& grid, ErrorEstimate estimate = ErrorEstimate::doubled)
{
    if (grid.g != config.g() || grid.r != config.r()) {
        throw Error(ErrorKind::DimensionMismatch, "grid was built for a different space");
    }
    GramResult result;
    result.values = detail::integrate_gram(config, grid, family);
    result.nodes = grid.node_count;
    const auto n = static_cast<Eigen::Index>(family.size());
    result.error_estimate = RMatrix::Zero(n, n);
    if (estimate != ErrorEstimate::none) {
        const QuadratureGrid other =
            detail::make_grid(config, grid.counts.scaled(estimate == ErrorEstimate::doubled ? 2.0 : 0.5),
                              grid.domain.offset);
        const CMatrix refined = detail::integrate_gram(config, other, family);
        result.error_estimate = (refined - result.values).cwiseAbs();
        result.nodes += other.node_count;
    }
    return result;
}

inline InnerProductResult inner_product(const SpaceConfig& config, const Integrand& f, const Integrand& h,
                                        const QuadratureGrid& grid, const InnerProductOptions& opts = {})
{
    const GramResult gram = gram_matrix(config, {f, h}, grid, opts.estimate);
    InnerProductResult result;
    result.value = gram.values(0, 1);
    result.error_estimate = gram.error_estimate(0, 1);
    result.scale = std::sqrt(std::abs(gram.values(0, 0).real() * gram.values(1, 1).real()));
    result.nodes = gram.nodes;
    if (result.error_estimate > opts.max_ratio * result.scale) {
        std::ostringstream os;
        os << "refinement changed the inner product by " << result.error_estimate << " (scale " << result.scale << ")";
        throw Error(ErrorKind::GridTooCoarse, os.str());
    }
    return result;
}

} // namespace thetafock

#endif
