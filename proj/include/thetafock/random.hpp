// Seeded generators for spaces, lattices, coefficient fields and points.
// The floating-point mapping is done here rather than through <random>
// distributions so a seed reproduces the same draws on every standard library.

#ifndef THETAFOCK_RANDOM_HPP
#define THETAFOCK_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "core.hpp"
#include "geometry.hpp"
#include "space.hpp"

namespace thetafock
{

class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }

    double normal()
    {
        // Box-Muller; uniform() never returns 1, so 1 - u is in (0, 1].
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
    }

    Complex complex_normal() { return {normal(), normal()}; }
    Complex complex_in_box(double half_width) { return {uniform(-half_width, half_width), uniform(-half_width, half_width)}; }

private:
    std::mt19937_64 engine_;
};

/// Hermitian positive definite matrix with eigenvalues roughly in [0.5, 2.5].
inline CMatrix random_hermitian_pd(int g, Rng& rng)
{
    CMatrix a(g, g);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) a(i, j) = rng.complex_normal();
    CMatrix h = a * a.adjoint() / (2.0 * g) + 0.5 * CMatrix::Identity(g, g);
    return 0.5 * (h + h.adjoint());
}

inline CMatrix random_unitary(int g, Rng& rng)
{
    CMatrix a(g, g);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) a(i, j) = rng.complex_normal();
    Eigen::HouseholderQR<CMatrix> qr(a);
    return qr.householderQ() * CMatrix::Identity(g, g);
}

inline RMatrix random_orthogonal(int n, Rng& rng)
{
    RMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<RMatrix> qr(a);
    return qr.householderQ() * RMatrix::Identity(n, n);
}

/// r generators of an isotropic lattice whose form B has eigenvalues in [b_lo, b_hi].
///
/// With T such that H(u, v) = (Tu)^T conj(Tv), the images under T^{-1} U of real vectors
/// (U unitary) are isotropic and H restricted to them is the real dot product.
inline std::vector<CVector> random_isotropic_generators(const HermitianSpace& space, int r, Rng& rng, double b_lo,
                                                        double b_hi)
{
    const int g = space.g();
    const CMatrix conj_m = space.matrix().conjugate();
    Eigen::LLT<CMatrix> llt(conj_m);
    const CMatrix t = CMatrix(llt.matrixL()).adjoint();
    const CMatrix t_inv = t.inverse();
    const CMatrix u = random_unitary(g, rng);
    const RMatrix frame = random_orthogonal(g, rng).leftCols(r);
    const RMatrix mix = random_orthogonal(std::max(r, 1), rng).topLeftCorner(r, r);
    RVector scales(r);
    for (int j = 0; j < r; ++j) scales(j) = std::sqrt(rng.uniform(b_lo, b_hi));
    const RMatrix a = frame * scales.asDiagonal() * mix;
    std::vector<CVector> out;
    for (int j = 0; j < r; ++j) out.push_back(t_inv * u * a.col(j).cast<Complex>());
    return out;
}

struct RandomConfigOptions {
    double nu_lo = 2.0 * pi;
    double nu_hi = 2.0 * pi;
    double b_lo = 1.0;
    double b_hi = 2.0;
    bool identity_form = false;
};

inline SpaceConfig random_config(int g, int r, Rng& rng, const RandomConfigOptions& opts = {})
{
    const CMatrix h = opts.identity_form ? CMatrix::Identity(g, g) : random_hermitian_pd(g, rng);
    HermitianSpace space = validate_space(h);
    IsotropicLattice lattice = build_lattice(space, random_isotropic_generators(space, r, rng, opts.b_lo, opts.b_hi));
    RVector alpha(r);
    for (int j = 0; j < r; ++j) alpha(j) = rng.uniform();
    return SpaceConfig(std::move(lattice), Character(alpha), rng.uniform(opts.nu_lo, opts.nu_hi));
}

/// `terms` distinct random indices with n in [-n_radius, n_radius]^r and |k| <= k_max.
inline CoefficientField random_coefficients(const SpaceConfig& config, Rng& rng, int terms, int n_radius, int k_max)
{
    const auto pool = enumerate_basis(config, n_radius, k_max);
    CoefficientField field;
    const int target = std::min<int>(terms, static_cast<int>(pool.size()));
    while (static_cast<int>(field.size()) < target) {
        const auto& idx = pool[rng.integer(0, static_cast<int>(pool.size()) - 1)];
        if (!field.count(idx)) field[idx] = rng.complex_normal();
    }
    return field;
}

inline PointCoordinates random_point(const SpaceConfig& config, Rng& rng, double half_width)
{
    PointCoordinates p{CVector(config.r()), CVector(config.g() - config.r())};
    for (int j = 0; j < config.r(); ++j) p.z(j) = rng.complex_in_box(half_width);
    for (int j = 0; j < config.g() - config.r(); ++j) p.z_perp(j) = rng.complex_in_box(half_width);
    return p;
}

} // namespace thetafock

#endif
