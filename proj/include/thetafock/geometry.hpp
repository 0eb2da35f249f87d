// Hermitian/symplectic forms on C^g, isotropic lattices and the adapted basis.
//
// Conventions: the hermitian form is linear in its first argument,
//   H(u, v) = sum_{j,k} u_j M_{jk} conj(v_k),
// with M the hermitian matrix given at construction. E(u, v) = Im H(u, v).
// A lattice Gamma_r = Z w_1 + ... + Z w_r is completed by an H-orthonormal
// family w_{r+1}..w_g spanning the H-orthogonal complement of span_C(Gamma_r);
// points are then written u = (z, z_perp) in the basis (w_1..w_g).

#ifndef THETAFOCK_GEOMETRY_HPP
#define THETAFOCK_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "core.hpp"

namespace thetafock
{

inline constexpr double default_form_tolerance = 1e-10;

class HermitianSpace
{
public:
    int g() const noexcept { return static_cast<int>(matrix_.rows()); }
    const CMatrix& matrix() const noexcept { return matrix_; }
    /// Absolute tolerance used for every form identity on this space.
    double tol_form() const noexcept { return tol_form_; }

private:
    friend HermitianSpace validate_space(const CMatrix& h, double relative_tol);
    CMatrix matrix_;
    double tol_form_ = 0.0;
};

/// Checks that `h` is a hermitian positive definite g x g matrix.
inline HermitianSpace validate_space(const CMatrix& h, double relative_tol = default_form_tolerance)
{
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw Error(ErrorKind::DimensionMismatch, "hermitian form must be a non-empty square matrix");
    }
    if (!h.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "hermitian form has non-finite entries");
    }
    const double scale = max_abs_entry(h);
    const double tol = relative_tol * scale;
    const auto g = h.rows();
    for (Eigen::Index j = 0; j < g; ++j) {
        for (Eigen::Index k = j; k < g; ++k) {
            if (std::abs(h(j, k) - std::conj(h(k, j))) > tol) {
                std::ostringstream os;
                os << "H[" << j << "][" << k << "] = " << h(j, k) << " differs from conj(H[" << k << "][" << j
                   << "]) = " << std::conj(h(k, j));
                throw Error(ErrorKind::NotHermitian, os.str());
            }
        }
    }
    CMatrix sym = 0.5 * (h + h.adjoint());
    // Leading principal minors of a hermitian matrix are real.
    for (Eigen::Index k = 1; k <= g; ++k) {
        const double minor = sym.topLeftCorner(k, k).determinant().real();
        if (!(minor > tol * std::pow(scale, static_cast<double>(k - 1)))) {
            std::ostringstream os;
            os << "leading principal minor of order " << k << " is " << minor;
            throw Error(ErrorKind::NotPositiveDefinite, os.str());
        }
    }
    HermitianSpace space;
    space.matrix_ = std::move(sym);
    space.tol_form_ = tol;
    return space;
}

inline Complex hermitian_form(const HermitianSpace& space, const CVector& u, const CVector& v)
{
    require_size(u.size(), space.g(), "u");
    require_size(v.size(), space.g(), "v");
    return (u.transpose() * space.matrix() * v.conjugate())(0, 0);
}

inline double symplectic_form(const HermitianSpace& space, const CVector& u, const CVector& v)
{
    return hermitian_form(space, u, v).imag();
}

/// Coordinates of a point with respect to the adapted basis (w_1..w_g).
struct PointCoordinates {
    CVector z;      // along the lattice generators
    CVector z_perp; // along the H-orthonormal complement
};

class IsotropicLattice
{
public:
    const HermitianSpace& space() const noexcept { return space_; }
    int g() const noexcept { return space_.g(); }
    int r() const noexcept { return static_cast<int>(generators_.size()); }
    const std::vector<CVector>& generators() const noexcept { return generators_; }
    const std::vector<CVector>& complement() const noexcept { return complement_; }
    /// Columns are w_1..w_g in ambient coordinates.
    const CMatrix& basis_matrix() const noexcept { return basis_; }
    const CMatrix& basis_inverse() const noexcept { return basis_inv_; }
    const RMatrix& b() const noexcept { return b_; }
    const RMatrix& b_inverse() const noexcept { return b_inv_; }
    /// det B; 1 for the empty lattice.
    double det_b() const noexcept { return det_b_; }
    double min_eigenvalue_b() const noexcept { return b_min_eig_; }

private:
    friend IsotropicLattice build_lattice(const HermitianSpace&, const std::vector<CVector>&);
    HermitianSpace space_;
    std::vector<CVector> generators_;
    std::vector<CVector> complement_;
    CMatrix basis_;
    CMatrix basis_inv_;
    RMatrix b_;
    RMatrix b_inv_;
    double det_b_ = 1.0;
    double b_min_eig_ = 0.0;
};

namespace detail
{

// Gram-Schmidt step against an H-orthonormal family, done twice for stability.
inline CVector h_orthogonalize(const HermitianSpace& space, CVector v, const std::vector<CVector>& family)
{
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : family) {
            v -= hermitian_form(space, v, q) * q;
        }
    }
    return v;
}

inline double h_norm(const HermitianSpace& space, const CVector& v)
{
    return std::sqrt(std::max(0.0, hermitian_form(space, v, v).real()));
}

} // namespace detail

/// Validates the generators of Gamma_r and builds the adapted basis.
inline IsotropicLattice build_lattice(const HermitianSpace& space, const std::vector<CVector>& generators)
{
    const int g = space.g();
    const int r = static_cast<int>(generators.size());
    if (r > g) {
        throw Error(ErrorKind::RankExceedsG, "isotropic lattices have rank at most g = " + std::to_string(g) +
                                                 ", got " + std::to_string(r) + " generators");
    }
    for (int j = 0; j < r; ++j) {
        require_size(generators[j].size(), g, "generator");
        if (!generators[j].allFinite()) {
            throw Error(ErrorKind::InvalidArgument, "generator " + std::to_string(j) + " has non-finite entries");
        }
    }

    if (r > 0) {
        RMatrix real_span(2 * g, r);
        for (int j = 0; j < r; ++j) {
            real_span.col(j).head(g) = generators[j].real();
            real_span.col(j).tail(g) = generators[j].imag();
        }
        const RVector sv = Eigen::JacobiSVD<RMatrix>(real_span).singularValues();
        if (!(sv(0) > 0.0) || sv(r - 1) <= 1e-10 * sv(0)) {
            std::ostringstream os;
            os << "generators are R-linearly dependent (singular value ratio " << (sv(0) > 0 ? sv(r - 1) / sv(0) : 0.0)
               << ")";
            throw Error(ErrorKind::NotIndependent, os.str());
        }
    }

    const double scale = space.tol_form() / default_form_tolerance;
    for (int j = 0; j < r; ++j) {
        for (int k = j + 1; k < r; ++k) {
            const double e = symplectic_form(space, generators[j], generators[k]);
            const double tol = space.tol_form() * std::max(1.0, generators[j].norm() * generators[k].norm());
            if (std::abs(e) > tol) {
                std::ostringstream os;
                os << "E(w_" << j + 1 << ", w_" << k + 1 << ") = " << e;
                throw Error(ErrorKind::NotIsotropic, os.str());
            }
        }
    }

    IsotropicLattice lattice;
    lattice.space_ = space;
    lattice.generators_ = generators;

    lattice.b_.resize(r, r);
    for (int j = 0; j < r; ++j) {
        for (int k = 0; k < r; ++k) {
            lattice.b_(j, k) = hermitian_form(space, generators[j], generators[k]).real();
        }
    }
    lattice.b_ = 0.5 * (lattice.b_ + lattice.b_.transpose()).eval();
    if (r > 0) {
        Eigen::LLT<RMatrix> llt(lattice.b_);
        const RVector eig = Eigen::SelfAdjointEigenSolver<RMatrix>(lattice.b_, Eigen::EigenvaluesOnly).eigenvalues();
        if (llt.info() != Eigen::Success || !(eig(0) > 1e-12 * std::max(1.0, eig(r - 1)))) {
            throw Error(ErrorKind::NotPositiveDefinite, "lattice form B is not positive definite");
        }
        lattice.b_min_eig_ = eig(0);
        lattice.b_inv_ = llt.solve(RMatrix::Identity(r, r));
        lattice.b_inv_ = 0.5 * (lattice.b_inv_ + lattice.b_inv_.transpose()).eval();
        const auto diag = llt.matrixLLT().diagonal();
        lattice.det_b_ = diag.prod() * diag.prod();
    } else {
        lattice.b_inv_.resize(0, 0);
        lattice.det_b_ = 1.0;
    }

    // H-orthonormal frame of span_C(generators), then greedy completion with
    // ambient unit vectors of largest H-residual.
    std::vector<CVector> frame;
    for (const auto& w : generators) {
        CVector q = detail::h_orthogonalize(space, w, frame);
        const double nq = detail::h_norm(space, q);
        if (!(nq > 1e-10 * std::max(1.0, detail::h_norm(space, w)))) {
            throw Error(ErrorKind::NotIndependent, "generators are C-linearly dependent");
        }
        frame.push_back(q / nq);
    }
    for (int added = r; added < g; ++added) {
        CVector best;
        double best_norm = -1.0;
        for (int i = 0; i < g; ++i) {
            CVector residual = detail::h_orthogonalize(space, CVector::Unit(g, i), frame);
            const double n = detail::h_norm(space, residual);
            if (n > best_norm) {
                best_norm = n;
                best = std::move(residual);
            }
        }
        best /= best_norm;
        frame.push_back(best);
        lattice.complement_.push_back(best);
    }

    lattice.basis_.resize(g, g);
    for (int j = 0; j < r; ++j) lattice.basis_.col(j) = generators[j];
    for (int j = r; j < g; ++j) lattice.basis_.col(j) = lattice.complement_[j - r];
    Eigen::FullPivLU<CMatrix> lu(lattice.basis_);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) {
        throw Error(ErrorKind::SingularBasis, "adapted basis is numerically singular");
    }
    lattice.basis_inv_ = lu.inverse();

    for (int j = r; j < g; ++j) {
        for (int k = 0; k < g; ++k) {
            const Complex h = hermitian_form(space, lattice.basis_.col(j), lattice.basis_.col(k));
            const Complex expected = (j == k) ? Complex(1.0) : Complex(0.0);
            if (std::abs(h - expected) > 1e-8 * std::max(1.0, scale) * lattice.basis_.col(k).norm()) {
                throw Error(ErrorKind::SingularBasis, "complement failed H-orthonormality");
            }
        }
    }
    return lattice;
}

/// w = sum_j m_j w_j in ambient coordinates.
inline CVector lattice_vector(const IsotropicLattice& lattice, std::span<const int> m)
{
    require_size(static_cast<Eigen::Index>(m.size()), lattice.r(), "lattice index");
    CVector v = CVector::Zero(lattice.g());
    for (int j = 0; j < lattice.r(); ++j) v += static_cast<double>(m[j]) * lattice.generators()[j];
    return v;
}

inline PointCoordinates coordinates(const IsotropicLattice& lattice, const CVector& u)
{
    require_size(u.size(), lattice.g(), "u");
    const CVector c = lattice.basis_inverse() * u;
    return {c.head(lattice.r()), c.tail(lattice.g() - lattice.r())};
}

inline CVector to_ambient(const IsotropicLattice& lattice, const PointCoordinates& p)
{
    require_size(p.z.size(), lattice.r(), "z");
    require_size(p.z_perp.size(), lattice.g() - lattice.r(), "z_perp");
    CVector c(lattice.g());
    c << p.z, p.z_perp;
    return lattice.basis_matrix() * c;
}

/// Symmetric bilinear form z^T B w (no conjugation).
inline Complex b_form(const IsotropicLattice& lattice, const CVector& z, const CVector& w)
{
    require_size(z.size(), lattice.r(), "z");
    require_size(w.size(), lattice.r(), "w");
    Complex s = 0.0;
    for (int j = 0; j < lattice.r(); ++j) {
        Complex row = 0.0;
        for (int k = 0; k < lattice.r(); ++k) row += lattice.b()(j, k) * w(k);
        s += z(j) * row;
    }
    return s;
}

/// Conjugation taken coordinatewise in the adapted basis.
inline CVector conjugate_in_basis(const IsotropicLattice& lattice, const CVector& u)
{
    return lattice.basis_matrix() * (lattice.basis_inverse() * u).conjugate();
}

/// Extension of B to C^g: B~(u, v) = H(u, conj(v)), conjugation in the adapted basis.
inline Complex b_tilde(const IsotropicLattice& lattice, const CVector& u, const CVector& v)
{
    return hermitian_form(lattice.space(), u, conjugate_in_basis(lattice, v));
}

/// H(u, v) evaluated through the adapted-basis decomposition B(z, conj w) + <z_perp, w_perp>.
inline Complex hermitian_form_coords(const IsotropicLattice& lattice, const PointCoordinates& u,
                                     const PointCoordinates& v)
{
    Complex s = b_form(lattice, u.z, v.z.conjugate());
    require_size(u.z_perp.size(), lattice.g() - lattice.r(), "z_perp");
    require_size(v.z_perp.size(), lattice.g() - lattice.r(), "w_perp");
    for (Eigen::Index j = 0; j < u.z_perp.size(); ++j) s += u.z_perp(j) * std::conj(v.z_perp(j));
    return s;
}

/// Character chi_alpha(m) = exp(2 pi i alpha.m); alpha stored in [0, 1)^r.
class Character
{
public:
    explicit Character(RVector alpha) : alpha_(std::move(alpha))
    {
        for (Eigen::Index j = 0; j < alpha_.size(); ++j) {
            if (!std::isfinite(alpha_(j))) throw Error(ErrorKind::InvalidArgument, "alpha must be finite");
            double a = alpha_(j) - std::floor(alpha_(j));
            if (a >= 1.0) a = 0.0;
            alpha_(j) = a;
        }
    }

    int r() const noexcept { return static_cast<int>(alpha_.size()); }
    const RVector& alpha() const noexcept { return alpha_; }

    Complex operator()(std::span<const int> m) const
    {
        require_size(static_cast<Eigen::Index>(m.size()), alpha_.size(), "character argument");
        double phase = 0.0;
        for (Eigen::Index j = 0; j < alpha_.size(); ++j) phase += alpha_(j) * m[j];
        // Reduce before the exponential so large indices keep full phase accuracy.
        phase -= std::floor(phase);
        return std::polar(1.0, 2.0 * pi * phase);
    }

private:
    RVector alpha_;
};

struct RdqReport {
    bool passes = true;
    double max_defect = 0.0;
    std::vector<int> worst_first;
    std::vector<int> worst_second;
    int pairs_checked = 0;
};

/// Checks chi(g + g') = chi(g) chi(g') exp(i nu E(g, g')) on all pairs from the box [-box, box]^r.
inline RdqReport check_rdq(const IsotropicLattice& lattice, const std::function<Complex(std::span<const int>)>& chi,
                           double nu, int box = 2, double tol = 1e-10)
{
    const int r = lattice.r();
    std::vector<std::vector<int>> points;
    std::vector<int> m(r, -box);
    for (;;) {
        points.push_back(m);
        int j = 0;
        while (j < r && m[j] == box) m[j++] = -box;
        if (j == r) break;
        ++m[j];
    }
    std::vector<Complex> values;
    std::vector<CVector> vectors;
    for (const auto& p : points) {
        const Complex c = chi(p);
        if (std::abs(std::abs(c) - 1.0) > tol) {
            std::ostringstream os;
            os << "|chi| = " << std::abs(c) << " at lattice point (";
            for (std::size_t j = 0; j < p.size(); ++j) os << (j ? "," : "") << p[j];
            os << ")";
            throw Error(ErrorKind::NonUnitModulus, os.str());
        }
        values.push_back(c);
        vectors.push_back(lattice_vector(lattice, p));
    }
    RdqReport report;
    std::vector<int> sum(r);
    for (std::size_t a = 0; a < points.size(); ++a) {
        for (std::size_t b = 0; b < points.size(); ++b) {
            for (int j = 0; j < r; ++j) sum[j] = points[a][j] + points[b][j];
            const Complex lhs = chi(sum);
            const double e = symplectic_form(lattice.space(), vectors[a], vectors[b]);
            const Complex rhs = values[a] * values[b] * std::polar(1.0, nu * e);
            const double defect = std::abs(lhs - rhs);
            ++report.pairs_checked;
            if (defect > report.max_defect || report.worst_first.empty()) {
                report.max_defect = std::max(report.max_defect, defect);
                report.worst_first = points[a];
                report.worst_second = points[b];
            }
        }
    }
    report.passes = report.max_defect <= tol;
    return report;
}

} // namespace thetafock

#endif
