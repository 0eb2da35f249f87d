// Riemann theta function with characteristics,
//
//   Theta_{a,b}(z | F) = sum_{n in Z^r} exp(2 pi i ( (a+n)F(a+n)/2 + (a+n).(z+b) )),
//
// evaluated by summing over a lattice ellipsoid around the dominant term with a
// certified bound on the omitted part.
//
// Term magnitudes are |t_n| = M0 exp(-pi d_n), where Y = Im F,
// p* = -Y^{-1} Im z, M0 = exp(pi p*^T Y p*) and d_n = (a+n-p*)^T Y (a+n-p*).
// The plan keeps every n with d_n <= R^2. Writing Y = L L^T, the kept set is a
// ball of radius R in the lattice L^T Z^r; comparing each omitted lattice point
// with its (parallelepiped) cell gives
//
//   tail <= M0 * S_{r-1} / sqrt(det Y) * int_{R-2s}^inf (t+s)^{r-1} exp(-pi t^2) dt,
//
// with s = sum_j sqrt(Y_jj) / 2 the cell radius and S_{r-1} the area of the unit
// sphere. The integral is evaluated exactly via the moments J_j below.

#ifndef THETAFOCK_THETA_HPP
#define THETAFOCK_THETA_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "core.hpp"

namespace thetafock
{

class ThetaParameters
{
public:
    ThetaParameters(CMatrix f, RVector alpha, RVector beta)
        : f_(std::move(f)), alpha_(std::move(alpha)), beta_(std::move(beta))
    {
        const auto r = f_.rows();
        if (f_.cols() != r) throw Error(ErrorKind::DimensionMismatch, "F must be square");
        require_size(alpha_.size(), r, "alpha");
        require_size(beta_.size(), r, "beta");
        if (!f_.allFinite() || !alpha_.allFinite() || !beta_.allFinite()) {
            throw Error(ErrorKind::InvalidArgument, "theta parameters must be finite");
        }
        const double tol = 1e-10 * std::max(1.0, max_abs_entry(f_));
        for (Eigen::Index j = 0; j < r; ++j) {
            for (Eigen::Index k = j + 1; k < r; ++k) {
                if (std::abs(f_(j, k) - f_(k, j)) > tol) {
                    std::ostringstream os;
                    os << "F[" << j << "][" << k << "] != F[" << k << "][" << j << "]";
                    throw Error(ErrorKind::NotSymmetric, os.str());
                }
            }
        }
        f_ = (0.5 * (f_ + f_.transpose())).eval();
        im_ = f_.imag();
        if (r > 0) {
            const RVector eig = Eigen::SelfAdjointEigenSolver<RMatrix>(im_, Eigen::EigenvaluesOnly).eigenvalues();
            Eigen::LLT<RMatrix> llt(im_);
            if (llt.info() != Eigen::Success || !(eig(0) > 0.0)) {
                std::ostringstream os;
                os << "Im(F) has minimal eigenvalue " << eig(0);
                throw Error(ErrorKind::ImaginaryPartNotPositiveDefinite, os.str());
            }
            lambda_min_ = eig(0);
            upper_ = llt.matrixU();
            im_inv_ = llt.solve(RMatrix::Identity(r, r));
            const auto d = upper_.diagonal();
            sqrt_det_im_ = d.prod();
            cell_radius_ = 0.5 * im_.diagonal().cwiseSqrt().sum();
        }
    }

    int r() const noexcept { return static_cast<int>(f_.rows()); }
    const CMatrix& f() const noexcept { return f_; }
    const RVector& alpha() const noexcept { return alpha_; }
    const RVector& beta() const noexcept { return beta_; }
    const RMatrix& im_f() const noexcept { return im_; }
    const RMatrix& im_f_inverse() const noexcept { return im_inv_; }
    /// Upper Cholesky factor U with Im F = U^T U.
    const RMatrix& cholesky_upper() const noexcept { return upper_; }
    double lambda_min() const noexcept { return lambda_min_; }
    double sqrt_det_im() const noexcept { return sqrt_det_im_; }
    double cell_radius() const noexcept { return cell_radius_; }

private:
    CMatrix f_;
    RVector alpha_, beta_;
    RMatrix im_, im_inv_, upper_;
    double lambda_min_ = std::numeric_limits<double>::infinity();
    double sqrt_det_im_ = 1.0;
    double cell_radius_ = 0.0;
};

struct TruncationPlan {
    double radius = 0.0;
    RVector center;           // p* - alpha: real minimiser of the quadratic, in n-coordinates
    double log_scale = 0.0;   // log M0
    std::vector<int> indices; // row-major, r entries per kept index, in summation order
    std::vector<double> quad; // d_n for each kept index
    double tail_bound = 0.0;
    std::size_t size() const noexcept { return quad.size(); }
};

namespace detail
{

inline double unit_sphere_area(int r)
{
    // 2 pi^{r/2} / Gamma(r/2); equals 2 for r = 1.
    return 2.0 * std::pow(pi, 0.5 * r) / std::tgamma(0.5 * r);
}

/// int_T^inf t^j exp(-a t^2) dt for T >= 0.
inline double gaussian_moment_tail(int j, double a, double t)
{
    if (j == 0) return 0.5 * std::sqrt(pi / a) * std::erfc(std::sqrt(a) * t);
    if (j == 1) return std::exp(-a * t * t) / (2.0 * a);
    return std::pow(t, j - 1) * std::exp(-a * t * t) / (2.0 * a) + (j - 1) / (2.0 * a) * gaussian_moment_tail(j - 2, a, t);
}

inline double binomial(int n, int k)
{
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

/// Tail bound in units of M0; infinite when R is below the cell diameter.
inline double relative_tail_bound(const ThetaParameters& params, double radius)
{
    const int r = params.r();
    if (r == 0) return 0.0;
    const double s = params.cell_radius();
    const double t = radius - 2.0 * s;
    if (t < 0.0) return std::numeric_limits<double>::infinity();
    double integral = 0.0;
    for (int j = 0; j < r; ++j) {
        integral += binomial(r - 1, j) * std::pow(s, r - 1 - j) * gaussian_moment_tail(j, pi, t);
    }
    return unit_sphere_area(r) / params.sqrt_det_im() * integral;
}

} // namespace detail

/// Lattice points of the ellipsoid d_n <= R^2 around the real minimiser for this z.
inline TruncationPlan plan_truncation(const ThetaParameters& params, const CVector& z, double radius)
{
    const int r = params.r();
    require_size(z.size(), r, "z");
    TruncationPlan plan;
    plan.radius = radius;
    if (r == 0) {
        plan.quad.push_back(0.0);
        return plan;
    }
    const RVector im_z = z.imag();
    const RVector p_star = -params.im_f_inverse() * im_z;
    plan.log_scale = pi * p_star.dot(params.im_f() * p_star);
    plan.center = p_star - params.alpha();

    const RMatrix& u = params.cholesky_upper();
    const double r2 = radius * radius;
    std::vector<int> n(r);
    std::vector<double> x(r);
    struct Entry {
        double quad;
        std::vector<int> n;
    };
    std::vector<Entry> found;

    // Fincke-Pohst: |U x|^2 = sum_i (U_ii x_i + sum_{j>i} U_ij x_j)^2, innermost coordinate last.
    std::function<void(int, double)> visit = [&](int i, double acc) {
        double shift = 0.0;
        for (int j = i + 1; j < r; ++j) shift += u(i, j) * x[j];
        const double remaining = r2 - acc;
        const double half = std::sqrt(std::max(0.0, remaining)) / u(i, i);
        const double mid = plan.center(i) - shift / u(i, i);
        const long lo = static_cast<long>(std::ceil(mid - half));
        const long hi = static_cast<long>(std::floor(mid + half));
        for (long ni = lo; ni <= hi; ++ni) {
            n[i] = static_cast<int>(ni);
            x[i] = static_cast<double>(ni) - plan.center(i);
            const double term = u(i, i) * x[i] + shift;
            const double next = acc + term * term;
            if (next > r2) continue;
            if (i == 0) {
                found.push_back({next, n});
            } else {
                visit(i - 1, next);
            }
        }
    };
    visit(r - 1, 0.0);

    std::sort(found.begin(), found.end(), [](const Entry& a, const Entry& b) {
        if (a.quad != b.quad) return a.quad < b.quad;
        return a.n < b.n;
    });
    plan.indices.reserve(found.size() * r);
    plan.quad.reserve(found.size());
    for (const auto& e : found) {
        plan.quad.push_back(e.quad);
        plan.indices.insert(plan.indices.end(), e.n.begin(), e.n.end());
    }
    plan.tail_bound = std::exp(plan.log_scale) * detail::relative_tail_bound(params, radius);
    return plan;
}

/// Sum of the planned terms with compensated accumulation in plan order.
inline Complex sum_plan(const ThetaParameters& params, const TruncationPlan& plan, const CVector& z)
{
    const int r = params.r();
    if (r == 0) return 1.0;
    const CMatrix& f = params.f();
    CompensatedSum acc;
    CVector zb = z;
    for (int j = 0; j < r; ++j) zb(j) += params.beta()(j);
    std::vector<double> p(r);
    for (std::size_t t = 0; t < plan.size(); ++t) {
        for (int j = 0; j < r; ++j) p[j] = params.alpha()(j) + plan.indices[t * r + j];
        Complex quad = 0.0, lin = 0.0;
        for (int j = 0; j < r; ++j) {
            Complex row = 0.0;
            for (int k = 0; k < r; ++k) row += f(j, k) * p[k];
            quad += p[j] * row;
            lin += p[j] * zb(j);
        }
        acc.add(std::exp(2.0 * pi * imag_unit * (0.5 * quad + lin)));
    }
    return acc.value();
}

struct ThetaOptions {
    /// Largest admissible ellipsoid radius, in the Im(F)-norm.
    double max_radius = 40.0;
    double radius_step = 0.25;
};

struct ThetaValue {
    Complex value;
    double tail_bound = 0.0;
    std::size_t terms = 0;
    double radius = 0.0;
};

/// Smallest radius on the step grid whose certified tail is <= tol.
inline double required_radius(const ThetaParameters& params, const CVector& z, double tol, const ThetaOptions& opts = {})
{
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    if (params.r() == 0) return 0.0;
    const RVector p_star = -params.im_f_inverse() * z.imag();
    const double log_scale = pi * p_star.dot(params.im_f() * p_star);
    // Leading-order guess from M0 exp(-pi R^2) = tol, then walk outwards.
    double radius = std::max(2.0 * params.cell_radius(), std::sqrt(std::max(0.0, (log_scale - std::log(tol)) / pi)));
    radius = std::ceil(radius / opts.radius_step) * opts.radius_step;
    while (radius <= opts.max_radius) {
        const double log_tail = log_scale + std::log(detail::relative_tail_bound(params, radius));
        if (log_tail <= std::log(tol)) return radius;
        radius += opts.radius_step;
    }
    std::ostringstream os;
    os << "certified tail above " << tol << " at the maximal radius " << opts.max_radius;
    throw Error(ErrorKind::TailBoundUnreachable, os.str());
}

inline ThetaValue theta_eval(const ThetaParameters& params, const CVector& z, double tol, const ThetaOptions& opts = {})
{
    require_size(z.size(), params.r(), "z");
    if (params.r() == 0) {
        if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
        return {Complex(1.0), 0.0, 1, 0.0};
    }
    const double radius = required_radius(params, z, tol, opts);
    const TruncationPlan plan = plan_truncation(params, z, radius);
    return {sum_plan(params, plan, z), plan.tail_bound, plan.size(), radius};
}

/// Largest defect of the two quasi-periodicity relations of Theta under z -> z + m and z -> z + F m2.
///
/// The second relation, Theta(z + F m2) = J Theta(z), is compared after dividing by max(1, |J|):
/// the left side is evaluated to tolerance tol * max(1, |J|) so both sides carry error <= tol.
inline double theta_quasiperiodicity_defect(const ThetaParameters& params, const CVector& z, const IVector& m,
                                            const IVector& m2, double tol, const ThetaOptions& opts = {})
{
    const int r = params.r();
    require_size(m.size(), r, "m");
    require_size(m2.size(), r, "m2");
    const ThetaValue base = theta_eval(params, z, tol, opts);

    const CVector shifted = z + m.cast<double>().cast<Complex>();
    const ThetaValue translated = theta_eval(params, shifted, tol, opts);
    double am = 0.0;
    for (int j = 0; j < r; ++j) am += params.alpha()(j) * m(j);
    am -= std::floor(am);
    const double d1 = std::abs(translated.value - std::polar(1.0, 2.0 * pi * am) * base.value);

    const CVector m2c = m2.cast<double>().cast<Complex>();
    const CVector fm2 = params.f() * m2c;
    Complex exponent = 0.5 * m2c.dot(fm2); // dot conjugates the first argument; m2c is real
    for (int j = 0; j < r; ++j) exponent += static_cast<double>(m2(j)) * (z(j) + params.beta()(j));
    const Complex factor = std::exp(-2.0 * pi * imag_unit * exponent);
    const double scale = std::max(1.0, std::abs(factor));
    const ThetaValue quasi = theta_eval(params, z + fm2, tol * scale, opts);
    const double d2 = std::abs(quasi.value - factor * base.value) / scale;
    return std::max(d1, d2);
}

} // namespace thetafock

#endif
