// The (Gamma_r, chi_alpha)-theta Fock-Bargmann space: orthogonal basis
//
//   e_{n,k}(z, z_perp) = exp(nu/2 B(z,z) + 2 pi i (alpha+n).z) z_perp^k,
//
// its closed-form norms, coefficient synthesis, and the reproducing kernel
//
//   K(u,v) = sqrt(det B) (2nu/pi)^{r/2} (nu/pi)^{g-r} exp(nu/2 (B(z,z) + conj B(w,w)))
//            Theta_{alpha,0}(z - conj w | (2 pi i/nu) B^{-1}) exp(nu <z_perp, w_perp>).
//
// All evaluations take points in adapted-basis coordinates; the norm is the
// weighted L^2 norm over ([0,1] x R)^r x C^{g-r} with Lebesgue measure in those
// coordinates (ambient Lebesgue measure differs by |det P|^2, see
// `ambient_measure_factor`).

#ifndef THETAFOCK_SPACE_HPP
#define THETAFOCK_SPACE_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "theta.hpp"

namespace thetafock
{

class SpaceConfig
{
public:
    SpaceConfig(IsotropicLattice lattice, Character character, double nu)
        : lattice_(std::move(lattice)), character_(std::move(character)), nu_(nu),
          kernel_theta_(make_kernel_theta(lattice_, character_, nu))
    {
        if (!(nu > 0.0) || !std::isfinite(nu)) throw Error(ErrorKind::InvalidArgument, "nu must be a positive real");
        require_size(character_.alpha().size(), lattice_.r(), "alpha");
    }

    const IsotropicLattice& lattice() const noexcept { return lattice_; }
    const Character& character() const noexcept { return character_; }
    const RVector& alpha() const noexcept { return character_.alpha(); }
    double nu() const noexcept { return nu_; }
    int g() const noexcept { return lattice_.g(); }
    int r() const noexcept { return lattice_.r(); }
    /// Theta parameters (alpha, 0, (2 pi i / nu) B^{-1}) of the reproducing kernel.
    const ThetaParameters& kernel_theta() const noexcept { return kernel_theta_; }

private:
    static ThetaParameters make_kernel_theta(const IsotropicLattice& lattice, const Character& chi, double nu)
    {
        const int r = lattice.r();
        if (!(nu > 0.0)) throw Error(ErrorKind::InvalidArgument, "nu must be a positive real");
        require_size(chi.alpha().size(), r, "alpha");
        CMatrix f = (2.0 * pi / nu) * imag_unit * lattice.b_inverse().cast<Complex>();
        return ThetaParameters(std::move(f), chi.alpha(), RVector::Zero(r));
    }

    IsotropicLattice lattice_;
    Character character_;
    double nu_;
    ThetaParameters kernel_theta_;
};

/// Jacobian |det P|^2 between adapted-basis and ambient Lebesgue measures.
inline double ambient_measure_factor(const SpaceConfig& config)
{
    return std::norm(config.lattice().basis_matrix().determinant());
}

struct BasisIndex {
    std::vector<int> n; // in Z^r
    std::vector<int> k; // in N^{g-r}
    auto operator<=>(const BasisIndex&) const = default;
};

using CoefficientField = std::map<BasisIndex, Complex>;

enum class Reduction {
    /// Translate z by -floor(Re z) and apply the exact automorphy factor.
    fundamental_domain,
    /// Evaluate the defining formula at the given point.
    none,
};

/// A positive quantity kept as its logarithm, with a plain accessor that refuses to overflow.
struct LogValue {
    double log_value = -std::numeric_limits<double>::infinity();
    int sign = 1;

    double value() const
    {
        if (log_value > std::log(std::numeric_limits<double>::max())) {
            throw Error(ErrorKind::Overflow, "value exp(" + std::to_string(log_value) + ") overflows a double");
        }
        return sign * std::exp(log_value);
    }
};

namespace detail
{

inline void check_point(const SpaceConfig& config, const PointCoordinates& u)
{
    require_size(u.z.size(), config.r(), "z");
    require_size(u.z_perp.size(), config.g() - config.r(), "z_perp");
}

inline void check_index(const SpaceConfig& config, const BasisIndex& idx)
{
    require_size(static_cast<Eigen::Index>(idx.n.size()), config.r(), "n");
    require_size(static_cast<Eigen::Index>(idx.k.size()), config.g() - config.r(), "k");
    for (int kj : idx.k) {
        if (kj < 0) throw Error(ErrorKind::InvalidArgument, "k must be componentwise non-negative");
    }
}

inline Complex int_power(Complex z, int k)
{
    Complex p = 1.0;
    for (int i = 0; i < k; ++i) p *= z;
    return p;
}

/// exp(2 pi i t) with t reduced modulo 1 before scaling.
inline Complex unit_phase(double t) { return std::polar(1.0, 2.0 * pi * (t - std::floor(t))); }

/// (n + alpha)^T B^{-1} (n + alpha).
inline double shifted_quadratic(const SpaceConfig& config, const std::vector<int>& n)
{
    const int r = config.r();
    double q = 0.0;
    for (int j = 0; j < r; ++j) {
        double row = 0.0;
        for (int k = 0; k < r; ++k) row += config.lattice().b_inverse()(j, k) * (n[k] + config.alpha()(k));
        q += (n[j] + config.alpha()(j)) * row;
    }
    return q;
}

/// exp(nu/2 B(z,z) + 2 pi i (alpha+n).z), phase of the linear term reduced modulo 1.
inline Complex theta_exponential(const SpaceConfig& config, const CVector& z, const std::vector<int>* n)
{
    const int r = config.r();
    const Complex bzz = b_form(config.lattice(), z, z);
    double re_lin = 0.0; // (alpha+n).Re z
    double im_lin = 0.0; // (alpha+n).Im z
    for (int j = 0; j < r; ++j) {
        const double p = config.alpha()(j) + (n ? (*n)[j] : 0);
        re_lin += p * z(j).real();
        im_lin += p * z(j).imag();
    }
    return std::exp(0.5 * config.nu() * bzz - 2.0 * pi * im_lin) * unit_phase(re_lin);
}

inline std::vector<int> floor_real(const CVector& z)
{
    std::vector<int> m(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) m[j] = static_cast<int>(std::floor(z(j).real()));
    return m;
}

inline bool is_zero(const std::vector<int>& m)
{
    return std::all_of(m.begin(), m.end(), [](int v) { return v == 0; });
}

} // namespace detail

/// exp(nu B(z + m/2, m) + 2 pi i alpha.m): f(z + m, z_perp) = J f(z, z_perp).
inline Complex automorphy_factor(const SpaceConfig& config, const CVector& z, std::span<const int> m)
{
    const int r = config.r();
    require_size(z.size(), r, "z");
    require_size(static_cast<Eigen::Index>(m.size()), r, "m");
    CVector mid(r), mv(r);
    double am = 0.0;
    for (int j = 0; j < r; ++j) {
        mv(j) = static_cast<double>(m[j]);
        mid(j) = z(j) + 0.5 * m[j];
        am += config.alpha()(j) * m[j];
    }
    return std::exp(config.nu() * b_form(config.lattice(), mid, mv)) * detail::unit_phase(am);
}

/// chi(gamma) exp(nu H(u + gamma/2, gamma)) from ambient data only.
inline Complex automorphy_factor_ambient(const SpaceConfig& config, const CVector& u, std::span<const int> m)
{
    const CVector gamma = lattice_vector(config.lattice(), m);
    const Complex h = hermitian_form(config.lattice().space(), u + 0.5 * gamma, gamma);
    return config.character()(m) * std::exp(config.nu() * h);
}

/// psi_{nu,alpha}(u) = exp(nu/2 B(z,z) + 2 pi i alpha.z).
inline Complex weight_factor(const SpaceConfig& config, const PointCoordinates& u)
{
    detail::check_point(config, u);
    return detail::theta_exponential(config, u.z, nullptr);
}

inline Complex basis_eval(const SpaceConfig& config, const BasisIndex& idx, const PointCoordinates& u,
                          Reduction reduction = Reduction::fundamental_domain)
{
    detail::check_index(config, idx);
    detail::check_point(config, u);
    Complex perp = 1.0;
    for (std::size_t j = 0; j < idx.k.size(); ++j) perp *= detail::int_power(u.z_perp(j), idx.k[j]);
    if (reduction == Reduction::fundamental_domain) {
        const auto m = detail::floor_real(u.z);
        if (!detail::is_zero(m)) {
            CVector z0 = u.z;
            for (int j = 0; j < config.r(); ++j) z0(j) -= static_cast<double>(m[j]);
            return automorphy_factor(config, z0, m) * detail::theta_exponential(config, z0, &idx.n) * perp;
        }
    }
    return detail::theta_exponential(config, u.z, &idx.n) * perp;
}

/// Squared norm of e_{n,k}:
/// (det B)^{-1/2} (pi/2nu)^{r/2} (pi/nu)^{g-r} (k!/nu^{|k|}) exp((2 pi^2/nu)(n+alpha)^T B^{-1} (n+alpha)).
inline LogValue basis_norm_sq(const SpaceConfig& config, const BasisIndex& idx)
{
    detail::check_index(config, idx);
    const double nu = config.nu();
    const int r = config.r();
    const int perp_dim = config.g() - r;
    const int k_total = std::accumulate(idx.k.begin(), idx.k.end(), 0);
    double log_k_factor = 0.0;
    if (k_total > 30) {
        for (int kj : idx.k) log_k_factor += std::lgamma(kj + 1.0);
        log_k_factor -= k_total * std::log(nu);
    } else {
        double kf = 1.0;
        for (int kj : idx.k) {
            for (int i = 2; i <= kj; ++i) kf *= i;
        }
        log_k_factor = std::log(kf) - k_total * std::log(nu);
    }
    const double log_norm = -0.5 * std::log(config.lattice().det_b()) + 0.5 * r * std::log(pi / (2.0 * nu)) +
                            perp_dim * std::log(pi / nu) + log_k_factor +
                            (2.0 * pi * pi / nu) * detail::shifted_quadratic(config, idx.n);
    return {log_norm, 1};
}

/// e_{n,k} / ||e_{n,k}||, the orthonormal variant of the basis.
inline Complex basis_eval_normalized(const SpaceConfig& config, const BasisIndex& idx, const PointCoordinates& u,
                                     Reduction reduction = Reduction::fundamental_domain)
{
    return basis_eval(config, idx, u, reduction) * std::exp(-0.5 * basis_norm_sq(config, idx).log_value);
}

inline Complex synthesize(const SpaceConfig& config, const CoefficientField& coeffs, const PointCoordinates& u,
                          Reduction reduction = Reduction::fundamental_domain)
{
    CompensatedSum acc;
    for (const auto& [idx, a] : coeffs) acc.add(a * basis_eval(config, idx, u, reduction));
    return acc.value();
}

/// sum |a_{n,k}|^2 ||e_{n,k}||^2, i.e. ||f||^2 of the synthesized function.
inline double growth_functional(const SpaceConfig& config, const CoefficientField& coeffs)
{
    CompensatedSum acc;
    for (const auto& [idx, a] : coeffs) acc.add(std::norm(a) * basis_norm_sq(config, idx).value());
    return acc.value().real();
}

struct KernelValue {
    Complex value;
    double error_bound = 0.0;
};

namespace detail
{

/// Pieces of K(u, v) that do not involve the theta sum.
struct KernelFactors {
    double lattice_constant = 1.0; // sqrt(det B) (2nu/pi)^{r/2}
    Complex gaussian = 1.0;        // exp(nu/2 (B(z,z) + conj B(w,w)))
    Complex perp = 1.0;            // (nu/pi)^{g-r} exp(nu <z_perp, w_perp>)
};

inline KernelFactors kernel_factors(const SpaceConfig& config, const PointCoordinates& u, const PointCoordinates& v)
{
    const int r = config.r();
    const int perp_dim = config.g() - r;
    const double nu = config.nu();
    KernelFactors f;
    if (r > 0) {
        f.lattice_constant = std::sqrt(config.lattice().det_b()) * std::pow(2.0 * nu / pi, 0.5 * r);
        const Complex bzz = b_form(config.lattice(), u.z, u.z);
        const Complex bww = b_form(config.lattice(), v.z, v.z);
        f.gaussian = std::exp(0.5 * nu * (bzz + std::conj(bww)));
    }
    if (perp_dim > 0) {
        Complex inner = 0.0;
        for (int j = 0; j < perp_dim; ++j) inner += u.z_perp(j) * std::conj(v.z_perp(j));
        f.perp = std::pow(nu / pi, static_cast<double>(perp_dim)) * std::exp(nu * inner);
    }
    return f;
}

inline KernelValue kernel_unreduced(const SpaceConfig& config, const PointCoordinates& u, const PointCoordinates& v,
                                    double tol, const ThetaOptions& opts)
{
    const int r = config.r();
    const KernelFactors f = kernel_factors(config, u, v);
    if (r == 0) return {f.perp, 0.0};
    const double outer = f.lattice_constant * std::abs(f.gaussian) * std::abs(f.perp);
    const ThetaValue theta = theta_eval(config.kernel_theta(), u.z - v.z.conjugate(), tol / outer, opts);
    const Complex lattice_part = f.lattice_constant * f.gaussian * theta.value;
    const Complex value = (r == config.g()) ? lattice_part : lattice_part * f.perp;
    return {value, theta.tail_bound * outer};
}

} // namespace detail

/// Theta tolerance used by `kernel_eval` for an unreduced pair (u, v).
inline double kernel_theta_tolerance(const SpaceConfig& config, const PointCoordinates& u, const PointCoordinates& v,
                                     double tol)
{
    const auto f = detail::kernel_factors(config, u, v);
    return tol / (f.lattice_constant * std::abs(f.gaussian) * std::abs(f.perp));
}

/// Reproducing kernel K(u, v); |K - returned value| <= error_bound <= tol.
inline KernelValue kernel_eval(const SpaceConfig& config, const PointCoordinates& u, const PointCoordinates& v,
                               double tol, Reduction reduction = Reduction::fundamental_domain,
                               const ThetaOptions& opts = {})
{
    detail::check_point(config, u);
    detail::check_point(config, v);
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    if (reduction == Reduction::fundamental_domain && config.r() > 0) {
        const auto mu = detail::floor_real(u.z);
        const auto mv = detail::floor_real(v.z);
        if (!detail::is_zero(mu) || !detail::is_zero(mv)) {
            PointCoordinates u0 = u, v0 = v;
            for (int j = 0; j < config.r(); ++j) {
                u0.z(j) -= static_cast<double>(mu[j]);
                v0.z(j) -= static_cast<double>(mv[j]);
            }
            // K(u0 + m, v0 + m') = J(z0, m) conj(J(w0, m')) K(u0, v0)
            const Complex factor = automorphy_factor(config, u0.z, mu) * std::conj(automorphy_factor(config, v0.z, mv));
            const KernelValue reduced = detail::kernel_unreduced(config, u0, v0, tol / std::abs(factor), opts);
            return {factor * reduced.value, reduced.error_bound * std::abs(factor)};
        }
    }
    return detail::kernel_unreduced(config, u, v, tol, opts);
}

/// K~(u) = K(u, u), real and positive.
inline double kernel_diagonal(const SpaceConfig& config, const PointCoordinates& u, double tol,
                              const ThetaOptions& opts = {})
{
    return kernel_eval(config, u, u, tol, Reduction::fundamental_domain, opts).value.real();
}

/// u -> K(u, v) for a fixed v, caching the theta factor between calls that share z.
///
/// The theta sum is taken to tolerance tol / (sqrt(det B)(2nu/pi)^{r/2}|exp(...)|), so the
/// error at u is at most tol * |perp factor at u|. Calls evaluate the unreduced formula.
class KernelSection
{
public:
    KernelSection(const SpaceConfig& config, PointCoordinates v, double tol, ThetaOptions opts = {})
        : config_(&config), v_(std::move(v)), tol_(tol), opts_(opts)
    {
        detail::check_point(config, v_);
        if (config.r() > 0) bww_conj_ = std::conj(b_form(config.lattice(), v_.z, v_.z));
    }

    Complex operator()(const PointCoordinates& u) const
    {
        const SpaceConfig& config = *config_;
        const int r = config.r();
        const int perp_dim = config.g() - r;
        Complex perp = 1.0;
        if (perp_dim > 0) {
            Complex inner = 0.0;
            for (int j = 0; j < perp_dim; ++j) inner += u.z_perp(j) * std::conj(v_.z_perp(j));
            perp = std::pow(config.nu() / pi, static_cast<double>(perp_dim)) * std::exp(config.nu() * inner);
        }
        if (r == 0) return perp;
        if (!cached_ || cached_z_ != u.z) {
            const double constant = std::sqrt(config.lattice().det_b()) * std::pow(2.0 * config.nu() / pi, 0.5 * r);
            const Complex gaussian = std::exp(0.5 * config.nu() * (b_form(config.lattice(), u.z, u.z) + bww_conj_));
            const ThetaValue theta = theta_eval(config.kernel_theta(), u.z - v_.z.conjugate(),
                                                tol_ / (constant * std::abs(gaussian)), opts_);
            cached_lattice_part_ = constant * gaussian * theta.value;
            cached_z_ = u.z;
            cached_ = true;
        }
        return cached_lattice_part_ * perp;
    }

private:
    const SpaceConfig* config_;
    PointCoordinates v_;
    double tol_;
    ThetaOptions opts_;
    Complex bww_conj_ = 0.0;
    mutable bool cached_ = false;
    mutable CVector cached_z_;
    mutable Complex cached_lattice_part_ = 0.0;
};

struct EvaluationBoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

/// |f(u)| <= sqrt(K~(u)) ||f||, accepted with relative slack `slack`.
inline EvaluationBoundReport evaluation_bound_check(const SpaceConfig& config, const CoefficientField& coeffs,
                                                    const PointCoordinates& u, double tol = 1e-12,
                                                    double slack = 1e-9)
{
    EvaluationBoundReport report;
    report.lhs = std::abs(synthesize(config, coeffs, u));
    report.rhs = std::sqrt(kernel_diagonal(config, u, tol)) * std::sqrt(growth_functional(config, coeffs));
    report.holds = report.lhs <= report.rhs * (1.0 + slack);
    return report;
}

/// Basis indices with n in [-n_radius, n_radius]^r and |k| <= k_max, ordered by
/// (n+alpha)^T B^{-1} (n+alpha), then |k|, then lexicographically.
inline std::vector<BasisIndex> enumerate_basis(const SpaceConfig& config, int n_radius, int k_max)
{
    const int r = config.r();
    const int perp_dim = config.g() - r;
    std::vector<std::vector<int>> ns;
    std::vector<int> n(r, -n_radius);
    for (;;) {
        ns.push_back(n);
        int j = 0;
        while (j < r && n[j] == n_radius) n[j++] = -n_radius;
        if (j == r) break;
        ++n[j];
    }
    std::vector<std::vector<int>> ks;
    std::vector<int> k(perp_dim, 0);
    for (;;) {
        if (std::accumulate(k.begin(), k.end(), 0) <= k_max) ks.push_back(k);
        int j = 0;
        while (j < perp_dim && k[j] == k_max) k[j++] = 0;
        if (j == perp_dim) break;
        ++k[j];
    }
    struct Keyed {
        double q;
        int k_total;
        BasisIndex idx;
    };
    std::vector<Keyed> all;
    for (const auto& nn : ns) {
        const double q = detail::shifted_quadratic(config, nn);
        for (const auto& kk : ks) all.push_back({q, std::accumulate(kk.begin(), kk.end(), 0), {nn, kk}});
    }
    std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
        if (a.q != b.q) return a.q < b.q;
        if (a.k_total != b.k_total) return a.k_total < b.k_total;
        return a.idx < b.idx;
    });
    std::vector<BasisIndex> out;
    out.reserve(all.size());
    for (auto& e : all) out.push_back(std::move(e.idx));
    return out;
}

/// Relative defect of f(u + gamma) = chi(gamma) exp(nu H(u + gamma/2, gamma)) f(u), using ambient data
/// for the automorphy factor.
inline double functional_equation_defect(const SpaceConfig& config,
                                         const std::function<Complex(const PointCoordinates&)>& f,
                                         const CVector& u, std::span<const int> m)
{
    const CVector gamma = lattice_vector(config.lattice(), m);
    const Complex lhs = f(coordinates(config.lattice(), u + gamma));
    const Complex rhs = automorphy_factor_ambient(config, u, m) * f(coordinates(config.lattice(), u));
    const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
    return std::abs(lhs - rhs) / scale;
}

} // namespace thetafock

#endif
