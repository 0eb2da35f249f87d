#include <gtest/gtest.h>

#include "thetafock/thetafock.hpp"

using namespace thetafock;

namespace
{

constexpr Complex I{0.0, 1.0};

SpaceConfig scalar_config(double nu, double alpha = 0.0, Complex omega = 1.0)
{
    HermitianSpace s = validate_space(CMatrix::Identity(1, 1));
    CVector w(1);
    w << omega;
    RVector a(1);
    a << alpha;
    return SpaceConfig(build_lattice(s, {w}), Character(a), nu);
}

SpaceConfig fock_config(int g, double nu)
{
    HermitianSpace s = validate_space(CMatrix::Identity(g, g));
    return SpaceConfig(build_lattice(s, {}), Character(RVector(0)), nu);
}

PointCoordinates point(std::initializer_list<Complex> z, std::initializer_list<Complex> perp)
{
    PointCoordinates p{CVector(static_cast<Eigen::Index>(z.size())), CVector(static_cast<Eigen::Index>(perp.size()))};
    Eigen::Index i = 0;
    for (auto x : z) p.z(i++) = x;
    i = 0;
    for (auto x : perp) p.z_perp(i++) = x;
    return p;
}

CVector random_vector(int g, Rng& rng, double scale)
{
    CVector u(g);
    for (int j = 0; j < g; ++j) u(j) = scale * rng.complex_normal();
    return u;
}

} // namespace

TEST(WeightFactor, ScalarValues)
{
    const SpaceConfig c = scalar_config(2.0);
    EXPECT_EQ(weight_factor(c, point({0.0}, {})), Complex(1.0));
    EXPECT_NEAR(std::abs(weight_factor(c, point({1.0}, {})) - std::exp(1.0)), 0.0, 1e-14);
}

TEST(WeightFactor, FunctionalEquation)
{
    Rng rng(41);
    for (int t = 0; t < 20; ++t) {
        const SpaceConfig c = random_config(2, 1 + t % 2, rng);
        const CVector u = random_vector(2, rng, 0.5);
        std::vector<int> m(c.r());
        for (auto& mj : m) mj = rng.integer(-2, 2);
        auto psi = [&](const PointCoordinates& p) { return weight_factor(c, p); };
        EXPECT_LE(functional_equation_defect(c, psi, u, m), 1e-10);
    }
}

TEST(BasisEval, ConstantAtOrigin)
{
    Rng rng(1);
    const SpaceConfig c = random_config(2, 1, rng);
    EXPECT_EQ(basis_eval(c, {{0}, {0}}, point({0.0}, {0.0})), Complex(1.0));
}

TEST(BasisEval, ScalarValue)
{
    const SpaceConfig c = scalar_config(pi);
    const Complex v = basis_eval(c, {{1}, {}}, point({I}, {}));
    EXPECT_NEAR(std::abs(v - std::exp(-pi / 2 - 2 * pi)), 0.0, 1e-16);
}

TEST(BasisEval, FunctionalEquationWithAmbientFactor)
{
    Rng rng(43);
    for (int t = 0; t < 40; ++t) {
        const int g = 1 + t % 3;
        const int r = rng.integer(1, g);
        const SpaceConfig c = random_config(g, r, rng);
        BasisIndex idx{std::vector<int>(r), std::vector<int>(g - r)};
        for (auto& n : idx.n) n = rng.integer(-2, 2);
        for (auto& k : idx.k) k = rng.integer(0, 3);
        const CVector u = random_vector(g, rng, 0.6);
        std::vector<int> m(r);
        for (auto& mj : m) mj = rng.integer(-3, 3);
        auto e = [&](const PointCoordinates& p) { return basis_eval(c, idx, p, Reduction::none); };
        EXPECT_LE(functional_equation_defect(c, e, u, m), 1e-10);
    }
}

TEST(BasisEval, ReductionMatchesDirectEvaluation)
{
    Rng rng(44);
    const SpaceConfig c = random_config(2, 1, rng);
    for (int t = 0; t < 20; ++t) {
        const PointCoordinates p = point({Complex(rng.uniform(-4, 4), rng.uniform(-0.5, 0.5))}, {rng.complex_in_box(1)});
        const BasisIndex idx{{rng.integer(-2, 2)}, {rng.integer(0, 3)}};
        const Complex a = basis_eval(c, idx, p, Reduction::none);
        const Complex b = basis_eval(c, idx, p, Reduction::fundamental_domain);
        EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a));
    }
}

TEST(BasisNorm, ScalarLatticeAgainstQuadrature)
{
    const SpaceConfig c = scalar_config(pi);
    const double closed = basis_norm_sq(c, {{0}, {}}).value();
    EXPECT_NEAR(closed, 0.7071067812, 1e-10);
    // int_0^1 dx int_R |e_0(x+iy)|^2 exp(-pi (x^2+y^2)) dy, integrand assembled by hand
    const Complex oracle = integrate_line(
        [](double x) {
            return integrate_line(
                [x](double y) {
                    const Complex z(x, y);
                    return Complex(std::norm(std::exp(0.5 * pi * z * z)) * std::exp(-pi * std::norm(z)));
                },
                -12.0, 12.0);
        },
        0.0, 1.0);
    EXPECT_NEAR(oracle.real(), closed, 1e-8);
}

TEST(BasisNorm, ClassicalFockMonomial)
{
    const SpaceConfig c = fock_config(1, pi);
    const double closed = basis_norm_sq(c, {{}, {2}}).value();
    EXPECT_NEAR(closed, 2.0 / (pi * pi), 1e-12);
    // polar coordinates: 2 pi int_0^inf rho^5 exp(-pi rho^2) d rho
    const Complex oracle =
        integrate_line([](double rho) { return Complex(2 * pi * std::pow(rho, 5) * std::exp(-pi * rho * rho)); }, 0.0, 12.0);
    EXPECT_NEAR(oracle.real(), closed, 1e-10);
}

TEST(BasisNorm, ScalingInN)
{
    Rng rng(45);
    const SpaceConfig c = random_config(3, 2, rng);
    const BasisIndex a{{1, -1}, {2}}, b{{2, -1}, {2}};
    const double lhs = basis_norm_sq(c, b).log_value - basis_norm_sq(c, a).log_value;
    RVector t(2);
    t << 2.0 * (1 + c.alpha()(0)) + 1.0, 2.0 * (-1 + c.alpha()(1));
    const double rhs = (2 * pi * pi / c.nu()) * (c.lattice().b_inverse() * t)(0);
    EXPECT_NEAR(lhs, rhs, 1e-11 * std::abs(rhs));
}

TEST(BasisNorm, FactorialBranchesAgree)
{
    const SpaceConfig c = fock_config(1, 2.0);
    const double l30 = basis_norm_sq(c, {{}, {30}}).log_value;
    const double l31 = basis_norm_sq(c, {{}, {31}}).log_value;
    EXPECT_NEAR(l31 - l30, std::log(31.0 / 2.0), 1e-12);
}

TEST(BasisNorm, OverflowIsReported)
{
    const SpaceConfig c = scalar_config(0.05);
    const LogValue big = basis_norm_sq(c, {{40}, {}});
    EXPECT_GT(big.log_value, 1000.0);
    try {
        (void)big.value();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Overflow);
    }
}

TEST(Synthesize, SingleTermAndLinearity)
{
    Rng rng(46);
    const SpaceConfig c = random_config(2, 1, rng);
    const PointCoordinates p = random_point(c, rng, 0.7);
    const BasisIndex idx{{0}, {0}};
    EXPECT_EQ(synthesize(c, {{idx, 1.0}}, p), basis_eval(c, idx, p));
    const CoefficientField f = random_coefficients(c, rng, 3, 2, 2);
    const CoefficientField h = random_coefficients(c, rng, 3, 2, 2);
    const Complex c1(0.3, -1.2), c2(2.0, 0.5);
    CoefficientField mix;
    for (auto& [k, a] : f) mix[k] += c1 * a;
    for (auto& [k, a] : h) mix[k] += c2 * a;
    const Complex lhs = synthesize(c, mix, p);
    const Complex rhs = c1 * synthesize(c, f, p) + c2 * synthesize(c, h, p);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * (1 + std::abs(lhs)));
}

TEST(GrowthFunctional, Additivity)
{
    Rng rng(47);
    const SpaceConfig c = random_config(2, 1, rng);
    EXPECT_EQ(growth_functional(c, {}), 0.0);
    const BasisIndex a{{0}, {1}}, b{{-1}, {0}};
    EXPECT_DOUBLE_EQ(growth_functional(c, {{a, 1.0}}), basis_norm_sq(c, a).value());
    const double both = growth_functional(c, {{a, 1.0}, {b, 1.0}});
    EXPECT_NEAR(both, basis_norm_sq(c, a).value() + basis_norm_sq(c, b).value(), 1e-14 * both);
}

TEST(Kernel, FockReductionIsExact)
{
    const double nu = 1.7;
    const SpaceConfig c = fock_config(2, nu);
    const PointCoordinates u = point({}, {Complex(0.3, -0.2), Complex(0.1, 0.4)});
    const PointCoordinates v = point({}, {Complex(-0.5, 0.6), Complex(0.2, 0.2)});
    const Complex inner = u.z_perp(0) * std::conj(v.z_perp(0)) + u.z_perp(1) * std::conj(v.z_perp(1));
    const Complex direct = std::pow(nu / pi, 2.0) * std::exp(nu * inner);
    EXPECT_EQ(kernel_eval(c, u, v, 1e-12).value, direct);
    EXPECT_DOUBLE_EQ(kernel_diagonal(c, point({}, {0.0, 0.0}), 1e-12), std::pow(nu / pi, 2.0));
}

TEST(Kernel, HermitianSymmetryAndDiagonal)
{
    Rng rng(48);
    for (int t = 0; t < 20; ++t) {
        const int g = 1 + t % 2;
        const SpaceConfig c = random_config(g, rng.integer(0, g), rng);
        const PointCoordinates u = random_point(c, rng, 1.5), v = random_point(c, rng, 1.5);
        const double tol = 1e-12;
        const KernelValue kuv = kernel_eval(c, u, v, tol), kvu = kernel_eval(c, v, u, tol);
        EXPECT_LE(std::abs(kuv.value - std::conj(kvu.value)), 2 * tol);
        EXPECT_LE(kuv.error_bound, tol);
        const Complex kuu = kernel_eval(c, u, u, tol).value;
        EXPECT_LE(std::abs(kuu.imag()), tol);
        EXPECT_NEAR(kernel_diagonal(c, u, tol), kuu.real(), tol);
        EXPECT_GT(kuu.real(), 0.0);
    }
}

TEST(Kernel, DiagonalGrowsWithPerpendicularPart)
{
    Rng rng(49);
    const SpaceConfig c = random_config(2, 1, rng);
    const PointCoordinates a = point({Complex(0.2, 0.1)}, {Complex(0.3, 0.2)});
    const PointCoordinates b = point({Complex(0.2, 0.1)}, {Complex(0.6, 0.4)});
    EXPECT_GT(kernel_diagonal(c, b, 1e-12), kernel_diagonal(c, a, 1e-12));
}

TEST(Kernel, MatchesBasisSeries)
{
    Rng rng(50);
    for (int t = 0; t < 8; ++t) {
        const SpaceConfig c = random_config(2, 1, rng);
        const PointCoordinates u = random_point(c, rng, 0.5), v = random_point(c, rng, 0.5);
        const Complex closed = kernel_eval(c, u, v, 1e-13).value;
        EXPECT_LE(std::abs(closed - kernel_series_converged(c, u, v)), 1e-8);
    }
}

TEST(Kernel, ReductionIsConsistent)
{
    Rng rng(51);
    const SpaceConfig c = random_config(2, 1, rng);
    const PointCoordinates u = point({Complex(2.3, 0.2)}, {Complex(0.1, 0.1)});
    const PointCoordinates v = point({Complex(-1.6, -0.1)}, {Complex(0.2, -0.3)});
    const Complex a = kernel_eval(c, u, v, 1e-12, Reduction::none).value;
    const Complex b = kernel_eval(c, u, v, 1e-12, Reduction::fundamental_domain).value;
    EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a));
}

TEST(Kernel, SectionMatchesPointwiseEvaluation)
{
    Rng rng(52);
    const SpaceConfig c = random_config(2, 1, rng);
    const PointCoordinates v = random_point(c, rng, 0.4);
    const KernelSection section(c, v, 1e-12);
    for (int t = 0; t < 5; ++t) {
        const PointCoordinates u = random_point(c, rng, 0.8);
        EXPECT_LE(std::abs(section(u) - kernel_eval(c, u, v, 1e-12, Reduction::none).value), 2e-12);
    }
}

TEST(Kernel, FunctionalEquationInFirstArgument)
{
    Rng rng(53);
    const SpaceConfig c = random_config(2, 1, rng);
    const PointCoordinates v = random_point(c, rng, 0.4);
    auto k = [&](const PointCoordinates& p) { return kernel_eval(c, p, v, 1e-13, Reduction::none).value; };
    for (int t = 0; t < 5; ++t) {
        const CVector u = random_vector(2, rng, 0.4);
        const std::vector<int> m{rng.integer(-2, 2)};
        EXPECT_LE(functional_equation_defect(c, k, u, m), 1e-9);
    }
}

TEST(EvaluationBound, Cases)
{
    Rng rng(54);
    const SpaceConfig c = random_config(2, 1, rng);
    const PointCoordinates u = random_point(c, rng, 0.5);
    const EvaluationBoundReport zero = evaluation_bound_check(c, {}, u);
    EXPECT_TRUE(zero.holds);
    EXPECT_EQ(zero.lhs, 0.0);
    EXPECT_TRUE(evaluation_bound_check(c, {{{{0}, {0}}, 1.0}}, u).holds);
    for (int t = 0; t < 100; ++t) {
        const SpaceConfig cc = random_config(1 + t % 2, t % 2, rng);
        const CoefficientField f = random_coefficients(cc, rng, rng.integer(1, 5), 2, 3);
        const PointCoordinates p = random_point(cc, rng, 1.0);
        EXPECT_TRUE(evaluation_bound_check(cc, f, p).holds);
    }
}

TEST(EnumerateBasis, OrderAndCount)
{
    Rng rng(55);
    const SpaceConfig c = random_config(3, 1, rng);
    const auto idx = enumerate_basis(c, 2, 2);
    EXPECT_EQ(idx.size(), 5u * 6u);
    for (std::size_t i = 1; i < idx.size(); ++i) {
        EXPECT_LE(basis_norm_sq(c, {idx[i - 1].n, {0, 0}}).log_value, basis_norm_sq(c, {idx[i].n, {0, 0}}).log_value + 1e-12);
    }
}

TEST(Space, MeasureFactor)
{
    const SpaceConfig c = scalar_config(1.0, 0.0, Complex(1.0, 1.0));
    EXPECT_NEAR(ambient_measure_factor(c), 2.0, 1e-14);
}
