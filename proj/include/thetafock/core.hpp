// Shared scalar/matrix aliases, the error type, and compensated summation.

#ifndef THETAFOCK_CORE_HPP
#define THETAFOCK_CORE_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace thetafock
{

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using IVector = Eigen::VectorXi;

inline constexpr double pi = std::numbers::pi;
inline constexpr Complex imag_unit{0.0, 1.0};

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    NotHermitian,
    NotPositiveDefinite,
    NotIndependent,
    NotIsotropic,
    RankExceedsG,
    NonUnitModulus,
    SingularBasis,
    NotSymmetric,
    ImaginaryPartNotPositiveDefinite,
    TailBoundUnreachable,
    RealPartNotPositiveDefinite,
    GridTooCoarse,
    DimensionCapExceeded,
    Overflow,
    ParseError,
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NotIndependent: return "NotIndependent";
    case ErrorKind::NotIsotropic: return "NotIsotropic";
    case ErrorKind::RankExceedsG: return "RankExceedsG";
    case ErrorKind::NonUnitModulus: return "NonUnitModulus";
    case ErrorKind::SingularBasis: return "SingularBasis";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::ImaginaryPartNotPositiveDefinite: return "ImaginaryPartNotPositiveDefinite";
    case ErrorKind::TailBoundUnreachable: return "TailBoundUnreachable";
    case ErrorKind::RealPartNotPositiveDefinite: return "RealPartNotPositiveDefinite";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require_size(Eigen::Index actual, Eigen::Index expected, const char* what)
{
    if (actual != expected) {
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": expected length " +
                                                      std::to_string(expected) + ", got " +
                                                      std::to_string(actual));
    }
}

/// Neumaier's variant of Kahan summation, applied componentwise.
class CompensatedSum
{
public:
    void add(Complex x) noexcept
    {
        add_component(re_, re_c_, x.real());
        add_component(im_, im_c_, x.imag());
    }

    Complex value() const noexcept { return {re_ + re_c_, im_ + im_c_}; }

private:
    static void add_component(double& sum, double& carry, double x) noexcept
    {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }

    double re_ = 0.0, re_c_ = 0.0;
    double im_ = 0.0, im_c_ = 0.0;
};

/// Largest entry modulus; the natural scale for absolute tolerances on a form.
template <typename Derived>
double max_abs_entry(const Eigen::MatrixBase<Derived>& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace thetafock

#endif
