#pragma once

#include <complex>

namespace grushin {

using cplx = std::complex<double>;

// value = mantissa * exp(exponent); used where the plain double would overflow.
struct ScaledValue {
    double mantissa = 0.0;
    double exponent = 0.0;
    double value() const;
    double log_abs() const;
};

// Modified Bessel functions of real order nu >= 0 (x > 0).
double bessel_I(double x, double nu);
double bessel_K(double x, double nu);
// exp(-x) I and exp(x) K, valid far past the overflow point of the plain versions.
ScaledValue bessel_I_scaled(double x, double nu);
ScaledValue bessel_K_scaled(double x, double nu);

// Imaginary order: Re I_{i nu}(x) and K_{i nu}(x).  Both real.
double bessel_I_tilde(double x, double nu);
double bessel_K_tilde(double x, double nu);

// Complex order.  Ascending series (with a complex log-gamma) below x = 40,
// Hankel expansion above.
cplx bessel_I_complex(double x, cplx order);
// Reflection formula for x <= max(2, |Im order|), trapezoid rule on the
// cosh integral representation beyond.  Requires a non-integer order when
// the reflection branch is taken.
cplx bessel_K_complex(double x, cplx order);
// exp(x) K_order(x) by the integral representation.
cplx bessel_K_complex_scaled(double x, cplx order);

cplx log_gamma(cplx z);

// f, f', f'' at x; derivatives from the order recurrences, not from the ODE.
struct BesselJet {
    double f = 0.0;
    double df = 0.0;
    double d2f = 0.0;
};

BesselJet bessel_I_jet(double x, double nu);
BesselJet bessel_K_jet(double x, double nu);
BesselJet bessel_I_tilde_jet(double x, double nu);
BesselJet bessel_K_tilde_jet(double x, double nu);

// T = x^2 d^2 + a x d + b - h x^{2 beta}, acting on x^delta L^2(dx).
struct BesselModelOp {
    double a = 0.0;
    double b = 0.0;
    double h = 1.0;
    double beta = 1.0;
    double delta = 0.0;

    double mu_op() const { return (a - 1.0) * (a - 1.0) - 4.0 * b; }
    double nu() const;
};

enum class OrderKind { real, imaginary };

struct KernelSolutionPair {
    BesselModelOp op;
    OrderKind order_kind = OrderKind::real;
    double nu = 0.0;
    double exponent_prefix = 0.0; // (1 - a)/2
    double argument_scale = 0.0;  // sqrt(h)/beta

    struct Jet {
        double u = 0.0;
        double du = 0.0;
        double d2u = 0.0;
    };

    double z(double x) const;
    Jet u1_jet(double x) const;
    Jet u2_jet(double x) const;
    double u1(double x) const { return u1_jet(x).u; }
    double u2(double x) const { return u2_jet(x).u; }
    // |T u| divided by the sum of the magnitudes of the four terms of T u.
    double relative_residual(int which, double x) const;
};

KernelSolutionPair kernel_solutions(const BesselModelOp& op);

// x^{-d} T x^{d}; delta moves to delta - d so that weighted-L2 questions are unchanged.
BesselModelOp conjugate_by_weight(const BesselModelOp& op, double d);

bool has_kernel_in_weighted_L2(const BesselModelOp& op);

enum class Membership { InL2, NotInL2, Inconclusive };

struct MembershipReport {
    Membership verdict = Membership::Inconclusive;
    // Exponent e in |x^{-delta} u| ~ x^e near 0 (NaN when the tail already decides).
    double fitted_exponent = 0.0;
    double fit_rms = 0.0;
    // ln|u(z=40)| - ln|u(z=20)|.
    double tail_log_growth = 0.0;
};

// Brute-force square-integrability of x^{-delta} u_which on (0, inf):
// exponential behaviour at infinity, then a power fit of window integrals near 0.
MembershipReport weighted_L2_membership_oracle(const BesselModelOp& op, int which);

const char* to_string(Membership m);

} // namespace grushin
