#include "grushin/bessel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "grushin/errors.hpp"

namespace grushin {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSeriesLimit = 40.0;   // ascending series for complex order below this
constexpr double kRealOverflow = 700.0; // plain doubles are safe below this

void check_x(double x, const char* who) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw DomainError(std::string(who) + ": x must be finite and > 0, got " + std::to_string(x));
}

void check_nu(double nu, const char* who) {
    if (!(nu >= 0.0) || !std::isfinite(nu))
        throw DomainError(std::string(who) + ": order must be finite and >= 0");
}

// Real order, any sign, via Boost.
double boost_I(double nu, double x) {
    try {
        return boost::math::cyl_bessel_i(nu, x);
    } catch (const std::overflow_error&) {
        throw DomainError("bessel_I overflows at x = " + std::to_string(x) + "; use bessel_I_scaled");
    }
}

double boost_K(double nu, double x) {
    try {
        return boost::math::cyl_bessel_k(std::abs(nu), x);
    } catch (const std::overflow_error&) {
        throw DomainError("bessel_K overflows at x = " + std::to_string(x));
    }
}

cplx series_I(double x, cplx mu) {
    const double q = 0.25 * x * x;
    cplx term = std::exp(mu * std::log(0.5 * x) - log_gamma(mu + 1.0));
    cplx sum = term;
    for (int k = 1; k < 2000; ++k) {
        term *= q / (static_cast<double>(k) * (static_cast<double>(k) + mu));
        sum += term;
        if (k > x && std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

// Hankel sum  sum_k s^k a_k(mu) / x^k,  s = -1 for I, +1 for K.
cplx hankel_sum(double x, cplx mu, double s) {
    const cplx m4 = 4.0 * mu * mu;
    cplx term = 1.0;
    cplx sum = 1.0;
    double last = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 400; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= s * (m4 - odd * odd) / (8.0 * k * x);
        const double mag = std::abs(term);
        if (mag > last && k > 2) break; // asymptotic series started to diverge
        sum += term;
        last = mag;
        if (mag <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

cplx I_scaled_hankel(double x, cplx mu) { return hankel_sum(x, mu, -1.0) / std::sqrt(2.0 * kPi * x); }

cplx K_scaled_hankel(double x, cplx mu) { return hankel_sum(x, mu, 1.0) * std::sqrt(kPi / (2.0 * x)); }

bool is_real_order(cplx mu) { return mu.imag() == 0.0; }

} // namespace

double ScaledValue::value() const { return mantissa * std::exp(exponent); }

double ScaledValue::log_abs() const { return std::log(std::abs(mantissa)) + exponent; }

cplx log_gamma(cplx z) {
    if (z.real() < 0.5) {
        // Reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z).
        const cplx s = std::sin(kPi * z);
        if (std::abs(s) == 0.0) throw DomainError("log_gamma: pole");
        return std::log(kPi) - std::log(s) - log_gamma(1.0 - z);
    }
    cplx shift = 0.0;
    cplx w = z;
    while (w.real() < 15.0 || std::abs(w) < 15.0) {
        shift += std::log(w);
        w += 1.0;
    }
    // Stirling series with Bernoulli numbers B_2 .. B_16.
    static constexpr std::array<double, 8> b = {1.0 / 6.0,   -1.0 / 30.0,   1.0 / 42.0,    -1.0 / 30.0,
                                                5.0 / 66.0,  -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0};
    const cplx winv = 1.0 / w;
    const cplx winv2 = winv * winv;
    cplx corr = 0.0;
    cplx wp = winv;
    for (int m = 1; m <= 8; ++m) {
        corr += b[m - 1] / (2.0 * m * (2.0 * m - 1.0)) * wp;
        wp *= winv2;
    }
    return (w - 0.5) * std::log(w) - w + 0.5 * std::log(2.0 * kPi) + corr - shift;
}

double bessel_I(double x, double nu) {
    check_x(x, "bessel_I");
    check_nu(nu, "bessel_I");
    return boost_I(nu, x);
}

double bessel_K(double x, double nu) {
    check_x(x, "bessel_K");
    check_nu(nu, "bessel_K");
    return boost_K(nu, x);
}

ScaledValue bessel_I_scaled(double x, double nu) {
    check_x(x, "bessel_I_scaled");
    check_nu(nu, "bessel_I_scaled");
    if (x <= kRealOverflow) return {boost_I(nu, x) * std::exp(-x), x};
    return {I_scaled_hankel(x, nu).real(), x};
}

ScaledValue bessel_K_scaled(double x, double nu) {
    check_x(x, "bessel_K_scaled");
    check_nu(nu, "bessel_K_scaled");
    if (x <= kRealOverflow) return {boost_K(nu, x) * std::exp(x), -x};
    return {K_scaled_hankel(x, nu).real(), -x};
}

cplx bessel_I_complex(double x, cplx order) {
    check_x(x, "bessel_I_complex");
    if (is_real_order(order) && x <= kRealOverflow) return boost_I(order.real(), x);
    if (x <= kSeriesLimit) return series_I(x, order);
    if (x > kRealOverflow) throw DomainError("bessel_I_complex overflows; x too large");
    return I_scaled_hankel(x, order) * std::exp(x);
}

cplx bessel_K_complex_scaled(double x, cplx order) {
    check_x(x, "bessel_K_complex_scaled");
    // exp(x) K = int_0^inf exp(-x (cosh t - 1)) cosh(order t) dt.  The integrand is
    // entire, so the trapezoid rule converges geometrically; the step shrinks with
    // the width 1/sqrt(x) of the peak at t = 0.
    const double h = std::min(0.05, 0.5 / std::sqrt(x));
    const double re = std::abs(order.real());
    cplx sum = 0.5;
    for (int k = 1; k < 100000; ++k) {
        const double t = k * h;
        const double e = x * (std::cosh(t) - 1.0);
        if (e - re * t > 60.0) break;
        sum += std::exp(-e) * std::cosh(order * t);
    }
    return h * sum;
}

cplx bessel_K_complex(double x, cplx order) {
    check_x(x, "bessel_K_complex");
    if (is_real_order(order) && x <= kRealOverflow) return boost_K(order.real(), x);
    if (x <= std::max(2.0, std::abs(order.imag()))) {
        const cplx s = std::sin(kPi * order);
        if (std::abs(s) < 1e-14)
            throw DomainError("bessel_K_complex: integer order on the reflection branch");
        return 0.5 * kPi * (series_I(x, -order) - series_I(x, order)) / s;
    }
    return bessel_K_complex_scaled(x, order) * std::exp(-x);
}

double bessel_I_tilde(double x, double nu) {
    check_x(x, "bessel_I_tilde");
    check_nu(nu, "bessel_I_tilde");
    if (nu == 0.0) return boost_I(0.0, x);
    return bessel_I_complex(x, cplx(0.0, nu)).real();
}

double bessel_K_tilde(double x, double nu) {
    check_x(x, "bessel_K_tilde");
    check_nu(nu, "bessel_K_tilde");
    if (nu == 0.0) return boost_K(0.0, x);
    return bessel_K_complex(x, cplx(0.0, nu)).real();
}

BesselJet bessel_I_jet(double x, double nu) {
    check_x(x, "bessel_I_jet");
    check_nu(nu, "bessel_I_jet");
    const double i0 = boost_I(nu, x);
    const double im1 = boost_I(nu - 1.0, x), ip1 = boost_I(nu + 1.0, x);
    const double im2 = boost_I(nu - 2.0, x), ip2 = boost_I(nu + 2.0, x);
    return {i0, 0.5 * (im1 + ip1), 0.25 * (im2 + 2.0 * i0 + ip2)};
}

BesselJet bessel_K_jet(double x, double nu) {
    check_x(x, "bessel_K_jet");
    check_nu(nu, "bessel_K_jet");
    const double k0 = boost_K(nu, x);
    const double km1 = boost_K(nu - 1.0, x), kp1 = boost_K(nu + 1.0, x);
    const double km2 = boost_K(nu - 2.0, x), kp2 = boost_K(nu + 2.0, x);
    return {k0, -0.5 * (km1 + kp1), 0.25 * (km2 + 2.0 * k0 + kp2)};
}

BesselJet bessel_I_tilde_jet(double x, double nu) {
    check_x(x, "bessel_I_tilde_jet");
    check_nu(nu, "bessel_I_tilde_jet");
    if (nu == 0.0) return bessel_I_jet(x, 0.0);
    const cplx mu(0.0, nu);
    const cplx i0 = bessel_I_complex(x, mu);
    const cplx im1 = bessel_I_complex(x, mu - 1.0), ip1 = bessel_I_complex(x, mu + 1.0);
    const cplx im2 = bessel_I_complex(x, mu - 2.0), ip2 = bessel_I_complex(x, mu + 2.0);
    return {i0.real(), 0.5 * (im1 + ip1).real(), 0.25 * (im2 + 2.0 * i0 + ip2).real()};
}

BesselJet bessel_K_tilde_jet(double x, double nu) {
    check_x(x, "bessel_K_tilde_jet");
    check_nu(nu, "bessel_K_tilde_jet");
    if (nu == 0.0) return bessel_K_jet(x, 0.0);
    const cplx mu(0.0, nu);
    const cplx k0 = bessel_K_complex(x, mu);
    const cplx km1 = bessel_K_complex(x, mu - 1.0), kp1 = bessel_K_complex(x, mu + 1.0);
    const cplx km2 = bessel_K_complex(x, mu - 2.0), kp2 = bessel_K_complex(x, mu + 2.0);
    return {k0.real(), -0.5 * (km1 + kp1).real(), 0.25 * (km2 + 2.0 * k0 + kp2).real()};
}

// ---------------------------------------------------------------------------
// Model operator

double BesselModelOp::nu() const { return std::sqrt(std::abs(mu_op())) / (2.0 * beta); }

double KernelSolutionPair::z(double x) const { return argument_scale * std::pow(x, op.beta); }

namespace {

KernelSolutionPair::Jet lift(const KernelSolutionPair& k, double x, const BesselJet& f) {
    // u = x^s F(z), z = c x^beta:  theta u = x^s (s F + beta z F'),
    // x^2 u'' = x^s ((s^2 - s) F + (2 s beta + beta^2 - beta) z F' + beta^2 z^2 F'').
    const double s = k.exponent_prefix;
    const double b = k.op.beta;
    const double z = k.z(x);
    const double xs = std::pow(x, s);
    KernelSolutionPair::Jet j;
    j.u = xs * f.f;
    j.du = xs / x * (s * f.f + b * z * f.df);
    j.d2u = xs / (x * x) * ((s * s - s) * f.f + (2.0 * s * b + b * b - b) * z * f.df + b * b * z * z * f.d2f);
    return j;
}

} // namespace

KernelSolutionPair::Jet KernelSolutionPair::u1_jet(double x) const {
    check_x(x, "u1");
    const double zz = z(x);
    return lift(*this, x, order_kind == OrderKind::real ? bessel_I_jet(zz, nu) : bessel_I_tilde_jet(zz, nu));
}

KernelSolutionPair::Jet KernelSolutionPair::u2_jet(double x) const {
    check_x(x, "u2");
    const double zz = z(x);
    return lift(*this, x, order_kind == OrderKind::real ? bessel_K_jet(zz, nu) : bessel_K_tilde_jet(zz, nu));
}

double KernelSolutionPair::relative_residual(int which, double x) const {
    const Jet j = which == 1 ? u1_jet(x) : u2_jet(x);
    const double t1 = x * x * j.d2u;
    const double t2 = op.a * x * j.du;
    const double t3 = op.b * j.u;
    const double t4 = -op.h * std::pow(x, 2.0 * op.beta) * j.u;
    const double scale = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4);
    if (scale == 0.0) return 0.0;
    return std::abs(t1 + t2 + t3 + t4) / scale;
}

KernelSolutionPair kernel_solutions(const BesselModelOp& op) {
    if (!(op.h > 0.0))
        throw DomainError("kernel_solutions: h must be > 0; for h = 0 the kernel is spanned by "
                          "the pure powers x^lambda with lambda^2 + (a-1) lambda + b = 0");
    if (!(op.beta > 0.0)) throw DomainError("kernel_solutions: beta must be > 0");
    KernelSolutionPair k;
    k.op = op;
    k.order_kind = op.mu_op() >= 0.0 ? OrderKind::real : OrderKind::imaginary;
    k.nu = op.nu();
    k.exponent_prefix = 0.5 * (1.0 - op.a);
    k.argument_scale = std::sqrt(op.h) / op.beta;
    return k;
}

BesselModelOp conjugate_by_weight(const BesselModelOp& op, double d) {
    BesselModelOp r = op;
    r.a = op.a + 2.0 * d;
    r.b = d * d + d * (op.a - 1.0) + op.b;
    r.delta = op.delta - d;
    return r;
}

bool has_kernel_in_weighted_L2(const BesselModelOp& op) {
    const double m = op.mu_op();
    const double re_sqrt = m >= 0.0 ? std::sqrt(m) : 0.0;
    return 0.5 * (1.0 - op.a) - op.delta - 0.5 * re_sqrt > -0.5;
}

// ---------------------------------------------------------------------------
// Membership oracle

namespace {

// ln|F(z)| for the selected function with z = exp(lz).
double log_abs_F(const KernelSolutionPair& k, int which, double lz) {
    const double nu = k.nu;
    if (k.order_kind == OrderKind::imaginary && lz < -30.0) {
        // z^2 below 1e-26: the ascending series is its leading term.
        const cplx mu(0.0, nu);
        const cplx lead = std::exp(mu * (lz - std::log(2.0)) - log_gamma(mu + 1.0));
        const double v = which == 1 ? lead.real() : -kPi * lead.imag() / std::sinh(nu * kPi);
        return std::log(std::abs(v));
    }
    const double z = std::exp(lz);
    double v;
    if (k.order_kind == OrderKind::real)
        v = which == 1 ? boost_I(nu, z) : boost_K(nu, z);
    else
        v = which == 1 ? bessel_I_tilde(z, nu) : bessel_K_tilde(z, nu);
    return std::log(std::abs(v));
}

struct GaussLegendre {
    std::vector<double> x, w;
    explicit GaussLegendre(int n) : x(n), w(n) {
        for (int i = 0; i < n; ++i) {
            double r = std::cos(kPi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = r;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * r * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (r * p1 - p0) / (r * r - 1.0);
                const double dr = p1 / dp;
                r -= dr;
                if (std::abs(dr) < 1e-16) break;
            }
            double p0 = 1.0, p1 = r;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * r * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (r * p1 - p0) / (r * r - 1.0);
            x[i] = r;
            w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
        }
    }
};

// Least squares y ~ X beta via normal equations on a tiny system.
std::vector<double> lstsq(const std::vector<std::vector<double>>& X, const std::vector<double>& y, double& rms) {
    const std::size_t m = X.size(), p = X[0].size();
    std::vector<std::vector<double>> A(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) A[i][j] += X[r][i] * X[r][j];
            A[i][p] += X[r][i] * y[r];
        }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c || A[c][c] == 0.0) continue;
            const double f = A[r][c] / A[c][c];
            for (std::size_t j = c; j <= p; ++j) A[r][j] -= f * A[c][j];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t i = 0; i < p; ++i) beta[i] = A[i][p] / A[i][i];
    double ss = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double f = 0.0;
        for (std::size_t i = 0; i < p; ++i) f += X[r][i] * beta[i];
        ss += (f - y[r]) * (f - y[r]);
    }
    rms = std::sqrt(ss / static_cast<double>(m));
    return beta;
}

} // namespace

MembershipReport weighted_L2_membership_oracle(const BesselModelOp& op, int which) {
    if (which != 1 && which != 2) throw DomainError("membership oracle: which must be 1 or 2");
    const KernelSolutionPair k = kernel_solutions(op);
    const double s = k.exponent_prefix;
    const double b = op.beta;
    const double lscale = std::log(k.argument_scale);
    auto t_of = [&](double lz) { return (lz - lscale) / b; };
    // ln|x^{-delta} u| as a function of t = ln x.
    auto log_weighted = [&](double lz) { return (s - op.delta) * t_of(lz) + log_abs_F(k, which, lz); };

    MembershipReport rep;
    const double g20 = log_weighted(std::log(20.0));
    const double g40 = log_weighted(std::log(40.0));
    rep.tail_log_growth = g40 - g20;
    if (rep.tail_log_growth > 5.0) {
        rep.verdict = Membership::NotInL2;
        rep.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    if (rep.tail_log_growth > -5.0) {
        rep.verdict = Membership::Inconclusive;
        rep.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }

    // Windows in ln z.  Imaginary order: one full period of sin^2 each, so the
    // log-oscillation averages out exactly.  Real order: dyadic in x, placed far
    // enough down that the subdominant power is below 1e-8.
    const double nu = k.nu;
    double lz_hi, width;
    int nwin;
    bool log_regressor = false;
    if (k.order_kind == OrderKind::imaginary) {
        lz_hi = std::log(1e-4);
        width = kPi / nu;
        nwin = 10;
    } else {
        lz_hi = std::log(1e-4);
        if (nu > 0.0) lz_hi = std::min(lz_hi, std::log(2.0) - 9.3 / nu);
        if (lz_hi < -600.0) lz_hi = -600.0;
        width = b * std::log(2.0);
        nwin = 12;
        log_regressor = nu < 0.05;
    }

    static const GaussLegendre gl(48);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int m = 0; m < nwin; ++m) {
        const double lz1 = lz_hi - (m + 1) * width, lz2 = lz_hi - m * width;
        const double t1 = t_of(lz1), t2 = t_of(lz2);
        // ln of int exp(2 g(t) + t) dt over [t1, t2], by log-sum-exp.
        std::vector<double> vals(gl.x.size());
        double vmax = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            const double t = 0.5 * (t1 + t2) + 0.5 * (t2 - t1) * gl.x[q];
            const double lz = lscale + b * t;
            vals[q] = std::log(gl.w[q] * 0.5 * (t2 - t1)) + 2.0 * log_weighted(lz) + t;
            vmax = std::max(vmax, vals[q]);
        }
        double acc = 0.0;
        for (double v : vals) acc += std::exp(v - vmax);
        const double lw = vmax + std::log(acc);
        const double tc = 0.5 * (t1 + t2);
        if (log_regressor)
            X.push_back({1.0, tc, std::log(std::abs(tc))});
        else
            X.push_back({1.0, tc});
        y.push_back(lw);
    }
    const auto beta = lstsq(X, y, rep.fit_rms);
    // W ~ x^{2e + 1}.
    rep.fitted_exponent = 0.5 * (beta[1] - 1.0);
    if (!std::isfinite(rep.fitted_exponent) || rep.fit_rms > 1e-2 ||
        std::abs(rep.fitted_exponent + 0.5) < 1e-3) {
        rep.verdict = Membership::Inconclusive;
        return rep;
    }
    rep.verdict = rep.fitted_exponent > -0.5 ? Membership::InL2 : Membership::NotInL2;
    return rep;
}

const char* to_string(Membership m) {
    switch (m) {
    case Membership::InL2: return "InL2";
    case Membership::NotInL2: return "NotInL2";
    case Membership::Inconclusive: return "Inconclusive";
    }
    return "?";
}

} // namespace grushin
