#include "grushin/deficiency.hpp"

#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <map>

#include <boost/numeric/odeint.hpp>

#include "grushin/errors.hpp"
#include "grushin/frobenius.hpp"

namespace grushin {

namespace {

constexpr double kX0 = 1e-3;
constexpr double kFrobeniusCutoff = 8.0;
constexpr double kSmallFraction = 1e-8;

using State = std::array<double, 2>;

} // namespace

double ModeOperator::potential(double x) const {
    const double k2 = mode_strength * mode_strength;
    return (k2 != 0.0 ? k2 * std::pow(x, 2.0 * params.alpha) : 0.0) + A / (x * x);
}

double ModeOperator::potential_derivative(double x) const {
    const double k2 = mode_strength * mode_strength;
    return (k2 != 0.0 ? 2.0 * params.alpha * k2 * std::pow(x, 2.0 * params.alpha - 1.0) : 0.0) -
           2.0 * A / (x * x * x);
}

ModeOperator mode_operator(const GrushinParams& params, double mode_strength) {
    params.validate();
    if (!(mode_strength >= 0.0) || !std::isfinite(mode_strength))
        throw DomainError("mode_operator: mode strength must be finite and >= 0");
    const double an = params.alpha * params.n;
    ModeOperator op;
    op.params = params;
    op.mode_strength = mode_strength;
    op.A = an * (an + 2.0) / 4.0 - params.c * an * (an + params.alpha + 2.0);
    return op;
}

EndpointReport classify_endpoint_zero(const ModeOperator& op) {
    EndpointReport r;
    r.nu_squared = op.nu_squared();
    // nu^2 = mu / 4, so the critical band is the one used by classify().
    r.critical = is_mu_critical(4.0 * r.nu_squared);
    r.cls = (!r.critical && r.nu_squared < 1.0) ? EndpointClass::limit_circle : EndpointClass::limit_point;
    return r;
}

ModeDeficiency numeric_deficiency(const ModeOperator& op, DeficiencySign sign) {
    namespace odeint = boost::numeric::odeint;
    const double alpha = op.params.alpha;
    const double k = op.mode_strength;
    if (!(k > 0.0 || alpha > 0.0))
        throw UnsupportedConfiguration("numeric_deficiency: needs mode strength > 0 or alpha > 0");

    const double si = sign == DeficiencySign::plus ? 1.0 : -1.0;
    const cplx shift(0.0, si); // u'' = (V + shift) u
    ModeDeficiency res;
    res.x0 = kX0;
    // X >= 20, grown until first-order WKB is accurate at X.
    res.X = 20.0;
    auto wkb_parameter = [&](double x) {
        const cplx q = cplx(op.potential(x)) + shift;
        const double k2 = k * k;
        const double d2 = (k2 != 0.0 ? 2.0 * alpha * (2.0 * alpha - 1.0) * k2 * std::pow(x, 2.0 * alpha - 2.0) : 0.0) +
                          6.0 * op.A / (x * x * x * x);
        return std::abs(op.potential_derivative(x)) / std::pow(std::abs(q), 1.5) + std::abs(d2) / std::norm(q);
    };
    while (wkb_parameter(res.X) > 1e-2 && res.X < 1e5) res.X *= 2.0;

    auto Q = [&](double x) { return cplx(op.potential(x)) + shift; };
    auto wkb = [&](double x) {
        const cplx q = Q(x);
        return -std::sqrt(q) - op.potential_derivative(x) / (4.0 * q);
    };

    // W = x u'/u in t = ln x:  dW/dt = W + x^2 Q - W^2.
    auto rhs = [&](const State& y, State& dy, double t) {
        const double x = std::exp(t);
        const cplx W(y[0], y[1]);
        const cplx d = W + x * x * Q(x) - W * W;
        dy[0] = d.real();
        dy[1] = d.imag();
    };

    const cplx W0 = res.X * wkb(res.X);
    State s{W0.real(), W0.imag()};
    std::vector<double> times;
    const double tX = std::log(res.X), tw = std::log(res.X / 10.0), t0 = std::log(kX0);
    for (int i = 0; i <= 20; ++i) times.push_back(tX + (tw - tX) * i / 20.0);
    times.push_back(t0);
    auto stepper = odeint::make_dense_output(1e-12, 1e-10, odeint::runge_kutta_dopri5<State>());
    std::vector<cplx> Ws;
    try {
        odeint::integrate_times(stepper, rhs, s, times.begin(), times.end(), -1e-4,
                                [&](const State& y, double) { Ws.emplace_back(y[0], y[1]); });
    } catch (const std::exception& e) {
        throw NonConvergence(std::string("numeric_deficiency: integration failed: ") + e.what());
    }
    if (Ws.size() != times.size() || !std::isfinite(std::abs(Ws.back())))
        throw NonConvergence("numeric_deficiency: integration did not reach x0");

    // The inward-stable Riccati branch is the decaying solution; confirm it
    // tracks the WKB log-derivative over the last decade, wherever WKB itself
    // is meaningful.
    int checked = 0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double x = std::exp(times[i]);
        if (wkb_parameter(x) > 0.05) continue;
        ++checked;
        const cplx w = Ws[i] / x, ref = wkb(x);
        res.wkb_max_rel_error = std::max(res.wkb_max_rel_error, std::abs(w - ref) / std::abs(ref));
    }
    if (checked < 3) throw NonConvergence("numeric_deficiency: WKB check window is empty");
    if (res.wkb_max_rel_error > 0.05)
        throw NonConvergence("numeric_deficiency: solution does not follow the decaying WKB branch (rel. error " +
                             std::to_string(res.wkb_max_rel_error) + ")");
    const cplx w0 = Ws.back() / kX0;

    // Frobenius solutions of the original (unconjugated) mode equation, times
    // x^{-an/2}.
    auto data = flat_mode_series_data(op.params, k);
    Eigen::MatrixXcd ishift(1, 1);
    ishift(0, 0) = -shift; // x^2 (Delta - cS -+ i)
    data.add_term(2.0, Eigen::MatrixXcd::Zero(1, 1), ishift);
    const Eigen::VectorXcd seed = Eigen::VectorXcd::Ones(1);
    const auto up = expand(data, Root::plus, seed, kFrobeniusCutoff);
    const auto um = expand(data, Root::minus, seed, kFrobeniusCutoff);
    const double h = op.params.alpha * op.params.n / 2.0;
    const double pre = std::pow(kX0, -h);
    auto psi = [&](const FrobeniusExpansion& e, cplx& v, cplx& dv) {
        const cplx f = e.evaluate(kX0)(0), df = e.derivative(kX0)(0);
        v = pre * f;
        dv = pre * (df - h * f / kX0);
    };
    cplx pp, dpp, pm, dpm;
    psi(up, pp, dpp);
    psi(um, pm, dpm);
    // u = c_+ psi_+ + c_- psi_-, u'/u = w0.
    const cplx num = pp * w0 - dpp;
    const cplx den = dpm - w0 * pm;
    // The ratio itself is conditioned like x0^{-2 Re sqrt(mu)}; the share of
    // u(x0) carried by psi_- is the well-conditioned quantity.
    if (std::abs(den) == 0.0) {
        res.coefficient_ratio = std::numeric_limits<double>::infinity();
        res.minus_fraction = 1.0;
    } else {
        const cplx r = num / den;
        res.coefficient_ratio = std::abs(r);
        res.minus_fraction = std::abs(r * pm) / (std::abs(pp) + std::abs(r * pm));
    }

    // x^{1/2 - nu} is square integrable at 0 iff Re nu < 1, i.e. mu < 4.
    const auto ep = classify_endpoint_zero(op);
    res.count = (ep.cls == EndpointClass::limit_circle || res.minus_fraction < kSmallFraction) ? 1 : 0;
    return res;
}

int numeric_deficiency_count(const ModeOperator& op, DeficiencySign sign) {
    return numeric_deficiency(op, sign).count;
}

DeficiencyReport aggregate_deficiency(const GrushinParams& params, int k_max) {
    params.validate();
    if (k_max < 1) throw DomainError("aggregate_deficiency: k_max must be >= 1");
    std::map<long, int> shells; // |k|^2 -> multiplicity
    for (const auto& k : torus_basis(params.n, k_max)) {
        long s = 0;
        for (int x : k) s += static_cast<long>(x) * x;
        ++shells[s];
    }
    if (!(params.alpha > 0.0)) shells.erase(0);

    DeficiencyReport rep;
    rep.endpoint = classify_endpoint_zero(mode_operator(params, 1.0));
    std::vector<std::future<ModeCount>> jobs;
    for (const auto& [s2, mult] : shells) {
        jobs.push_back(std::async(std::launch::async, [&params, s2 = s2, mult = mult] {
            const auto op = mode_operator(params, std::sqrt(static_cast<double>(s2)));
            ModeCount m;
            m.mode_strength = op.mode_strength;
            m.multiplicity = mult;
            m.count_plus = numeric_deficiency_count(op, DeficiencySign::plus);
            m.count_minus = numeric_deficiency_count(op, DeficiencySign::minus);
            return m;
        }));
    }
    bool all = true, none = true;
    long total = 0;
    for (auto& j : jobs) {
        rep.per_mode.push_back(j.get());
        const auto& m = rep.per_mode.back();
        all = all && m.count_plus > 0 && m.count_minus > 0;
        none = none && m.count_plus == 0 && m.count_minus == 0;
        total += 2L * m.multiplicity * m.count_plus;
    }
    if (all && rep.endpoint.cls == EndpointClass::limit_circle)
        rep.aggregate = AggregateKind::infinite;
    else if (none)
        rep.aggregate = AggregateKind::zero;
    else {
        rep.aggregate = AggregateKind::finite;
        rep.finite_value = total;
    }
    return rep;
}

std::string to_string(EndpointClass c) { return c == EndpointClass::limit_point ? "limit_point" : "limit_circle"; }

std::string to_string(AggregateKind k) {
    switch (k) {
    case AggregateKind::zero: return "zero";
    case AggregateKind::finite: return "finite";
    case AggregateKind::infinite: return "infinite";
    }
    return "?";
}

} // namespace grushin
