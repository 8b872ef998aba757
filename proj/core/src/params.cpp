#include "grushin/params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grushin/errors.hpp"

namespace grushin {

void GrushinParams::validate() const {
    if (!std::isfinite(alpha) || !(alpha > -1.0))
        throw DomainError("alpha must be finite and > -1, got " + std::to_string(alpha));
    if (n < 1) throw DomainError("n must be >= 1, got " + std::to_string(n));
    if (!std::isfinite(c)) throw DomainError("c must be finite");
}

cplx IndicialData::sqrt_mu() const {
    return mu >= 0.0 ? cplx(std::sqrt(mu), 0.0) : cplx(0.0, std::sqrt(-mu));
}

IndicialData indicial_data(const GrushinParams& params, MuConvention convention) {
    params.validate();
    const double an = params.alpha * params.n;
    const double b = params.c * an * (an + params.alpha + 2.0);
    const double sign = convention == MuConvention::Standard ? 1.0 : -1.0;

    IndicialData d;
    d.p_coeffs = {1.0, -(1.0 + an), sign * b};
    d.mu = (1.0 + an) * (1.0 + an) - 4.0 * sign * b;
    const cplx root = d.sqrt_mu();
    d.lambda_plus = 0.5 * (cplx(1.0 + an, 0.0) + root);
    d.lambda_minus = 0.5 * (cplx(1.0 + an, 0.0) - root);
    return d;
}

std::optional<std::pair<long long, long long>> rational_approximation(double alpha,
                                                                      long long max_den) {
    if (!std::isfinite(alpha)) return std::nullopt;
    // Convergents h/k of the continued fraction.
    long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double x = alpha;
    for (int it = 0; it < 40; ++it) {
        const double a = std::floor(x);
        if (std::abs(a) > 1e12) break;
        const auto ai = static_cast<long long>(a);
        const long long h2 = ai * h1 + h0;
        const long long k2 = ai * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - alpha) <=
            1e-13 * std::max(1.0, std::abs(alpha)))
            return std::make_pair(h1, k1);
        const double frac = x - a;
        if (frac < 1e-15) break;
        x = 1.0 / frac;
    }
    return std::nullopt;
}

ThetaLattice theta_lattice(double alpha, double cutoff) {
    if (!(alpha > -1.0) || !std::isfinite(alpha))
        throw DomainError("theta_lattice: alpha must be > -1");
    if (!(cutoff >= 0.0) || !std::isfinite(cutoff))
        throw DomainError("theta_lattice: cutoff must be finite and >= 0");

    ThetaLattice lat;
    lat.alpha = alpha;
    lat.cutoff = cutoff;
    const double step = 1.0 + alpha;
    const int imax = static_cast<int>(std::ceil(cutoff / step));
    const int jmax = static_cast<int>(std::ceil(cutoff));

    struct Cand {
        double v;
        long long key; // exact numerator when rational
        int i, j;
    };
    std::vector<Cand> cands;
    const auto rat = rational_approximation(alpha);
    lat.exact_rational = rat.has_value();
    long long num = 0, den = 1;
    if (rat) {
        num = rat->first + rat->second; // 1 + alpha = num/den
        den = rat->second;
    }
    for (int i = 0; i <= imax; ++i) {
        for (int j = 0; j <= jmax; ++j) {
            double v;
            long long key = 0;
            if (rat) {
                key = num * i + den * j;
                v = static_cast<double>(key) / static_cast<double>(den);
            } else {
                v = step * i + j;
            }
            if (v <= cutoff + 1e-12) cands.push_back({v, key, i, j});
        }
    }
    auto better = [](const Cand& a, const Cand& b) {
        if (a.i + a.j != b.i + b.j) return a.i + a.j < b.i + b.j;
        return a.i < b.i;
    };
    if (rat) {
        std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
            if (a.key != b.key) return a.key < b.key;
            return better(a, b);
        });
    } else {
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.v < b.v; });
    }
    for (std::size_t k = 0; k < cands.size();) {
        std::size_t e = k + 1;
        Cand best = cands[k];
        while (e < cands.size() &&
               (rat ? cands[e].key == cands[k].key : std::abs(cands[e].v - cands[k].v) <= 1e-12)) {
            if (better(cands[e], best)) best = cands[e];
            ++e;
        }
        lat.elements.push_back({best.v, best.i, best.j});
        k = e;
    }
    return lat;
}

std::optional<ThetaElement> ThetaLattice::find(double v, double tol) const {
    auto it = std::lower_bound(elements.begin(), elements.end(), v - tol,
                               [](const ThetaElement& e, double x) { return e.value < x; });
    if (it != elements.end() && std::abs(it->value - v) <= tol) return *it;
    return std::nullopt;
}

std::optional<double> ThetaLattice::next_above(double v, double tol) const {
    for (const auto& e : elements)
        if (e.value > v + tol) return e.value;
    return std::nullopt;
}

std::vector<double> ThetaLattice::values() const {
    std::vector<double> out;
    out.reserve(elements.size());
    for (const auto& e : elements) out.push_back(e.value);
    return out;
}

bool is_mu_critical(double mu) { return std::abs(mu - 4.0) < kMuCriticalTol * std::max(1.0, std::abs(mu)); }

Regime regime_of(double mu) {
    if (is_mu_critical(mu)) return Regime::mu_eq_4;
    if (mu < 0.0) return Regime::mu_neg;
    if (mu < 4.0) return Regime::mu_in_0_4;
    return Regime::mu_gt_4;
}

ResonanceResult resonance(const GrushinParams& params, double cutoff) {
    const auto d = indicial_data(params);
    if (d.mu < 0.0) return {};
    const double r = std::sqrt(d.mu);
    if (cutoff < 0.0) cutoff = r + 1.0;
    if (r > cutoff + 1e-9) return {};
    const auto lat = theta_lattice(params.alpha, cutoff);
    auto w = lat.find(r, 1e-9);
    return {w.has_value(), w};
}

SelfAdjointnessVerdict classify(const GrushinParams& params) {
    const auto d = indicial_data(params);
    SelfAdjointnessVerdict v;
    v.mu = d.mu;
    v.regime = regime_of(d.mu);
    v.resonant = resonance(params).resonant;
    if (v.regime == Regime::mu_eq_4)
        v.verdict = Verdict::Critical_Mu4_Indeterminate;
    else if (d.mu > 4.0)
        v.verdict = Verdict::EssentiallySelfAdjoint;
    else
        v.verdict = Verdict::NotESA_InfiniteDeficiency;
    return v;
}

double forbidden_c(double alpha, int n) {
    GrushinParams{alpha, n, 0.0}.validate();
    if (alpha == 0.0)
        throw DomainError("forbidden_c: alpha = 0 decouples the curvature term; no such c exists");
    const double an = alpha * n;
    const double den = 4.0 * an * (2.0 + alpha + an);
    if (den == 0.0) throw DomainError("forbidden_c: alpha (n + 1) = -2 makes the coupling vanish");
    return (-3.0 + 2.0 * an + an * an) / den;
}

bool mu_not_two(const GrushinParams& params, double tol) {
    return std::abs(indicial_data(params).mu - 2.0) > tol;
}

bool not_resonant(const GrushinParams& params) { return !resonance(params).resonant; }

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::EssentiallySelfAdjoint: return "EssentiallySelfAdjoint";
    case Verdict::NotESA_InfiniteDeficiency: return "NotESA_InfiniteDeficiency";
    case Verdict::Critical_Mu4_Indeterminate: return "Critical_Mu4_Indeterminate";
    }
    return "?";
}

std::string to_string(Regime r) {
    switch (r) {
    case Regime::mu_neg: return "mu_neg";
    case Regime::mu_in_0_4: return "mu_in_0_4";
    case Regime::mu_eq_4: return "mu_eq_4";
    case Regime::mu_gt_4: return "mu_gt_4";
    }
    return "?";
}

} // namespace grushin
