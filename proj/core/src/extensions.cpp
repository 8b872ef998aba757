#include "grushin/extensions.hpp"

#include <cmath>
#include <future>
#include <numbers>
#include <sstream>

#include "grushin/errors.hpp"
#include "grushin/frobenius.hpp"

namespace grushin {

namespace {

const cplx I(0.0, 1.0);

bool is_unitary(const Eigen::Matrix2cd& U, double tol) {
    return ((U.adjoint() * U - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() <= tol);
}

bool is_hermitian(const Eigen::Matrix2cd& G, double tol) {
    return (G - G.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

void same_support(const BoundaryJet& u, const BoundaryJet& v) {
    if (u.K != v.K || u.modes.size() != v.modes.size())
        throw DomainError("asymmetry_form: jets have different mode cutoffs");
}

} // namespace

ModeJet ModeJet::from_pm(const Eigen::Vector2cd& plus, const Eigen::Vector2cd& minus) {
    return {plus(0), minus(0), plus(1), minus(1)};
}

ModeJet ModeJet::from_A(const Eigen::Vector2cd& A1, const Eigen::Vector2cd& A2) {
    return from_pm(0.5 * (A1 + A2), (A1 - A2) / (2.0 * I));
}

double ModeJet::norm() const {
    return std::sqrt(std::norm(a_plus_r) + std::norm(a_minus_r) + std::norm(a_plus_l) + std::norm(a_minus_l));
}

void ExtensionSpec::validate() const {
    if (!U.allFinite()) throw DomainError("ExtensionSpec: U has non-finite entries");
    if (!is_unitary(U, 1e-12)) throw DomainError("ExtensionSpec: U is not unitary to 1e-12");
}

ExtensionRegime regime_for(const GrushinParams& params) {
    const double mu = indicial_data(params).mu;
    if (mu < 0.0) return ExtensionRegime::mu_neg;
    if (mu > 0.0 && mu < 4.0 && !is_mu_critical(mu)) return ExtensionRegime::mu_pos;
    std::ostringstream os;
    os << "no boundary form for mu = " << mu << " (needs mu < 0 or 0 < mu < 4)";
    throw DomainError(os.str());
}

cplx asymmetry_form(const ModeJet& u, const ModeJet& v, ExtensionRegime regime, double mu) {
    if (regime == ExtensionRegime::mu_neg) {
        if (!(mu < 0.0)) throw DomainError("asymmetry_form: mu_neg form needs mu < 0");
        return I * std::sqrt(-mu) * (u.a_plus().dot(v.a_plus()) - u.a_minus().dot(v.a_minus()));
    }
    if (!(mu > 0.0 && mu < 4.0)) throw DomainError("asymmetry_form: mu_pos form needs 0 < mu < 4");
    // Eigen's dot is conjugate-linear in the first argument.
    return u.a_minus().dot(v.a_plus()) - u.a_plus().dot(v.a_minus());
}

cplx asymmetry_form(const BoundaryJet& u, const BoundaryJet& v, ExtensionRegime regime, double mu) {
    same_support(u, v);
    cplx s = 0.0;
    for (std::size_t k = 0; k < u.modes.size(); ++k) s += asymmetry_form(u.modes[k], v.modes[k], regime, mu);
    return s;
}

cplx asymmetry_form(const BoundaryJet& u, const BoundaryJet& v, const GrushinParams& params) {
    return asymmetry_form(u, v, regime_for(params), indicial_data(params).mu);
}

Eigen::Vector2cd LagrangianConstraint::defect(const ModeJet& j) const {
    if (spec.regime == ExtensionRegime::mu_neg) return j.a_plus() - spec.U * j.a_minus();
    return j.A2() - spec.U * j.A1();
}

bool LagrangianConstraint::satisfied(const ModeJet& j, double tol) const {
    return defect(j).norm() <= tol * std::max(1.0, j.norm());
}

bool LagrangianConstraint::satisfied(const BoundaryJet& j, double tol) const {
    for (const auto& m : j.modes)
        if (!satisfied(m, tol)) return false;
    return true;
}

ModeJet LagrangianConstraint::admissible(const Eigen::Vector2cd& z) const {
    if (spec.regime == ExtensionRegime::mu_neg) return ModeJet::from_pm(spec.U * z, z);
    return ModeJet::from_A(z, spec.U * z);
}

ModeJet LagrangianConstraint::maximality_witness(const ModeJet& v) const {
    // omega(u, v) reduces to a multiple of <z, U^* v_+ - v_-> (mu_neg) or
    // <A_1, B_1 - U^* B_2> (mu_pos); pick z along that vector.
    if (satisfied(v)) throw DomainError("maximality_witness: v satisfies the constraint");
    Eigen::Vector2cd z;
    if (spec.regime == ExtensionRegime::mu_neg)
        z = spec.U.adjoint() * v.a_plus() - v.a_minus();
    else
        z = v.A1() - spec.U.adjoint() * v.A2();
    return admissible(z);
}

LagrangianConstraint lagrangian_from_unitary(const ExtensionSpec& spec) {
    spec.validate();
    return {spec};
}

ExtensionSpec named_family(const FamilyTag& tag) {
    if (!std::isfinite(tag.gamma)) throw DomainError("named_family: gamma must be finite");
    ExtensionSpec s;
    s.regime = ExtensionRegime::mu_pos;
    s.origin = tag;
    const cplx g(tag.gamma, 0.0);
    switch (tag.kind) {
    case 1: s.U = Eigen::Matrix2cd::Identity(); break;
    case 2: s.U << (g - I) / (g + I), 0.0, 0.0, 1.0; break;
    case 3: s.U << 1.0, 0.0, 0.0, (g - I) / (g + I); break;
    case 4: {
        if (!std::isfinite(tag.b.real()) || !std::isfinite(tag.b.imag()))
            throw DomainError("named_family: b must be finite");
        const double b2 = std::norm(tag.b);
        const cplx den = 1.0 + b2 - I * g;
        s.U << 1.0 - b2 - I * g, -2.0 * tag.b, -2.0 * std::conj(tag.b), -1.0 + b2 - I * g;
        s.U /= den;
        break;
    }
    case 5: {
        if (!tag.Gamma.allFinite() || !is_hermitian(tag.Gamma, 1e-12))
            throw DomainError("named_family: Gamma must be Hermitian");
        const Eigen::Matrix2cd Id = Eigen::Matrix2cd::Identity();
        s.U = (tag.Gamma - I * Id) * (tag.Gamma + I * Id).inverse();
        break;
    }
    default: throw DomainError("named_family: kind must be 1..5, got " + std::to_string(tag.kind));
    }
    s.validate();
    return s;
}

bool family_relations_hold(const FamilyTag& tag, const ModeJet& j, double tol) {
    const double t = tol * std::max(1.0, j.norm());
    auto zero = [t](cplx z) { return std::abs(z) <= t; };
    switch (tag.kind) {
    case 1: return zero(j.a_minus_r) && zero(j.a_minus_l);
    case 2: return zero(j.a_minus_l) && zero(j.a_plus_r - tag.gamma * j.a_minus_r);
    case 3: return zero(j.a_minus_r) && zero(j.a_plus_l - tag.gamma * j.a_minus_l);
    case 4:
        return zero(j.a_minus_r - tag.b * j.a_minus_l) &&
               zero(j.a_plus_l + std::conj(tag.b) * j.a_plus_r - tag.gamma * j.a_minus_l);
    case 5: return (j.a_plus() - tag.Gamma * j.a_minus()).norm() <= t;
    default: throw DomainError("family_relations_hold: kind must be 1..5");
    }
}

std::array<ModeJet, 2> family_relation_basis(const FamilyTag& tag) {
    const double g = tag.gamma;
    switch (tag.kind) {
    case 1: return {ModeJet{1, 0, 0, 0}, ModeJet{0, 0, 1, 0}};
    case 2: return {ModeJet{g, 1, 0, 0}, ModeJet{0, 0, 1, 0}};
    case 3: return {ModeJet{1, 0, 0, 0}, ModeJet{0, 0, g, 1}};
    case 4:
        // a^l_- = t, a^r_- = b t, a^r_+ = s, a^l_+ = g t - conj(b) s
        return {ModeJet{0, tag.b, g, 1}, ModeJet{1, 0, -std::conj(tag.b), 0}};
    case 5: {
        const Eigen::Vector2cd e0(1, 0), e1(0, 1);
        return {ModeJet::from_pm(tag.Gamma * e0, e0), ModeJet::from_pm(tag.Gamma * e1, e1)};
    }
    default: throw DomainError("family_relation_basis: kind must be 1..5");
    }
}

double h_function(const GrushinParams& params, const HOptions& options) {
    const auto d = indicial_data(params);
    if (!(d.mu > 0.0 && d.mu < 4.0)) throw DomainError("h_function: needs 0 < mu < 4");
    const double r = std::sqrt(d.mu);
    if (options.flat) return r;
    const double lm = d.lambda_minus.real();
    double den;
    if (options.denominator == HDenominator::literal) {
        den = (d.p_coeffs[0] * lm + d.p_coeffs[1]) * lm + d.p_coeffs[2];
        if (std::abs(den) <= 1e-12 * (1.0 + lm * lm))
            throw DegenerateDenominator("h_function: p(lambda_-) vanishes at an indicial root");
    } else {
        den = -r; // p'(lambda_-) = 2 lambda_- - (1 + alpha n)
    }
    return r + (options.divergence_at_Z * lm - params.c * options.d_x2S_at_Z) / den;
}

GreensCheck greens_identity_check(const GrushinParams& params, const std::vector<int>& mode, const ModeJet& u,
                                  const ModeJet& v, const std::vector<double>& eps_sequence,
                                  double series_cutoff) {
    const auto regime = regime_for(params);
    const auto ind = indicial_data(params);
    if (static_cast<int>(mode.size()) != params.n) throw DomainError("greens_identity_check: mode has wrong dimension");
    if (eps_sequence.size() < 3) throw DomainError("greens_identity_check: need at least 3 eps values");
    for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
        if (!(eps_sequence[i] > 0.0 && eps_sequence[i] < 1.0))
            throw DomainError("greens_identity_check: eps must lie in (0, 1)");
        if (i > 0 && !(eps_sequence[i] < eps_sequence[i - 1]))
            throw DomainError("greens_identity_check: eps must be strictly decreasing");
    }

    double k2 = 0.0;
    for (int k : mode) k2 += double(k) * k;
    const auto data = flat_mode_series_data(params, std::sqrt(k2));
    const Eigen::VectorXcd one = Eigen::VectorXcd::Ones(1);
    const auto up = expand(data, Root::plus, one, series_cutoff);
    const auto um = expand(data, Root::minus, one, series_cutoff);

    // Trapezoid grid on T^n; phi_k is evaluated, not assumed orthonormal.
    const int N = 8;
    const int n = params.n;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= N;
    const double h = 2.0 * std::numbers::pi / N;
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * n);
    const double cell = std::pow(h, n);
    cplx phi_sq = 0.0;
    for (long idx = 0; idx < total; ++idx) {
        long r = idx;
        double phase = 0.0;
        for (int i = 0; i < n; ++i) {
            phase += mode[i] * h * double(r % N);
            r /= N;
        }
        const cplx phi = norm * std::exp(I * phase);
        phi_sq += std::conj(phi) * phi * cell;
    }

    const double an = params.alpha * n;
    auto B = [&](double eps) {
        const cplx fp = up.evaluate(eps)(0), fm = um.evaluate(eps)(0);
        const cplx dp = up.derivative(eps)(0), dm = um.derivative(eps)(0);
        cplx total_b = 0.0;
        for (int side = 0; side < 2; ++side) {
            const cplx ap = side == 0 ? u.a_plus_r : u.a_plus_l, am = side == 0 ? u.a_minus_r : u.a_minus_l;
            const cplx bp = side == 0 ? v.a_plus_r : v.a_plus_l, bm = side == 0 ? v.a_minus_r : v.a_minus_l;
            // d/d|x| on either side, so both sides use the radial profile.
            const cplx uf = ap * fp + am * fm, ud = ap * dp + am * dm;
            const cplx vf = bp * fp + bm * fm, vd = bp * dp + bm * dm;
            total_b += (std::conj(uf) * vd - vf * std::conj(ud)) * phi_sq;
        }
        return total_b * std::pow(eps, -an);
    };

    const std::size_t m = eps_sequence.size();
    std::vector<std::future<cplx>> jobs;
    for (double e : eps_sequence) jobs.push_back(std::async(std::launch::async, B, e));
    GreensCheck out;
    for (std::size_t i = 0; i < m; ++i) out.table.emplace_back(eps_sequence[i], jobs[i].get());

    // B(eps) = B_0 + sum c_j eps^{theta_j}, theta_j the positive lattice values.
    const auto lat = theta_lattice(params.alpha, series_cutoff + 4.0);
    std::vector<double> thetas;
    for (double t : lat.values())
        if (t > 0.0) thetas.push_back(t);
    auto fit = [&](std::size_t terms) {
        Eigen::MatrixXd A(m, terms + 1);
        Eigen::VectorXcd rhs(m);
        for (std::size_t i = 0; i < m; ++i) {
            A(i, 0) = 1.0;
            for (std::size_t j = 0; j < terms; ++j) A(i, j + 1) = std::pow(eps_sequence[i], thetas[j]);
            rhs(i) = out.table[i].second;
        }
        const Eigen::MatrixXcd Ac = A.cast<cplx>();
        return cplx(Ac.colPivHouseholderQr().solve(rhs)(0));
    };
    const std::size_t terms = std::min(m - 2, thetas.size());
    const cplx hi = fit(terms), lo = terms > 0 ? fit(terms - 1) : out.table.back().second;
    out.numeric = hi;
    out.extrapolation_error = std::abs(hi - lo);

    const double factor = regime == ExtensionRegime::mu_pos ? h_function(params) : 1.0;
    out.closed_form = factor * asymmetry_form(u, v, regime, ind.mu);
    const double scale = std::max(std::abs(out.closed_form),
                                  factor * std::sqrt(std::max(1.0, std::abs(ind.mu))) * u.norm() * v.norm());
    if (!(out.extrapolation_error <= 1e-6 * scale) || !std::isfinite(std::abs(hi))) {
        std::ostringstream os;
        os.precision(17);
        os << "greens_identity_check: extrapolation did not settle (error " << out.extrapolation_error
           << ", scale " << scale << ")\n  eps  B(eps)\n";
        for (const auto& [e, b] : out.table) os << "  " << e << "  " << b.real() << " " << b.imag() << "\n";
        throw CheckFailed(os.str());
    }
    out.relative_error = scale > 0.0 ? std::abs(out.numeric - out.closed_form) / scale : 0.0;
    return out;
}

} // namespace grushin
