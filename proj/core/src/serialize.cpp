#include "grushin/serialize.hpp"

#include <charconv>
#include <cmath>

#include "grushin/errors.hpp"

namespace grushin {

using nlohmann::json;

namespace {

// JSON has no inf or nan; those become null and the reader knows what they mean.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cnum(cplx z) { return json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

} // namespace

json document(const std::string& kind, json data) {
    return json{{"schema_version", kSchemaVersion}, {"kind", kind}, {"data", std::move(data)}};
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

json to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(cnum(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Eigen::VectorXcd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(cnum(v(i)));
    return out;
}

Eigen::MatrixXcd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ParseError("matrix: expected a list of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (j[i].size() != static_cast<std::size_t>(cols)) throw ParseError("matrix: ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<cplx>();
    }
    return m;
}

void to_json(json& j, const GrushinParams& p) { j = json{{"alpha", p.alpha}, {"n", p.n}, {"c", p.c}}; }

void from_json(const json& j, GrushinParams& p) {
    p.alpha = j.at("alpha").get<double>();
    p.n = j.at("n").get<int>();
    p.c = j.value("c", 0.0);
}

void to_json(json& j, const IndicialData& d) {
    j = json{{"p_coeffs", d.p_coeffs}, {"mu", d.mu}, {"lambda_plus", cnum(d.lambda_plus)},
             {"lambda_minus", cnum(d.lambda_minus)}};
}

void to_json(json& j, const ThetaLattice& t) {
    json el = json::array();
    for (const auto& e : t.elements) el.push_back({{"value", e.value}, {"i", e.i}, {"j", e.j}});
    j = json{{"alpha", t.alpha}, {"cutoff", t.cutoff}, {"exact_rational", t.exact_rational}, {"elements", el}};
}

void to_json(json& j, const SelfAdjointnessVerdict& v) {
    j = json{{"verdict", to_string(v.verdict)}, {"mu", v.mu}, {"regime", to_string(v.regime)}, {"resonant", v.resonant}};
}

void to_json(json& j, const ResonanceResult& r) {
    j = json{{"resonant", r.resonant}};
    if (r.witness) j["witness"] = {{"value", r.witness->value}, {"i", r.witness->i}, {"j", r.witness->j}};
}

void to_json(json& j, const EndpointReport& r) {
    j = json{{"class", to_string(r.cls)}, {"critical", r.critical}, {"nu_squared", r.nu_squared}};
}

void to_json(json& j, const ModeCount& m) {
    j = json{{"mode_strength", m.mode_strength}, {"multiplicity", m.multiplicity}, {"count_plus", m.count_plus},
             {"count_minus", m.count_minus}};
}

void to_json(json& j, const DeficiencyReport& r) {
    j = json{{"per_mode", r.per_mode}, {"endpoint", r.endpoint}, {"aggregate", to_string(r.aggregate)}};
    if (r.aggregate == AggregateKind::finite) j["finite_value"] = r.finite_value;
}

void to_json(json& j, const SeriesTerm& t) { j = json{{"theta", t.theta}, {"p", t.p}, {"coeff", to_json(t.coeff)}}; }

void to_json(json& j, const FrobeniusExpansion& e) {
    j = json{{"lambda", cnum(e.lambda)},
             {"root", e.root == Root::plus ? "plus" : "minus"},
             {"order_cutoff", e.order_cutoff},
             {"resonant", e.resonant},
             {"terms", e.terms}};
    if (e.resonant) {
        j["resonance_grade"] = e.resonance_grade;
        j["log_seed"] = to_json(e.log_seed);
    }
    if (e.log_constant_C) j["log_constant_C"] = cnum(*e.log_constant_C);
}

void to_json(json& j, const ResidualCertificate& c) {
    json table = json::array();
    for (const auto& [x, r] : c.table) table.push_back({num(x), num(r)});
    j = json{{"fitted_exponent", num(c.fitted_exponent)},
             {"theta_next", c.theta_next},
             {"expected_exponent", c.expected_exponent},
             {"identically_zero", c.identically_zero},
             {"satisfies_contract", c.satisfies_contract},
             {"fit_rms", num(c.fit_rms)},
             {"table", table}};
}

void to_json(json& j, const ModeJet& m) {
    j = json{{"a_plus_r", cnum(m.a_plus_r)},
             {"a_minus_r", cnum(m.a_minus_r)},
             {"a_plus_l", cnum(m.a_plus_l)},
             {"a_minus_l", cnum(m.a_minus_l)}};
}

void from_json(const json& j, ModeJet& m) {
    m.a_plus_r = j.at("a_plus_r").get<cplx>();
    m.a_minus_r = j.at("a_minus_r").get<cplx>();
    m.a_plus_l = j.at("a_plus_l").get<cplx>();
    m.a_minus_l = j.at("a_minus_l").get<cplx>();
}

void to_json(json& j, const FamilyTag& t) {
    j = json{{"kind", t.kind}, {"gamma", t.gamma}, {"b", cnum(t.b)}, {"Gamma", to_json(Eigen::MatrixXcd(t.Gamma))}};
}

void from_json(const json& j, FamilyTag& t) {
    t.kind = j.at("kind").get<int>();
    t.gamma = j.value("gamma", 0.0);
    t.b = j.contains("b") ? j.at("b").get<cplx>() : cplx{};
    t.Gamma.setZero();
    if (j.contains("Gamma")) {
        const auto G = matrix_from_json(j.at("Gamma"));
        if (G.rows() != 2 || G.cols() != 2) throw ParseError("FamilyTag: Gamma must be 2x2");
        t.Gamma = G;
    }
}

std::string to_string(ExtensionRegime r) { return r == ExtensionRegime::mu_neg ? "mu_neg" : "mu_pos"; }

ExtensionRegime extension_regime_from_string(const std::string& s) {
    if (s == "mu_neg") return ExtensionRegime::mu_neg;
    if (s == "mu_pos") return ExtensionRegime::mu_pos;
    throw ParseError("unknown extension regime '" + s + "' (mu_neg or mu_pos)");
}

void to_json(json& j, const ExtensionSpec& s) {
    j = json{{"regime", to_string(s.regime)}, {"U", to_json(Eigen::MatrixXcd(s.U))}};
    if (s.origin) j["origin"] = *s.origin;
}

void from_json(const json& j, ExtensionSpec& s) {
    try {
        s.regime = extension_regime_from_string(j.at("regime").get<std::string>());
        const auto U = matrix_from_json(j.at("U"));
        if (U.rows() != 2 || U.cols() != 2) throw ParseError("ExtensionSpec: U must be 2x2");
        s.U = U;
        s.origin.reset();
        if (j.contains("origin")) s.origin = j.at("origin").get<FamilyTag>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("ExtensionSpec: ") + e.what());
    }
    s.validate();
}

void to_json(json& j, const GreensCheck& g) {
    json table = json::array();
    for (const auto& [eps, b] : g.table) table.push_back({{"eps", eps}, {"B", cnum(b)}});
    j = json{{"numeric", cnum(g.numeric)},
             {"closed_form", cnum(g.closed_form)},
             {"relative_error", num(g.relative_error)},
             {"extrapolation_error", num(g.extrapolation_error)},
             {"table", table}};
}

void to_json(json& j, const IndexEntry& e) { j = json{{"s", cnum(e.s)}, {"p", e.p}}; }

void to_json(json& j, const IndexSet& e) {
    json gens = json::array();
    for (const auto& g : e.generators())
        gens.push_back({{"base", g.base},
                        {"lattice", g.kind == LatticeKind::N0 ? "N0" : "Theta"},
                        {"alpha", g.alpha},
                        {"scale", g.scale}});
    j = json{{"text", to_string(e)}, {"points", e.point_entries()}, {"generators", gens},
             {"exact_below", num(e.exact_below())}};
}

void to_json(json& j, const IndexFamily& f) {
    j = json::object();
    for (std::size_t i = 0; i < f.labels.size(); ++i) j[f.labels[i]] = f.sets[i];
}

void to_json(json& j, const AsymptoticCheck& a) {
    json table = json::array();
    for (const auto& [x, s] : a.table) table.push_back({x, num(s)});
    j = json{{"expected_limit", a.expected_limit},
             {"fitted_limit", num(a.fitted_limit)},
             {"remainder_exponent", num(a.remainder_exponent)},
             {"remainder_coeff", num(a.remainder_coeff)},
             {"fit_rms", num(a.fit_rms)},
             {"constant", a.constant},
             {"satisfies_contract", a.satisfies_contract},
             {"table", table}};
}

void to_json(json& j, const MembershipReport& m) {
    j = json{{"verdict", to_string(m.verdict)},
             {"fitted_exponent", num(m.fitted_exponent)},
             {"fit_rms", num(m.fit_rms)},
             {"tail_log_growth", num(m.tail_log_growth)}};
}

} // namespace grushin
