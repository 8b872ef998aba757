#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "grushin/bessel.hpp"
#include "grushin/curvature.hpp"
#include "grushin/deficiency.hpp"
#include "grushin/extensions.hpp"
#include "grushin/frobenius.hpp"
#include "grushin/indexset.hpp"
#include "grushin/params.hpp"

namespace grushin {

inline constexpr int kSchemaVersion = 1;

// {"schema_version": 1, "kind": kind, "data": data}
nlohmann::json document(const std::string& kind, nlohmann::json data);

// Shortest text that reads back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

nlohmann::json to_json(const Eigen::MatrixXcd& m); // list of rows of {re, im}
nlohmann::json to_json(const Eigen::VectorXcd& v);
Eigen::MatrixXcd matrix_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const GrushinParams& p);
void from_json(const nlohmann::json& j, GrushinParams& p);
void to_json(nlohmann::json& j, const IndicialData& d);
void to_json(nlohmann::json& j, const ThetaLattice& t);
void to_json(nlohmann::json& j, const SelfAdjointnessVerdict& v);
void to_json(nlohmann::json& j, const ResonanceResult& r);

void to_json(nlohmann::json& j, const EndpointReport& r);
void to_json(nlohmann::json& j, const ModeCount& m);
void to_json(nlohmann::json& j, const DeficiencyReport& r);

void to_json(nlohmann::json& j, const SeriesTerm& t);
void to_json(nlohmann::json& j, const FrobeniusExpansion& e);
void to_json(nlohmann::json& j, const ResidualCertificate& c);

void to_json(nlohmann::json& j, const ModeJet& m);
void from_json(const nlohmann::json& j, ModeJet& m);
void to_json(nlohmann::json& j, const FamilyTag& t);
void from_json(const nlohmann::json& j, FamilyTag& t);
// {"regime": "mu_neg" | "mu_pos", "U": [[..],[..]], "origin": FamilyTag?}
void to_json(nlohmann::json& j, const ExtensionSpec& s);
void from_json(const nlohmann::json& j, ExtensionSpec& s); // validates
void to_json(nlohmann::json& j, const GreensCheck& g);

void to_json(nlohmann::json& j, const IndexEntry& e);
void to_json(nlohmann::json& j, const IndexSet& e);
void to_json(nlohmann::json& j, const IndexFamily& f);

void to_json(nlohmann::json& j, const AsymptoticCheck& a);

void to_json(nlohmann::json& j, const MembershipReport& m);

std::string to_string(ExtensionRegime r);
ExtensionRegime extension_regime_from_string(const std::string& s);

} // namespace grushin

namespace nlohmann {
template <>
struct adl_serializer<std::complex<double>> {
    static void to_json(json& j, const std::complex<double>& z) { j = json{{"re", z.real()}, {"im", z.imag()}}; }
    static void from_json(const json& j, std::complex<double>& z) {
        if (j.is_number()) {
            z = {j.get<double>(), 0.0};
            return;
        }
        z = {j.at("re").get<double>(), j.at("im").get<double>()};
    }
};
} // namespace nlohmann
