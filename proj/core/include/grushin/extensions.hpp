#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grushin/params.hpp"

namespace grushin {

// Leading coefficients of one Fourier mode of u on the right (x > 0) and the
// left (x < 0) of the singular set.
struct ModeJet {
    cplx a_plus_r{}, a_minus_r{}, a_plus_l{}, a_minus_l{};

    Eigen::Vector2cd a_plus() const { return {a_plus_r, a_plus_l}; }
    Eigen::Vector2cd a_minus() const { return {a_minus_r, a_minus_l}; }
    // (a_+ + i a_-) and (a_+ - i a_-), per side.
    Eigen::Vector2cd A1() const { return a_plus() + cplx(0, 1) * a_minus(); }
    Eigen::Vector2cd A2() const { return a_plus() - cplx(0, 1) * a_minus(); }
    static ModeJet from_pm(const Eigen::Vector2cd& plus, const Eigen::Vector2cd& minus);
    static ModeJet from_A(const Eigen::Vector2cd& A1, const Eigen::Vector2cd& A2);
    double norm() const;
};

// Modes |k| <= K in a fixed order shared by all jets that are paired.
struct BoundaryJet {
    int K = 0;
    std::vector<ModeJet> modes;
};

enum class ExtensionRegime { mu_neg, mu_pos };

struct FamilyTag {
    int kind = 1; // 1..5 in the order Friedrichs, right Robin, left Robin, transmission, Hermitian
    double gamma = 0.0;
    cplx b{};
    Eigen::Matrix2cd Gamma = Eigen::Matrix2cd::Zero();
};

struct ExtensionSpec {
    ExtensionRegime regime = ExtensionRegime::mu_neg;
    Eigen::Matrix2cd U = Eigen::Matrix2cd::Identity();
    std::optional<FamilyTag> origin;

    // Throws DomainError unless U is unitary to 1e-12.
    void validate() const;
};

ExtensionRegime regime_for(const GrushinParams& params); // DomainError outside mu < 0 or 0 < mu < 4

// mu_neg: i sqrt|mu| sum_k (<a_+,b_+> - <a_-,b_->)
// mu_pos: sum_k sum_{r,l} (conj(a_-) b_+ - conj(a_+) b_-)
// <x,y> is conjugate-linear in x.
cplx asymmetry_form(const BoundaryJet& u, const BoundaryJet& v, ExtensionRegime regime, double mu);
cplx asymmetry_form(const BoundaryJet& u, const BoundaryJet& v, const GrushinParams& params);
cplx asymmetry_form(const ModeJet& u, const ModeJet& v, ExtensionRegime regime, double mu);

// a_+ = U a_- (mu_neg) or A_2 = U A_1 (mu_pos), mode by mode.
struct LagrangianConstraint {
    ExtensionSpec spec;

    Eigen::Vector2cd defect(const ModeJet& j) const;
    bool satisfied(const ModeJet& j, double tol = 1e-10) const;
    bool satisfied(const BoundaryJet& j, double tol = 1e-10) const;
    // The admissible jet with free data z (a_- for mu_neg, A_1 for mu_pos).
    ModeJet admissible(const Eigen::Vector2cd& z) const;
    // For a jet v violating the constraint, an admissible u with omega(u, v) != 0.
    ModeJet maximality_witness(const ModeJet& v) const;
};

LagrangianConstraint lagrangian_from_unitary(const ExtensionSpec& spec);

ExtensionSpec named_family(const FamilyTag& tag);
// The boundary relations listed with each family, checked directly.
bool family_relations_hold(const FamilyTag& tag, const ModeJet& j, double tol = 1e-10);
// Two jets spanning the solution space of those relations.
std::array<ModeJet, 2> family_relation_basis(const FamilyTag& tag);

enum class HDenominator { literal, derivative_regularized };

struct HOptions {
    bool flat = true;
    HDenominator denominator = HDenominator::derivative_regularized;
    double divergence_at_Z = 0.0;      // div of d/dx for |x|^{an} omega, restricted to Z
    double d_x2S_at_Z = 0.0;           // d/dx (x^2 S) restricted to Z
};

// Flat model: sqrt(mu).  Otherwise sqrt(mu) + (div lambda_- - c d(x^2 S)) / den,
// den = p(lambda_-) (always zero: DegenerateDenominator) or p'(lambda_-) = -sqrt(mu).
double h_function(const GrushinParams& params, const HOptions& options = {});

struct GreensCheck {
    cplx numeric;     // Richardson limit of B(eps)
    cplx closed_form; // asymmetry form, times h for mu_pos
    double relative_error = 0.0;
    double extrapolation_error = 0.0;
    std::vector<std::pair<double, cplx>> table; // (eps, B(eps))
};

// B(eps) = sum over sides of eps^{-an} int_Z (conj(u) d_r v - v d_r conj(u)) dy
// with d_r = d/d|x|, u and v built from Frobenius solutions of one torus mode
// and phi_k = e^{iky}/(2 pi)^{n/2}, integrated by the trapezoid rule.  Note
// (u, Lv) - (Lu, v) = -lim B.
GreensCheck greens_identity_check(const GrushinParams& params, const std::vector<int>& mode, const ModeJet& u,
                                  const ModeJet& v, const std::vector<double>& eps_sequence,
                                  double series_cutoff = 12.0);

} // namespace grushin
