#pragma once

#include <string>
#include <vector>

#include "grushin/params.hpp"

namespace grushin {

// Half-line Schroedinger form of one Fourier mode after u -> x^{alpha n/2} u:
//   d^2 - k^2 x^{2 alpha} - A / x^2,   A = an(an+2)/4 - c an(an+a+2).
struct ModeOperator {
    GrushinParams params;
    double mode_strength = 0.0;
    double A = 0.0;

    double nu_squared() const { return A + 0.25; }
    // V(x) = k^2 x^{2 alpha} + A / x^2, so the operator is d^2 - V.
    double potential(double x) const;
    double potential_derivative(double x) const;
};

ModeOperator mode_operator(const GrushinParams& params, double mode_strength);

enum class EndpointClass { limit_point, limit_circle };

struct EndpointReport {
    EndpointClass cls = EndpointClass::limit_point;
    bool critical = false; // nu^2 == 1 (mu == 4)
    double nu_squared = 0.0;
};

EndpointReport classify_endpoint_zero(const ModeOperator& op);

enum class DeficiencySign { plus, minus }; // (op - i) and (op + i)

struct ModeDeficiency {
    int count = 0;
    // Decaying solution ~ c_+ psi_+ + c_- psi_- at x0; |c_-/c_+| (inf if c_+ = 0).
    double coefficient_ratio = 0.0;
    // |c_- psi_-(x0)| / (|c_+ psi_+(x0)| + |c_- psi_-(x0)|); zero means the
    // decaying solution is the small one.
    double minus_fraction = 0.0;
    double x0 = 1e-3;
    double X = 20.0;
    double wkb_max_rel_error = 0.0;
};

// Shooting: the solution of (op -+ i) u = 0 that decays at infinity is found by
// integrating the Riccati equation for u'/u inward from X, then decomposed at
// x0 into the two Frobenius solutions.  Counts 1 when it is square integrable
// near 0.
ModeDeficiency numeric_deficiency(const ModeOperator& op, DeficiencySign sign);
int numeric_deficiency_count(const ModeOperator& op, DeficiencySign sign);

struct ModeCount {
    double mode_strength = 0.0;
    int multiplicity = 0; // lattice points k with this |k|
    int count_plus = 0;   // per half-line; the other half-line is the mirror image
    int count_minus = 0;
};

enum class AggregateKind { zero, finite, infinite };

struct DeficiencyReport {
    std::vector<ModeCount> per_mode;
    EndpointReport endpoint;
    AggregateKind aggregate = AggregateKind::zero;
    long finite_value = 0; // total over sampled modes and both half-lines when finite
};

// Modes k in Z^n with |k|_inf <= k_max, one entry per distinct |k|.  The k = 0
// mode is included when it is supported (alpha > 0).
DeficiencyReport aggregate_deficiency(const GrushinParams& params, int k_max);

std::string to_string(EndpointClass c);
std::string to_string(AggregateKind k);

} // namespace grushin
