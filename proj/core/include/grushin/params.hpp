#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace grushin {

using cplx = std::complex<double>;

// (alpha, n, c): metric exponent, dimension of the singular set, curvature coupling.
struct GrushinParams {
    double alpha = 0.0;
    int n = 1;
    double c = 0.0;

    // Throws DomainError unless alpha > -1 and n >= 1.
    void validate() const;
};

// Standard is the discriminant of the indicial polynomial.  PrintedPlus flips the
// sign of the coupling term and exists only for comparison runs.
enum class MuConvention { Standard, PrintedPlus };

struct IndicialData {
    // p(s) = s^2 + p_coeffs[1] s + p_coeffs[2], p_coeffs[0] == 1.
    std::array<double, 3> p_coeffs{1.0, 0.0, 0.0};
    double mu = 0.0;
    // Ordered by real part; for mu < 0 lambda_plus has positive imaginary part.
    cplx lambda_plus;
    cplx lambda_minus;

    cplx p(cplx s) const { return s * s + p_coeffs[1] * s + p_coeffs[2]; }
    cplx dp(cplx s) const { return 2.0 * s + p_coeffs[1]; }
    // Principal square root of mu: sqrt(mu) >= 0 or i sqrt(|mu|).
    cplx sqrt_mu() const;
};

IndicialData indicial_data(const GrushinParams& params,
                           MuConvention convention = MuConvention::Standard);

struct ThetaElement {
    double value = 0.0;
    int i = 0; // coefficient of (1 + alpha)
    int j = 0; // integer part
};

// The exponent lattice {(1+alpha) i + j : i, j >= 0} cut at `cutoff`.
struct ThetaLattice {
    double alpha = 0.0;
    double cutoff = 0.0;
    bool exact_rational = false;
    std::vector<ThetaElement> elements;

    // Element within tol of v, if any.
    std::optional<ThetaElement> find(double v, double tol = 1e-9) const;
    // Smallest element strictly greater than v + tol.
    std::optional<double> next_above(double v, double tol = 1e-12) const;
    std::vector<double> values() const;
};

ThetaLattice theta_lattice(double alpha, double cutoff);

// Continued-fraction detection of alpha = num/den with den <= max_den.
std::optional<std::pair<long long, long long>> rational_approximation(double alpha,
                                                                      long long max_den = 1000);

enum class Verdict { EssentiallySelfAdjoint, NotESA_InfiniteDeficiency, Critical_Mu4_Indeterminate };
enum class Regime { mu_neg, mu_in_0_4, mu_eq_4, mu_gt_4 };

struct SelfAdjointnessVerdict {
    Verdict verdict = Verdict::Critical_Mu4_Indeterminate;
    double mu = 0.0;
    Regime regime = Regime::mu_eq_4;
    bool resonant = false;
};

constexpr double kMuCriticalTol = 1e-9;

bool is_mu_critical(double mu);
Regime regime_of(double mu);
SelfAdjointnessVerdict classify(const GrushinParams& params);

struct ResonanceResult {
    bool resonant = false;
    std::optional<ThetaElement> witness;
};

// sqrt(mu) in Theta?  A negative cutoff means "just large enough".
ResonanceResult resonance(const GrushinParams& params, double cutoff = -1.0);

// The coupling c at which mu == 4.
double forbidden_c(double alpha, int n);

// The two hypotheses of the mu in (0,4) extension theorem that concern mu,
// kept apart on purpose.
bool mu_not_two(const GrushinParams& params, double tol = 1e-12);
bool not_resonant(const GrushinParams& params);

std::string to_string(Verdict v);
std::string to_string(Regime r);

} // namespace grushin
