#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grushin/params.hpp"

namespace grushin {

// One graded piece x^grade (D (x d/dx) + V) of x^2 (Delta - c S), acting on
// Fourier coefficient vectors.  The grade-zero part is the scalar indicial
// polynomial and is not stored here.
struct GradedTerm {
    double grade = 0.0;
    int wi = 0; // Theta witness of the grade
    int wj = 0;
    Eigen::MatrixXcd D;
    Eigen::MatrixXcd V;
};

struct OperatorSeriesData {
    GrushinParams params;
    IndicialData indicial;
    int K = 0;
    std::vector<std::vector<int>> basis; // Fourier modes on the flat torus
    std::vector<GradedTerm> terms;       // sorted by grade, grades distinct

    Eigen::Index dim() const { return static_cast<Eigen::Index>(basis.size()); }
    int basis_index(const std::vector<int>& k) const; // -1 if absent
    Eigen::VectorXcd mode_vector(const std::vector<int>& k) const;

    // Adds into an existing grade when one matches.  Grades must be positive
    // elements of Theta.
    void add_term(double grade, const Eigen::MatrixXcd& D, const Eigen::MatrixXcd& V);
    // div_theta x^theta d/dx  ->  grade 1 + theta, first order.
    void add_divergence_term(double theta, const Eigen::MatrixXcd& div);
    // S_theta x^{theta - 2}   ->  grade theta, contributes -c S_theta.
    void add_curvature_term(double theta, const Eigen::MatrixXcd& S);
    // x^{2 alpha} Delta_{theta,Z} x^theta  ->  grade 2 (1 + alpha) + theta.
    void add_tangential_term(double theta, const Eigen::MatrixXcd& lap);
};

// Modes k in Z^n with |k|_inf <= K, ordered by |k|^2 and then by descending
// lexicographic order (0, 1, -1, 2, -2, ... for n = 1).
std::vector<std::vector<int>> torus_basis(int n, int K);

// Flat torus model: a single coupling x^{2+2 alpha} diag(-|k|^2).
OperatorSeriesData flat_model_series_data(const GrushinParams& params, int K);

// One mode of strength m (= |k|): the 1x1 version of the flat model.
OperatorSeriesData flat_mode_series_data(const GrushinParams& params, double mode_strength);

enum class Root { plus, minus };

struct SeriesTerm {
    double theta = 0.0;
    int p = 0; // power of log x
    Eigen::VectorXcd coeff;
};

struct FrobeniusExpansion {
    cplx lambda;
    Root root = Root::plus;
    double order_cutoff = 0.0;
    std::vector<SeriesTerm> terms; // sorted by (theta, p)
    bool resonant = false;
    double resonance_grade = 0.0;
    Eigen::VectorXcd log_seed; // coefficient of x^{lambda_+} log x when resonant
    std::optional<cplx> log_constant_C;

    Eigen::VectorXcd evaluate(double x) const;
    Eigen::VectorXcd derivative(double x) const;
    // Coefficient vector at (theta, p), zero if absent.
    Eigen::VectorXcd coefficient(double theta, int p, double tol = 1e-9) const;
};

struct ExpandOptions {
    bool allow_log = true;
    // Coefficient placed at the undetermined resonant grade (zero when unset).
    std::optional<Eigen::VectorXcd> resonant_free;
};

FrobeniusExpansion expand(const OperatorSeriesData& data, Root root, const Eigen::VectorXcd& seed,
                          double cutoff, const ExpandOptions& options = {});

struct ResidualCertificate {
    double fitted_exponent = 0.0; // +inf when the residual vanishes identically
    double theta_next = 0.0;
    double expected_exponent = 0.0; // Re lambda + theta_next
    bool identically_zero = false;
    bool satisfies_contract = false;
    double fit_rms = 0.0;
    std::vector<std::pair<double, double>> table; // (x, |L u_trunc|)
};

// Applies the truncated operator to the truncated series exactly, drops
// collected terms that cancel to roundoff, and fits the decay exponent of
// what remains on x_grid.  Contract: fitted >= Re lambda + theta_next - 0.05.
ResidualCertificate residual_certificate(const FrobeniusExpansion& expansion,
                                         const OperatorSeriesData& data,
                                         const std::vector<double>& x_grid);

std::vector<double> log_grid(double lo, double hi, int count);

} // namespace grushin
