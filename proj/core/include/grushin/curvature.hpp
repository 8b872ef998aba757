#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "grushin/params.hpp"

namespace grushin {

using Point = Eigen::VectorXd;

// Gamma^C_{AB}, with nabla_{X_A} X_B = Gamma^C_{AB} X_C, stored at (C * N + A) * N + B.
struct Christoffel {
    int N = 0;
    std::vector<double> g;

    double operator()(int C, int A, int B) const { return g[(std::size_t(C) * N + A) * N + B]; }
    double& operator()(int C, int A, int B) { return g[(std::size_t(C) * N + A) * N + B]; }
};

// Throws InvalidConnection when Gamma^i_{jk} + Gamma^k_{ji} exceeds tol.
void check_compatibility(const Christoffel& G, double tol = 1e-10);

struct FrameChristoffel {
    int dim = 0;
    std::function<Christoffel(const Point&)> gamma;
    std::function<Eigen::MatrixXd(const Point&)> frame; // column A: coordinates of X_A
    // Optional exact X_l[Gamma^C_{AB}], indexed l first; finite differences otherwise.
    std::function<std::vector<Christoffel>(const Point&)> frame_derivatives;
    // Coordinate magnitudes for difference steps; max(|p_i|, 1) when unset.
    std::function<Eigen::VectorXd(const Point&)> step_scale;
};

// Koszul: Gamma^C_{AB} = (c^C_{AB} - c^A_{BC} + c^B_{CA}) / 2 with [X_A, X_B] = c^C_{AB} X_C.
// The structure constants use the same (C, A, B) layout.
FrameChristoffel christoffel_from_brackets(int dim, std::function<Christoffel(const Point&)> structure,
                                           std::function<Eigen::MatrixXd(const Point&)> frame);

// sum over i, j, k of 2 X_j[G^j_ii] + G^j_ki G^k_ij + G^j_jk G^k_ii - G^j_ki G^k_ji - G^j_ik G^k_ji
double scalar_from_christoffel(const Christoffel& G, const std::vector<Christoffel>& dG);
double scalar_from_christoffel(const FrameChristoffel& fc, const Point& p, double h_rel = 1e-4);

// X_0 = d/dx, X_i = |x|^alpha d/dy_i on x > 0.
FrameChristoffel flat_grushin_frame(double alpha, int n);

// Coefficient of x^{-2}: -alpha n (alpha n + alpha + 2).
double flat_model_scalar(const GrushinParams& params);

using CoordinateMetric = std::function<Eigen::MatrixXd(const Point&)>;

// Riemann tensor from fourth-order central differences of the metric, contracted
// twice.  Coordinate i is stepped by h_rel * scale_i (max(|p_i|, 1) when omitted).
double scalar_from_metric(const CoordinateMetric& g, const Point& p, const Eigen::VectorXd& scale,
                          double h_rel = 1e-4);
double scalar_from_metric(const CoordinateMetric& g, const Point& p, double h_rel = 1e-4);

struct WarpedMetric {
    double alpha = 0.0;
    int n = 1;
    std::function<Eigen::MatrixXd(double x, const Eigen::VectorXd& y)> g_xZ;

    // dx^2 + |x|^{-2 alpha} g_xZ in coordinates (x, y_1, ..., y_n)
    CoordinateMetric full() const;
    // DomainError unless g_xZ is symmetric positive definite at (x, y)
    void validate_at(double x, const Eigen::VectorXd& y) const;
};

// {"alpha": a, "n": n, "g_xZ": [[entry, ...], ...]} where each entry is a list of
// terms {"coeff": c, "x_power": k, "mode": [k_1..k_n], "trig": "cos" | "sin"}
// summed as c x^k trig(k . y).  "mode" defaults to 0 and "trig" to "cos".
WarpedMetric warped_metric_from_json(const nlohmann::json& j);

struct AsymptoticCheck {
    double expected_limit = 0.0; // -alpha n (alpha n + alpha + 2)
    double fitted_limit = 0.0;
    double remainder_exponent = 0.0; // +inf when x^2 S is constant on the grid
    double remainder_coeff = 0.0;
    double fit_rms = 0.0;
    bool constant = false;
    bool satisfies_contract = false; // limit within 1% and the remainder decays
    std::vector<std::pair<double, double>> table; // (x, x^2 S)
};

// Fits x^2 S = L + C x^e on the grid.  Grid points must lie in (0, 0.5].
AsymptoticCheck asymptotic_check(const WarpedMetric& metric, const std::vector<double>& x_grid,
                                 const Eigen::VectorXd& y0 = {});

} // namespace grushin
