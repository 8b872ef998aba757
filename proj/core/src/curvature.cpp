#include "grushin/curvature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grushin/errors.hpp"

namespace grushin {

namespace {

// Fourth-order central difference of a vector-valued f at t = 0.
template <class F>
Eigen::VectorXd central4(F&& f, double h) {
    return (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
}

Eigen::VectorXd flatten(const Christoffel& G) { return Eigen::Map<const Eigen::VectorXd>(G.g.data(), G.g.size()); }

Christoffel unflatten(int N, const Eigen::VectorXd& v) {
    Christoffel G{N, std::vector<double>(v.data(), v.data() + v.size())};
    return G;
}

Eigen::VectorXd default_scale(const Point& p) { return p.cwiseAbs().cwiseMax(1.0); }

// Coordinate Christoffel symbols Gamma^a_{bc} of g at q.
Christoffel coordinate_christoffel(const CoordinateMetric& g, const Point& q, const Eigen::VectorXd& step) {
    const int N = static_cast<int>(q.size());
    const Eigen::MatrixXd G = g(q);
    const Eigen::MatrixXd Gi = G.inverse();
    std::vector<Eigen::MatrixXd> dg(N);
    for (int c = 0; c < N; ++c) {
        auto f = [&](double t) {
            Point r = q;
            r(c) += t;
            const Eigen::MatrixXd m = g(r);
            return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
        };
        const Eigen::VectorXd d = central4(f, step(c));
        dg[c] = Eigen::Map<const Eigen::MatrixXd>(d.data(), N, N);
    }
    Christoffel out{N, std::vector<double>(std::size_t(N) * N * N, 0.0)};
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c) {
                double s = 0.0;
                for (int d = 0; d < N; ++d) s += Gi(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
                out(a, b, c) = 0.5 * s;
            }
    return out;
}

} // namespace

void check_compatibility(const Christoffel& G, double tol) {
    double scale = 1.0;
    for (double v : G.g) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < G.N; ++i)
        for (int j = 0; j < G.N; ++j)
            for (int k = 0; k < G.N; ++k) {
                const double r = G(i, j, k) + G(k, j, i);
                if (!(std::abs(r) <= tol * scale)) {
                    std::ostringstream os;
                    os << "connection is not metric: Gamma^" << i << "_" << j << k << " + Gamma^" << k << "_" << j
                       << i << " = " << r;
                    throw InvalidConnection(os.str());
                }
            }
}

FrameChristoffel christoffel_from_brackets(int dim, std::function<Christoffel(const Point&)> structure,
                                           std::function<Eigen::MatrixXd(const Point&)> frame) {
    if (dim < 1) throw DomainError("christoffel_from_brackets: dim must be >= 1");
    FrameChristoffel fc;
    fc.dim = dim;
    fc.frame = std::move(frame);
    fc.gamma = [dim, structure = std::move(structure)](const Point& p) {
        const Christoffel c = structure(p);
        if (c.N != dim) throw DomainError("christoffel_from_brackets: structure constants have the wrong size");
        Christoffel G{dim, std::vector<double>(c.g.size())};
        for (int C = 0; C < dim; ++C)
            for (int A = 0; A < dim; ++A)
                for (int B = 0; B < dim; ++B) G(C, A, B) = 0.5 * (c(C, A, B) - c(A, B, C) + c(B, C, A));
        return G;
    };
    return fc;
}

double scalar_from_christoffel(const Christoffel& G, const std::vector<Christoffel>& dG) {
    const int N = G.N;
    if (static_cast<int>(dG.size()) != N) throw DomainError("scalar_from_christoffel: need one derivative per frame field");
    check_compatibility(G);
    double S = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            S += 2.0 * dG[j](j, i, i);
            for (int k = 0; k < N; ++k)
                S += G(j, k, i) * G(k, i, j) + G(j, j, k) * G(k, i, i) - G(j, k, i) * G(k, j, i) -
                     G(j, i, k) * G(k, j, i);
        }
    return S;
}

double scalar_from_christoffel(const FrameChristoffel& fc, const Point& p, double h_rel) {
    if (p.size() != fc.dim) throw DomainError("scalar_from_christoffel: point has the wrong dimension");
    const Christoffel G = fc.gamma(p);
    if (G.N != fc.dim) throw DomainError("scalar_from_christoffel: Christoffel array has the wrong size");
    std::vector<Christoffel> dG;
    if (fc.frame_derivatives) {
        dG = fc.frame_derivatives(p);
    } else {
        const Eigen::MatrixXd E = fc.frame(p);
        const Eigen::VectorXd scale = fc.step_scale ? fc.step_scale(p) : default_scale(p);
        for (int l = 0; l < fc.dim; ++l) {
            const Eigen::VectorXd d = E.col(l);
            double s = std::numeric_limits<double>::infinity();
            for (int i = 0; i < fc.dim; ++i)
                if (d(i) != 0.0) s = std::min(s, h_rel * scale(i) / std::abs(d(i)));
            if (!std::isfinite(s)) throw DomainError("scalar_from_christoffel: frame field vanishes");
            auto f = [&](double t) { return flatten(fc.gamma(p + t * d)); };
            dG.push_back(unflatten(fc.dim, central4(f, s)));
        }
    }
    return scalar_from_christoffel(G, dG);
}

FrameChristoffel flat_grushin_frame(double alpha, int n) {
    GrushinParams{alpha, n, 0.0}.validate();
    const int N = n + 1;
    auto x_of = [](const Point& p) {
        if (!(p(0) > 0.0)) throw DomainError("flat_grushin_frame: needs x > 0");
        return p(0);
    };
    FrameChristoffel fc;
    fc.dim = N;
    fc.gamma = [=](const Point& p) {
        const double x = x_of(p);
        Christoffel G{N, std::vector<double>(std::size_t(N) * N * N, 0.0)};
        for (int i = 1; i < N; ++i) {
            G(0, i, i) = alpha / x;
            G(i, i, 0) = -alpha / x;
        }
        return G;
    };
    fc.frame = [=](const Point& p) {
        const double x = x_of(p);
        Eigen::MatrixXd E = Eigen::MatrixXd::Identity(N, N);
        for (int i = 1; i < N; ++i) E(i, i) = std::pow(x, alpha);
        return E;
    };
    fc.frame_derivatives = [=](const Point& p) {
        const double x = x_of(p);
        std::vector<Christoffel> d(N, Christoffel{N, std::vector<double>(std::size_t(N) * N * N, 0.0)});
        for (int i = 1; i < N; ++i) {
            d[0](0, i, i) = -alpha / (x * x);
            d[0](i, i, 0) = alpha / (x * x);
        }
        return d;
    };
    fc.step_scale = [N](const Point& p) {
        Eigen::VectorXd s = Eigen::VectorXd::Ones(N);
        s(0) = std::abs(p(0));
        return s;
    };
    return fc;
}

double flat_model_scalar(const GrushinParams& params) {
    params.validate();
    const double an = params.alpha * params.n;
    return -an * (an + params.alpha + 2.0);
}

double scalar_from_metric(const CoordinateMetric& g, const Point& p, const Eigen::VectorXd& scale, double h_rel) {
    const int N = static_cast<int>(p.size());
    if (scale.size() != N) throw DomainError("scalar_from_metric: scale has the wrong dimension");
    const Eigen::VectorXd step = h_rel * scale;
    const Christoffel G = coordinate_christoffel(g, p, step);
    std::vector<Christoffel> dG;
    for (int c = 0; c < N; ++c) {
        auto f = [&](double t) {
            Point r = p;
            r(c) += t;
            return flatten(coordinate_christoffel(g, r, step));
        };
        dG.push_back(unflatten(N, central4(f, step(c))));
    }
    // R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}; Ric_bd = R^a_{bad}
    const Eigen::MatrixXd Gi = g(p).inverse();
    Eigen::MatrixXd Ric = Eigen::MatrixXd::Zero(N, N);
    for (int b = 0; b < N; ++b)
        for (int d = 0; d < N; ++d) {
            double r = 0.0;
            for (int a = 0; a < N; ++a) {
                r += dG[a](a, d, b) - dG[d](a, a, b);
                for (int e = 0; e < N; ++e) r += G(a, a, e) * G(e, d, b) - G(a, d, e) * G(e, a, b);
            }
            Ric(b, d) = r;
        }
    return (Gi.cwiseProduct(Ric)).sum();
}

double scalar_from_metric(const CoordinateMetric& g, const Point& p, double h_rel) {
    return scalar_from_metric(g, p, default_scale(p), h_rel);
}

CoordinateMetric WarpedMetric::full() const {
    return [alpha = alpha, n = n, g_xZ = g_xZ](const Point& p) {
        const double x = p(0);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + 1, n + 1);
        G(0, 0) = 1.0;
        G.bottomRightCorner(n, n) = std::pow(std::abs(x), -2.0 * alpha) * g_xZ(x, p.tail(n));
        return G;
    };
}

void WarpedMetric::validate_at(double x, const Eigen::VectorXd& y) const {
    GrushinParams{alpha, n, 0.0}.validate();
    if (!g_xZ) throw DomainError("warped metric: g_xZ is not set");
    const Eigen::MatrixXd m = g_xZ(x, y);
    if (m.rows() != n || m.cols() != n) throw DomainError("warped metric: g_xZ must be n x n");
    if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw DomainError("warped metric: g_xZ is not symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(m).info() != Eigen::Success)
        throw DomainError("warped metric: g_xZ is not positive definite at x = " + std::to_string(x));
}

WarpedMetric warped_metric_from_json(const nlohmann::json& j) {
    WarpedMetric w;
    try {
        w.alpha = j.at("alpha").get<double>();
        w.n = j.at("n").get<int>();
        GrushinParams{w.alpha, w.n, 0.0}.validate();
        struct Term {
            double coeff;
            int x_power;
            Eigen::VectorXd mode;
            bool sine;
        };
        const auto& rows = j.at("g_xZ");
        if (!rows.is_array() || static_cast<int>(rows.size()) != w.n) throw DomainError("metric file: g_xZ must have n rows");
        std::vector<std::vector<std::vector<Term>>> entries(w.n, std::vector<std::vector<Term>>(w.n));
        for (int r = 0; r < w.n; ++r) {
            if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != w.n)
                throw DomainError("metric file: g_xZ must be n x n");
            for (int c = 0; c < w.n; ++c)
                for (const auto& t : rows[r][c]) {
                    Term term{t.at("coeff").get<double>(), t.value("x_power", 0), Eigen::VectorXd::Zero(w.n),
                              t.value("trig", std::string("cos")) == "sin"};
                    const auto trig = t.value("trig", std::string("cos"));
                    if (trig != "cos" && trig != "sin") throw DomainError("metric file: trig must be cos or sin");
                    if (term.x_power < 0) throw DomainError("metric file: x_power must be >= 0");
                    if (t.contains("mode")) {
                        const auto k = t.at("mode").get<std::vector<int>>();
                        if (static_cast<int>(k.size()) != w.n) throw DomainError("metric file: mode must have n entries");
                        for (int i = 0; i < w.n; ++i) term.mode(i) = k[i];
                    }
                    entries[r][c].push_back(term);
                }
        }
        w.g_xZ = [entries, n = w.n](double x, const Eigen::VectorXd& y) {
            Eigen::MatrixXd m(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    double v = 0.0;
                    for (const auto& t : entries[r][c]) {
                        const double ph = t.mode.dot(y);
                        v += t.coeff * std::pow(x, t.x_power) * (t.sine ? std::sin(ph) : std::cos(ph));
                    }
                    m(r, c) = v;
                }
            return m;
        };
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("metric file: ") + e.what());
    }
    return w;
}

AsymptoticCheck asymptotic_check(const WarpedMetric& metric, const std::vector<double>& x_grid,
                                 const Eigen::VectorXd& y0_in) {
    if (x_grid.size() < 5) throw DomainError("asymptotic_check: need at least 5 grid points");
    const Eigen::VectorXd y0 = y0_in.size() == 0 ? Eigen::VectorXd::Zero(metric.n) : y0_in;
    if (y0.size() != metric.n) throw DomainError("asymptotic_check: y0 has the wrong dimension");
    for (double x : x_grid) {
        if (!(x > 0.0 && x <= 0.5)) throw DomainError("asymptotic_check: grid points must lie in (0, 0.5]");
        metric.validate_at(x, y0);
    }
    AsymptoticCheck out;
    out.expected_limit = flat_model_scalar({metric.alpha, metric.n, 0.0});
    const auto g = metric.full();
    const int N = metric.n + 1;
    const std::size_t m = x_grid.size();
    Eigen::VectorXd xs(m), v(m);
    for (std::size_t i = 0; i < m; ++i) {
        Point p(N);
        p(0) = x_grid[i];
        p.tail(metric.n) = y0;
        Eigen::VectorXd scale = Eigen::VectorXd::Ones(N);
        scale(0) = x_grid[i];
        xs(i) = x_grid[i];
        v(i) = x_grid[i] * x_grid[i] * scalar_from_metric(g, p, scale);
        out.table.emplace_back(x_grid[i], v(i));
    }
    auto table_text = [&] {
        std::ostringstream os;
        os.precision(12);
        os << "  x  x^2 S\n";
        for (const auto& [x, s] : out.table) os << "  " << x << "  " << s << "\n";
        return os.str();
    };
    if (!v.allFinite()) throw CheckFailed("asymptotic_check: non-finite curvature\n" + table_text());

    const double mean = v.mean();
    const double spread = (v.array() - mean).abs().maxCoeff();
    const double tol = 0.01 * std::abs(out.expected_limit) + 1e-8;
    if (spread <= 1e-7 * std::max(1.0, std::abs(mean))) {
        out.constant = true;
        out.fitted_limit = mean;
        out.remainder_exponent = std::numeric_limits<double>::infinity();
        out.satisfies_contract = std::abs(mean - out.expected_limit) <= tol;
        return out;
    }
    // x^2 S = L + C x^e: linear in (L, C) for fixed e
    auto solve = [&](double e, double& L, double& C) {
        Eigen::MatrixXd A(m, 2);
        A.col(0).setOnes();
        A.col(1) = xs.array().pow(e).matrix();
        const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(v);
        L = sol(0);
        C = sol(1);
        return (A * sol - v).squaredNorm();
    };
    double best_e = 0.05, L, C, best = std::numeric_limits<double>::infinity();
    for (double e = 0.05; e <= 4.0 + 1e-12; e += 0.01) {
        const double r = solve(e, L, C);
        if (r < best) {
            best = r;
            best_e = e;
        }
    }
    double lo = std::max(0.01, best_e - 0.01), hi = best_e + 0.01;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
        const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        if (solve(a, L, C) < solve(b, L, C))
            hi = b;
        else
            lo = a;
    }
    out.remainder_exponent = 0.5 * (lo + hi);
    out.fit_rms = std::sqrt(solve(out.remainder_exponent, L, C) / double(m));
    out.fitted_limit = L;
    out.remainder_coeff = C;
    if (out.fit_rms > 0.05 * spread)
        throw CheckFailed("asymptotic_check: x^2 S is not of the form L + C x^e on the grid\n" + table_text());
    out.satisfies_contract = std::abs(L - out.expected_limit) <= tol && out.remainder_exponent > 0.0;
    return out;
}

} // namespace grushin
