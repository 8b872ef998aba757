#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "grushin/curvature.hpp"
#include "grushin/errors.hpp"
#include "grushin/frobenius.hpp"

using namespace grushin;

namespace {

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p(i++) = x;
    return p;
}

// g = dx^2 + x^{-2 alpha} phi^2 |dy|^2: frame X_0 = d_x, X_i = w d_i with w = x^alpha / phi.
struct Conformal {
    double alpha;
    int n;
    std::function<double(const Point&)> phi, phi_x;
    std::function<Eigen::VectorXd(const Point&)> grad_y;

    FrameChristoffel frame() const {
        const int N = n + 1;
        auto self = *this;
        auto structure = [self, N](const Point& p) {
            const double x = p(0), f = self.phi(p);
            Christoffel c{N, std::vector<double>(std::size_t(N) * N * N, 0.0)};
            const double r = self.alpha / x - self.phi_x(p) / f;
            const Eigen::VectorXd dw = -std::pow(x, self.alpha) * self.grad_y(p) / (f * f);
            for (int i = 1; i < N; ++i) {
                c(i, 0, i) = r;
                c(i, i, 0) = -r;
                for (int j = 1; j < N; ++j) {
                    if (i == j) continue;
                    c(j, i, j) += dw(i - 1);
                    c(i, i, j) -= dw(j - 1);
                }
            }
            return c;
        };
        auto E = [self, N](const Point& p) {
            Eigen::MatrixXd m = Eigen::MatrixXd::Identity(N, N);
            for (int i = 1; i < N; ++i) m(i, i) = std::pow(p(0), self.alpha) / self.phi(p);
            return m;
        };
        auto fc = christoffel_from_brackets(N, structure, E);
        fc.step_scale = [N](const Point& p) {
            Eigen::VectorXd s = Eigen::VectorXd::Ones(N);
            s(0) = p(0);
            return s;
        };
        return fc;
    }

    WarpedMetric metric() const {
        auto self = *this;
        return {alpha, n, [self](double x, const Eigen::VectorXd& y) {
                    Point p(self.n + 1);
                    p(0) = x;
                    p.tail(self.n) = y;
                    const double f = self.phi(p);
                    return Eigen::MatrixXd(f * f * Eigen::MatrixXd::Identity(self.n, self.n));
                }};
    }
};

std::vector<Conformal> samples() {
    return {
        {1.0, 1, [](const Point& p) { return std::sqrt(1.0 + p(0)); },
         [](const Point& p) { return 0.5 / std::sqrt(1.0 + p(0)); }, [](const Point&) { return Eigen::VectorXd::Zero(1); }},
        {0.5, 1, [](const Point& p) { return std::sqrt(1.0 + p(0) * p(0) * std::sin(p(1))); },
         [](const Point& p) { return p(0) * std::sin(p(1)) / std::sqrt(1.0 + p(0) * p(0) * std::sin(p(1))); },
         [](const Point& p) {
             Eigen::VectorXd g(1);
             g(0) = 0.5 * p(0) * p(0) * std::cos(p(1)) / std::sqrt(1.0 + p(0) * p(0) * std::sin(p(1)));
             return g;
         }},
        {0.7, 2, [](const Point& p) { return 1.0 + 0.3 * p(0) * std::cos(p(1)) + 0.2 * std::sin(p(2)); },
         [](const Point& p) { return 0.3 * std::cos(p(1)); },
         [](const Point& p) {
             Eigen::VectorXd g(2);
             g << -0.3 * p(0) * std::sin(p(1)), 0.2 * std::cos(p(2));
             return g;
         }},
    };
}

} // namespace

TEST(FlatModelScalar, Examples) {
    EXPECT_DOUBLE_EQ(flat_model_scalar({1.0, 1, 0.0}), -4.0);
    EXPECT_DOUBLE_EQ(flat_model_scalar({1.0, 2, 0.0}), -10.0);
    for (int n = 1; n < 6; ++n) EXPECT_EQ(flat_model_scalar({0.0, n, 0.3}), 0.0);
}

TEST(FlatModelScalar, ClosedFormsAgree) {
    for (double a = -0.95; a <= 4.0; a += 0.05)
        for (int n = 1; n <= 8; ++n) {
            const double other = -(2.0 * a * n + a * a * n + a * a * n * n);
            ASSERT_NEAR(flat_model_scalar({a, n, 0.0}), other, 1e-12 * (1.0 + std::abs(other)));
        }
}

TEST(ScalarFromChristoffel, FlatGrushinFrame) {
    for (double a : {-0.5, 0.5, 1.0, 2.0})
        for (int n : {1, 2, 3}) {
            const auto fc = flat_grushin_frame(a, n);
            for (double x : {1e-3, 0.1, 0.7, 3.0}) {
                Point p = Point::Zero(n + 1);
                p(0) = x;
                p(1) = 0.4;
                const double expect = flat_model_scalar({a, n, 0.0}) / (x * x);
                // alpha (n + 1) = -2 gives exactly zero; scale by the size of the individual terms
                const double scale = std::abs(expect) + 1.0 / (x * x);
                EXPECT_NEAR(scalar_from_christoffel(fc, p), expect, 1e-10 * scale);
                // same frame, derivatives by differences
                auto fd = fc;
                fd.frame_derivatives = nullptr;
                EXPECT_NEAR(scalar_from_christoffel(fd, p), expect, 1e-8 * scale);
            }
        }
}

TEST(ScalarFromChristoffel, ZeroAndInvalid) {
    Christoffel zero{3, std::vector<double>(27, 0.0)};
    EXPECT_EQ(scalar_from_christoffel(zero, {zero, zero, zero}), 0.0);
    Christoffel bad = zero;
    bad(0, 1, 1) = 1.0; // partner Gamma^1_{10} left at 0
    EXPECT_THROW(scalar_from_christoffel(bad, {zero, zero, zero}), InvalidConnection);
    EXPECT_THROW(check_compatibility(bad), InvalidConnection);
    bad(1, 1, 0) = -1.0;
    EXPECT_NO_THROW(check_compatibility(bad));
}

TEST(ScalarFromChristoffel, RoundSphere) {
    // X_0 = d_t, X_1 = d_phi / sin t: [X_0, X_1] = -cot t X_1
    auto structure = [](const Point& p) {
        Christoffel c{2, std::vector<double>(8, 0.0)};
        c(1, 0, 1) = -1.0 / std::tan(p(0));
        c(1, 1, 0) = 1.0 / std::tan(p(0));
        return c;
    };
    auto frame = [](const Point& p) {
        Eigen::Matrix2d E;
        E << 1, 0, 0, 1.0 / std::sin(p(0));
        return Eigen::MatrixXd(E);
    };
    const auto fc = christoffel_from_brackets(2, structure, frame);
    const CoordinateMetric g = [](const Point& p) {
        Eigen::Matrix2d m;
        m << 1, 0, 0, std::pow(std::sin(p(0)), 2);
        return Eigen::MatrixXd(m);
    };
    for (double t : {0.3, 1.0, 2.0}) {
        EXPECT_NEAR(scalar_from_christoffel(fc, pt({t, 0.5})), 2.0, 1e-8);
        EXPECT_NEAR(scalar_from_metric(g, pt({t, 0.5})), 2.0, 1e-6);
    }
    // radius 3 sphere via the oracle: 2/9
    const CoordinateMetric g3 = [](const Point& p) {
        Eigen::Matrix2d m;
        m << 9, 0, 0, 9 * std::pow(std::sin(p(0)), 2);
        return Eigen::MatrixXd(m);
    };
    EXPECT_NEAR(scalar_from_metric(g3, pt({1.2, 0.0})), 2.0 / 9.0, 1e-7);
}

TEST(ScalarFromMetric, FlatGrushinMatchesClosedForm) {
    for (double a : {0.5, 1.0})
        for (int n : {1, 2}) {
            const WarpedMetric w{a, n, [n](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(n, n); }};
            for (double x : {0.01, 0.2}) {
                Point p = Point::Zero(n + 1);
                p(0) = x;
                Eigen::VectorXd s = Eigen::VectorXd::Ones(n + 1);
                s(0) = x;
                const double expect = flat_model_scalar({a, n, 0.0}) / (x * x);
                EXPECT_NEAR(scalar_from_metric(w.full(), p, s), expect, 1e-6 * std::abs(expect));
            }
        }
}

TEST(FrameVsCoordinates, NonFlatSamples) {
    for (const auto& c : samples()) {
        const auto fc = c.frame();
        const auto g = c.metric().full();
        for (double x : {0.05, 0.2, 0.45}) {
            Point p = Point::Zero(c.n + 1);
            p(0) = x;
            for (int i = 1; i <= c.n; ++i) p(i) = 0.3 + 0.7 * i;
            Eigen::VectorXd s = Eigen::VectorXd::Ones(c.n + 1);
            s(0) = x;
            const double frame = scalar_from_christoffel(fc, p);
            const double coord = scalar_from_metric(g, p, s);
            EXPECT_NEAR(frame, coord, 1e-6 * std::abs(coord)) << c.alpha << " " << c.n << " x=" << x;
        }
    }
}

TEST(AsymptoticCheck, FlatCylinderIsExact) {
    const WarpedMetric w{0.5, 2, [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(2, 2); }};
    const auto r = asymptotic_check(w, log_grid(0.01, 0.5, 8));
    EXPECT_TRUE(r.constant);
    EXPECT_NEAR(r.fitted_limit, r.expected_limit, 1e-7 * std::abs(r.expected_limit));
    EXPECT_TRUE(r.satisfies_contract);
}

TEST(AsymptoticCheck, PerturbedSamples) {
    const auto s = samples();
    const auto a = asymptotic_check(s[0].metric(), log_grid(0.005, 0.5, 14));
    EXPECT_EQ(a.expected_limit, -4.0);
    EXPECT_NEAR(a.fitted_limit, -4.0, 0.04);
    EXPECT_NEAR(a.remainder_exponent, 1.0, 0.2);
    EXPECT_TRUE(a.satisfies_contract);

    Eigen::VectorXd y(1);
    y << 1.0;
    const auto b = asymptotic_check(s[1].metric(), log_grid(0.005, 0.5, 14), y);
    EXPECT_EQ(b.expected_limit, -1.5);
    EXPECT_NEAR(b.fitted_limit, -1.5, 0.015);
    EXPECT_GT(b.remainder_exponent, 0.0);
    EXPECT_TRUE(b.satisfies_contract);

    Eigen::VectorXd y2(2);
    y2 << 0.4, 1.1;
    const auto c = asymptotic_check(s[2].metric(), log_grid(0.005, 0.5, 14), y2);
    EXPECT_NEAR(c.fitted_limit, c.expected_limit, 0.01 * std::abs(c.expected_limit));
    EXPECT_TRUE(c.satisfies_contract);
}

TEST(AsymptoticCheck, Validation) {
    const WarpedMetric w{1.0, 1, [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); }};
    EXPECT_THROW(asymptotic_check(w, {0.1, 0.2, 0.3}), DomainError);
    EXPECT_THROW(asymptotic_check(w, {0.1, 0.2, 0.3, 0.4, 0.6}), DomainError);
    const WarpedMetric neg{1.0, 1, [](double x, const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, x - 0.2); }};
    EXPECT_THROW(asymptotic_check(neg, log_grid(0.01, 0.5, 6)), DomainError);
}

TEST(MetricFile, ParsesPolynomialFourierData) {
    const auto j = nlohmann::json::parse(R"({"alpha": 0.5, "n": 1,
        "g_xZ": [[[{"coeff": 1}, {"coeff": 1, "x_power": 2, "mode": [1], "trig": "sin"}]]]})");
    const auto w = warped_metric_from_json(j);
    Eigen::VectorXd y(1);
    y << 0.7;
    EXPECT_NEAR(w.g_xZ(0.3, y)(0, 0), 1.0 + 0.09 * std::sin(0.7), 1e-15);
    const auto ref_g = samples()[1].metric();
    for (double x : {0.01, 0.2, 0.5}) EXPECT_NEAR(w.g_xZ(x, y)(0, 0), ref_g.g_xZ(x, y)(0, 0), 1e-14);
    y << 1.0;
    const auto r = asymptotic_check(w, log_grid(0.005, 0.5, 14), y);
    const auto ref = asymptotic_check(samples()[1].metric(), log_grid(0.005, 0.5, 14), y);
    // the two metrics differ by roundoff only, which the difference quotients amplify
    EXPECT_NEAR(r.fitted_limit, ref.fitted_limit, 1e-7);

    EXPECT_THROW(warped_metric_from_json(nlohmann::json::parse(R"({"alpha": 0.5, "n": 2, "g_xZ": [[[]]]})")),
                 DomainError);
    EXPECT_THROW(warped_metric_from_json(nlohmann::json::parse(R"({"n": 1})")), DomainError);
    EXPECT_THROW(warped_metric_from_json(nlohmann::json::parse(
                     R"({"alpha": 0.5, "n": 1, "g_xZ": [[[{"coeff": 1, "trig": "tan"}]]]})")),
                 DomainError);
}
