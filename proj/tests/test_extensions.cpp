#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "grushin/errors.hpp"
#include "grushin/extensions.hpp"

using namespace grushin;

namespace {

const cplx I(0.0, 1.0);

struct Rng {
    std::mt19937_64 g;
    std::normal_distribution<double> n{0.0, 1.0};
    explicit Rng(unsigned s) : g(s) {}
    cplx z() { return {n(g), n(g)}; }
    Eigen::Vector2cd v() { return {z(), z()}; }
    ModeJet jet() { return {z(), z(), z(), z()}; }
    Eigen::Matrix2cd hermitian() {
        Eigen::Matrix2cd m;
        m << z(), z(), z(), z();
        return 0.5 * (m + m.adjoint());
    }
    Eigen::Matrix2cd unitary() {
        Eigen::Matrix2cd m;
        m << z(), z(), z(), z();
        return Eigen::HouseholderQR<Eigen::Matrix2cd>(m).householderQ() * Eigen::Matrix2cd::Identity();
    }
    FamilyTag family(int kind) {
        FamilyTag t;
        t.kind = kind;
        t.gamma = 2.0 * n(g);
        t.b = z();
        t.Gamma = hermitian();
        return t;
    }
};

BoundaryJet single(const ModeJet& m) { return {1, {m}}; }

} // namespace

TEST(AsymmetryForm, Examples) {
    const GrushinParams neg{1.0, 1, 1.0}; // mu = -12
    ModeJet u{};
    u.a_plus_r = 1.0;
    const cplx w = asymmetry_form(single(u), single(u), neg);
    EXPECT_NEAR(w.real(), 0.0, 1e-15);
    EXPECT_NEAR(w.imag(), std::sqrt(12.0), 1e-14);

    Rng r(1);
    for (int t = 0; t < 50; ++t) {
        const auto p = r.v();
        EXPECT_LT(std::abs(asymmetry_form(ModeJet::from_pm(p, p), ModeJet::from_pm(p, p), ExtensionRegime::mu_neg, -3.0)),
                  1e-14);
    }

    ModeJet a{}, b{};
    a.a_minus_r = 1.0;
    b.a_plus_r = 1.0;
    const GrushinParams pos{0.5, 1, 0.0}; // mu = 2.25
    EXPECT_EQ(asymmetry_form(single(a), single(b), pos), cplx(1.0, 0.0));
    EXPECT_EQ(asymmetry_form(single(b), single(a), pos), cplx(-1.0, 0.0));
}

TEST(AsymmetryForm, RegimeMismatchAndSupport) {
    ModeJet u{};
    EXPECT_THROW(asymmetry_form(u, u, ExtensionRegime::mu_neg, 1.0), DomainError);
    EXPECT_THROW(asymmetry_form(u, u, ExtensionRegime::mu_pos, -1.0), DomainError);
    EXPECT_THROW(asymmetry_form(u, u, ExtensionRegime::mu_pos, 5.0), DomainError);
    EXPECT_THROW(asymmetry_form(single(u), single(u), GrushinParams{1.0, 1, 0.0}), DomainError); // mu = 4
    EXPECT_THROW(asymmetry_form(single(u), BoundaryJet{2, {u, u}}, GrushinParams{1.0, 1, 1.0}), DomainError);
}

TEST(AsymmetryForm, AntisymmetryAndSesquilinearity) {
    Rng r(2);
    for (auto [reg, mu] : {std::pair{ExtensionRegime::mu_neg, -2.5}, std::pair{ExtensionRegime::mu_pos, 1.7}}) {
        for (int t = 0; t < 200; ++t) {
            BoundaryJet u{2, {r.jet(), r.jet(), r.jet()}}, v{2, {r.jet(), r.jet(), r.jet()}}, w{2, {r.jet(), r.jet(), r.jet()}};
            const cplx uv = asymmetry_form(u, v, reg, mu), vu = asymmetry_form(v, u, reg, mu);
            EXPECT_LT(std::abs(uv + std::conj(vu)), 1e-12 * (1.0 + std::abs(uv)));
            const cplx s = r.z();
            BoundaryJet comb = v;
            for (std::size_t k = 0; k < comb.modes.size(); ++k) {
                auto& m = comb.modes[k];
                const auto& x = w.modes[k];
                m = {m.a_plus_r + s * x.a_plus_r, m.a_minus_r + s * x.a_minus_r, m.a_plus_l + s * x.a_plus_l,
                     m.a_minus_l + s * x.a_minus_l};
            }
            const cplx lhs = asymmetry_form(u, comb, reg, mu);
            const cplx rhs = uv + s * asymmetry_form(u, w, reg, mu);
            EXPECT_LT(std::abs(lhs - rhs), 1e-12 * (1.0 + std::abs(lhs)));
            const cplx uu = asymmetry_form(u, u, reg, mu);
            EXPECT_LT(std::abs(uu.real()), 1e-12 * (1.0 + std::abs(uu)));
        }
    }
}

TEST(AsymmetryForm, PolarFormInAVariables) {
    // (i/2)(<A1,B1> - <A2,B2>) for the mu_pos mode formula.
    Rng r(3);
    for (int t = 0; t < 200; ++t) {
        const auto u = r.jet(), v = r.jet();
        const cplx expect = 0.5 * I * (u.A1().dot(v.A1()) - u.A2().dot(v.A2()));
        EXPECT_LT(std::abs(asymmetry_form(u, v, ExtensionRegime::mu_pos, 2.0) - expect), 1e-12 * (1.0 + std::abs(expect)));
    }
}

TEST(Lagrangian, Examples) {
    ExtensionSpec id;
    const auto cneg = lagrangian_from_unitary(id);
    Rng r(4);
    const auto p = r.v();
    EXPECT_TRUE(cneg.satisfied(ModeJet::from_pm(p, p)));
    EXPECT_FALSE(cneg.satisfied(ModeJet::from_pm(p, 2.0 * p)));

    id.regime = ExtensionRegime::mu_pos;
    const auto cpos = lagrangian_from_unitary(id);
    EXPECT_TRUE(cpos.satisfied(ModeJet::from_pm(p, Eigen::Vector2cd::Zero())));
    EXPECT_FALSE(cpos.satisfied(ModeJet::from_pm(p, p)));

    ExtensionSpec neu{ExtensionRegime::mu_pos, -Eigen::Matrix2cd::Identity(), std::nullopt};
    const auto cn = lagrangian_from_unitary(neu);
    EXPECT_TRUE(cn.satisfied(ModeJet::from_pm(Eigen::Vector2cd::Zero(), p)));
    EXPECT_FALSE(cn.satisfied(ModeJet::from_pm(p, p)));

    ExtensionSpec bad{ExtensionRegime::mu_neg, 1.01 * Eigen::Matrix2cd::Identity(), std::nullopt};
    EXPECT_THROW(lagrangian_from_unitary(bad), DomainError);
}

TEST(Lagrangian, IsotropyOnRandomSpecs) {
    Rng r(5);
    for (auto [reg, mu] : {std::pair{ExtensionRegime::mu_neg, -12.0}, std::pair{ExtensionRegime::mu_pos, 2.25}}) {
        for (int s = 0; s < 10; ++s) {
            const auto c = lagrangian_from_unitary({reg, r.unitary(), std::nullopt});
            for (int t = 0; t < 1000; ++t) {
                const auto u = c.admissible(r.v()), v = c.admissible(r.v());
                ASSERT_TRUE(c.satisfied(u));
                const double scale = std::sqrt(std::abs(mu)) * u.norm() * v.norm();
                ASSERT_LT(std::abs(asymmetry_form(u, v, reg, mu)), 1e-10 * scale);
            }
        }
    }
}

TEST(Lagrangian, MaximalityWitness) {
    Rng r(6);
    for (auto [reg, mu] : {std::pair{ExtensionRegime::mu_neg, -1.0}, std::pair{ExtensionRegime::mu_pos, 3.0}}) {
        for (int t = 0; t < 300; ++t) {
            const auto c = lagrangian_from_unitary({reg, r.unitary(), std::nullopt});
            const auto v = r.jet();
            ASSERT_FALSE(c.satisfied(v));
            const auto u = c.maximality_witness(v);
            ASSERT_TRUE(c.satisfied(u));
            ASSERT_GT(std::abs(asymmetry_form(u, v, reg, mu)), 1e-8 * u.norm() * v.norm());
        }
        const auto c = lagrangian_from_unitary({reg, r.unitary(), std::nullopt});
        EXPECT_THROW(c.maximality_witness(c.admissible(r.v())), DomainError);
    }
}

TEST(Families, Examples) {
    FamilyTag t2;
    t2.kind = 2;
    const auto s2 = named_family(t2);
    Eigen::Matrix2cd d;
    d << -1, 0, 0, 1;
    EXPECT_LT((s2.U - d).norm(), 1e-15);
    EXPECT_TRUE(family_relations_hold(t2, ModeJet{0, 1, 1, 0}));
    EXPECT_FALSE(family_relations_hold(t2, ModeJet{1, 1, 1, 0}));

    FamilyTag t5;
    t5.kind = 5;
    EXPECT_LT((named_family(t5).U + Eigen::Matrix2cd::Identity()).norm(), 1e-15);

    FamilyTag t4;
    t4.kind = 4;
    t4.b = 1.0;
    Eigen::Matrix2cd x;
    x << 0, -1, -1, 0;
    EXPECT_LT((named_family(t4).U - x).norm(), 1e-15);
    // a^r_- = a^l_-, a^l_+ + a^r_+ = 0
    EXPECT_TRUE(family_relations_hold(t4, ModeJet{2.0, 3.0, -2.0, 3.0}));
    EXPECT_FALSE(family_relations_hold(t4, ModeJet{2.0, 3.0, 2.0, 3.0}));

    FamilyTag t1;
    EXPECT_LT((named_family(t1).U - Eigen::Matrix2cd::Identity()).norm(), 0.0 + 1e-15);
}

TEST(Families, Errors) {
    FamilyTag t;
    t.kind = 6;
    EXPECT_THROW(named_family(t), DomainError);
    t.kind = 5;
    t.Gamma << 0, 1, 0, 0;
    EXPECT_THROW(named_family(t), DomainError);
    t.kind = 2;
    t.gamma = std::nan("");
    EXPECT_THROW(named_family(t), DomainError);
}

TEST(Families, GraphConstraintMatchesListedRelations) {
    Rng r(7);
    for (int kind = 1; kind <= 5; ++kind) {
        for (int s = 0; s < 20; ++s) {
            const auto tag = r.family(kind);
            const auto spec = named_family(tag);
            const auto c = lagrangian_from_unitary(spec);
            EXPECT_TRUE(spec.origin.has_value());
            // constraint => relations
            for (int t = 0; t < 100; ++t) ASSERT_TRUE(family_relations_hold(tag, c.admissible(r.v()), 1e-9)) << kind;
            // relations => constraint
            const auto basis = family_relation_basis(tag);
            for (const auto& b : basis) ASSERT_TRUE(family_relations_hold(tag, b, 1e-12)) << kind;
            for (int t = 0; t < 100; ++t) {
                const cplx s0 = r.z(), s1 = r.z();
                const auto& b0 = basis[0];
                const auto& b1 = basis[1];
                const ModeJet j{s0 * b0.a_plus_r + s1 * b1.a_plus_r, s0 * b0.a_minus_r + s1 * b1.a_minus_r,
                                s0 * b0.a_plus_l + s1 * b1.a_plus_l, s0 * b0.a_minus_l + s1 * b1.a_minus_l};
                ASSERT_TRUE(c.satisfied(j, 1e-9)) << kind;
            }
            // generic jets satisfy neither
            for (int t = 0; t < 20; ++t) {
                const auto j = r.jet();
                ASSERT_EQ(c.satisfied(j, 1e-9), family_relations_hold(tag, j, 1e-9));
            }
        }
    }
}

TEST(Families, FriedrichsKillsMinusCoefficients) {
    Rng r(8);
    const auto c = lagrangian_from_unitary(named_family(FamilyTag{}));
    for (int t = 0; t < 100; ++t) {
        const auto j = c.admissible(r.v());
        EXPECT_LT(j.a_minus().norm(), 1e-14 * j.norm());
    }
}

TEST(Families, CayleyUnitaryAndInjective) {
    Rng r(9);
    std::vector<Eigen::Matrix2cd> gs, us;
    for (int t = 0; t < 200; ++t) {
        FamilyTag tag;
        tag.kind = 5;
        tag.Gamma = 10.0 * r.hermitian();
        const auto s = named_family(tag);
        EXPECT_LT((s.U.adjoint() * s.U - Eigen::Matrix2cd::Identity()).norm(), 1e-12);
        gs.push_back(tag.Gamma);
        us.push_back(s.U);
    }
    for (std::size_t i = 0; i < gs.size(); ++i)
        for (std::size_t j = i + 1; j < gs.size(); ++j) ASSERT_GT((us[i] - us[j]).norm(), 1e-10);
    // Inverse Cayley recovers Gamma: Gamma = i (Id + U)(Id - U)^{-1}.
    const Eigen::Matrix2cd Id = Eigen::Matrix2cd::Identity();
    for (std::size_t i = 0; i < gs.size(); ++i)
        EXPECT_LT((I * (Id + us[i]) * (Id - us[i]).inverse() - gs[i]).norm(), 1e-8 * (1.0 + gs[i].norm()));
}

TEST(HFunction, Examples) {
    EXPECT_DOUBLE_EQ(h_function({0.5, 1, 0.0}), 1.5);
    EXPECT_NEAR(h_function({1.0, 1, 3.0 / 16.0}), 1.0, 1e-15);
    Rng r(10);
    std::uniform_real_distribution<double> ua(0.0, 3.0), uc(-1.0, 1.0);
    int seen = 0;
    for (int t = 0; t < 2000; ++t) {
        const GrushinParams p{ua(r.g), 1 + t % 4, uc(r.g)};
        const double mu = indicial_data(p).mu;
        if (!(mu > 0.0 && mu < 4.0)) continue;
        ++seen;
        EXPECT_GT(h_function(p), 0.0);
    }
    EXPECT_GT(seen, 50);
    EXPECT_THROW(h_function({1.0, 1, 1.0}), DomainError);
}

TEST(HFunction, GeneralFormula) {
    const GrushinParams p{1.0, 1, 3.0 / 16.0};
    HOptions o;
    o.flat = false;
    o.denominator = HDenominator::literal;
    EXPECT_THROW(h_function(p, o), DegenerateDenominator);
    o.denominator = HDenominator::derivative_regularized;
    EXPECT_NEAR(h_function(p, o), 1.0, 1e-15);
    o.divergence_at_Z = 2.0;
    o.d_x2S_at_Z = 4.0;
    // lambda_- = (2 - 1)/2 = 1/2, p'(lambda_-) = -1
    EXPECT_NEAR(h_function(p, o), 1.0 + (2.0 * 0.5 - 3.0 / 16.0 * 4.0) / -1.0, 1e-14);
}

TEST(GreensIdentity, MuNegativeSample) {
    const GrushinParams p{1.0, 1, 1.0};
    Rng r(11);
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025, 0.0125};
    for (int t = 0; t < 5; ++t) {
        const auto u = r.jet(), v = r.jet();
        const auto g = greens_identity_check(p, {1}, u, v, eps);
        const cplx expect = I * std::sqrt(12.0) *
                            (std::conj(u.a_plus_r) * v.a_plus_r + std::conj(u.a_plus_l) * v.a_plus_l -
                             std::conj(u.a_minus_r) * v.a_minus_r - std::conj(u.a_minus_l) * v.a_minus_l);
        EXPECT_LT(std::abs(g.closed_form - expect), 1e-12 * std::abs(expect));
        EXPECT_LT(g.relative_error, 1e-4);
        EXPECT_EQ(g.table.size(), eps.size());
    }
}

TEST(GreensIdentity, RealEqualJetsGiveZero) {
    const GrushinParams p{1.0, 1, 1.0};
    const ModeJet u{0.7, 0.7, -1.3, -1.3};
    const auto g = greens_identity_check(p, {1}, u, u, {0.1, 0.05, 0.025, 0.0125});
    EXPECT_EQ(g.closed_form, cplx(0.0, 0.0));
    EXPECT_LT(std::abs(g.numeric), 1e-8);
}

TEST(GreensIdentity, MuPositiveFlatSample) {
    const GrushinParams p{0.5, 1, 0.0};
    Rng r(12);
    for (int t = 0; t < 5; ++t) {
        const auto u = r.jet(), v = r.jet();
        const auto g = greens_identity_check(p, {1}, u, v, {0.2, 0.1, 0.05, 0.025, 0.0125});
        EXPECT_LT(std::abs(g.closed_form - 1.5 * asymmetry_form(u, v, ExtensionRegime::mu_pos, 2.25)), 1e-12);
        EXPECT_LT(g.relative_error, 1e-4);
    }
}

TEST(GreensIdentity, RandomParamsAndModes) {
    Rng r(13);
    std::uniform_real_distribution<double> ua(0.1, 2.0), uc(-1.5, 1.5);
    int done = 0;
    for (int t = 0; t < 200 && done < 12; ++t) {
        const GrushinParams p{ua(r.g), 1 + t % 2, uc(r.g)};
        const double mu = indicial_data(p).mu;
        if (!(mu < -0.1 || (mu > 0.1 && mu < 3.9))) continue;
        std::vector<int> k(p.n);
        for (auto& ki : k) ki = static_cast<int>(r.g() % 5) - 2;
        const auto u = r.jet(), v = r.jet();
        const auto g = greens_identity_check(p, k, u, v, {0.2, 0.1, 0.05, 0.025, 0.0125});
        EXPECT_LT(g.relative_error, 1e-4) << p.alpha << " " << p.n << " " << p.c;
        ++done;
    }
    EXPECT_EQ(done, 12);
}

TEST(GreensIdentity, Validation) {
    const ModeJet u{1, 0, 0, 0};
    EXPECT_THROW(greens_identity_check({1.0, 1, 1.0}, {1}, u, u, {0.1, 0.05}), DomainError);
    EXPECT_THROW(greens_identity_check({1.0, 1, 1.0}, {1}, u, u, {0.1, 0.2, 0.05}), DomainError);
    EXPECT_THROW(greens_identity_check({1.0, 1, 1.0}, {1, 1}, u, u, {0.1, 0.05, 0.025}), DomainError);
    EXPECT_THROW(greens_identity_check({1.0, 1, 0.0}, {1}, u, u, {0.1, 0.05, 0.025}), DomainError);
}
