#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "grushin/errors.hpp"
#include "grushin/indexset.hpp"

namespace grushin {
inline void PrintTo(const IndexSet& e, std::ostream* os) { *os << to_string(e); }
} // namespace grushin

using namespace grushin;

namespace {

// Brute-force model: exponents rounded to a grid, compared as integer keys.
using Key = std::tuple<long long, long long, int>;
using Model = std::set<Key>;

Key key(cplx s, int p) { return {std::llround(s.real() * 1e8), std::llround(s.imag() * 1e8), p}; }
cplx sval(const Key& k) { return {std::get<0>(k) * 1e-8, std::get<1>(k) * 1e-8}; }

Model model(const IndexSet& e, double h) {
    Model m;
    for (const auto& x : e.enumerate(h)) m.insert(key(x.s, x.p));
    return m;
}

Model ext_union(const Model& a, const Model& b) {
    Model r = a;
    r.insert(b.begin(), b.end());
    for (const auto& x : a)
        for (const auto& y : b)
            if (std::get<0>(x) == std::get<0>(y) && std::get<1>(x) == std::get<1>(y))
                r.insert({std::get<0>(x), std::get<1>(x), std::get<2>(x) + std::get<2>(y) + 1});
    return r;
}

Model sum(const Model& a, const Model& b, double h) {
    Model r;
    for (const auto& x : a)
        for (const auto& y : b) {
            const Key k{std::get<0>(x) + std::get<0>(y), std::get<1>(x) + std::get<1>(y), std::get<2>(x) + std::get<2>(y)};
            if (std::get<0>(k) <= std::llround(h * 1e8)) r.insert(k);
        }
    return r;
}

Model cut(const Model& m, double h) {
    Model r;
    for (const auto& k : m)
        if (std::get<0>(k) <= std::llround(h * 1e8)) r.insert(k);
    return r;
}

IndexSet random_finite(std::mt19937_64& g, int count, int re_lo, int re_hi, bool complex = false) {
    std::uniform_int_distribution<int> re(re_lo * 2, re_hi * 2), pp(0, 2), im(-1, 1);
    std::vector<IndexEntry> es;
    for (int k = 0; k < count; ++k) es.push_back({cplx(re(g) * 0.5, complex ? im(g) : 0), pp(g)});
    return IndexSet::points(es);
}

IndexSet set(const std::string& s) { return std::get<IndexSet>(parse_index_expression(s)); }

} // namespace

TEST(ExtendedUnion, Examples) {
    EXPECT_EQ(extended_union(set("{(0,0)}"), set("{(0,0)}")), set("{(0,0),(0,1)}"));
    EXPECT_EQ(extended_union(set("{(1,0)}"), set("{(2,0)}")), set("{(1,0),(2,0)}"));
    const auto E = set("{(0,0),(1.5,2),(3+1i,0)}");
    EXPECT_EQ(extended_union(E, IndexSet::empty()), E);
    EXPECT_EQ(extended_union(IndexSet::empty(), E), E);
    EXPECT_EQ(extended_union(set("{(0,1)}"), set("{(0,2)}")), set("{(0,1),(0,2),(0,4)}"));
}

TEST(ExtendedUnion, MatchesDefinitionOnRandomSets) {
    std::mt19937_64 g(1);
    for (int t = 0; t < 300; ++t) {
        const auto A = random_finite(g, 4, -2, 4, t % 2), B = random_finite(g, 4, -2, 4, t % 2),
                   C = random_finite(g, 4, -2, 4, t % 2);
        const double H = 100.0;
        const auto AB = extended_union(A, B);
        ASSERT_EQ(model(AB, H), ext_union(model(A, H), model(B, H)));
        ASSERT_EQ(AB, extended_union(B, A));
        ASSERT_EQ(extended_union(AB, C), extended_union(A, extended_union(B, C)));
        ASSERT_TRUE(std::isinf(AB.exact_below()));
    }
}

TEST(ExtendedUnion, GeneratorsExactOrTruncated) {
    const auto N0 = IndexSet::smooth();
    const auto F = set("{(2,0),(2.5,0),(7,1)}");
    const auto r = extended_union(N0, F, 5.0);
    EXPECT_TRUE(std::isinf(r.exact_below())); // finite side bounds the cross terms
    EXPECT_EQ(model(r, 20.0), ext_union(model(N0, 20.0), model(F, 20.0)));

    const auto r2 = extended_union(N0, N0, 6.0);
    EXPECT_EQ(r2.exact_below(), 6.0);
    EXPECT_EQ(model(r2, 6.0), ext_union(model(N0, 6.0), model(N0, 6.0)));

    const auto T = IndexSet::generated({{0.5, 0}, LatticeKind::Theta, 0.5, 1.0});
    const auto r3 = extended_union(T, N0.shifted(0.5), 8.0);
    EXPECT_EQ(model(r3, 8.0), ext_union(model(T, 8.0), model(N0.shifted(0.5), 8.0)));
}

TEST(ExtendedUnion, PreservesSmoothClosure) {
    std::mt19937_64 g(2);
    std::uniform_int_distribution<int> re(-4, 6), pp(0, 2);
    auto smooth_set = [&] {
        IndexSet s;
        for (int k = 0; k < 3; ++k) {
            const double b = re(g) * 0.5;
            const int p = pp(g);
            for (int l = 0; l <= p; ++l) s = s.unite(IndexSet::smooth().shifted(b).unite(IndexSet{}));
            for (int l = 0; l <= p; ++l) s = s.unite(IndexSet::generated({{b, l}, LatticeKind::N0, 0.0, 1.0}));
        }
        return s;
    };
    for (int t = 0; t < 50; ++t) {
        const auto a = smooth_set(), b = smooth_set();
        ASSERT_TRUE(is_smooth_up_to(a, 7.0));
        const auto u = extended_union(a, b, 7.0);
        ASSERT_TRUE(is_smooth_up_to(u, 7.0));
        ASSERT_TRUE(satisfies_finite_tail(u, 7.0));
    }
    EXPECT_FALSE(is_smooth_up_to(set("{(0,1)}"), 3.0));
}

TEST(IndexSum, ExactOnCompatibleLattices) {
    const auto N0 = IndexSet::smooth();
    EXPECT_EQ(index_sum(N0, N0), N0);
    const auto T = IndexSet::generated({{0.0, 0}, LatticeKind::Theta, 0.5, 1.0});
    EXPECT_EQ(index_sum(N0, T), T);
    EXPECT_EQ(index_sum(T, T), T);
    EXPECT_EQ(index_sum(N0, IndexSet::empty()), IndexSet::empty());
    EXPECT_EQ(index_sum(set("{(1,1)}"), set("{(2,0),(3i,1)}")), set("{(3,1),(1+3i,2)}"));
    // incompatible scales fall back to enumeration
    const auto S = index_sum(N0, N0.scaled(1.5), 6.0);
    EXPECT_EQ(S.exact_below(), 6.0);
    EXPECT_EQ(model(S, 6.0), sum(model(N0, 6.0), model(N0.scaled(1.5), 6.0), 6.0));
}

TEST(IndexSum, MatchesDefinitionOnRandomSets) {
    std::mt19937_64 g(3);
    for (int t = 0; t < 200; ++t) {
        const auto A = random_finite(g, 4, -1, 4, true);
        IndexSet B = random_finite(g, 3, 0, 3);
        if (t % 3 == 0) B = B.unite(IndexSet::generated({{0.25, 1}, LatticeKind::Theta, 0.3, 1.0}));
        const double H = 9.0;
        ASSERT_EQ(cut(model(index_sum(A, B, H), H + 10), H), sum(model(A, H + 10), model(B, H + 10), H));
    }
}

TEST(Pullback, IdentityAndLogRule) {
    const auto fam = IndexFamily{{"x", "y"}, {set("{(1,0),(2,1)}"), IndexSet::smooth().shifted(0.5)}};
    EXPECT_TRUE(equal_up_to(pullback_indexset(fam, LiftingMatrix::identity(fam.labels)), fam, 10.0));

    // one source face hit by both target faces: exponents add, log powers add
    LiftingMatrix m{Eigen::MatrixXd(2, 3), {"x", "y"}, {"a", "b", "c"}};
    m.e << 1, 2, 0, 0, 1, 0;
    const IndexFamily F{{"x", "y"}, {set("{(1,2)}"), set("{(0.5,1)}")}};
    const auto E = pullback_indexset(F, m);
    EXPECT_EQ(E.at("a"), set("{(1,2)}"));
    EXPECT_EQ(E.at("b"), set("{(2.5,3)}"));
    EXPECT_EQ(E.at("c"), IndexSet::smooth()); // no target face lifts to c
    // log power of x is not counted where e(x, j) = 0
    m.e << 0, 2, 0, 1, 1, 0;
    EXPECT_EQ(pullback_indexset(F, m).at("a"), set("{(0.5,1)}"));
}

TEST(Pullback, BlowdownOfCorner) {
    // x-face meets the center; its conormal is in V_1 (order 1) or V_2 (order 1 + alpha)
    const double alpha = 0.5;
    for (int level : {1, 2}) {
        const auto m = blowdown_lifting_matrix({{"x", true, level}}, {1.0, 1.0 + alpha});
        const auto E = pullback_indexset({{"x"}, {set("{(1,0)}")}}, m);
        EXPECT_EQ(E.at("x"), set("{(1,0)}"));
        EXPECT_EQ(E.at("front"), set(level == 1 ? "{(1,0)}" : "{(1.5,0)}"));
    }
}

TEST(Pushforward, ExamplesAndErrors) {
    const IndexFamily E{{"a"}, {set("{(1,0),(2,3)}")}};
    EXPECT_TRUE(equal_up_to(pushforward_indexset(E, LiftingMatrix::identity({"a"})), E, 10.0));

    LiftingMatrix two{Eigen::MatrixXd(1, 2), {"t"}, {"a", "b"}};
    two.e << 1, 1;
    const auto F = pushforward_indexset({{"a", "b"}, {set("{(1,0)}"), set("{(1,0)}")}}, two);
    EXPECT_EQ(F.at("t"), set("{(1,0),(1,1)}"));

    two.e << 2, 1;
    EXPECT_EQ(pushforward_indexset({{"a", "b"}, {set("{(3,0)}"), set("{(1.5,0)}")}}, two).at("t"),
              set("{(1.5,0),(1.5,1)}"));

    LiftingMatrix inner{Eigen::MatrixXd(1, 2), {"t"}, {"a", "b"}};
    inner.e << 1, 0;
    EXPECT_THROW(pushforward_indexset({{"a", "b"}, {set("{(1,0)}"), set("{(0,0)}")}}, inner), IntegrabilityViolation);
    try {
        pushforward_indexset({{"a", "b"}, {set("{(1,0)}"), set("{(-1,0)}")}}, inner);
    } catch (const IntegrabilityViolation& e) {
        EXPECT_NE(std::string(e.what()).find("face b"), std::string::npos);
    }
    // positive interior face is integrated out
    EXPECT_EQ(pushforward_indexset({{"a", "b"}, {set("{(1,0)}"), set("{(0.1,0)}")}}, inner).at("t"), set("{(1,0)}"));

    LiftingMatrix corner{Eigen::MatrixXd(2, 1), {"s", "t"}, {"a"}};
    corner.e << 1, 1;
    EXPECT_THROW(pushforward_indexset({{"a"}, {set("{(1,0)}")}}, corner), DomainError);
}

TEST(Pushforward, PullThenPushAlongIdentity) {
    std::mt19937_64 g(4);
    for (int t = 0; t < 100; ++t) {
        IndexFamily f{{"p", "q", "r"}, {random_finite(g, 3, 0, 4), random_finite(g, 3, 1, 5, true),
                                        IndexSet::smooth().shifted(0.5 * (t % 4))}};
        const auto id = LiftingMatrix::identity(f.labels);
        ASSERT_TRUE(equal_up_to(pushforward_indexset(pullback_indexset(f, id), id), f, 12.0));
    }
}

TEST(Blowdown, Examples) {
    const auto m = blowdown_lifting_matrix({{"B10", true, 1}, {"B01", true, 1}}, {1.0, 1.5});
    Eigen::MatrixXd expect(2, 3);
    expect << 1, 1, 0, 1, 0, 1;
    EXPECT_EQ(m.e, expect);
    EXPECT_EQ(m.source_faces, (std::vector<std::string>{"front", "B10", "B01"}));

    const auto d = blowdown_lifting_matrix({{"far", false, 0}, {"near", true, 2}}, {1.0, 1.5});
    EXPECT_EQ(d.e.row(0), Eigen::RowVector3d(0, 1, 0));
    EXPECT_EQ(d.e(1, 0), 1.5);

    // alpha = 0: every blow-up order is 1
    const auto z = blowdown_lifting_matrix({{"a", true, 1}, {"b", true, 2}}, {1.0, 1.0});
    EXPECT_EQ(z.e.col(0), Eigen::Vector2d(1, 1));

    EXPECT_THROW(blowdown_lifting_matrix({{"a", false, 1}}, {1.0}), DomainError);
    EXPECT_THROW(blowdown_lifting_matrix({{"a", true, 3}}, {1.0, 2.0}), DomainError);
    EXPECT_THROW(blowdown_lifting_matrix({{"a", true, 0}}, {1.0}), DomainError);
    EXPECT_THROW(blowdown_lifting_matrix({{"a", true, 1}}, {-1.0}), DomainError);
}

TEST(Compose, Examples) {
    const auto small = IndexFamily::double_space({}, {}, IndexSet::smooth());
    EXPECT_TRUE(equal_up_to(compose_indexsets(small, small, 0.5, 2), small, 12.0));
    EXPECT_EQ(compose_indexsets(small, small, 0.5, 2).at("B11"), IndexSet::smooth());

    const auto E = IndexFamily::double_space(set("{(2,0)}"), {}, set("{(0,0)}"));
    const auto F = IndexFamily::double_space({}, set("{(3,0)}"), set("{(0,0)}"));
    const auto G = compose_indexsets(E, F, 0.5, 1);
    EXPECT_EQ(G.at("B11"), set("{(0,0),(5,0)}"));
    EXPECT_EQ(G.at("B10"), set("{(2,0)}"));
    EXPECT_EQ(G.at("B01"), set("{(3,0)}"));

    const auto id = IndexFamily::double_space({}, {}, set("{(0,0)}"));
    std::mt19937_64 g(5);
    for (int t = 0; t < 50; ++t) {
        const auto A = IndexFamily::double_space(random_finite(g, 3, 3, 6), random_finite(g, 3, 3, 6),
                                                 random_finite(g, 3, 0, 4, true));
        for (const auto& C : {compose_indexsets(A, id, 0.5, 1), compose_indexsets(id, A, 0.5, 1)})
            for (std::size_t k = 0; k < 3; ++k)
                for (const auto& x : A.sets[k].enumerate(20.0)) ASSERT_TRUE(C.sets[k].contains(x, 20.0));
    }
}

TEST(Compose, HypothesisViolationNamesThePair) {
    const auto E = IndexFamily::double_space({}, set("{(1,0)}"), IndexSet::smooth());
    const auto F = IndexFamily::double_space(set("{(1,0)}"), {}, IndexSet::smooth());
    try {
        compose_indexsets(E, F, 0.5, 2); // 2 <= 3
        FAIL();
    } catch (const IntegrabilityViolation& e) {
        EXPECT_NE(std::string(e.what()).find("E01 + F10"), std::string::npos);
    }
    EXPECT_NO_THROW(compose_indexsets(E, F, 0.5, 1)); // 2 > 1.5
}

std::vector<cplx> exponents(const IndexSet& S, double h) {
    std::vector<cplx> v;
    for (const auto& e : S.enumerate(1e3))
        if (e.s.real() < h - 1e-9 && (v.empty() || !same_exponent(v.back(), e.s))) v.push_back(e.s);
    return v;
}

TEST(Compose, GroupingAgreesOnExponents) {
    // The set formulas are not associative: (AB)C also carries A10 + B01 + C10 at the
    // left face (A01 + B10 + C01 on the right), and log orders depend on the grouping
    // because extended union does not distribute over sums.  Exponents agree at the
    // front face, and at the side faces below those extra terms.
    std::mt19937_64 g(6);
    int differing = 0;
    for (int t = 0; t < 300; ++t) {
        auto fam = [&] {
            return IndexFamily::double_space(random_finite(g, 2, 2, 5), random_finite(g, 2, 2, 5),
                                             random_finite(g, 2, 0, 3));
        };
        const auto A = fam(), B = fam(), C = fam();
        const auto l = compose_indexsets(compose_indexsets(A, B, 0.5, 1), C, 0.5, 1);
        const auto r = compose_indexsets(A, compose_indexsets(B, C, 0.5, 1), 0.5, 1);
        ASSERT_EQ(exponents(l.at("B11"), 1e3), exponents(r.at("B11"), 1e3)) << t;
        const double left = A.at("B10").min_re() + B.at("B01").min_re() + C.at("B10").min_re();
        const double right = A.at("B01").min_re() + B.at("B10").min_re() + C.at("B01").min_re();
        ASSERT_EQ(exponents(l.at("B10"), left), exponents(r.at("B10"), left)) << t;
        ASSERT_EQ(exponents(l.at("B01"), right), exponents(r.at("B01"), right)) << t;
        for (std::size_t k = 0; k < 3; ++k) differing += !(l.sets[k] == r.sets[k]);
    }
    EXPECT_GT(differing, 0);
}

TEST(Boundedness, Examples) {
    const auto E = IndexFamily::double_space(set("{(3,0)}"), set("{(3,0)}"), set("{(0.5,0)}"));
    EXPECT_EQ(boundedness_predicate(E, 0.0, 0.0, 2.0, 1.0, 1.0, 1.0, 1), Boundedness::bounded);
    EXPECT_EQ(boundedness_predicate(E, 0.0, 0.0, 2.0, 0.5, 1.0, 1.0, 1), Boundedness::bounded_and_compact);
    EXPECT_EQ(boundedness_predicate(E, 0.0, 0.5, 2.0, 1.0, 1.0, 1.0, 1), Boundedness::not_guaranteed); // E11 - a' + a = 0
    EXPECT_EQ(boundedness_predicate(E, 0.0, 0.0, 2.0, 1.5, 1.0, 1.0, 1), Boundedness::not_guaranteed); // t' > t - s
    EXPECT_EQ(boundedness_predicate(E, -1.0, 0.0, 2.0, 1.0, 1.0, 1.0, 1), Boundedness::not_guaranteed);
    const auto small = IndexFamily::double_space({}, {}, IndexSet::smooth());
    EXPECT_EQ(boundedness_predicate(small, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 3), Boundedness::not_guaranteed); // N0 has Re 0
    EXPECT_EQ(boundedness_predicate(small, 0.25, 0.0, 0.0, 0.0, 0.0, 0.5, 3), Boundedness::bounded);
}

TEST(Parametrix, Examples) {
    const auto spec = set("{(0,0),(3,0)}");
    const auto r = parametrix_indexsets(spec, 2.0, 2.0, 1);
    EXPECT_EQ(r.sigma_plus, set("{(3,0)}"));
    EXPECT_EQ(r.sigma_minus, set("{(0,0)}"));
    EXPECT_EQ(r.ker.at("B01"), set("{(-1,0)}"));
    EXPECT_EQ(r.coker.at("B10"), set("{(4,0)}"));
    EXPECT_EQ(r.G.at("B11"), IndexSet::smooth());
    EXPECT_TRUE(r.G_prime.at("B11").is_empty());
    EXPECT_TRUE(r.ker.at("B11").is_empty());
    EXPECT_EQ(r.G.at("B10"), set("{(0,0),(3,0)}"));

    const auto low = parametrix_indexsets(spec, -1.0, 2.0, 1);
    EXPECT_EQ(low.sigma_plus, spec);
    EXPECT_TRUE(low.sigma_minus.is_empty());

    EXPECT_THROW(parametrix_indexsets(spec, 0.5, 2.0, 1), WeightOnSpectrum);
    EXPECT_THROW(parametrix_indexsets(spec, 3.5, 2.0, 1), WeightOnSpectrum);

    // minus is reflected: (-gamma, p)
    EXPECT_EQ(parametrix_indexsets(set("{(1+2i,1)}"), 3.0, 0.0, 1).sigma_minus, set("{(-1-2i,1)}"));
    // infinite spectrum: lambda + Theta
    const auto inf = IndexSet::generated({{0.5, 0}, LatticeKind::Theta, 0.5, 1.0});
    const auto ri = parametrix_indexsets(inf, 1.75, 0.5, 1);
    EXPECT_EQ(ri.sigma_minus, set("{(-0.5,0),(-1.5,0)}"));
    EXPECT_EQ(ri.sigma_plus.enumerate(4.0), set("{(2,0),(2.5,0),(3,0),(3.5,0),(4,0)}").enumerate(4.0));
}

TEST(Parser, ExamplesAndRoundTrip) {
    EXPECT_EQ(set("{(0,0)} eu {(0,0)}"), set("{(0,0),(0,1)}"));
    EXPECT_EQ(set("eu({(0,0)};{(0,0)})"), set("{(0,0),(0,1)}"));
    EXPECT_EQ(set("u({(0,0)}; {(1,0)} eu {(1,0)})"), set("{(0,0),(1,0),(1,1)}"));
    EXPECT_EQ(set("{(1,0)} u {(2,0)} + 1"), set("{(1,0),(3,0)}"));
    EXPECT_EQ(set("({(1,0)} u {(2,0)}) + 1"), set("{(2,0),(3,0)}"));
    EXPECT_EQ(set("{(1,0)} - 0.5"), set("{(0.5,0)}"));
    EXPECT_EQ(set("{(0,0)} + N0"), IndexSet::smooth());
    EXPECT_EQ(set("{(0.5,0)} + Theta(0.5)"), IndexSet::generated({{0.5, 0}, LatticeKind::Theta, 0.5, 1.0}));
    EXPECT_EQ(set("{(1,0)} ++ {(2,1)}"), set("{(3,1)}"));
    EXPECT_EQ(set("{(1-2i,0)}").point_entries()[0].s, cplx(1, -2));
    EXPECT_EQ(set("{(-3i,0)}").point_entries()[0].s, cplx(0, -3));
    EXPECT_EQ(set("{(2,0)} + 1.5*N0"), IndexSet::smooth().scaled(1.5).shifted(2.0));
    EXPECT_TRUE(set("Empty").is_empty());

    const auto v = parse_index_expression("compose([{(2,0)}; Empty; {(0,0)}]; [Empty; {(3,0)}; {(0,0)}])", {0.5, 1});
    EXPECT_EQ(std::get<IndexFamily>(v).at("B11"), set("{(0,0),(5,0)}"));

    for (const std::string s :
         {"{(0,0),(1.5,2),(3+1i,0),(0.1,0)}", "N0", "Theta(0.5)", "{(0.5,1)} + 2*N0", "Empty",
          "{(0,0)} u {(1,0)} + Theta(0.25)", "N0 eu N0", "[B10: Empty; B01: {(1,0)}; B11: N0]", "{(1e-20,0),(-2.5e+30,3)}"}) {
        const auto a = parse_index_expression(s);
        const auto text = to_string(a);
        const auto b = parse_index_expression(text);
        EXPECT_EQ(to_string(b), text) << s;
        if (std::holds_alternative<IndexSet>(a)) EXPECT_EQ(std::get<IndexSet>(a), std::get<IndexSet>(b)) << s;
    }
    EXPECT_EQ(to_string(set("N0 eu N0")).substr(0, 6), "trunc(");
}

TEST(Parser, Errors) {
    for (const std::string s : {"{(0,0)", "{(0,-1)}", "{(0,0.5)}", "foo", "{(0,0)} u", "[N0; N0] u N0", "{(0,0)} + 1i*N0",
                                "compose(N0; N0)", "{(0,0)} )", "eu({(0,0)})", "u(N0; [N0])"})
        EXPECT_THROW(parse_index_expression(s), ParseError) << s;
}
