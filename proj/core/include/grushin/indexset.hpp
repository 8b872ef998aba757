#pragma once

#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "grushin/params.hpp"

namespace grushin {

struct IndexEntry {
    cplx s;
    int p = 0;
};

bool same_exponent(cplx a, cplx b);
bool operator<(const IndexEntry& a, const IndexEntry& b); // (Re, Im, p)
bool operator==(const IndexEntry& a, const IndexEntry& b);

enum class LatticeKind { N0, Theta };

// {(base.s + scale * t, base.p) : t in N0 or Theta(alpha)}
struct Generator {
    IndexEntry base;
    LatticeKind kind = LatticeKind::N0;
    double alpha = 0.0; // Theta only
    double scale = 1.0;
};

bool operator==(const Generator& a, const Generator& b);

inline constexpr double kDefaultHeight = 12.0;

// A finite point set plus generator-described infinite pieces.  Entries with
// Re s <= exact_below are represented exactly; above it a truncated operation
// may have dropped cross terms.
class IndexSet {
public:
    IndexSet() = default;
    static IndexSet empty() { return {}; } // the infinite-order vanishing set
    static IndexSet smooth();              // N0
    static IndexSet points(std::vector<IndexEntry> entries);
    static IndexSet generated(Generator g);

    const std::vector<IndexEntry>& point_entries() const { return points_; }
    const std::vector<Generator>& generators() const { return gens_; }
    double exact_below() const { return exact_below_; }
    bool is_empty() const { return points_.empty() && gens_.empty(); }
    bool is_finite() const { return gens_.empty(); }

    // inf Re s over the set, +inf when empty
    double min_re() const;
    // All entries with Re s <= height, sorted and deduplicated.
    std::vector<IndexEntry> enumerate(double height) const;
    bool contains(const IndexEntry& e, double height = kDefaultHeight) const;

    IndexSet shifted(cplx c) const;
    IndexSet scaled(double e) const; // e > 0
    IndexSet unite(const IndexSet& other) const;

    bool operator==(const IndexSet& o) const;

    // construction helpers used by the algebra
    void add_point(IndexEntry e);
    void add_generator(Generator g);
    void cap_exactness(double h);
    void canonicalize();

private:
    std::vector<IndexEntry> points_;
    std::vector<Generator> gens_;
    double exact_below_ = std::numeric_limits<double>::infinity();
};

bool equal_up_to(const IndexSet& a, const IndexSet& b, double height);
bool satisfies_finite_tail(const IndexSet& e, double height);
bool is_smooth_up_to(const IndexSet& e, double height);

IndexSet extended_union(const IndexSet& E, const IndexSet& F, double height = kDefaultHeight);
// {(s + t, p + q)}
IndexSet index_sum(const IndexSet& E, const IndexSet& F, double height = kDefaultHeight);

struct IndexFamily {
    std::vector<std::string> labels;
    std::vector<IndexSet> sets;

    static IndexFamily double_space(IndexSet E10, IndexSet E01, IndexSet E11);
    const IndexSet& at(const std::string& label) const;
    std::size_t size() const { return sets.size(); }
};

bool equal_up_to(const IndexFamily& a, const IndexFamily& b, double height);

// e(i, j): target face i, source face j.
struct LiftingMatrix {
    Eigen::MatrixXd e;
    std::vector<std::string> target_faces, source_faces;

    void validate() const;
    static LiftingMatrix identity(const std::vector<std::string>& faces);
};

IndexFamily pullback_indexset(const IndexFamily& F, const LiftingMatrix& e, double height = kDefaultHeight);

// With check_fibration, each source face may hit at most one target face.
IndexFamily pushforward_indexset(const IndexFamily& E, const LiftingMatrix& e, bool check_fibration = true,
                                 double height = kDefaultHeight);

struct FaceIncidence {
    std::string label;
    bool meets_center = false;
    int level = 0; // smallest l with conormal in V_l, 1-based; 0 when disjoint from the center
};

// Rows: original faces; columns: front face (index 0) then the lifted faces.
LiftingMatrix blowdown_lifting_matrix(const std::vector<FaceIncidence>& faces, const std::vector<double>& orders);

IndexFamily compose_indexsets(const IndexFamily& E, const IndexFamily& F, double alpha, int n,
                              double height = kDefaultHeight);

enum class Boundedness { bounded, bounded_and_compact, not_guaranteed };
std::string to_string(Boundedness b);

Boundedness boundedness_predicate(const IndexFamily& E, cplx a, cplx a_prime, double t, double t_prime, double s,
                                  double alpha, int n);

struct ParametrixIndexSets {
    IndexSet sigma_plus, sigma_minus, sigma;
    IndexFamily G;       // {Sigma, Sigma, N0}
    IndexFamily G_prime; // {Sigma, Sigma, Empty}
    IndexFamily ker;     // {Sigma+, Sigma+ - 2 delta, Empty}
    IndexFamily coker;   // {Sigma- + 2 delta, Sigma-, Empty}
};

ParametrixIndexSets parametrix_indexsets(const IndexSet& boundary_spectrum, double delta, double alpha, int n,
                                         double height = kDefaultHeight);

// Text form.  Sets: {(s,p),...}, Empty, N0, Theta(a), S + N0, S + Theta(a),
// S + c, S u T, S eu T, S ++ T (index sum), (..).  Families: [A; B; C] and
// compose(F; G).  Exponents may be complex: 1.5, -2i, 1+2i.
using IndexValue = std::variant<IndexSet, IndexFamily>;

struct ParseContext {
    double alpha = 0.0;
    int n = 1;
    double height = kDefaultHeight;
};

IndexValue parse_index_expression(const std::string& text, const ParseContext& ctx = {});
std::string to_string(const IndexSet& e);
std::string to_string(const IndexFamily& f);
std::string to_string(const IndexValue& v);

} // namespace grushin
