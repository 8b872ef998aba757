#include "grushin/indexset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <tuple>

#include "grushin/errors.hpp"

namespace grushin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

bool lattice_compatible(const Generator& a, const Generator& b) {
    if (!close(a.scale, b.scale)) return false;
    if (a.kind == LatticeKind::Theta && b.kind == LatticeKind::Theta) return close(a.alpha, b.alpha);
    return true;
}

// Is t (a real offset along the lattice) a lattice element?
bool on_lattice(const Generator& g, cplx s) {
    const cplx d = (s - g.base.s) / g.scale;
    if (std::abs(d.imag()) > 1e-12 * std::max(1.0, std::abs(d))) return false;
    const double t = d.real();
    if (t < -1e-12) return false;
    if (g.kind == LatticeKind::N0) return std::abs(t - std::round(t)) <= 1e-12 * std::max(1.0, t);
    return theta_lattice(g.alpha, t + 1.0).find(t, 1e-12 * std::max(1.0, t)).has_value();
}

void dedupe(std::vector<IndexEntry>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

} // namespace

bool same_exponent(cplx a, cplx b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

bool operator==(const IndexEntry& a, const IndexEntry& b) { return a.p == b.p && same_exponent(a.s, b.s); }

bool operator<(const IndexEntry& a, const IndexEntry& b) {
    if (a == b) return false;
    if (!close(a.s.real(), b.s.real())) return a.s.real() < b.s.real();
    if (!close(a.s.imag(), b.s.imag())) return a.s.imag() < b.s.imag();
    return a.p < b.p;
}

bool operator==(const Generator& a, const Generator& b) {
    return a.base == b.base && a.kind == b.kind && close(a.scale, b.scale) &&
           (a.kind == LatticeKind::N0 || close(a.alpha, b.alpha));
}

namespace {
bool gen_less(const Generator& a, const Generator& b) {
    if (!(a.base == b.base)) return a.base < b.base;
    if (a.kind != b.kind) return a.kind < b.kind;
    if (!close(a.scale, b.scale)) return a.scale < b.scale;
    return a.alpha < b.alpha && !close(a.alpha, b.alpha);
}
} // namespace

IndexSet IndexSet::smooth() { return generated({{0.0, 0}, LatticeKind::N0, 0.0, 1.0}); }

IndexSet IndexSet::points(std::vector<IndexEntry> entries) {
    IndexSet e;
    for (auto& x : entries) e.add_point(x);
    e.canonicalize();
    return e;
}

IndexSet IndexSet::generated(Generator g) {
    IndexSet e;
    e.add_generator(g);
    return e;
}

void IndexSet::add_point(IndexEntry e) {
    if (e.p < 0) throw DomainError("index set: log power must be >= 0");
    if (!std::isfinite(e.s.real()) || !std::isfinite(e.s.imag())) throw DomainError("index set: exponent not finite");
    points_.push_back(e);
}

void IndexSet::add_generator(Generator g) {
    if (!(g.scale > 0.0) || !std::isfinite(g.scale)) throw DomainError("index set: generator scale must be > 0");
    if (g.kind == LatticeKind::Theta && !(g.alpha > -1.0)) throw DomainError("index set: Theta needs alpha > -1");
    if (g.kind == LatticeKind::Theta && close(g.alpha, 0.0)) {
        g.kind = LatticeKind::N0; // Theta(0) = N0
        g.alpha = 0.0;
    }
    if (g.kind == LatticeKind::N0) g.alpha = 0.0;
    if (g.base.p < 0) throw DomainError("index set: log power must be >= 0");
    gens_.push_back(g);
}

void IndexSet::cap_exactness(double h) { exact_below_ = std::min(exact_below_, h); }

void IndexSet::canonicalize() {
    std::sort(gens_.begin(), gens_.end(), gen_less);
    gens_.erase(std::unique(gens_.begin(), gens_.end()), gens_.end());
    // drop generators contained in another one
    std::vector<Generator> kept;
    for (std::size_t i = 0; i < gens_.size(); ++i) {
        bool covered = false;
        for (std::size_t j = 0; j < gens_.size() && !covered; ++j) {
            if (i == j) continue;
            const auto& a = gens_[i];
            const auto& b = gens_[j];
            if (a.base.p != b.base.p || !lattice_compatible(a, b) || !on_lattice(b, a.base.s)) continue;
            // a's lattice must be inside b's: N0 inside Theta, same kind otherwise
            if (a.kind == LatticeKind::Theta && b.kind == LatticeKind::N0) continue;
            if (a == b) continue;
            covered = true;
        }
        if (!covered) kept.push_back(gens_[i]);
    }
    gens_ = std::move(kept);
    dedupe(points_);
    std::erase_if(points_, [this](const IndexEntry& e) {
        for (const auto& g : gens_)
            if (g.base.p == e.p && on_lattice(g, e.s)) return true;
        return false;
    });
}

double IndexSet::min_re() const {
    double m = kInf;
    for (const auto& e : points_) m = std::min(m, e.s.real());
    for (const auto& g : gens_) m = std::min(m, g.base.s.real());
    return m;
}

std::vector<IndexEntry> IndexSet::enumerate(double height) const {
    std::vector<IndexEntry> out;
    const double tol = 1e-12 * std::max(1.0, std::abs(height));
    for (const auto& e : points_)
        if (e.s.real() <= height + tol) out.push_back(e);
    if (!gens_.empty() && !std::isfinite(height)) throw DomainError("index set: infinite set needs a finite height");
    for (const auto& g : gens_) {
        const double room = (height - g.base.s.real()) / g.scale;
        if (room < -tol) continue;
        if (g.kind == LatticeKind::N0) {
            for (long k = 0; k <= static_cast<long>(std::floor(room + 1e-12)); ++k)
                out.push_back({g.base.s + g.scale * double(k), g.base.p});
        } else {
            for (double t : theta_lattice(g.alpha, std::max(0.0, room)).values())
                out.push_back({g.base.s + g.scale * t, g.base.p});
        }
    }
    dedupe(out);
    return out;
}

bool IndexSet::contains(const IndexEntry& e, double height) const {
    const auto all = enumerate(std::max(height, e.s.real() + 1.0));
    return std::find(all.begin(), all.end(), e) != all.end();
}

IndexSet IndexSet::shifted(cplx c) const {
    IndexSet r = *this;
    for (auto& e : r.points_) e.s += c;
    for (auto& g : r.gens_) g.base.s += c;
    r.exact_below_ = exact_below_ + c.real();
    r.canonicalize();
    return r;
}

IndexSet IndexSet::scaled(double f) const {
    if (!(f > 0.0) || !std::isfinite(f)) throw DomainError("index set: scale factor must be > 0");
    IndexSet r = *this;
    for (auto& e : r.points_) e.s *= f;
    for (auto& g : r.gens_) {
        g.base.s *= f;
        g.scale *= f;
    }
    r.exact_below_ = exact_below_ * f;
    r.canonicalize();
    return r;
}

IndexSet IndexSet::unite(const IndexSet& o) const {
    IndexSet r = *this;
    r.points_.insert(r.points_.end(), o.points_.begin(), o.points_.end());
    r.gens_.insert(r.gens_.end(), o.gens_.begin(), o.gens_.end());
    r.exact_below_ = std::min(exact_below_, o.exact_below_);
    r.canonicalize();
    return r;
}

bool IndexSet::operator==(const IndexSet& o) const {
    return points_ == o.points_ && gens_ == o.gens_ &&
           (exact_below_ == o.exact_below_ || close(exact_below_, o.exact_below_));
}

bool equal_up_to(const IndexSet& a, const IndexSet& b, double height) {
    return a.enumerate(height) == b.enumerate(height);
}

bool satisfies_finite_tail(const IndexSet& e, double height) {
    for (const auto& g : e.generators())
        if (!(g.scale > 0.0)) return false;
    const auto all = e.enumerate(height);
    return all.size() < 10'000'000;
}

bool is_smooth_up_to(const IndexSet& e, double height) {
    const auto all = e.enumerate(height);
    for (const auto& x : all) {
        for (int k = 0; x.s.real() + k <= height + 1e-12; ++k)
            for (int l = 0; l <= x.p; ++l) {
                const IndexEntry y{x.s + double(k), x.p - l};
                if (std::find(all.begin(), all.end(), y) == all.end()) return false;
            }
    }
    return true;
}

IndexSet extended_union(const IndexSet& E, const IndexSet& F, double height) {
    IndexSet r = E.unite(F);
    if (E.is_empty() || F.is_empty()) return r;
    // Cross terms sit at exponents common to both sets, so a finite side bounds them.
    double h;
    bool truncated = false;
    auto max_re = [](const IndexSet& S) {
        double m = -kInf;
        for (const auto& e : S.point_entries()) m = std::max(m, e.s.real());
        return m;
    };
    if (E.is_finite() && F.is_finite())
        h = std::max(max_re(E), max_re(F));
    else if (E.is_finite())
        h = max_re(E);
    else if (F.is_finite())
        h = max_re(F);
    else {
        h = height;
        truncated = true;
    }
    const auto a = E.enumerate(h), b = F.enumerate(h);
    for (const auto& x : a)
        for (const auto& y : b)
            if (same_exponent(x.s, y.s)) r.add_point({x.s, x.p + y.p + 1});
    if (truncated) r.cap_exactness(height);
    r.canonicalize();
    return r;
}

IndexSet index_sum(const IndexSet& E, const IndexSet& F, double height) {
    IndexSet r;
    bool truncated = false;
    for (const auto& x : E.point_entries())
        for (const auto& y : F.point_entries()) r.add_point({x.s + y.s, x.p + y.p});
    for (const auto& x : E.point_entries())
        for (auto g : F.generators()) {
            g.base = {g.base.s + x.s, g.base.p + x.p};
            r.add_generator(g);
        }
    for (const auto& y : F.point_entries())
        for (auto g : E.generators()) {
            g.base = {g.base.s + y.s, g.base.p + y.p};
            r.add_generator(g);
        }
    for (const auto& g1 : E.generators())
        for (const auto& g2 : F.generators()) {
            if (lattice_compatible(g1, g2)) {
                Generator g = g1.kind == LatticeKind::Theta ? g1 : g2;
                g.base = {g1.base.s + g2.base.s, g1.base.p + g2.base.p};
                r.add_generator(g);
                continue;
            }
            truncated = true;
            IndexSet s1, s2;
            s1.add_generator(g1);
            s2.add_generator(g2);
            for (const auto& x : s1.enumerate(height - g2.base.s.real()))
                for (const auto& y : s2.enumerate(height - g1.base.s.real()))
                    if ((x.s + y.s).real() <= height + 1e-12) r.add_point({x.s + y.s, x.p + y.p});
        }
    const double ex = std::min(E.exact_below() + F.min_re(), F.exact_below() + E.min_re());
    if (std::isfinite(ex)) r.cap_exactness(ex);
    if (truncated) r.cap_exactness(height);
    r.canonicalize();
    return r;
}

IndexFamily IndexFamily::double_space(IndexSet E10, IndexSet E01, IndexSet E11) {
    return {{"B10", "B01", "B11"}, {std::move(E10), std::move(E01), std::move(E11)}};
}

const IndexSet& IndexFamily::at(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return sets[i];
    throw DomainError("index family has no face " + label);
}

bool equal_up_to(const IndexFamily& a, const IndexFamily& b, double height) {
    if (a.labels != b.labels || a.sets.size() != b.sets.size()) return false;
    for (std::size_t i = 0; i < a.sets.size(); ++i)
        if (!equal_up_to(a.sets[i], b.sets[i], height)) return false;
    return true;
}

void LiftingMatrix::validate() const {
    if (static_cast<std::size_t>(e.rows()) != target_faces.size() ||
        static_cast<std::size_t>(e.cols()) != source_faces.size())
        throw DomainError("lifting matrix: shape does not match the face labels");
    if (!e.allFinite() || (e.array() < 0.0).any()) throw DomainError("lifting matrix: entries must be finite and >= 0");
}

LiftingMatrix LiftingMatrix::identity(const std::vector<std::string>& faces) {
    const auto k = static_cast<Eigen::Index>(faces.size());
    return {Eigen::MatrixXd::Identity(k, k), faces, faces};
}

IndexFamily pullback_indexset(const IndexFamily& F, const LiftingMatrix& e, double height) {
    e.validate();
    if (F.size() != e.target_faces.size()) throw DomainError("pullback: family size does not match the matrix rows");
    IndexFamily out;
    out.labels = e.source_faces;
    for (Eigen::Index j = 0; j < e.e.cols(); ++j) {
        std::optional<IndexSet> acc;
        for (Eigen::Index i = 0; i < e.e.rows(); ++i) {
            if (e.e(i, j) == 0.0) continue;
            const auto term = F.sets[i].scaled(e.e(i, j));
            acc = acc ? index_sum(*acc, term, height) : term;
        }
        // A face no target face lifts to sees a smooth function.
        out.sets.push_back(acc ? *acc : IndexSet::smooth());
    }
    return out;
}

IndexFamily pushforward_indexset(const IndexFamily& E, const LiftingMatrix& e, bool check_fibration, double height) {
    e.validate();
    if (E.size() != e.source_faces.size()) throw DomainError("pushforward: family size does not match the matrix columns");
    for (Eigen::Index j = 0; j < e.e.cols(); ++j) {
        const auto hits = (e.e.col(j).array() > 0.0).count();
        if (check_fibration && hits > 1)
            throw DomainError("pushforward: face " + e.source_faces[j] + " maps into a corner (not a b-fibration)");
        if (hits == 0 && !(E.sets[j].min_re() > 0.0)) {
            std::ostringstream os;
            os << "pushforward: face " << e.source_faces[j] << " maps to the interior but Re(E) = "
               << E.sets[j].min_re() << " is not > 0";
            throw IntegrabilityViolation(os.str());
        }
    }
    IndexFamily out;
    out.labels = e.target_faces;
    for (Eigen::Index i = 0; i < e.e.rows(); ++i) {
        IndexSet acc;
        for (Eigen::Index j = 0; j < e.e.cols(); ++j)
            if (e.e(i, j) > 0.0) acc = extended_union(acc, E.sets[j].scaled(1.0 / e.e(i, j)), height);
        out.sets.push_back(acc);
    }
    return out;
}

LiftingMatrix blowdown_lifting_matrix(const std::vector<FaceIncidence>& faces, const std::vector<double>& orders) {
    for (double o : orders)
        if (!(o > 0.0) || !std::isfinite(o)) throw DomainError("blowdown: filtration orders must be finite and > 0");
    const auto q = static_cast<Eigen::Index>(faces.size());
    LiftingMatrix m;
    m.e = Eigen::MatrixXd::Zero(q, q + 1);
    m.source_faces.push_back("front");
    for (Eigen::Index i = 0; i < q; ++i) {
        const auto& f = faces[i];
        m.target_faces.push_back(f.label);
        m.source_faces.push_back(f.label);
        if (!f.meets_center && f.level != 0)
            throw DomainError("blowdown: face " + f.label + " misses the center but has a filtration level");
        if (f.meets_center && (f.level < 1 || f.level > static_cast<int>(orders.size())))
            throw DomainError("blowdown: face " + f.label + " has filtration level out of range");
        m.e(i, 0) = f.meets_center ? orders[f.level - 1] : 0.0;
        m.e(i, i + 1) = 1.0;
    }
    return m;
}

IndexFamily compose_indexsets(const IndexFamily& E, const IndexFamily& F, double alpha, int n, double height) {
    GrushinParams{alpha, n, 0.0}.validate();
    const double w = (1.0 + alpha) * n;
    const double lhs = E.at("B01").min_re() + F.at("B10").min_re();
    if (!(lhs > w)) {
        std::ostringstream os;
        os << "compose: Re(E01 + F10) = " << lhs << " is not > (1+alpha)n = " << w;
        throw IntegrabilityViolation(os.str());
    }
    const auto& E10 = E.at("B10");
    const auto& E01 = E.at("B01");
    const auto& E11 = E.at("B11");
    const auto& F10 = F.at("B10");
    const auto& F01 = F.at("B01");
    const auto& F11 = F.at("B11");
    return IndexFamily::double_space(extended_union(index_sum(E11, F10, height), E10, height),
                                     extended_union(index_sum(E01, F11, height), F01, height),
                                     extended_union(index_sum(E11, F11, height), index_sum(E10, F01, height), height));
}

std::string to_string(Boundedness b) {
    switch (b) {
    case Boundedness::bounded: return "bounded";
    case Boundedness::bounded_and_compact: return "bounded_and_compact";
    case Boundedness::not_guaranteed: return "not_guaranteed";
    }
    return "?";
}

Boundedness boundedness_predicate(const IndexFamily& E, cplx a, cplx a_prime, double t, double t_prime, double s,
                                  double alpha, int n) {
    const double w = (1.0 + alpha) * n;
    const bool ok = t_prime <= t - s && E.at("B01").min_re() + a.real() > w &&
                    E.at("B10").min_re() - a_prime.real() > w && E.at("B11").min_re() - a_prime.real() + a.real() > 0.0;
    if (!ok) return Boundedness::not_guaranteed;
    return t_prime < t - s ? Boundedness::bounded_and_compact : Boundedness::bounded;
}

ParametrixIndexSets parametrix_indexsets(const IndexSet& spec, double delta, double alpha, int n, double height) {
    GrushinParams{alpha, n, 0.0}.validate();
    if (!std::isfinite(delta)) throw DomainError("parametrix: delta must be finite");
    for (const auto& z : spec.enumerate(std::max(delta, spec.min_re()) + 1.0))
        if (close(z.s.real() + 0.5, delta)) {
            std::ostringstream os;
            os << "parametrix: delta = " << delta << " lies on Re(zeta) + 1/2 for zeta = " << z.s.real() << "+"
               << z.s.imag() << "i";
            throw WeightOnSpectrum(os.str());
        }
    ParametrixIndexSets r;
    if (delta < spec.min_re()) {
        r.sigma_plus = spec;
    } else {
        const double h = spec.is_finite() ? kInf : std::max(height, delta + 1.0);
        std::vector<IndexEntry> plus;
        for (const auto& z : spec.is_finite() ? spec.point_entries() : spec.enumerate(h))
            if (z.s.real() > delta) plus.push_back(z);
        r.sigma_plus = IndexSet::points(plus);
        if (!spec.is_finite()) r.sigma_plus.cap_exactness(h);
        r.sigma_plus.cap_exactness(spec.exact_below());
    }
    std::vector<IndexEntry> minus;
    for (const auto& z : spec.enumerate(delta))
        if (z.s.real() < delta) minus.push_back({-z.s, z.p});
    r.sigma_minus = IndexSet::points(minus);
    if (spec.exact_below() < delta) r.sigma_minus.cap_exactness(-spec.exact_below());
    r.sigma = r.sigma_plus.unite(r.sigma_minus);
    const IndexSet none;
    r.G = IndexFamily::double_space(r.sigma, r.sigma, IndexSet::smooth());
    r.G_prime = IndexFamily::double_space(r.sigma, r.sigma, none);
    r.ker = IndexFamily::double_space(r.sigma_plus, r.sigma_plus.shifted(-2.0 * delta), none);
    r.coker = IndexFamily::double_space(r.sigma_minus.shifted(2.0 * delta), r.sigma_minus, none);
    return r;
}

// ---------------------------------------------------------------- text form

namespace {

std::string num(double x) {
    if (x == 0.0) x = 0.0; // no "-0"
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string cnum(cplx z) {
    if (z.imag() == 0.0) return num(z.real());
    const std::string im = num(std::abs(z.imag())) + "i";
    if (z.real() == 0.0) return (z.imag() < 0 ? "-" : "") + im;
    return num(z.real()) + (z.imag() < 0 ? "-" : "+") + im;
}

std::string gen_string(const Generator& g) {
    std::string lat = g.kind == LatticeKind::N0 ? "N0" : "Theta(" + num(g.alpha) + ")";
    if (g.scale != 1.0) lat = num(g.scale) + "*" + lat;
    if (g.base.s == cplx(0.0) && g.base.p == 0) return lat;
    return "{(" + cnum(g.base.s) + "," + std::to_string(g.base.p) + ")} + " + lat;
}

class Parser {
public:
    Parser(const std::string& t, const ParseContext& c) : s_(t), ctx_(c) {}

    IndexValue parse() {
        auto v = value();
        ws();
        if (i_ != s_.size()) fail("unexpected trailing input");
        return v;
    }

private:
    const std::string& s_;
    ParseContext ctx_;
    std::size_t i_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("index expression: " + what + " at position " + std::to_string(i_));
    }
    void ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool peek(char c) {
        ws();
        return i_ < s_.size() && s_[i_] == c;
    }
    bool eat(char c) {
        if (!peek(c)) return false;
        ++i_;
        return true;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }
    bool word(const std::string& w) {
        ws();
        if (s_.compare(i_, w.size(), w) != 0) return false;
        const std::size_t e = i_ + w.size();
        if (e < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[e])) || s_[e] == '_')) return false;
        i_ = e;
        return true;
    }
    bool op(const std::string& w) {
        ws();
        if (s_.compare(i_, w.size(), w) != 0) return false;
        i_ += w.size();
        return true;
    }

    std::optional<double> real_number() {
        ws();
        const char* b = s_.data() + i_;
        const char* e = s_.data() + s_.size();
        if (b < e && *b == '+') return std::nullopt;
        double v;
        auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc() || res.ptr == b) return std::nullopt;
        i_ += static_cast<std::size_t>(res.ptr - b);
        return v;
    }
    bool imag_unit() {
        if (i_ < s_.size() && s_[i_] == 'i' &&
            !(i_ + 1 < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i_ + 1])))) {
            ++i_;
            return true;
        }
        return false;
    }
    std::optional<cplx> complex_number() {
        const std::size_t start = i_;
        auto a = real_number();
        if (!a) {
            i_ = start;
            return std::nullopt;
        }
        if (imag_unit()) return cplx(0.0, *a);
        const std::size_t mid = i_;
        ws();
        if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) {
            const double sign = s_[i_] == '-' ? -1.0 : 1.0;
            ++i_;
            ws();
            const char* b = s_.data() + i_;
            double v;
            auto res = std::from_chars(b, s_.data() + s_.size(), v);
            if (res.ec == std::errc() && res.ptr != b && (*b != '-')) {
                i_ += static_cast<std::size_t>(res.ptr - b);
                if (imag_unit()) return cplx(*a, sign * v);
            }
        }
        i_ = mid;
        return cplx(*a, 0.0);
    }
    cplx need_complex() {
        auto z = complex_number();
        if (!z) fail("expected a number");
        return *z;
    }
    double need_real() {
        auto z = real_number();
        if (!z) fail("expected a real number");
        return *z;
    }

    static const IndexSet& as_set(const IndexValue& v, const Parser& p) {
        if (!std::holds_alternative<IndexSet>(v)) p.fail("expected an index set, got a family");
        return std::get<IndexSet>(v);
    }
    static const IndexFamily& as_family(const IndexValue& v, const Parser& p) {
        if (!std::holds_alternative<IndexFamily>(v)) p.fail("expected an index family");
        return std::get<IndexFamily>(v);
    }

    IndexValue value() {
        IndexValue lhs = sum();
        for (;;) {
            if (word("eu")) {
                const auto rhs = sum();
                lhs = extended_union(as_set(lhs, *this), as_set(rhs, *this), ctx_.height);
            } else if (word("u")) {
                const auto rhs = sum();
                lhs = as_set(lhs, *this).unite(as_set(rhs, *this));
            } else {
                return lhs;
            }
        }
    }

    std::optional<IndexSet> lattice() {
        if (word("N0")) return IndexSet::smooth();
        if (word("Theta")) {
            expect('(');
            const double a = need_real();
            expect(')');
            return IndexSet::generated({{0.0, 0}, LatticeKind::Theta, a, 1.0});
        }
        return std::nullopt;
    }

    IndexValue sum() {
        IndexValue lhs = primary();
        for (;;) {
            if (op("++")) {
                const auto rhs = primary();
                lhs = index_sum(as_set(lhs, *this), as_set(rhs, *this), ctx_.height);
            } else if (peek('+') || peek('-')) {
                const bool minus = s_[i_] == '-';
                ++i_;
                const auto& S = as_set(lhs, *this);
                if (!minus) {
                    if (auto L = lattice()) {
                        lhs = index_sum(S, *L, ctx_.height);
                        continue;
                    }
                }
                const cplx c = need_complex();
                if (!minus && eat('*')) {
                    auto L = lattice();
                    if (!L || c.imag() != 0.0) fail("expected real*N0 or real*Theta(a)");
                    lhs = index_sum(S, L->scaled(c.real()), ctx_.height);
                    continue;
                }
                lhs = S.shifted(minus ? -c : c);
            } else {
                return lhs;
            }
        }
    }

    IndexValue primary() {
        if (eat('{')) {
            std::vector<IndexEntry> es;
            if (!eat('}')) {
                do {
                    expect('(');
                    const cplx s = need_complex();
                    expect(',');
                    const double p = need_real();
                    if (p < 0 || p != std::floor(p)) fail("log power must be a nonnegative integer");
                    expect(')');
                    es.push_back({s, static_cast<int>(p)});
                } while (eat(','));
                expect('}');
            }
            return IndexSet::points(es);
        }
        if (word("Empty") || word("inf")) return IndexSet{};
        if (auto L = lattice()) return *L;
        if (word("trunc")) {
            expect('(');
            const double h = need_real();
            expect(';');
            IndexSet S = as_set(value(), *this);
            expect(')');
            S.cap_exactness(h);
            return S;
        }
        for (const bool extended : {true, false}) {
            // eu(E; F) and u(E; F), same as the infix forms
            if (!word(extended ? "eu" : "u")) continue;
            expect('(');
            const auto E = value();
            expect(';');
            const auto F = value();
            expect(')');
            if (extended) return extended_union(as_set(E, *this), as_set(F, *this), ctx_.height);
            return as_set(E, *this).unite(as_set(F, *this));
        }
        if (word("compose")) {
            expect('(');
            const auto E = value();
            expect(';');
            const auto F = value();
            expect(')');
            return compose_indexsets(as_family(E, *this), as_family(F, *this), ctx_.alpha, ctx_.n, ctx_.height);
        }
        if (eat('[')) {
            IndexFamily f;
            do {
                ws();
                std::string label;
                const std::size_t save = i_;
                while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
                if (i_ > save && peek(':')) {
                    label = s_.substr(save, i_ - save);
                    ++i_;
                } else {
                    i_ = save;
                }
                f.sets.push_back(as_set(value(), *this));
                f.labels.push_back(label);
            } while (eat(';'));
            expect(']');
            const bool unlabeled = std::all_of(f.labels.begin(), f.labels.end(), [](auto& l) { return l.empty(); });
            if (unlabeled && f.size() == 3) f.labels = {"B10", "B01", "B11"};
            for (std::size_t k = 0; k < f.size(); ++k)
                if (f.labels[k].empty()) f.labels[k] = "F" + std::to_string(k);
            return f;
        }
        if (eat('(')) {
            auto v = value();
            expect(')');
            return v;
        }
        fail("expected an index set");
    }
};

} // namespace

IndexValue parse_index_expression(const std::string& text, const ParseContext& ctx) {
    return Parser(text, ctx).parse();
}

std::string to_string(const IndexSet& e) {
    std::vector<std::string> parts;
    if (!e.point_entries().empty() || e.generators().empty()) {
        std::string s = "{";
        for (std::size_t k = 0; k < e.point_entries().size(); ++k) {
            const auto& x = e.point_entries()[k];
            if (k) s += ",";
            s += "(" + cnum(x.s) + "," + std::to_string(x.p) + ")";
        }
        s += "}";
        if (e.point_entries().empty()) s = "Empty";
        parts.push_back(s);
    }
    for (const auto& g : e.generators()) parts.push_back(gen_string(g));
    std::string out;
    for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? " u " : "") + parts[k];
    if (std::isfinite(e.exact_below())) out = "trunc(" + num(e.exact_below()) + "; " + out + ")";
    return out;
}

std::string to_string(const IndexFamily& f) {
    std::string out = "[";
    for (std::size_t k = 0; k < f.size(); ++k) out += (k ? "; " : "") + f.labels[k] + ": " + to_string(f.sets[k]);
    return out + "]";
}

std::string to_string(const IndexValue& v) {
    return std::visit([](const auto& x) { return to_string(x); }, v);
}

} // namespace grushin
