#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <regex>
#include <sstream>

#include "grushin/bessel.hpp"
#include "grushin/curvature.hpp"
#include "grushin/deficiency.hpp"
#include "grushin/errors.hpp"
#include "grushin/extensions.hpp"
#include "grushin/frobenius.hpp"
#include "grushin/indexset.hpp"
#include "grushin/serialize.hpp"

namespace grushin::cli {

using nlohmann::json;

namespace {

double to_double(const std::string& t) {
    double v = 0.0;
    const char* b = t.data();
    const char* e = t.data() + t.size();
    if (!t.empty() && *b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e || b == e) throw DomainError("not a number: '" + t + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

// integer numerator over 10^digits, when the token is a short plain decimal
struct Decimal {
    long long num = 0;
    int digits = 0;
};

std::optional<Decimal> as_decimal(const std::string& t) {
    static const std::regex re(R"(([+-]?)(\d+)(?:\.(\d*))?)");
    std::smatch m;
    if (!std::regex_match(t, m, re)) return std::nullopt;
    const std::string whole = m[2], frac = m[3];
    if (whole.size() + frac.size() > 15) return std::nullopt;
    Decimal d{std::stoll(whole + frac + (whole.empty() && frac.empty() ? "0" : "")), static_cast<int>(frac.size())};
    if (m[1] == "-") d.num = -d.num;
    return d;
}

long long pow10(int k) {
    long long r = 1;
    while (k-- > 0) r *= 10;
    return r;
}

constexpr std::size_t kMaxGrid = 10'000'000;

} // namespace

std::vector<double> parse_grid(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.size() == 1) {
        std::vector<double> out;
        for (const auto& t : split(spec, ',')) {
            const double v = to_double(t);
            if (!std::isfinite(v)) throw DomainError("grid values must be finite");
            out.push_back(v);
        }
        return out;
    }
    if (parts.size() != 3) throw DomainError("grid must be start:stop:step, got '" + spec + "'");
    const double a = to_double(parts[0]), b = to_double(parts[1]), s = to_double(parts[2]);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(s)) throw DomainError("grid bounds must be finite");
    if (!(s > 0.0)) throw DomainError("grid step must be > 0");
    if (b < a) throw DomainError("grid stop must be >= start");
    const double tol = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    const double count = std::floor((b - a) / s + 1e-9) + 1.0;
    if (count > static_cast<double>(kMaxGrid)) throw DomainError("grid has too many points");
    std::vector<double> out;
    const auto da = as_decimal(parts[0]), db = as_decimal(parts[1]), ds = as_decimal(parts[2]);
    if (da && db && ds) {
        const int dig = std::max({da->digits, db->digits, ds->digits});
        const long long A = da->num * pow10(dig - da->digits), B = db->num * pow10(dig - db->digits),
                        S = ds->num * pow10(dig - ds->digits);
        const double den = static_cast<double>(pow10(dig));
        for (long long v = A; v <= B; v += S) out.push_back(static_cast<double>(v) / den);
        return out;
    }
    for (std::size_t i = 0;; ++i) {
        double v = a + static_cast<double>(i) * s;
        if (v > b + tol) break;
        if (std::abs(v - b) <= tol) v = b;
        out.push_back(v);
    }
    return out;
}

std::vector<int> parse_int_grid(const std::string& spec) {
    std::vector<int> out;
    for (double v : parse_grid(spec)) {
        if (v != std::floor(v) || std::abs(v) > 1e6) throw DomainError("expected integers in '" + spec + "'");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

cplx parse_complex(const std::string& raw) {
    std::string s;
    for (char ch : raw)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) throw DomainError("empty complex number");
    if (s.back() != 'i') return {to_double(s), 0.0};
    s.pop_back();
    // split before the last sign that is not an exponent sign
    std::size_t cut = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            cut = k;
            break;
        }
    auto imag = [](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return to_double(t);
    };
    if (cut == std::string::npos) return {0.0, imag(s)};
    return {to_double(s.substr(0, cut)), imag(s.substr(cut))};
}

std::vector<cplx> parse_complex_list(const std::string& s) {
    std::vector<cplx> out;
    for (const auto& t : split(s, ',')) out.push_back(parse_complex(t));
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& t : split(s, ',')) out.push_back(to_double(t));
    return out;
}

namespace {

struct Output {
    std::string path;
    std::ostream& fallback;

    static std::string resolve(const std::string& p) {
        std::filesystem::path q(p);
        const char* dir = std::getenv("GRUSHIN_OUTPUT_DIR");
        if (q.is_relative() && dir && *dir) q = std::filesystem::path(dir) / q;
        return q.string();
    }

    void write(const std::string& text) const {
        if (path.empty()) {
            fallback << text;
            return;
        }
        const auto full = resolve(path);
        std::ofstream f(full, std::ios::binary);
        if (!f) throw DomainError("cannot write '" + full + "'");
        f << text;
    }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string quote_arg(const std::string& a) {
    if (!a.empty() && a.find_first_of(" \t\"'\\$") == std::string::npos) return a;
    std::string o = "'";
    for (char ch : a) o += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
    return o + "'";
}

Eigen::Matrix2cd matrix2(const std::string& s, const char* what) {
    const auto v = parse_complex_list(s);
    if (v.size() != 4) throw DomainError(std::string(what) + " needs 4 entries (row-major 2x2)");
    Eigen::Matrix2cd m;
    m << v[0], v[1], v[2], v[3];
    return m;
}

ModeJet jet(const std::string& s, const char* what) {
    const auto v = parse_complex_list(s);
    if (v.size() != 4) throw DomainError(std::string(what) + " needs a_plus_r,a_minus_r,a_plus_l,a_minus_l");
    return {v[0], v[1], v[2], v[3]};
}

std::vector<int> mode_vector(const std::string& s, int n) {
    std::vector<int> k;
    for (const auto& t : split(s, ',')) {
        const double v = to_double(t);
        if (v != std::floor(v)) throw DomainError("mode entries must be integers");
        k.push_back(static_cast<int>(v));
    }
    if (static_cast<int>(k.size()) != n) throw DomainError("mode needs n = " + std::to_string(n) + " entries");
    return k;
}

// ---------------------------------------------------------------- classify

struct ClassifyRow {
    GrushinParams p;
    IndicialData d;
    SelfAdjointnessVerdict v;
};

std::vector<ClassifyRow> classify_grid(const std::vector<double>& alphas, const std::vector<int>& ns,
                                       const std::vector<double>& cs, int jobs) {
    const std::size_t per_row = ns.size() * cs.size();
    if (alphas.size() * per_row > kMaxGrid) throw DomainError("classify: grid has too many points");
    for (int n : ns)
        for (double a : alphas) GrushinParams{a, n, 0.0}.validate();
    std::vector<ClassifyRow> rows(alphas.size() * per_row);
    auto fill = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            for (std::size_t a = 0; a < ns.size(); ++a)
                for (std::size_t b = 0; b < cs.size(); ++b) {
                    const GrushinParams p{alphas[i], ns[a], cs[b]};
                    rows[i * per_row + a * cs.size() + b] = {p, indicial_data(p), classify(p)};
                }
    };
    const std::size_t parts = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, alphas.size());
    std::vector<std::future<void>> fut;
    for (std::size_t k = 0; k < parts; ++k)
        fut.push_back(std::async(std::launch::async, fill, k * alphas.size() / parts, (k + 1) * alphas.size() / parts));
    for (auto& f : fut) f.get();
    return rows;
}

std::string classify_csv(const std::vector<ClassifyRow>& rows) {
    std::ostringstream o;
    o << "alpha,n,c,mu,lambda_plus_re,lambda_plus_im,lambda_minus_re,lambda_minus_im,verdict,regime,resonant\n";
    for (const auto& r : rows)
        o << format_double(r.p.alpha) << ',' << r.p.n << ',' << format_double(r.p.c) << ',' << format_double(r.d.mu)
          << ',' << format_double(r.d.lambda_plus.real()) << ',' << format_double(r.d.lambda_plus.imag()) << ','
          << format_double(r.d.lambda_minus.real()) << ',' << format_double(r.d.lambda_minus.imag()) << ','
          << to_string(r.v.verdict) << ',' << to_string(r.v.regime) << ',' << (r.v.resonant ? "true" : "false") << '\n';
    return o.str();
}

json classify_json(const std::vector<ClassifyRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"params", r.p},
                       {"mu", r.d.mu},
                       {"lambda_plus", r.d.lambda_plus},
                       {"lambda_minus", r.d.lambda_minus},
                       {"verdict", to_string(r.v.verdict)},
                       {"regime", to_string(r.v.regime)},
                       {"resonant", r.v.resonant}});
    return document("classify", {{"rows", arr}});
}

// ---------------------------------------------------------------- extension verify

struct VerifyReport {
    double max_isotropy = 0.0;
    int maximality_ok = 0;
    int maximality_trials = 0;
    double min_witness_pairing = std::numeric_limits<double>::infinity();
};

VerifyReport verify_extension(const ExtensionSpec& spec, int trials, std::uint64_t seed, double mu, double tol) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> N;
    auto z2 = [&] {
        Eigen::Vector2cd z;
        z << cplx(N(g), N(g)), cplx(N(g), N(g));
        return z;
    };
    const auto L = lagrangian_from_unitary(spec);
    VerifyReport r;
    for (int t = 0; t < trials; ++t) {
        const ModeJet u = L.admissible(z2()), v = L.admissible(z2());
        const double w = std::abs(asymmetry_form(u, v, spec.regime, mu)) / std::max(1.0, u.norm() * v.norm());
        r.max_isotropy = std::max(r.max_isotropy, w);

        ModeJet bad = ModeJet::from_pm(z2(), z2());
        if (L.satisfied(bad)) continue;
        ++r.maximality_trials;
        const ModeJet wit = L.maximality_witness(bad);
        const double pair = std::abs(asymmetry_form(wit, bad, spec.regime, mu));
        r.min_witness_pairing = std::min(r.min_witness_pairing, pair);
        if (L.satisfied(wit, tol) && pair > tol) ++r.maximality_ok;
    }
    return r;
}

} // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NonConvergence*>(&e)) return nonconvergence;
    if (dynamic_cast<const CheckFailed*>(&e) || dynamic_cast<const IntegrabilityViolation*>(&e) ||
        dynamic_cast<const InvalidConnection*>(&e) || dynamic_cast<const InternalConsistencyError*>(&e))
        return check_failed;
    // everything else is bad input in one form or another
    return usage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Self-adjointness and index-set toolkit for Grushin-type operators"};
    app.name("grushin");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", "grushin 0.1.0");

    std::string output;
    int jobs = 1;
    app.add_option("-o,--output", output, "Write to this file (relative paths under $GRUSHIN_OUTPUT_DIR)");
    app.add_option("--jobs", jobs, "Worker threads for sweeps")->check(CLI::Range(1, 256));

    std::string command_line = "grushin";
    for (const auto& a : args) command_line += " " + quote_arg(a);

    // classify
    auto* c_cls = app.add_subcommand("classify", "Verdict, mu and indicial roots on a parameter grid");
    std::string g_alpha, g_n = "1", g_c = "0";
    std::string cls_format = "csv";
    c_cls->add_option("--alpha", g_alpha, "alpha grid")->required();
    c_cls->add_option("--n", g_n, "n grid");
    c_cls->add_option("--c", g_c, "c grid");
    c_cls->add_option("--format", cls_format)->check(CLI::IsMember({"csv", "json"}));

    // phase-diagram
    auto* c_pd = app.add_subcommand("phase-diagram", "Regime map over (alpha, c) with the mu = 4 curve");
    int pd_n = 1;
    std::string pd_alpha, pd_c, pd_svg, pd_csv;
    double pd_scale = 1.0;
    c_pd->add_option("--n", pd_n)->check(CLI::PositiveNumber);
    c_pd->add_option("--alpha", pd_alpha, "alpha grid")->required();
    c_pd->add_option("--c", pd_c, "c grid")->required();
    c_pd->add_option("--svg", pd_svg, "SVG path (stdout when neither --svg nor --csv)");
    c_pd->add_option("--csv", pd_csv, "CSV path");
    c_pd->add_option("--scale", pd_scale, "pixels per grid cell");

    // deficiency
    auto* c_def = app.add_subcommand("deficiency", "Per-mode deficiency counts by shooting");
    GrushinParams dp;
    int kmax = 8;
    std::string def_format = "csv";
    c_def->add_option("--alpha", dp.alpha)->required();
    c_def->add_option("--n", dp.n);
    c_def->add_option("--c", dp.c);
    c_def->add_option("--kmax", kmax)->check(CLI::Range(0, 64));
    c_def->add_option("--format", def_format)->check(CLI::IsMember({"csv", "json"}));

    // frobenius
    auto* c_fro = app.add_subcommand("frobenius", "Frobenius series of one flat torus mode");
    GrushinParams fp;
    std::string root = "plus", mode = "1";
    double cutoff = 12.0;
    double x_lo = 1e-2, x_hi = 0.5;
    int x_count = 25;
    c_fro->add_option("--alpha", fp.alpha)->required();
    c_fro->add_option("--n", fp.n);
    c_fro->add_option("--c", fp.c);
    c_fro->add_option("--root", root)->check(CLI::IsMember({"plus", "minus"}));
    c_fro->add_option("--mode", mode, "k_1,...,k_n");
    c_fro->add_option("--cutoff", cutoff, "largest grade kept");
    c_fro->add_option("--x-min", x_lo);
    c_fro->add_option("--x-max", x_hi);
    c_fro->add_option("--x-count", x_count);

    // extension
    auto* c_ext = app.add_subcommand("extension", "Boundary conditions");
    c_ext->require_subcommand(1);
    auto* c_build = c_ext->add_subcommand("build", "Named family or explicit unitary to an ExtensionSpec");
    int family = 0;
    double gamma = 0.0;
    std::string b_text = "0", Gamma_text = "0,0,0,0", U_text, regime_text = "mu_pos";
    c_build->add_option("--family", family)->check(CLI::Range(1, 5));
    c_build->add_option("--gamma", gamma);
    c_build->add_option("--b", b_text, "complex, e.g. 1-0.5i");
    c_build->add_option("--Gamma", Gamma_text, "Hermitian 2x2, row-major");
    c_build->add_option("--U", U_text, "unitary 2x2, row-major")->excludes("--family");
    c_build->add_option("--regime", regime_text)->check(CLI::IsMember({"mu_neg", "mu_pos"}));

    auto* c_verify = c_ext->add_subcommand("verify", "Isotropy and maximality of an ExtensionSpec");
    std::string spec_path;
    int trials = 1000;
    std::uint64_t seed = 1;
    double v_tol = 1e-10;
    double v_mu = std::nan("");
    c_verify->add_option("--spec", spec_path)->required();
    c_verify->add_option("--trials", trials)->check(CLI::Range(1, 10'000'000));
    c_verify->add_option("--seed", seed);
    c_verify->add_option("--tol", v_tol);
    c_verify->add_option("--mu", v_mu, "mu used in the form (default -1 or 2)");

    auto* c_green = c_ext->add_subcommand("greens-check", "Boundary integral limit against the asymmetry form");
    GrushinParams gp{1.0, 1, 1.0};
    std::string g_mode = "1", g_u = "1,0.5i,-0.3,0.2+0.1i", g_v = "0.4-0.2i,1,0.7i,-0.5",
                g_eps = "0.2,0.1,0.05,0.025,0.0125";
    double g_tol = 1e-4, g_cut = 12.0;
    c_green->add_option("--alpha", gp.alpha);
    c_green->add_option("--n", gp.n);
    c_green->add_option("--c", gp.c);
    c_green->add_option("--mode", g_mode);
    c_green->add_option("--u", g_u, "a_plus_r,a_minus_r,a_plus_l,a_minus_l");
    c_green->add_option("--v", g_v);
    c_green->add_option("--eps", g_eps, "strictly decreasing list in (0,1)");
    c_green->add_option("--cutoff", g_cut);
    c_green->add_option("--tol", g_tol);

    // indexset
    auto* c_idx = app.add_subcommand("indexset", "Evaluate an index-set expression");
    std::string expr;
    ParseContext ctx;
    std::string idx_format = "text";
    c_idx->add_option("expression", expr)->required();
    c_idx->add_option("--alpha", ctx.alpha);
    c_idx->add_option("--n", ctx.n);
    c_idx->add_option("--height", ctx.height);
    c_idx->add_option("--format", idx_format)->check(CLI::IsMember({"text", "json"}));

    // curvature
    auto* c_cur = app.add_subcommand("curvature", "Flat-model scalar curvature and the x -> 0 limit");
    std::optional<double> cu_alpha;
    std::optional<int> cu_n;
    std::string metric_path, cu_y;
    std::string cu_grid = "0.005:0.5:14";
    c_cur->add_option("--alpha", cu_alpha);
    c_cur->add_option("--n", cu_n);
    c_cur->add_option("--metric", metric_path, "JSON warped metric");
    c_cur->add_option("--y", cu_y, "base point on the torus");
    c_cur->add_option("--x-grid", cu_grid, "lo:hi:count, logarithmic");

    // bessel
    auto* c_bes = app.add_subcommand("bessel", "Modified Bessel functions");
    c_bes->require_subcommand(1);
    auto* c_eval = c_bes->add_subcommand("eval", "Evaluate on a grid");
    std::string kind = "K", nus = "0.5", xs = "1";
    std::string bes_format = "csv";
    c_eval->add_option("--kind", kind)->check(CLI::IsMember({"I", "K", "I_tilde", "K_tilde", "I_scaled", "K_scaled"}));
    c_eval->add_option("--nu", nus, "order grid");
    c_eval->add_option("--x", xs, "argument grid");
    c_eval->add_option("--format", bes_format)->check(CLI::IsMember({"csv", "json"}));

    std::vector<std::string> argv_s{"grushin"};
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_s) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << "grushin 0.1.0\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "grushin: " << e.what() << "\n";
        return usage;
    }

    const Output sink{output, out};
    try {
        if (*c_cls) {
            const auto rows = classify_grid(parse_grid(g_alpha), parse_int_grid(g_n), parse_grid(g_c), jobs);
            sink.write(cls_format == "csv" ? classify_csv(rows) : dump(classify_json(rows)));
            return ok;
        }
        if (*c_pd) {
            const auto d = compute_phase_diagram(pd_n, parse_grid(pd_alpha), parse_grid(pd_c), jobs);
            const auto svg = render_svg(d, command_line, pd_scale);
            if (pd_svg.empty() && pd_csv.empty()) sink.write(svg);
            if (!pd_svg.empty()) Output{pd_svg, out}.write(svg);
            if (!pd_csv.empty()) Output{pd_csv, out}.write(render_csv(d));
            return ok;
        }
        if (*c_def) {
            const auto rep = aggregate_deficiency(dp, kmax);
            if (def_format == "json") {
                sink.write(dump(document("deficiency", {{"params", dp}, {"k_max", kmax}, {"report", rep}})));
            } else {
                std::ostringstream o;
                o << "mode_strength,multiplicity,count_plus,count_minus,endpoint,aggregate\n";
                for (const auto& m : rep.per_mode)
                    o << format_double(m.mode_strength) << ',' << m.multiplicity << ',' << m.count_plus << ','
                      << m.count_minus << ',' << to_string(rep.endpoint.cls) << ',' << to_string(rep.aggregate) << '\n';
                sink.write(o.str());
            }
            return ok;
        }
        if (*c_fro) {
            const auto k = mode_vector(mode, fp.n);
            double k2 = 0.0;
            for (int ki : k) k2 += double(ki) * ki;
            const auto data = flat_mode_series_data(fp, std::sqrt(k2));
            const auto ex = expand(data, root == "plus" ? Root::plus : Root::minus, Eigen::VectorXcd::Ones(1), cutoff);
            const auto cert = residual_certificate(ex, data, log_grid(x_lo, x_hi, x_count));
            sink.write(dump(document("frobenius", {{"params", fp},
                                                   {"mode", k},
                                                   {"indicial", data.indicial},
                                                   {"expansion", ex},
                                                   {"certificate", cert}})));
            return cert.satisfies_contract ? ok : check_failed;
        }
        if (*c_build) {
            ExtensionSpec s;
            if (!U_text.empty()) {
                s.regime = extension_regime_from_string(regime_text);
                s.U = matrix2(U_text, "--U");
                s.validate();
            } else {
                if (family == 0) throw DomainError("extension build needs --family or --U");
                FamilyTag t;
                t.kind = family;
                t.gamma = gamma;
                t.b = parse_complex(b_text);
                t.Gamma = matrix2(Gamma_text, "--Gamma");
                s = named_family(t);
            }
            sink.write(dump(document("extension_spec", s)));
            return ok;
        }
        if (*c_verify) {
            std::ifstream f(Output::resolve(spec_path));
            if (!f) throw DomainError("cannot read '" + spec_path + "'");
            json j;
            try {
                j = json::parse(f);
            } catch (const json::exception& e) {
                throw ParseError(std::string("spec file: ") + e.what());
            }
            const auto spec = (j.contains("data") ? j["data"] : j).get<ExtensionSpec>();
            const double mu = std::isnan(v_mu) ? (spec.regime == ExtensionRegime::mu_neg ? -1.0 : 2.0) : v_mu;
            const auto r = verify_extension(spec, trials, seed, mu, v_tol);
            const bool pass = r.max_isotropy < v_tol && r.maximality_ok == r.maximality_trials;
            sink.write(dump(document("extension_verify", {{"spec", spec},
                                                          {"trials", trials},
                                                          {"max_isotropy", r.max_isotropy},
                                                          {"maximality_trials", r.maximality_trials},
                                                          {"maximality_ok", r.maximality_ok},
                                                          {"pass", pass}})));
            return pass ? ok : check_failed;
        }
        if (*c_green) {
            const auto g = greens_identity_check(gp, mode_vector(g_mode, gp.n), jet(g_u, "--u"), jet(g_v, "--v"),
                                                 parse_double_list(g_eps), g_cut);
            const bool pass = g.relative_error <= g_tol;
            sink.write(dump(document("greens_check", {{"params", gp}, {"result", g}, {"tol", g_tol}, {"pass", pass}})));
            return pass ? ok : check_failed;
        }
        if (*c_idx) {
            const auto v = parse_index_expression(expr, ctx);
            if (idx_format == "json") {
                json data = std::holds_alternative<IndexSet>(v) ? json(std::get<IndexSet>(v))
                                                                 : json(std::get<IndexFamily>(v));
                sink.write(dump(document("indexset", {{"expression", expr}, {"value", data}})));
            } else {
                sink.write(to_string(v) + "\n");
            }
            return ok;
        }
        if (*c_cur) {
            WarpedMetric m;
            if (!metric_path.empty()) {
                std::ifstream f(Output::resolve(metric_path));
                if (!f) throw DomainError("cannot read '" + metric_path + "'");
                json j;
                try {
                    j = json::parse(f);
                } catch (const json::exception& e) {
                    throw ParseError(std::string("metric file: ") + e.what());
                }
                m = warped_metric_from_json(j);
                if ((cu_alpha && *cu_alpha != m.alpha) || (cu_n && *cu_n != m.n))
                    throw DomainError("--alpha/--n disagree with the metric file");
            } else {
                if (!cu_alpha) throw DomainError("curvature needs --alpha or --metric");
                const int n = cu_n.value_or(1);
                m = {*cu_alpha, n, [n](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(n, n); }};
            }
            const GrushinParams p{m.alpha, m.n, 0.0};
            p.validate();
            const auto gs = parse_double_list(std::regex_replace(cu_grid, std::regex(":"), ","));
            if (gs.size() != 3 || gs[2] != std::floor(gs[2])) throw DomainError("--x-grid must be lo:hi:count");
            Eigen::VectorXd y = Eigen::VectorXd::Zero(m.n);
            if (!cu_y.empty()) {
                const auto yv = parse_double_list(cu_y);
                if (static_cast<int>(yv.size()) != m.n) throw DomainError("--y needs n entries");
                for (int i = 0; i < m.n; ++i) y(i) = yv[i];
            }
            const auto chk = asymptotic_check(m, log_grid(gs[0], gs[1], static_cast<int>(gs[2])), y);
            const double an = m.alpha * m.n;
            sink.write(dump(document("curvature", {{"alpha", m.alpha},
                                                   {"n", m.n},
                                                   {"flat_model_scalar", flat_model_scalar(p)},
                                                   {"flat_model_scalar_alt", -(2 * an + m.alpha * an + an * an)},
                                                   {"asymptotic", chk}})));
            return chk.satisfies_contract ? ok : check_failed;
        }
        if (*c_eval) {
            const auto nu_v = parse_grid(nus), x_v = parse_grid(xs);
            if (nu_v.size() * x_v.size() > kMaxGrid) throw DomainError("bessel eval: grid too large");
            json rows = json::array();
            std::ostringstream o;
            o << "kind,nu,x,value\n";
            for (double nu : nu_v)
                for (double x : x_v) {
                    double v = 0.0;
                    if (kind == "I") v = bessel_I(x, nu);
                    else if (kind == "K") v = bessel_K(x, nu);
                    else if (kind == "I_tilde") v = bessel_I_tilde(x, nu);
                    else if (kind == "K_tilde") v = bessel_K_tilde(x, nu);
                    else if (kind == "I_scaled") v = bessel_I_scaled(x, nu).value();
                    else v = bessel_K_scaled(x, nu).value();
                    // scaled kinds: e^{-x} I and e^{x} K as plain numbers when representable
                    o << kind << ',' << format_double(nu) << ',' << format_double(x) << ',' << format_double(v) << '\n';
                    rows.push_back({{"nu", nu}, {"x", x}, {"value", std::isfinite(v) ? json(v) : json(nullptr)}});
                }
            sink.write(bes_format == "csv" ? o.str() : dump(document("bessel_eval", {{"kind", kind}, {"rows", rows}})));
            return ok;
        }
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        err << "grushin: " << (code == check_failed ? "check failed: " : "") << e.what() << "\n";
        return code;
    }
    return usage;
}

} // namespace grushin::cli
