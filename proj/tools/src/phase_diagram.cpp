#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "cli.hpp"
#include "grushin/errors.hpp"
#include "grushin/serialize.hpp"

namespace grushin::cli {

std::string xml_escape(const std::string& s) {
    std::string o;
    for (char ch : s) {
        switch (ch) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        case '\'': o += "&apos;"; break;
        default: o += ch;
        }
    }
    return o;
}

PhaseDiagram compute_phase_diagram(int n, const std::vector<double>& alphas, const std::vector<double>& cs, int jobs) {
    if (alphas.empty() || cs.empty()) throw DomainError("phase-diagram: empty grid");
    if (!std::is_sorted(alphas.begin(), alphas.end()) || !std::is_sorted(cs.begin(), cs.end()))
        throw DomainError("phase-diagram: grids must be ascending");
    PhaseDiagram d{n, alphas, cs, {}};
    d.cells.resize(alphas.size() * cs.size());
    auto fill = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            for (std::size_t j = 0; j < cs.size(); ++j) {
                const GrushinParams p{alphas[i], n, cs[j]};
                d.cells[i * cs.size() + j] = {alphas[i], cs[j], classify(p)};
            }
    };
    const std::size_t parts = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, alphas.size());
    std::vector<std::future<void>> fut;
    for (std::size_t k = 0; k < parts; ++k)
        fut.push_back(std::async(std::launch::async, fill, k * alphas.size() / parts, (k + 1) * alphas.size() / parts));
    for (auto& f : fut) f.get();
    return d;
}

namespace {

const char* fill_for(const SelfAdjointnessVerdict& v) {
    if (v.regime == Regime::mu_eq_4) return "#000000";
    if (v.mu > 4.0) return "#4c72b0";
    if (v.mu >= 0.0) return "#dd8452";
    return "#c44e52";
}

std::string f(double v) { return format_double(v); }

} // namespace

std::string render_svg(const PhaseDiagram& d, const std::string& command_line, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("phase-diagram: scale must be positive");
    const std::size_t cols = d.alphas.size(), rows = d.cs.size();
    const double da = cols > 1 ? d.alphas[1] - d.alphas[0] : 1.0;
    const double dc = rows > 1 ? d.cs[1] - d.cs[0] : 1.0;
    const double cmax = d.cs.back();
    auto X = [&](double a) { return (a - d.alphas.front()) / da + 0.5; };
    auto Y = [&](double c) { return (cmax - c) / dc + 0.5; };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << f(cols * scale) << "\" height=\""
      << f(rows * scale) << "\" viewBox=\"0 0 " << cols << ' ' << rows << "\" shape-rendering=\"crispEdges\">\n"
      << "<title>self-adjointness regimes, n = " << d.n << "</title>\n"
      << "<metadata>\n<grushin:run xmlns:grushin=\"urn:grushin:phase-diagram\" schema_version=\"" << kSchemaVersion
      << "\" command=\"" << xml_escape(command_line) << "\"/>\n</metadata>\n"
      << "<defs><clipPath id=\"plot\"><rect x=\"0\" y=\"0\" width=\"" << cols << "\" height=\"" << rows
      << "\"/></clipPath></defs>\n";

    // horizontal runs of equal colour, one rect each
    o << "<g id=\"cells\">\n";
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t j = rows - 1 - r;
        std::size_t i = 0;
        while (i < cols) {
            const char* col = fill_for(d.cells[i * rows + j].verdict);
            std::size_t e = i + 1;
            while (e < cols && fill_for(d.cells[e * rows + j].verdict) == col) ++e;
            o << "<rect x=\"" << i << "\" y=\"" << r << "\" width=\"" << e - i << "\" height=\"1\" fill=\"" << col
              << "\"/>\n";
            i = e;
        }
    }
    o << "</g>\n";

    // mu = 4 curve, split where c0 leaves the window or does not exist
    o << "<g id=\"critical-curve\" clip-path=\"url(#plot)\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"0.3\">\n";
    const int per_col = 8;
    const std::size_t samples = cols > 1 ? (cols - 1) * per_col + 1 : 1;
    const double lo = d.cs.front() - 2 * std::abs(dc), hi = cmax + 2 * std::abs(dc);
    std::vector<std::pair<double, double>> seg;
    auto flush = [&] {
        if (seg.size() >= 2) {
            o << "<polyline points=\"";
            for (std::size_t k = 0; k < seg.size(); ++k)
                o << (k ? " " : "") << f(seg[k].first) << ',' << f(seg[k].second);
            o << "\"/>\n";
        } else if (seg.size() == 1) {
            o << "<circle cx=\"" << f(seg[0].first) << "\" cy=\"" << f(seg[0].second) << "\" r=\"0.3\" fill=\"#ffffff\"/>\n";
        }
        seg.clear();
    };
    for (std::size_t k = 0; k < samples; ++k) {
        const double a = cols > 1 ? d.alphas.front() + (d.alphas.back() - d.alphas.front()) * k / (samples - 1)
                                  : d.alphas.front();
        double c0 = std::nan("");
        try {
            c0 = forbidden_c(a, d.n);
        } catch (const DomainError&) {
        }
        if (!std::isfinite(c0) || c0 < lo || c0 > hi) {
            flush();
            continue;
        }
        seg.emplace_back(X(a), Y(c0));
    }
    flush();
    o << "</g>\n";

    // verdict changes along c = 0
    o << "<g id=\"boundary-markers\" fill=\"none\" stroke=\"#00c000\" stroke-width=\"0.25\">\n";
    for (std::size_t j = 0; j < rows; ++j) {
        if (std::abs(d.cs[j]) > 1e-12) continue;
        for (std::size_t i = 0; i < cols; ++i) {
            const auto& v = d.cells[i * rows + j].verdict;
            if (v.verdict == Verdict::Critical_Mu4_Indeterminate) {
                o << "<circle class=\"boundary\" data-alpha=\"" << f(d.alphas[i]) << "\" cx=\"" << f(X(d.alphas[i]))
                  << "\" cy=\"" << f(Y(0.0)) << "\" r=\"0.5\"/>\n";
            } else if (i + 1 < cols) {
                const auto& w = d.cells[(i + 1) * rows + j].verdict;
                if (w.verdict != v.verdict && w.verdict != Verdict::Critical_Mu4_Indeterminate) {
                    const double mid = 0.5 * (d.alphas[i] + d.alphas[i + 1]);
                    o << "<circle class=\"boundary\" data-alpha=\"" << f(mid) << "\" cx=\"" << f(X(mid)) << "\" cy=\""
                      << f(Y(0.0)) << "\" r=\"0.5\"/>\n";
                }
            }
        }
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

std::string render_csv(const PhaseDiagram& d) {
    std::ostringstream o;
    o << "alpha,n,c,mu,verdict,regime\n";
    for (const auto& cell : d.cells)
        o << f(cell.alpha) << ',' << d.n << ',' << f(cell.c) << ',' << f(cell.verdict.mu) << ','
          << to_string(cell.verdict.verdict) << ',' << to_string(cell.verdict.regime) << '\n';
    return o.str();
}

} // namespace grushin::cli
