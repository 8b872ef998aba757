#pragma once

#include <complex>
#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "grushin/params.hpp"

namespace grushin::cli {

enum ExitCode : int { ok = 0, check_failed = 1, usage = 2, nonconvergence = 3 };

// NonConvergence -> 3; failed checks -> 1; anything else is treated as bad input -> 2.
int exit_code_for(const std::exception& e);

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "start:stop:step" (inclusive, endpoints matched to 1e-12), "v", or "v1,v2,...".
// Decimal tokens are stepped in exact decimal arithmetic so 0.05 steps land on
// the values a reader expects.
std::vector<double> parse_grid(const std::string& spec);
std::vector<int> parse_int_grid(const std::string& spec);
// "1.5", "-2i", "1-0.5i", "i"
cplx parse_complex(const std::string& s);
std::vector<cplx> parse_complex_list(const std::string& s);
std::vector<double> parse_double_list(const std::string& s);

struct PhaseCell {
    double alpha = 0.0;
    double c = 0.0;
    SelfAdjointnessVerdict verdict;
};

struct PhaseDiagram {
    int n = 1;
    std::vector<double> alphas; // ascending
    std::vector<double> cs;     // ascending
    std::vector<PhaseCell> cells; // alpha-major
};

PhaseDiagram compute_phase_diagram(int n, const std::vector<double>& alphas, const std::vector<double>& cs, int jobs);
// One pixel per cell times `scale`; the command line goes into <metadata>.
std::string render_svg(const PhaseDiagram& d, const std::string& command_line, double scale = 1.0);
std::string render_csv(const PhaseDiagram& d);

std::string xml_escape(const std::string& s);

} // namespace grushin::cli
