#pragma once

#include "dgpe/dipole_kernel.hpp"
#include "dgpe/gpe_state.hpp"

#include <map>
#include <string>
#include <vector>

namespace dgpe {

enum class Verdict { GlobalStable, BlowupCertified, ConditionallyGlobal, Indeterminate };

std::string to_string(Verdict v);

/// Quantities the verdict was derived from.
struct RegimeEvidence {
    int dim = 3;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double energy = 0.0;
    double mass = 0.0;
    double grad_sq = 0.0;      // ||grad phi||^2
    double x_moment = 0.0;     // ||x phi||^2
    double min_omega = 0.0;
    double stability_margin = 0.0;  // lambda1 - 4 pi lambda2 / 3
    double gn_constant = 1.0;
    bool bootstrap_evaluated = false;
    bool bootstrap_passed = false;
    double bootstrap_eps1 = 0.0;
    double bootstrap_eps2 = 0.0;
    double bootstrap_energy_threshold = 0.0;  // 2E must stay below this
    double bootstrap_grad_threshold = 0.0;    // grad_sq must not exceed this
};

struct RegimeCertificate {
    Verdict verdict = Verdict::Indeterminate;
    double t_bound = 0.0;  // pi / (2 min omega) for BlowupCertified, 0 otherwise
    RegimeEvidence evidence;

    /// Plain-text "key = value" block, one field per line.
    std::string report() const;
};

/// Parses a report() block back into its key/value pairs.
std::map<std::string, std::string> parse_report(const std::string& text);

/// Evaluation order:
///  1. lambda1 >= (4pi/3) lambda2 and lambda2 >= 0          -> GlobalStable
///  2. d = 3, min omega > 0 and 3E <= min_omega^2 ||x phi||^2 -> BlowupCertified(pi/(2 min omega))
///  3. d = 3, lambda2 >= 0, E > 0 and bootstrap_check passes -> ConditionallyGlobal
///  4. otherwise                                              -> Indeterminate
/// ConditionallyGlobal is only as sharp as gn_constant, the Gagliardo-Nirenberg
/// constant C in ||u||_4^4 <= C ||u||_2 ||grad u||_2^3.
RegimeCertificate classify(const WaveField& phi, const PhysicalParams& params, const KernelSymbol* symbol,
                           double gn_constant = 1.0);

/// Thresholds of the bootstrap with theta = 3/2: with eps2 given, returns the
/// pair ((1/3) (3 eps2/2)^-2, (3 eps2/2)^-2) bounding 2E and f(0) = grad_sq.
struct BootstrapThresholds {
    double energy_bound = 0.0;
    double grad_bound = 0.0;
};
BootstrapThresholds bootstrap_thresholds(double eps2);

/// True iff 2E < (1/3)(3 eps2/2)^-2 and grad_sq <= (3 eps2/2)^-2 where
/// eps2 = gn_constant * (4 pi lambda2/3 - lambda1) * sqrt(M).
/// Requires lambda1 < (4pi/3) lambda2, lambda2 >= 0 and E > 0.
bool bootstrap_check(double E, double M, double grad_sq, const PhysicalParams& params, double gn_constant);

/// phi(x) = eps^{alpha/2} f(x1, x2) g(eps x3) with Gaussians
/// f = exp(-(x1^2+x2^2)/(2 f_width^2)), g(s) = exp(-s^2/(2 g_width^2)).
/// Warns when the box edge amplitude exceeds 1e-10 of the peak and throws
/// when it exceeds 1e-4.
WaveField make_unstable_data(const GridPtr& grid, double eps, double alpha, double f_width, double g_width);

/// A 3D grid sized for make_unstable_data: transverse box 16 f_width, longitudinal box 16 g_width / eps.
GridPtr unstable_data_grid(double eps, double f_width, double g_width, int transverse_points, int longitudinal_points);

/// int (xi_3^2/|xi|^2) |rho_hat|^2 / int |rho_hat|^2 for rho = |phi|^2.
double anisotropy_ratio(const WaveField& phi);

/// pi / (2 min omega). Throws when min omega = 0.
double blowup_time_bound(const PhysicalParams& params);

struct AuditReport {
    std::size_t samples_checked = 0;
    double window_end = 0.0;
    double source = 0.0;          // the constant used in place of f(t), normally 6E
    double max_violation = 0.0;   // max over samples of y(t) - envelope(t)
    double t_of_max = 0.0;
    double tolerance = 0.0;
    bool passed = true;
};

/// Checks y(t) <= y0 cos(2wt) + ydot0 sin(2wt)/(2w) + (6E - delta)(1 - cos(2wt))/(4w^2)
/// for t - t0 in [0, min(T, pi/(2w))], w = min omega. delta = 0 gives the
/// sharp envelope; a positive delta is a tightness probe. Throws when the
/// series has fewer than 5 samples per period 2pi/(2w).
AuditReport virial_audit(const ObservableSeries& series, const PhysicalParams& params, double E, double delta = 0.0,
                         double rel_tolerance = 1e-9);

}  // namespace dgpe
