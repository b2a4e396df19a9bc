#include "dgpe/regimes.hpp"

#include "dgpe/errors.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace dgpe {

using std::numbers::pi;

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::GlobalStable: return "GlobalStable";
        case Verdict::BlowupCertified: return "BlowupCertified";
        case Verdict::ConditionallyGlobal: return "ConditionallyGlobal";
        case Verdict::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string RegimeCertificate::report() const {
    const auto& e = evidence;
    std::ostringstream os;
    os << "verdict = " << to_string(verdict) << '\n';
    os << "t_bound = " << num(t_bound) << '\n';
    os << "dim = " << e.dim << '\n';
    os << "lambda1 = " << num(e.lambda1) << '\n';
    os << "lambda2 = " << num(e.lambda2) << '\n';
    os << "energy = " << num(e.energy) << '\n';
    os << "mass = " << num(e.mass) << '\n';
    os << "grad_sq = " << num(e.grad_sq) << '\n';
    os << "x_moment = " << num(e.x_moment) << '\n';
    os << "min_omega = " << num(e.min_omega) << '\n';
    os << "stability_margin = " << num(e.stability_margin) << '\n';
    os << "gn_constant = " << num(e.gn_constant) << '\n';
    os << "bootstrap_evaluated = " << (e.bootstrap_evaluated ? "true" : "false") << '\n';
    os << "bootstrap_passed = " << (e.bootstrap_passed ? "true" : "false") << '\n';
    os << "bootstrap_eps1 = " << num(e.bootstrap_eps1) << '\n';
    os << "bootstrap_eps2 = " << num(e.bootstrap_eps2) << '\n';
    os << "bootstrap_energy_threshold = " << num(e.bootstrap_energy_threshold) << '\n';
    os << "bootstrap_grad_threshold = " << num(e.bootstrap_grad_threshold) << '\n';
    if (verdict == Verdict::ConditionallyGlobal) os << "note = conditional on the supplied gn_constant\n";
    if (verdict == Verdict::BlowupCertified) os << "note = analytic certificate; simulations only corroborate\n";
    return os.str();
}

std::map<std::string, std::string> parse_report(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

BootstrapThresholds bootstrap_thresholds(double eps2) {
    if (!(eps2 > 0.0)) throw ValidationError("bootstrap: eps2 must be positive");
    // (theta eps2)^{-1/(theta-1)} and (1 - 1/theta) times it, theta = 3/2.
    const double grad = 1.0 / ((1.5 * eps2) * (1.5 * eps2));
    return {grad / 3.0, grad};
}

bool bootstrap_check(double E, double M, double grad_sq, const PhysicalParams& params, double gn_constant) {
    if (!(gn_constant > 0.0)) throw ValidationError("bootstrap: gn_constant must be positive");
    if (!(params.stability_margin() < 0.0)) throw ValidationError("bootstrap: needs lambda1 < (4pi/3) lambda2");
    if (!(params.lambda2 >= 0.0)) throw ValidationError("bootstrap: needs lambda2 >= 0");
    if (!(E > 0.0)) throw ValidationError("bootstrap: the energy must be positive");
    if (!(M > 0.0)) throw ValidationError("bootstrap: the mass must be positive");
    const double eps2 = gn_constant * (-params.stability_margin()) * std::sqrt(M);
    const auto th = bootstrap_thresholds(eps2);
    return 2.0 * E < th.energy_bound && grad_sq <= th.grad_bound;
}

RegimeCertificate classify(const WaveField& phi, const PhysicalParams& params, const KernelSymbol* symbol,
                           double gn_constant) {
    if (!(gn_constant > 0.0)) throw ValidationError("classify: gn_constant must be positive");
    params.validate_for(phi.g());
    RegimeCertificate cert;
    auto& ev = cert.evidence;
    ev.dim = params.dim;
    ev.lambda1 = params.lambda1;
    ev.lambda2 = params.lambda2;
    const auto e = energy(phi, params, symbol);
    ev.energy = e.total();
    ev.mass = mass(phi);
    ev.grad_sq = 2.0 * e.kinetic;
    ev.x_moment = variance_and_rate(phi).y;
    ev.min_omega = params.min_omega();
    ev.stability_margin = params.stability_margin();
    ev.gn_constant = gn_constant;

    if (params.stable_regime()) {
        cert.verdict = Verdict::GlobalStable;
        return cert;
    }
    if (params.dim == 3 && ev.min_omega > 0.0 && 3.0 * ev.energy <= ev.min_omega * ev.min_omega * ev.x_moment) {
        cert.verdict = Verdict::BlowupCertified;
        cert.t_bound = blowup_time_bound(params);
        return cert;
    }
    if (params.dim == 3 && params.lambda2 >= 0.0 && ev.energy > 0.0 && ev.mass > 0.0) {
        ev.bootstrap_evaluated = true;
        ev.bootstrap_eps1 = 2.0 * ev.energy;
        ev.bootstrap_eps2 = gn_constant * (-ev.stability_margin) * std::sqrt(ev.mass);
        const auto th = bootstrap_thresholds(ev.bootstrap_eps2);
        ev.bootstrap_energy_threshold = th.energy_bound;
        ev.bootstrap_grad_threshold = th.grad_bound;
        ev.bootstrap_passed = bootstrap_check(ev.energy, ev.mass, ev.grad_sq, params, gn_constant);
        if (ev.bootstrap_passed) {
            cert.verdict = Verdict::ConditionallyGlobal;
            return cert;
        }
    }
    cert.verdict = Verdict::Indeterminate;
    return cert;
}

WaveField make_unstable_data(const GridPtr& grid, double eps, double alpha, double f_width, double g_width) {
    if (!grid || grid->dim() != 3) throw ValidationError("make_unstable_data needs a 3D grid");
    if (!(eps > 0.0)) throw ValidationError("make_unstable_data: eps must be positive");
    if (!(f_width > 0.0) || !(g_width > 0.0)) throw ValidationError("make_unstable_data: widths must be positive");
    if (!(alpha < -2.0)) warn("make_unstable_data: alpha >= -2 does not force negative energy as eps -> 0");

    // Relative amplitude at the box faces, where |x_j| = L_j/2.
    auto edge = [](double half, double width) { return std::exp(-half * half / (2.0 * width * width)); };
    double worst = 0.0;
    worst = std::max(worst, edge(0.5 * grid->extent(0), f_width));
    worst = std::max(worst, edge(0.5 * grid->extent(1), f_width));
    worst = std::max(worst, edge(0.5 * eps * grid->extent(2), g_width));
    if (worst > 1e-4) {
        std::ostringstream os;
        os << "make_unstable_data: box does not contain the data (edge amplitude " << worst
           << " of peak; longitudinal extent needs >> " << g_width / eps << ")";
        throw ValidationError(os.str());
    }
    if (worst > 1e-10) {
        std::ostringstream os;
        os << "make_unstable_data: edge amplitude " << worst << " of peak exceeds 1e-10";
        warn(os.str());
    }

    const double amp = std::pow(eps, 0.5 * alpha);
    std::vector<Complex> values(grid->size());
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < values.size(); ++f) {
        grid->unflatten(f, idx);
        const double x1 = grid->coords(0)[idx[0]];
        const double x2 = grid->coords(1)[idx[1]];
        const double s = eps * grid->coords(2)[idx[2]];
        values[f] = amp * std::exp(-(x1 * x1 + x2 * x2) / (2.0 * f_width * f_width) - s * s / (2.0 * g_width * g_width));
    }
    return WaveField(grid, std::move(values));
}

GridPtr unstable_data_grid(double eps, double f_width, double g_width, int transverse_points, int longitudinal_points) {
    if (!(eps > 0.0)) throw ValidationError("unstable_data_grid: eps must be positive");
    const double lt = 16.0 * f_width;
    return SpectralGrid::make(3, {lt, lt, 16.0 * g_width / eps}, {transverse_points, transverse_points, longitudinal_points});
}

double anisotropy_ratio(const WaveField& phi) {
    const SpectralGrid& g = phi.g();
    if (g.dim() != 3) throw ValidationError("anisotropy_ratio needs a 3D field");
    std::vector<Complex> r(g.size());
    auto v = phi.values();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::norm(v[i]);
    g.fft_forward(r);
    std::array<int, 3> idx{};
    double num = 0.0, den = 0.0;
    const auto& k2 = g.freq_norm_sq();
    for (std::size_t f = 0; f < r.size(); ++f) {
        const double p = std::norm(r[f]);
        den += p;
        if (k2[f] == 0.0) continue;
        g.unflatten(f, idx);
        const double z = g.freqs(2)[idx[2]];
        num += z * z / k2[f] * p;
    }
    return den > 0.0 ? num / den : 0.0;
}

double blowup_time_bound(const PhysicalParams& params) {
    params.validate();
    const double w = params.min_omega();
    if (!(w > 0.0)) throw ValidationError("blow-up time bound unavailable: min omega = 0");
    return pi / (2.0 * w);
}

AuditReport virial_audit(const ObservableSeries& series, const PhysicalParams& params, double E, double delta,
                         double rel_tolerance) {
    params.validate();
    const double w = params.min_omega();
    if (!(w > 0.0)) throw ValidationError("virial_audit: needs min omega > 0");
    if (series.size() < 2) throw ValidationError("virial_audit: insufficient sampling (fewer than 2 samples)");
    const auto& recs = series.records();
    const double t0 = recs.front().t;
    const double period = 2.0 * pi / (2.0 * w);
    const double max_gap = period / 5.0;
    const double window = std::min(recs.back().t - t0, pi / (2.0 * w));

    AuditReport rep;
    rep.window_end = t0 + window;
    rep.source = 6.0 * E - delta;
    const double y0 = recs.front().y, yd0 = recs.front().ydot;
    const double scale = std::abs(y0) + std::abs(yd0) / (2.0 * w) + std::abs(6.0 * E) / (4.0 * w * w);
    rep.tolerance = rel_tolerance * std::max(scale, 1e-300);
    rep.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const double tau = recs[i].t - t0;
        if (tau > window * (1.0 + 1e-12)) break;
        if (i > 0 && recs[i].t - recs[i - 1].t > max_gap * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "virial_audit: insufficient sampling (gap " << recs[i].t - recs[i - 1].t << " > " << max_gap
               << ", need 5 samples per period " << period << ")";
            throw ValidationError(os.str());
        }
        const double c = std::cos(2.0 * w * tau), s = std::sin(2.0 * w * tau);
        const double envelope = y0 * c + yd0 * s / (2.0 * w) + rep.source * (1.0 - c) / (4.0 * w * w);
        const double viol = recs[i].y - envelope;
        ++rep.samples_checked;
        if (viol > rep.max_violation) {
            rep.max_violation = viol;
            rep.t_of_max = recs[i].t;
        }
    }
    rep.passed = rep.max_violation <= rep.tolerance;
    return rep;
}

}  // namespace dgpe
