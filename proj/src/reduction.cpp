#include "dgpe/reduction.hpp"

#include "dgpe/errors.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace dgpe {

using std::numbers::pi;

double effective_coupling(double lambda1, const std::vector<double>& transverse_omega) {
    for (double w : transverse_omega)
        if (!(w > 0.0)) throw ValidationError("effective_coupling: transverse frequencies must be positive");
    if (transverse_omega.size() == 2)
        return lambda1 * std::sqrt(transverse_omega[0] * transverse_omega[1]) / (2.0 * pi);
    if (transverse_omega.size() == 1) return lambda1 * std::sqrt(transverse_omega[0] / (2.0 * pi));
    throw ValidationError("effective_coupling: one or two transverse frequencies expected");
}

double ReductionSetup::mu0() const {
    double s = 0.0;
    for (double w : transverse_omega) s += 0.5 * w;
    return s;
}

double ReductionSetup::kappa() const { return effective_coupling(lambda1, transverse_omega); }

KernelProvenance ReductionSetup::kernel_provenance() const {
    return target == ReductionTarget::Line1D
               ? KernelProvenance::effective1d(transverse_omega.at(0), transverse_omega.at(1))
               : KernelProvenance::effective2d(transverse_omega.at(0));
}

PhysicalParams ReductionSetup::reduced_params() const {
    PhysicalParams p;
    p.dim = reduced_dim();
    p.omega = longitudinal_omega;
    p.lambda1 = kappa();
    p.lambda2 = lambda2;
    return p;
}

void ReductionSetup::validate() const {
    const std::size_t nt = target == ReductionTarget::Line1D ? 2 : 1;
    if (transverse_omega.size() != nt || longitudinal_omega.size() != 3 - nt)
        throw ValidationError("reduction: wrong number of transverse/longitudinal trap frequencies");
    for (double w : transverse_omega)
        if (!(w > 0.0)) throw ValidationError("reduction: transverse frequencies must be positive");
    for (double w : longitudinal_omega)
        if (!(w >= 0.0)) throw ValidationError("reduction: longitudinal frequencies must be >= 0");
    if (!(eps > 0.0)) throw ValidationError("reduction: eps must be positive");
    if (!u0) throw ValidationError("reduction: initial modulation u0 missing");
    if (u0->g().dim() != reduced_dim()) throw ValidationError("reduction: u0 has the wrong dimension");
    const bool stable = lambda2 >= 0.0 && lambda1 - 4.0 * pi / 3.0 * lambda2 >= 0.0;
    if (!stable && !allow_unstable)
        throw ValidationError("reduction: parameters outside the stable regime lambda1 >= (4pi/3) lambda2 >= 0 "
                              "(set allow_unstable for exploration)");
}

std::vector<double> transverse_ground_state(const SpectralGrid& grid, const std::vector<double>& omega) {
    if (omega.size() != static_cast<std::size_t>(grid.dim()))
        throw ValidationError("transverse_ground_state: one frequency per axis expected");
    std::vector<double> chi(grid.size());
    std::array<int, 3> idx{};
    double norm = 0.0;
    for (std::size_t f = 0; f < chi.size(); ++f) {
        grid.unflatten(f, idx);
        double e = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            const double x = grid.coords(a)[idx[a]];
            e += omega[a] * x * x;
        }
        chi[f] = std::exp(-0.5 * e);
        norm += chi[f] * chi[f];
    }
    const double scale = 1.0 / std::sqrt(norm * grid.cell_volume());
    for (double& c : chi) c *= scale;
    return chi;
}

EvolveResult evolve_reduced(const ReductionSetup& setup, double dt, double T, const MonitorSpec& monitor) {
    setup.validate();
    const auto params = setup.reduced_params();
    std::optional<KernelSymbol> symbol;
    if (setup.lambda2 != 0.0) symbol = build_symbol(setup.u0->grid(), setup.kernel_provenance());
    return evolve(*setup.u0, params, symbol ? &*symbol : nullptr, dt, T, monitor);
}

namespace {

// Axes of a 3D grid that are confined (transverse) vs kept (longitudinal).
struct AxisSplit {
    std::vector<int> confined;
    std::vector<int> kept;
};

AxisSplit split_for(ReductionTarget target) {
    if (target == ReductionTarget::Line1D) return {{0, 1}, {2}};
    return {{2}, {0, 1}};
}

GridPtr subgrid(const SpectralGrid& g, const std::vector<int>& axes) {
    std::vector<double> l;
    std::vector<int> n;
    for (int a : axes) {
        l.push_back(g.extent(a));
        n.push_back(g.points(a));
    }
    return SpectralGrid::make(static_cast<int>(axes.size()), l, n);
}

// Flat index into the sub-lattices for one 3D flat index.
std::pair<std::size_t, std::size_t> split_index(const SpectralGrid& g, std::size_t flat, const AxisSplit& s) {
    std::array<int, 3> idx{};
    g.unflatten(flat, idx);
    std::size_t c = 0, k = 0;
    for (int a : s.confined) c = c * static_cast<std::size_t>(g.points(a)) + static_cast<std::size_t>(idx[a]);
    for (int a : s.kept) k = k * static_cast<std::size_t>(g.points(a)) + static_cast<std::size_t>(idx[a]);
    return {c, k};
}

void check_frame(const ReductionSetup& setup, const SpectralGrid& frame) {
    if (frame.dim() != 3) throw ValidationError("reduction: frame grid must be 3D");
    const auto split = split_for(setup.target);
    const SpectralGrid& u = setup.u0->g();
    for (std::size_t i = 0; i < split.kept.size(); ++i) {
        const int a = split.kept[i];
        if (u.points(static_cast<int>(i)) != frame.points(a) || u.extent(static_cast<int>(i)) != frame.extent(a))
            throw ValidationError("reduction: u0 grid does not match the frame grid's longitudinal axes");
    }
}

// Per-interval step counts and step sizes for sample times on a base step.
struct Schedule {
    std::vector<std::size_t> steps;
    std::vector<double> h;
};

Schedule schedule_for(const std::vector<double>& times, double dt) {
    Schedule s;
    double prev = 0.0;
    for (double t : times) {
        if (!(t > prev)) throw ValidationError("reduction: sample times must be positive and increasing");
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((t - prev) / dt - 1e-9)));
        s.steps.push_back(n);
        s.h.push_back((t - prev) / static_cast<double>(n));
        prev = t;
    }
    return s;
}

}  // namespace

double stiff_step_bound(const ReductionSetup& setup) { return setup.eps * setup.eps / (20.0 * setup.mu0()); }

RescaledTrajectory evolve_rescaled_3d(const ReductionSetup& setup, const GridPtr& frame_grid, double dt,
                                      const std::vector<double>& sample_times) {
    setup.validate();
    if (!frame_grid) throw ValidationError("reduction: frame grid missing");
    check_frame(setup, *frame_grid);
    if (!(dt > 0.0)) throw ValidationError("reduction: dt must be positive");

    const auto split = split_for(setup.target);
    const double eps = setup.eps;

    // psi(x) = psi^eps(x_perp / eps, x_par): shrink the confined extents by eps
    // and strengthen the confinement to w/eps^2. Point counts are unchanged, so
    // the lattice values of psi and psi^eps coincide.
    std::vector<double> ext = frame_grid->extents();
    PhysicalParams phys;
    phys.dim = 3;
    phys.omega.assign(3, 0.0);
    phys.lambda1 = setup.lambda1;
    phys.lambda2 = setup.lambda2;
    for (std::size_t i = 0; i < split.confined.size(); ++i) {
        const int a = split.confined[i];
        ext[a] *= eps;
        phys.omega[a] = setup.transverse_omega[i] / (eps * eps);
    }
    for (std::size_t i = 0; i < split.kept.size(); ++i) phys.omega[split.kept[i]] = setup.longitudinal_omega[i];
    auto physical = SpectralGrid::make(3, ext, frame_grid->points());

    // The symbol is homogeneous of degree 0, so at physical frequencies
    // (eta / eps, xi_par) it equals K_hat(eta, eps xi_par) in frame frequencies.
    std::optional<KernelSymbol> symbol;
    if (setup.lambda2 != 0.0) symbol = build_symbol(physical, KernelProvenance::analytic3d());

    const double bound = stiff_step_bound(setup);
    const double step = std::min(dt, bound);
    if (dt > bound) {
        std::ostringstream os;
        os << "rescaled 3D run: dt " << dt << " exceeds eps^2/(20 mu0) = " << bound << "; using " << bound;
        warn(os.str());
    }

    const auto conf_grid = subgrid(*frame_grid, split.confined);
    const auto chi = transverse_ground_state(*conf_grid, setup.transverse_omega);
    WaveField psi(physical);
    auto u = setup.u0->values();
    for (std::size_t f = 0; f < psi.g().size(); ++f) {
        const auto [c, k] = split_index(*frame_grid, f, split);
        psi.values()[f] = chi[c] * u[k];
    }

    RescaledTrajectory traj;
    traj.frame_grid = frame_grid;
    traj.physical_grid = physical;
    traj.dt = step;
    const auto sched = schedule_for(sample_times, step);
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        StrangStepper stepper(physical, phys, symbol ? &*symbol : nullptr, sched.h[i]);
        stepper.run(psi, sched.steps[i]);
        if (!psi.all_finite()) throw NumericalError("rescaled 3D run became non-finite");
        psi.set_time(sample_times[i]);
        traj.snapshots.emplace_back(frame_grid, psi.data(), sample_times[i]);
    }
    return traj;
}

WaveField ground_state_projection(const WaveField& psi3d, const std::vector<double>& transverse_omega,
                                  ReductionTarget target) {
    const SpectralGrid& g = psi3d.g();
    if (g.dim() != 3) throw ValidationError("ground_state_projection needs a 3D field");
    const auto split = split_for(target);
    if (transverse_omega.size() != split.confined.size())
        throw ValidationError("ground_state_projection: wrong number of transverse frequencies");
    const auto conf_grid = subgrid(g, split.confined);
    const auto kept_grid = subgrid(g, split.kept);
    const auto chi = transverse_ground_state(*conf_grid, transverse_omega);
    WaveField out(kept_grid, psi3d.time());
    const double w = conf_grid->cell_volume();
    auto v = psi3d.values();
    for (std::size_t f = 0; f < g.size(); ++f) {
        const auto [c, k] = split_index(g, f, split);
        out.values()[k] += v[f] * chi[c] * w;
    }
    return out;
}

std::vector<ReductionSample> reduction_error(const ReductionSetup& setup, const GridPtr& frame_grid, double dt,
                                             const std::vector<double>& sample_times, bool drop_fast_phase) {
    const auto traj = evolve_rescaled_3d(setup, frame_grid, dt, sample_times);

    const auto params = setup.reduced_params();
    std::optional<KernelSymbol> symbol;
    if (setup.lambda2 != 0.0) symbol = build_symbol(setup.u0->grid(), setup.kernel_provenance());
    const auto sched = schedule_for(sample_times, traj.dt);

    const auto split = split_for(setup.target);
    const auto conf_grid = subgrid(*frame_grid, split.confined);
    const auto chi = transverse_ground_state(*conf_grid, setup.transverse_omega);
    const double w = frame_grid->cell_volume();

    WaveField u = *setup.u0;
    u.set_time(0.0);
    std::vector<ReductionSample> out;
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        StrangStepper stepper(u.grid(), params, symbol ? &*symbol : nullptr, sched.h[i]);
        stepper.run(u, sched.steps[i]);
        const double t = sample_times[i];
        const Complex phase = drop_fast_phase ? Complex(1.0, 0.0)
                                              : std::polar(1.0, -setup.mu0() * t / (setup.eps * setup.eps));
        const WaveField& psi = traj.snapshots[i];
        auto pv = psi.values();
        auto uv = u.values();
        double err = 0.0;
        for (std::size_t f = 0; f < pv.size(); ++f) {
            const auto [c, k] = split_index(*frame_grid, f, split);
            err += std::norm(pv[f] - phase * chi[c] * uv[k]);
        }
        const double total = mass(psi);
        const double ground = mass(ground_state_projection(psi, setup.transverse_omega, setup.target));
        out.push_back({t, std::sqrt(err * w), std::max(0.0, total - ground)});
    }
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope: need >= 2 matching points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SweepResult reduction_sweep(const ReductionSetup& base, const std::vector<double>& eps_list, const GridPtr& frame_grid,
                            double dt, double T, int samples) {
    if (eps_list.empty()) throw ValidationError("reduction sweep: empty eps list");
    if (samples < 1) throw ValidationError("reduction sweep: need at least one sample");
    std::vector<double> times;
    for (int k = 1; k <= samples; ++k) times.push_back(T * k / samples);
    // Tabulate the effective symbol once before fanning out.
    if (base.lambda2 != 0.0) build_symbol(base.u0->grid(), base.kernel_provenance());

    std::vector<std::future<std::vector<ReductionSample>>> jobs;
    for (double e : eps_list) {
        ReductionSetup s = base;
        s.eps = e;
        jobs.push_back(std::async(std::launch::async, [s, frame_grid, dt, times] {
            return reduction_error(s, frame_grid, dt, times);
        }));
    }
    SweepResult res;
    std::vector<double> errs, excs;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto samples_out = jobs[i].get();
        SweepRow row;
        row.eps = eps_list[i];
        row.T = T;
        for (const auto& s : samples_out) {
            row.sup_err = std::max(row.sup_err, s.error);
            row.excitation_sq = std::max(row.excitation_sq, s.excitation_sq);
        }
        row.slope_partner = i == 0 ? std::numeric_limits<double>::quiet_NaN()
                                   : std::log(row.sup_err / res.rows.back().sup_err) /
                                         std::log(row.eps / res.rows.back().eps);
        res.rows.push_back(row);
        errs.push_back(row.sup_err);
        excs.push_back(row.excitation_sq);
    }
    if (eps_list.size() >= 2) {
        res.error_slope = loglog_slope(eps_list, errs);
        res.excitation_slope = loglog_slope(eps_list, excs);
    }
    return res;
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
    os << "epsilon,T,sup_err,slope_partner,excitation_sq\n";
    char buf[200];
    for (const auto& r : sweep.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.eps, r.T, r.sup_err, r.slope_partner,
                      r.excitation_sq);
        os << buf;
    }
}

}  // namespace dgpe
