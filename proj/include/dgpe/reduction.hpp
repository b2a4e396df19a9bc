#pragma once

#include "dgpe/dipole_kernel.hpp"
#include "dgpe/gpe_state.hpp"
#include "dgpe/propagator.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace dgpe {

/// Which reduced model: a line along the dipole axis (strong confinement in
/// x1, x2) or a plane perpendicular to it (strong confinement in x3).
enum class ReductionTarget { Line1D, Plane2D };

struct ReductionSetup {
    ReductionTarget target = ReductionTarget::Line1D;
    double eps = 0.1;
    std::vector<double> transverse_omega{1.0, 1.0};  // {w1, w2} for Line1D, {w3} for Plane2D
    std::vector<double> longitudinal_omega{1.0};     // {w3} for Line1D, {w1, w2} for Plane2D
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::optional<WaveField> u0;  // reduced initial modulation (1D or 2D)
    /// Permit parameters outside lambda1 >= (4pi/3) lambda2 >= 0. Exploration only.
    bool allow_unstable = false;

    int reduced_dim() const { return target == ReductionTarget::Line1D ? 1 : 2; }
    /// Ground-state energy of the transverse oscillator, half the sum of its frequencies.
    double mu0() const;
    /// Effective cubic coupling lambda1 * int chi_0^4.
    double kappa() const;
    KernelProvenance kernel_provenance() const;
    PhysicalParams reduced_params() const;
    void validate() const;
};

/// lambda1 * int chi_0^4 for the normalized transverse ground state:
/// lambda1 sqrt(w1 w2)/(2pi) for two frequencies, lambda1 sqrt(w3/(2pi)) for one.
double effective_coupling(double lambda1, const std::vector<double>& transverse_omega);

/// Normalized (on the lattice) transverse ground state: chi_0(x1, x2) on a 2D
/// grid, or chi_0(x3) on a 1D grid.
std::vector<double> transverse_ground_state(const SpectralGrid& grid, const std::vector<double>& omega);

/// Runs the reduced model with the effective coupling and effective kernel.
EvolveResult evolve_reduced(const ReductionSetup& setup, double dt, double T, const MonitorSpec& monitor = {});

struct RescaledTrajectory {
    GridPtr frame_grid;               // psi^eps frame grid, as passed in
    GridPtr physical_grid;            // grid the strongly confined 3D run used
    double dt = 0.0;                  // step actually used
    std::vector<WaveField> snapshots;  // psi^eps at each requested time, on frame_grid
};

/// Largest step that resolves exp(-i mu0 t / eps^2) with 20 samples per unit phase.
double stiff_step_bound(const ReductionSetup& setup);

/// Evolves the 3D equation with confinement w_perp/eps^2 in the physical frame
/// on the grid whose confined axes are shrunk by eps, using the ordinary 3D
/// dipolar symbol, and returns psi^eps(t, x_perp, x_par) = psi(t, eps x_perp, x_par)
/// on `frame_grid` (same point counts, unshrunk extents) at the requested times.
/// The initial state is chi_0 (x) u0. The step is min(dt, stiff_step_bound).
RescaledTrajectory evolve_rescaled_3d(const ReductionSetup& setup, const GridPtr& frame_grid, double dt,
                                      const std::vector<double>& sample_times);

/// Inner product with chi_0 over the confined directions at every point of
/// the remaining ones: the Pi_0 modulation profile of a 3D field.
WaveField ground_state_projection(const WaveField& psi3d, const std::vector<double>& transverse_omega,
                                  ReductionTarget target = ReductionTarget::Line1D);

struct ReductionSample {
    double t = 0.0;
    double error = 0.0;          // || psi^eps - e^{-i mu0 t/eps^2} chi_0 u(t) ||
    double excitation_sq = 0.0;  // || (1 - Pi_0) psi^eps ||^2
};

/// Runs both models from the same u0 and compares at the sample times. If
/// drop_fast_phase is set the e^{-i mu0 t/eps^2} factor is left out of the
/// comparison (diagnostic only).
std::vector<ReductionSample> reduction_error(const ReductionSetup& setup, const GridPtr& frame_grid, double dt,
                                             const std::vector<double>& sample_times, bool drop_fast_phase = false);

struct SweepRow {
    double eps = 0.0;
    double T = 0.0;
    double sup_err = 0.0;
    double slope_partner = 0.0;  // log-log slope against the previous row; NaN on the first
    double excitation_sq = 0.0;  // sup over samples
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double error_slope = 0.0;       // least-squares slope of log sup_err vs log eps
    double excitation_slope = 0.0;  // same for the excitation
};

/// Runs reduction_error for each eps concurrently; samples are taken at
/// `samples` evenly spaced times in (0, T].
SweepResult reduction_sweep(const ReductionSetup& base, const std::vector<double>& eps_list, const GridPtr& frame_grid,
                            double dt, double T, int samples);

void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

/// Least-squares slope of log|y| against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dgpe
