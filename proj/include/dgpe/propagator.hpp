#pragma once

#include "dgpe/dipole_kernel.hpp"
#include "dgpe/gpe_state.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dgpe {

/// Second-order Strang splitting A(dt/2) B(dt) A(dt/2) for
///   i psi_t + 1/2 Lap psi = V psi + lambda1 |psi|^2 psi + lambda2 (K * |psi|^2) psi.
/// A is the exact free flow (psi_hat *= exp(-i h |xi|^2 / 2) over a time h),
/// B the exact pointwise phase exp(-i dt (V + lambda1 rho + lambda2 Phi)),
/// with Phi computed once from the entering density, which B leaves unchanged.
///
/// Holds precomputed phase tables for one (grid, params, symbol, dt); a negative
/// dt runs the flow backwards.
class StrangStepper {
public:
    StrangStepper(GridPtr grid, PhysicalParams params, const KernelSymbol* symbol, double dt);

    /// One full step of psi in place; advances psi's time by dt.
    void step(WaveField& psi);

    /// Fused stepping: runs `count` steps with the inner kinetic halves merged.
    /// Mathematically identical to `count` calls of step().
    void run(WaveField& psi, std::size_t count);
    /// Fused stepping that calls `stop` after every step, when the diagnostics
    /// below describe that step, and ends early once it returns true. Returns
    /// the number of steps taken.
    std::size_t run_until(WaveField& psi, std::size_t count, const std::function<bool()>& stop);

    double dt() const { return dt_; }

    /// Spectral diagnostics of the most recent kinetic substep: |psi_hat|^2 is
    /// invariant under it, so these describe the state at that substep.
    double last_grad_sq() const { return last_grad_sq_; }
    double last_top_octave_fraction() const { return last_tail_; }

private:
    void kinetic(WaveField& psi, const std::vector<Complex>& phase);
    void nonlinear(WaveField& psi);

    GridPtr grid_;
    PhysicalParams params_;
    const KernelSymbol* symbol_;
    double dt_;
    std::vector<Complex> half_phase_;
    std::vector<Complex> full_phase_;
    std::vector<double> potential_;
    std::vector<unsigned char> top_octave_;
    std::vector<double> rho_;
    std::vector<double> phi_;
    std::vector<Complex> scratch_;
    double last_grad_sq_ = 0.0;
    double last_tail_ = 0.0;
};

/// Single Strang step returning the new field. Builds a stepper each call;
/// use StrangStepper directly in loops.
WaveField strang_step(const WaveField& psi, double dt, const PhysicalParams& params, const KernelSymbol* symbol);

struct MonitorSpec {
    std::size_t stride = 10;          // steps between recorded samples
    double grad_factor = 1e4;         // collapse when grad_sq > grad_factor * initial grad_sq
    double grad_threshold = 0.0;      // absolute threshold; overrides grad_factor when > 0
    double spectral_tail = 1e-3;      // collapse when the top octave carries more than this fraction
    bool check_every_step = true;     // monitor at every step instead of only at samples
};

/// Early termination: the grid can no longer resolve the state. This is
/// under-resolution consistent with collapse, not a proof of blow-up.
struct CollapseReport {
    double t_stop = 0.0;
    std::size_t steps = 0;
    double grad_sq = 0.0;
    double grad_threshold = 0.0;
    double tail_fraction = 0.0;
    std::string reason;
};

struct EvolveResult {
    ObservableSeries series;
    WaveField final_state;
    std::optional<CollapseReport> collapse;
};

/// Steps psi0 to time psi0.time() + T with a fixed dt (adjusted to divide T
/// exactly), recording observables every monitor.stride steps and at the end.
EvolveResult evolve(const WaveField& psi0, const PhysicalParams& params, const KernelSymbol* symbol, double dt,
                    double T, const MonitorSpec& monitor = {});

struct Eigenstate {
    WaveField field;
    double mu = 0.0;
};

/// Product-Gaussian ground state of the linear oscillator with frequencies
/// omega, normalized on the grid; mu = sum_j omega_j / 2.
Eigenstate linear_eigenstate(const GridPtr& grid, const std::vector<double>& omega);

/// Warns when the field's top frequency octave holds more than 1e-6 of its
/// spectral mass, or when the box is narrower than 8 standard deviations of
/// |psi|^2 on some axis.
void check_resolution(const WaveField& psi);

}  // namespace dgpe
