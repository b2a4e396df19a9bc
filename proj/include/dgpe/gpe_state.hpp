#pragma once

#include "dgpe/dipole_kernel.hpp"
#include "dgpe/spectral_grid.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dgpe {

/// Complex amplitudes of psi on a grid, row-major, plus the time they belong to.
class WaveField {
public:
    WaveField(GridPtr grid, std::vector<Complex> values, double t = 0.0);
    /// Zero field on the grid.
    explicit WaveField(GridPtr grid, double t = 0.0);

    const GridPtr& grid() const { return grid_; }
    const SpectralGrid& g() const { return *grid_; }
    std::span<Complex> values() { return values_; }
    std::span<const Complex> values() const { return values_; }
    std::vector<Complex>& data() { return values_; }
    double time() const { return t_; }
    void set_time(double t) { t_ = t; }

    bool all_finite() const;

private:
    GridPtr grid_;
    std::vector<Complex> values_;
    double t_ = 0.0;
};

/// Trap frequencies, couplings and the dipole axis convention n = (0,0,1).
struct PhysicalParams {
    int dim = 3;
    std::vector<double> omega{1.0, 1.0, 1.0};
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    /// min_j omega_j.
    double min_omega() const;
    /// lambda1 - (4pi/3) lambda2.
    double stability_margin() const;
    bool stable_regime() const;
    void validate() const;
    void validate_for(const SpectralGrid& grid) const;
};

/// V(x) = 1/2 sum_j omega_j^2 x_j^2 sampled on the grid.
std::vector<double> trap_potential(const SpectralGrid& grid, const PhysicalParams& params);

struct EnergyBreakdown {
    double kinetic = 0.0;
    double potential = 0.0;
    double cubic = 0.0;
    double dipolar = 0.0;
    double total() const { return kinetic + potential + cubic + dipolar; }
};

/// sum |psi|^2 dx^d.
double mass(const WaveField& psi);

/// Kinetic energy from the spectrum, potential and cubic terms by lattice
/// quadrature, dipolar term as (lambda2/2) sum Phi rho dx^d with Phi = K * rho.
/// `symbol` may be null only when lambda2 == 0.
EnergyBreakdown energy(const WaveField& psi, const PhysicalParams& params, const KernelSymbol* symbol);

/// ||grad psi||^2 from the spectrum.
double gradient_norm_sq(const WaveField& psi);

/// Spectral gradient component d psi / d x_axis.
std::vector<Complex> spectral_derivative(const WaveField& psi, int axis);

/// y = int |x|^2 |psi|^2 and its rate ydot = 2 Im int conj(psi) (x . grad psi).
struct VarianceRate {
    double y = 0.0;
    double ydot = 0.0;
};
VarianceRate variance_and_rate(const WaveField& psi);

/// int |x psi|^2 restricted to one axis.
double axis_moment(const WaveField& psi, int axis);

/// ||psi||_{L^4}^4 by lattice quadrature.
double l4_norm4(const WaveField& psi);
/// ||psi||_{L^4}^4 as (2pi)^{-d} sum |rho_hat|^2 dxi^d.
double l4_norm4_spectral(const WaveField& psi);
/// Interaction energy in the spectral form
///   1/(2 (2pi)^d) sum (lambda1 + lambda2 K_hat) |rho_hat|^2 dxi^d.
double interaction_energy_spectral(const WaveField& psi, const PhysicalParams& params, const KernelSymbol* symbol);

double max_abs(const WaveField& psi);

struct ObservableRecord {
    double t = 0.0;
    double mass = 0.0;
    EnergyBreakdown energy;
    double y = 0.0;
    double ydot = 0.0;
    double max_psi = 0.0;
    double grad_sq = 0.0;
};

/// Evaluates every observable of the record at psi's time.
ObservableRecord observe(const WaveField& psi, const PhysicalParams& params, const KernelSymbol* symbol);

/// Time series with strictly increasing t.
class ObservableSeries {
public:
    static constexpr const char* kCsvHeader = "t,mass,E,Ekin,Epot,Ecubic,Edip,y,ydot,maxpsi,gradsq";

    void push(const ObservableRecord& record);
    const std::vector<ObservableRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const ObservableRecord& front() const { return records_.front(); }
    const ObservableRecord& back() const { return records_.back(); }

    void write_csv(std::ostream& os) const;
    static ObservableSeries read_csv(std::istream& is);

private:
    std::vector<ObservableRecord> records_;
};

/// Binary snapshot: header line "GPEF v1 <dim> <N...> <L...> <t>", then
/// interleaved (re, im) little-endian doubles in lattice order.
void write_snapshot(const std::string& path, const WaveField& psi);
void write_snapshot(std::ostream& os, const WaveField& psi);
WaveField read_snapshot(const std::string& path);
WaveField read_snapshot(std::istream& is);

}  // namespace dgpe
