#pragma once

#include "dgpe/spectral_grid.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace dgpe {

/// Which multiplier a KernelSymbol tabulates.
///  - Analytic3D: the dipolar symbol with dipole axis (0,0,1).
///  - Effective1D: the 3D symbol averaged against the transverse ground-state
///    density of a trap (omega_1, omega_2); lives on a grid along x_3.
///  - Effective2D: the 3D symbol averaged against the longitudinal ground-state
///    density of a trap omega_3; lives on a grid in (x_1, x_2).
enum class KernelKind { Analytic3D, Effective1D, Effective2D };

struct KernelProvenance {
    KernelKind kind = KernelKind::Analytic3D;
    std::vector<double> omegas;  // {} | {w1, w2} | {w3}

    static KernelProvenance analytic3d() { return {KernelKind::Analytic3D, {}}; }
    static KernelProvenance effective1d(double w1, double w2) { return {KernelKind::Effective1D, {w1, w2}}; }
    static KernelProvenance effective2d(double w3) { return {KernelKind::Effective2D, {w3}}; }

    int dim() const { return kind == KernelKind::Analytic3D ? 3 : (kind == KernelKind::Effective1D ? 1 : 2); }
    std::string describe() const;
};

/// Adaptive Gauss-Kronrod settings for the effective symbols.
struct QuadratureSpec {
    double tol = 1e-11;   // relative error target
    unsigned max_depth = 18;
};

/// Real Fourier multiplier sampled on a grid's frequency lattice (FFT order).
class KernelSymbol {
public:
    KernelSymbol(GridPtr grid, std::vector<double> values, KernelProvenance provenance);

    const GridPtr& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const KernelProvenance& provenance() const { return provenance_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
    KernelProvenance provenance_;
};

/// K_hat(xi) = (4pi/3) (2 xi_3^2 - xi_1^2 - xi_2^2) / |xi|^2, and 0 at xi = 0.
double symbol3d(const std::array<double, 3>& xi);

/// (1/(2pi)^2) * integral over (xi_1, xi_2) of K_hat(xi_1, xi_2, xi_3) times the
/// Fourier transform of chi_0^2, chi_0 the normalized ground state of the 2D
/// oscillator with frequencies (w1, w2).
double symbol1d_effective(double xi3, double w1, double w2, const QuadratureSpec& quad = {});

/// (1/2pi) * integral over xi_3 of K_hat(xi_1, xi_2, xi_3) times the Fourier
/// transform of chi_0^2, chi_0 the normalized 1D oscillator ground state of w3.
double symbol2d_effective(double xi1, double xi2, double w3, const QuadratureSpec& quad = {});

/// j_1(R)/R with a series branch for small R; tends to 1/3 as R -> 0.
double spherical_j1_over_r(double r);

/// Integral of j_2(r)/r over [0, r_max] by adaptive quadrature. Throws
/// NumericalError unless the quadrature error plus the truncated tail
/// (bounded by 1/r_max^2) is below tol. The exact value over [0, inf) is 1/3.
double bessel_radial_check(double r_max, double tol);

/// Tabulates a symbol on the grid's frequency lattice. Effective symbols are
/// memoized in-process and, when GPE_CACHE_DIR is set, in a binary cache file.
KernelSymbol build_symbol(const GridPtr& grid, const KernelProvenance& provenance, const QuadratureSpec& quad = {});

/// Phi = K * rho evaluated as the inverse transform of K_hat * rho_hat.
std::vector<double> apply_kernel(const KernelSymbol& symbol, std::span<const double> density);

/// Allocation-free variant for inner loops. `scratch` must hold grid.size() entries.
void apply_kernel_into(const KernelSymbol& symbol, std::span<const double> density, std::span<double> potential,
                       std::span<Complex> scratch);

/// Cache file name for a symbol, keyed by a hash of its header and the grid extents.
std::string symbol_cache_key(const SpectralGrid& grid, const KernelProvenance& provenance);
/// Header line written at the top of a symbol cache file.
std::string symbol_cache_header(const SpectralGrid& grid, const KernelProvenance& provenance);

void write_symbol_cache(const std::string& path, const KernelSymbol& symbol);
/// Returns false if the file is missing or its header/size does not match.
bool read_symbol_cache(const std::string& path, const SpectralGrid& grid, const KernelProvenance& provenance,
                       std::vector<double>& values);

}  // namespace dgpe
