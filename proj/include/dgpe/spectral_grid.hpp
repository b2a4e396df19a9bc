#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace dgpe {

using Complex = std::complex<double>;

class SpectralGrid;
using GridPtr = std::shared_ptr<const SpectralGrid>;

/// Uniform periodic grid on the box prod_j [-L_j/2, L_j/2) with its discrete
/// frequency lattice xi_k = k * 2pi/L_j, k in {-N_j/2, ..., N_j/2 - 1}.
///
/// Arrays on the grid are row-major (last axis fastest). Frequency-space
/// arrays use FFT ordering: index i on an axis carries k = i for i < N/2 and
/// k = i - N otherwise, so the Nyquist mode k = -N/2 sits at i = N/2.
///
/// Grids are immutable after construction and shared through GridPtr. The
/// FFTW plans they own are only ever executed through the new-array interface,
/// which is safe to call concurrently.
class SpectralGrid {
public:
    static constexpr int kMinPoints = 8;

    static GridPtr make(int dim, std::vector<double> extents, std::vector<int> points);

    ~SpectralGrid();
    SpectralGrid(const SpectralGrid&) = delete;
    SpectralGrid& operator=(const SpectralGrid&) = delete;

    int dim() const { return dim_; }
    std::size_t size() const { return size_; }
    int points(int axis) const { return points_[axis]; }
    double extent(int axis) const { return extents_[axis]; }
    double spacing(int axis) const { return extents_[axis] / points_[axis]; }
    double freq_spacing(int axis) const;
    const std::vector<int>& points() const { return points_; }
    const std::vector<double>& extents() const { return extents_; }

    /// Delta x^d, the quadrature weight of one lattice point.
    double cell_volume() const;
    /// Delta xi^d.
    double freq_cell_volume() const;

    /// Node coordinates along one axis, x_i = (i - N/2) * dx.
    const std::vector<double>& coords(int axis) const { return coords_[axis]; }
    /// Lattice frequencies along one axis in FFT order.
    const std::vector<double>& freqs(int axis) const { return freqs_[axis]; }
    /// Signed integer mode number k of FFT-ordered index i.
    int mode_number(int axis, int i) const { return i < points_[axis] / 2 ? i : i - points_[axis]; }

    /// Row-major stride of an axis.
    std::size_t stride(int axis) const { return strides_[axis]; }

    /// |xi|^2 on the whole frequency lattice.
    const std::vector<double>& freq_norm_sq() const { return freq_norm_sq_; }
    /// |x|^2 on the whole spatial lattice.
    const std::vector<double>& coord_norm_sq() const { return coord_norm_sq_; }

    /// Fills `out` with the per-axis (multi-)index of a flat index.
    void unflatten(std::size_t flat, std::array<int, 3>& out) const;

    /// Unnormalized in-place DFTs (FFTW sign conventions: forward e^{-i}, backward e^{+i}).
    void fft_forward(std::span<Complex> data) const;
    void fft_backward(std::span<Complex> data) const;

    /// Same dimension, extents and point counts.
    bool same_shape(const SpectralGrid& other) const;

private:
    SpectralGrid(int dim, std::vector<double> extents, std::vector<int> points);

    int dim_;
    std::vector<double> extents_;
    std::vector<int> points_;
    std::size_t size_ = 1;
    std::array<std::size_t, 3> strides_{};
    std::vector<std::vector<double>> coords_;
    std::vector<std::vector<double>> freqs_;
    std::vector<double> freq_norm_sq_;
    std::vector<double> coord_norm_sq_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

/// Continuous-convention transform of lattice data:
///   u_hat(xi_k) = dx^d * sum_j u(x_j) e^{-i x_j . xi_k},
/// returned in FFT order.
std::vector<Complex> forward_transform(const SpectralGrid& grid, std::span<const Complex> values);

/// Inverse of forward_transform:
///   u(x_j) = (dxi / 2pi)^d * sum_k u_hat(xi_k) e^{+i x_j . xi_k}.
std::vector<Complex> inverse_transform(const SpectralGrid& grid, std::span<const Complex> spectrum);

/// Fraction of sum |u_hat|^2 carried by modes in the top frequency octave,
/// i.e. with |k_j| >= N_j/4 on at least one axis.
double top_octave_fraction(const SpectralGrid& grid, std::span<const Complex> spectrum);

}  // namespace dgpe
