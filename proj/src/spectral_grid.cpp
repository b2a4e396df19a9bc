#include "dgpe/spectral_grid.hpp"

#include "dgpe/errors.hpp"

#include <fftw3.h>

#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

namespace dgpe {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::atomic<bool> g_warnings{true};

}  // namespace

void warn(const std::string& message) {
    if (g_warnings.load()) std::cerr << "[W] " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

struct SpectralGrid::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    // fallbacks for buffers without FFTW's SIMD alignment
    fftw_plan forward_unaligned = nullptr;
    fftw_plan backward_unaligned = nullptr;
};

GridPtr SpectralGrid::make(int dim, std::vector<double> extents, std::vector<int> points) {
    if (dim < 1 || dim > 3) throw ValidationError("grid dimension must be 1, 2 or 3");
    if (extents.size() != static_cast<std::size_t>(dim) || points.size() != static_cast<std::size_t>(dim)) {
        std::ostringstream os;
        os << "grid dimension mismatch: dim = " << dim << " but " << extents.size() << " extents and "
           << points.size() << " point counts given";
        throw ValidationError(os.str());
    }
    for (int a = 0; a < dim; ++a) {
        if (!(extents[a] > 0.0) || !std::isfinite(extents[a]))
            throw ValidationError("grid extent on axis " + std::to_string(a) + " must be positive and finite");
        if (points[a] % 2 != 0)
            throw ValidationError("grid point count on axis " + std::to_string(a) + " must be even, got " +
                                  std::to_string(points[a]));
        if (points[a] < kMinPoints)
            throw ValidationError("grid point count on axis " + std::to_string(a) + " must be >= " +
                                  std::to_string(kMinPoints));
    }
    std::size_t total = 1;
    for (int n : points) {
        if (total > std::numeric_limits<std::size_t>::max() / sizeof(Complex) / static_cast<std::size_t>(n))
            throw ValidationError("grid point count overflows the addressable field size");
        total *= static_cast<std::size_t>(n);
    }
    return GridPtr(new SpectralGrid(dim, std::move(extents), std::move(points)));
}

SpectralGrid::SpectralGrid(int dim, std::vector<double> extents, std::vector<int> points)
    : dim_(dim), extents_(std::move(extents)), points_(std::move(points)), plans_(std::make_unique<Plans>()) {
    for (int a = dim_ - 1; a >= 0; --a) {
        strides_[a] = size_;
        size_ *= static_cast<std::size_t>(points_[a]);
    }
    coords_.resize(dim_);
    freqs_.resize(dim_);
    for (int a = 0; a < dim_; ++a) {
        const int n = points_[a];
        const double dx = spacing(a);
        const double dxi = freq_spacing(a);
        coords_[a].resize(n);
        freqs_[a].resize(n);
        for (int i = 0; i < n; ++i) {
            coords_[a][i] = (i - n / 2) * dx;
            freqs_[a][i] = mode_number(a, i) * dxi;
        }
    }

    freq_norm_sq_.assign(size_, 0.0);
    coord_norm_sq_.assign(size_, 0.0);
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < size_; ++f) {
        unflatten(f, idx);
        double k2 = 0.0, x2 = 0.0;
        for (int a = 0; a < dim_; ++a) {
            k2 += freqs_[a][idx[a]] * freqs_[a][idx[a]];
            x2 += coords_[a][idx[a]] * coords_[a][idx[a]];
        }
        freq_norm_sq_[f] = k2;
        coord_norm_sq_[f] = x2;
    }

    std::vector<Complex> scratch(size_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_dft(dim_, points_.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft(dim_, points_.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    plans_->forward_unaligned = fftw_plan_dft(dim_, points_.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_->backward_unaligned = fftw_plan_dft(dim_, points_.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plans_->forward || !plans_->backward || !plans_->forward_unaligned || !plans_->backward_unaligned)
        throw NumericalError("FFTW failed to create a plan");
}

SpectralGrid::~SpectralGrid() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {plans_->forward, plans_->backward, plans_->forward_unaligned, plans_->backward_unaligned})
        if (p) fftw_destroy_plan(p);
}

double SpectralGrid::freq_spacing(int axis) const { return 2.0 * std::numbers::pi / extents_[axis]; }

double SpectralGrid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing(a);
    return v;
}

double SpectralGrid::freq_cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= freq_spacing(a);
    return v;
}

void SpectralGrid::unflatten(std::size_t flat, std::array<int, 3>& out) const {
    for (int a = 0; a < dim_; ++a) {
        out[a] = static_cast<int>(flat / strides_[a]);
        flat %= strides_[a];
    }
}

void SpectralGrid::fft_forward(std::span<Complex> data) const {
    if (data.size() != size_) throw ValidationError("field size does not match grid");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    const bool aligned = fftw_alignment_of(reinterpret_cast<double*>(p)) == 0;
    fftw_execute_dft(aligned ? plans_->forward : plans_->forward_unaligned, p, p);
}

void SpectralGrid::fft_backward(std::span<Complex> data) const {
    if (data.size() != size_) throw ValidationError("field size does not match grid");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    const bool aligned = fftw_alignment_of(reinterpret_cast<double*>(p)) == 0;
    fftw_execute_dft(aligned ? plans_->backward : plans_->backward_unaligned, p, p);
}

bool SpectralGrid::same_shape(const SpectralGrid& other) const {
    return dim_ == other.dim_ && points_ == other.points_ && extents_ == other.extents_;
}

namespace {

// (-1)^(k_1 + ... + k_d): the phase e^{i L/2 . xi_k} from the box offset.
double offset_sign(const SpectralGrid& grid, std::size_t flat) {
    std::array<int, 3> idx{};
    grid.unflatten(flat, idx);
    int parity = 0;
    for (int a = 0; a < grid.dim(); ++a) parity += grid.mode_number(a, idx[a]);
    return (parity % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace

std::vector<Complex> forward_transform(const SpectralGrid& grid, std::span<const Complex> values) {
    if (values.size() != grid.size()) throw ValidationError("field size does not match grid");
    std::vector<Complex> out(values.begin(), values.end());
    grid.fft_forward(out);
    const double w = grid.cell_volume();
    for (std::size_t f = 0; f < out.size(); ++f) out[f] *= w * offset_sign(grid, f);
    return out;
}

std::vector<Complex> inverse_transform(const SpectralGrid& grid, std::span<const Complex> spectrum) {
    if (spectrum.size() != grid.size()) throw ValidationError("spectrum size does not match grid");
    std::vector<Complex> out(spectrum.size());
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = spectrum[f] * offset_sign(grid, f);
    grid.fft_backward(out);
    const double w = grid.freq_cell_volume() / std::pow(2.0 * std::numbers::pi, grid.dim());
    for (auto& v : out) v *= w;
    return out;
}

double top_octave_fraction(const SpectralGrid& grid, std::span<const Complex> spectrum) {
    if (spectrum.size() != grid.size()) throw ValidationError("spectrum size does not match grid");
    double total = 0.0, top = 0.0;
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < spectrum.size(); ++f) {
        const double p = std::norm(spectrum[f]);
        total += p;
        grid.unflatten(f, idx);
        for (int a = 0; a < grid.dim(); ++a) {
            if (std::abs(grid.mode_number(a, idx[a])) >= grid.points(a) / 4) {
                top += p;
                break;
            }
        }
    }
    return total > 0.0 ? top / total : 0.0;
}

}  // namespace dgpe
