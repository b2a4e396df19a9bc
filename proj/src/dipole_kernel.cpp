#include "dgpe/dipole_kernel.hpp"

#include "dgpe/binary_io.hpp"
#include "dgpe/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace dgpe {

using std::numbers::pi;

namespace {

constexpr double kFourPiThird = 4.0 * pi / 3.0;

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

double integrate_checked(const auto& f, double a, double b, const QuadratureSpec& quad, const char* what) {
    double err = 0.0, l1 = 0.0;
    const double v = GK::integrate(f, a, b, quad.max_depth, quad.tol, &err, &l1);
    if (!std::isfinite(v) || err > quad.tol * std::max(1.0, l1) * 10.0) {
        std::ostringstream os;
        os << what << ": quadrature did not converge (estimate " << v << ", error " << err << ")";
        throw NumericalError(os.str());
    }
    return v;
}

// Integral of (2q - s)/(s + q) e^{-s} over s in [0, inf), the radial part of
// the transverse average once r^2 is rescaled by the Gaussian width. The
// e^{-s} factor is below 1e-17 past s = 40.
double transverse_radial(double q, const QuadratureSpec& quad) {
    auto f = [q](double s) { return (2.0 * q - s) / (s + q) * std::exp(-s); };
    constexpr double kCut = 40.0;
    if (q > 0.0 && q < kCut) {
        return integrate_checked(f, 0.0, q, quad, "symbol1d_effective") +
               integrate_checked(f, q, kCut, quad, "symbol1d_effective");
    }
    if (q == 0.0) return -1.0 + std::exp(-kCut);  // integrand is exactly -e^{-s}
    return integrate_checked(f, 0.0, kCut, quad, "symbol1d_effective");
}

void check_omega(double w, const char* name) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError(std::string(name) + " must be positive");
}

}  // namespace

std::string KernelProvenance::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case KernelKind::Analytic3D: os << "Analytic3D"; break;
        case KernelKind::Effective1D: os << "Effective1D(" << omegas.at(0) << "," << omegas.at(1) << ")"; break;
        case KernelKind::Effective2D: os << "Effective2D(" << omegas.at(0) << ")"; break;
    }
    return os.str();
}

KernelSymbol::KernelSymbol(GridPtr grid, std::vector<double> values, KernelProvenance provenance)
    : grid_(std::move(grid)), values_(std::move(values)), provenance_(std::move(provenance)) {
    if (!grid_) throw ValidationError("kernel symbol needs a grid");
    if (values_.size() != grid_->size()) throw ValidationError("kernel symbol size does not match grid");
    if (provenance_.dim() != grid_->dim()) throw ValidationError("kernel provenance dimension does not match grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw NumericalError("kernel symbol has non-finite values");
}

double symbol3d(const std::array<double, 3>& xi) {
    const double perp = xi[0] * xi[0] + xi[1] * xi[1];
    const double par = xi[2] * xi[2];
    const double norm = perp + par;
    if (norm == 0.0) return 0.0;
    return kFourPiThird * (2.0 * par - perp) / norm;
}

double symbol1d_effective(double xi3, double w1, double w2, const QuadratureSpec& quad) {
    check_omega(w1, "omega_1");
    check_omega(w2, "omega_2");
    // F(chi_0^2)(xi) = exp(-xi_1^2/(4 w1) - xi_2^2/(4 w2)). In polar coordinates
    // the exponent is -a(theta) r^2; substituting s = a r^2 leaves
    //   (1/(2pi)^2) (4pi/3) * int_0^{2pi} transverse_radial(a z^2) / (2a) dtheta.
    const double z2 = xi3 * xi3;
    auto angular = [&](double theta) {
        const double c = std::cos(theta), s = std::sin(theta);
        const double a = c * c / (4.0 * w1) + s * s / (4.0 * w2);
        return transverse_radial(a * z2, quad) / (2.0 * a);
    };
    double angle_integral = 0.0;
    if (w1 == w2) {
        angle_integral = 2.0 * pi * angular(0.0);
    } else {
        // The integrand is pi/2-symmetric under reflections of (cos, sin).
        angle_integral = 4.0 * integrate_checked(angular, 0.0, pi / 2.0, quad, "symbol1d_effective");
    }
    return kFourPiThird * angle_integral / (4.0 * pi * pi);
}

double symbol2d_effective(double xi1, double xi2, double w3, const QuadratureSpec& quad) {
    check_omega(w3, "omega_3");
    // F(chi_0^2)(xi_3) = exp(-xi_3^2/(4 w3)); with xi_3 = 2 sqrt(w3) s the
    // weight becomes e^{-s^2}, negligible past s = 6.5.
    const double rho2 = xi1 * xi1 + xi2 * xi2;
    const double scale = 2.0 * std::sqrt(w3);
    auto f = [&](double s) {
        const double z = scale * s;
        return symbol3d({std::sqrt(rho2), 0.0, z}) * std::exp(-s * s);
    };
    constexpr double kCut = 6.5;
    const double knee = std::sqrt(rho2) / scale;
    double half = 0.0;
    if (knee > 0.0 && knee < kCut) {
        half = integrate_checked(f, 0.0, knee, quad, "symbol2d_effective") +
               integrate_checked(f, knee, kCut, quad, "symbol2d_effective");
    } else {
        half = integrate_checked(f, 0.0, kCut, quad, "symbol2d_effective");
    }
    return 2.0 * half * scale / (2.0 * pi);
}

double spherical_j1_over_r(double r) {
    if (std::abs(r) < 1e-3) {
        const double r2 = r * r;
        return 1.0 / 3.0 - r2 / 30.0 + r2 * r2 / 840.0;
    }
    return (std::sin(r) / (r * r) - std::cos(r) / r) / r;
}

double bessel_radial_check(double r_max, double tol) {
    if (!(r_max >= 100.0)) throw ValidationError("bessel_radial_check needs r_max >= 100");
    if (!(tol > 0.0)) throw ValidationError("bessel_radial_check needs a positive tolerance");
    // Near 0, j_2(r)/r = r/15 - r^3/210 + ...; integrate that piece in closed form.
    constexpr double kR = 1e-3;
    double total = kR * kR / 30.0 - kR * kR * kR * kR / 840.0;
    auto f = [](double r) { return boost::math::sph_bessel(2u, r) / r; };
    double err_sum = 0.0;
    // One panel per half period of the oscillation.
    double a = kR;
    for (long k = 1; a < r_max; ++k) {
        const double b = std::min(r_max, static_cast<double>(k) * pi);
        double err = 0.0;
        total += GK::integrate(f, a, b, 10, tol * 1e-3, &err);
        err_sum += err;
        a = b;
    }
    const double tail_bound = 1.0 / (r_max * r_max);
    if (!std::isfinite(total) || err_sum + tail_bound > tol) {
        std::ostringstream os;
        os << "bessel_radial_check: cannot reach tolerance " << tol << " (quadrature error " << err_sum
           << ", tail bound " << tail_bound << ")";
        throw NumericalError(os.str());
    }
    return total;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<double> tabulate(const SpectralGrid& grid, const KernelProvenance& prov, const QuadratureSpec& quad) {
    std::vector<double> values(grid.size());
    std::array<int, 3> idx{};
    switch (prov.kind) {
        case KernelKind::Analytic3D:
            for (std::size_t f = 0; f < grid.size(); ++f) {
                grid.unflatten(f, idx);
                values[f] = symbol3d({grid.freqs(0)[idx[0]], grid.freqs(1)[idx[1]], grid.freqs(2)[idx[2]]});
            }
            break;
        case KernelKind::Effective1D: {
            // Even in xi_3: evaluate once per |k|.
            std::map<int, double> by_mode;
            for (int i = 0; i < grid.points(0); ++i) {
                const int k = std::abs(grid.mode_number(0, i));
                auto it = by_mode.find(k);
                if (it == by_mode.end())
                    it = by_mode.emplace(k, symbol1d_effective(k * grid.freq_spacing(0), prov.omegas[0],
                                                               prov.omegas[1], quad))
                             .first;
                values[i] = it->second;
            }
            break;
        }
        case KernelKind::Effective2D: {
            // Depends on xi_1^2 + xi_2^2 only: evaluate once per (|k1|, |k2|) up to swap when spacings agree.
            std::map<std::pair<int, int>, double> by_mode;
            const bool square = grid.freq_spacing(0) == grid.freq_spacing(1);
            for (std::size_t f = 0; f < grid.size(); ++f) {
                grid.unflatten(f, idx);
                int k1 = std::abs(grid.mode_number(0, idx[0]));
                int k2 = std::abs(grid.mode_number(1, idx[1]));
                if (square && k1 > k2) std::swap(k1, k2);
                auto key = std::make_pair(k1, k2);
                auto it = by_mode.find(key);
                if (it == by_mode.end())
                    it = by_mode
                             .emplace(key, symbol2d_effective(k1 * grid.freq_spacing(0),
                                                              k2 * grid.freq_spacing(1), prov.omegas[0], quad))
                             .first;
                values[f] = it->second;
            }
            break;
        }
    }
    return values;
}

std::mutex& memo_mutex() {
    static std::mutex m;
    return m;
}

std::unordered_map<std::string, std::vector<double>>& memo() {
    static std::unordered_map<std::string, std::vector<double>> m;
    return m;
}

}  // namespace

std::string symbol_cache_header(const SpectralGrid& grid, const KernelProvenance& provenance) {
    std::ostringstream os;
    os.precision(17);
    os << "GPEK1 v1 " << grid.dim();
    for (int n : grid.points()) os << ' ' << n;
    for (double w : provenance.omegas) os << ' ' << w;
    return os.str();
}

std::string symbol_cache_key(const SpectralGrid& grid, const KernelProvenance& provenance) {
    std::ostringstream os;
    os.precision(17);
    os << symbol_cache_header(grid, provenance) << '|' << provenance.describe();
    for (double l : grid.extents()) os << ' ' << l;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
    return std::string("gpek1_") + buf + ".bin";
}

void write_symbol_cache(const std::string& path, const KernelSymbol& symbol) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw ValidationError("cannot write symbol cache " + tmp);
        os << symbol_cache_header(*symbol.grid(), symbol.provenance()) << '\n';
        binio::write_f64_le(os, symbol.values());
        if (!os) throw ValidationError("failed writing symbol cache " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

bool read_symbol_cache(const std::string& path, const SpectralGrid& grid, const KernelProvenance& provenance,
                       std::vector<double>& values) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    std::string header;
    if (!std::getline(is, header) || header != symbol_cache_header(grid, provenance)) return false;
    std::vector<double> tmp(grid.size());
    if (!binio::read_f64_le(is, tmp)) return false;
    if (is.peek() != std::char_traits<char>::eof()) return false;
    values = std::move(tmp);
    return true;
}

KernelSymbol build_symbol(const GridPtr& grid, const KernelProvenance& provenance, const QuadratureSpec& quad) {
    if (!grid) throw ValidationError("build_symbol needs a grid");
    if (provenance.dim() != grid->dim()) {
        throw ValidationError("kernel " + provenance.describe() + " needs a " + std::to_string(provenance.dim()) +
                              "D grid, got " + std::to_string(grid->dim()) + "D");
    }
    const std::size_t expected_omegas = provenance.kind == KernelKind::Analytic3D ? 0u
                                        : provenance.kind == KernelKind::Effective1D ? 2u
                                                                                    : 1u;
    if (provenance.omegas.size() != expected_omegas)
        throw ValidationError("kernel " + std::to_string(expected_omegas) + " trap frequencies expected");
    for (double w : provenance.omegas) check_omega(w, "effective kernel trap frequency");

    if (provenance.kind == KernelKind::Analytic3D)
        return KernelSymbol(grid, tabulate(*grid, provenance, quad), provenance);

    const std::string key = symbol_cache_key(*grid, provenance);
    {
        std::lock_guard lock(memo_mutex());
        if (auto it = memo().find(key); it != memo().end()) return KernelSymbol(grid, it->second, provenance);
    }
    std::vector<double> values;
    const char* dir = std::getenv("GPE_CACHE_DIR");
    std::string path;
    if (dir && *dir) {
        path = (std::filesystem::path(dir) / key).string();
        if (!read_symbol_cache(path, *grid, provenance, values)) values.clear();
    }
    if (values.empty()) {
        values = tabulate(*grid, provenance, quad);
        if (!path.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            try {
                write_symbol_cache(path, KernelSymbol(grid, values, provenance));
            } catch (const std::exception& e) {
                warn(std::string("symbol cache not written: ") + e.what());
            }
        }
    }
    {
        std::lock_guard lock(memo_mutex());
        memo().emplace(key, values);
    }
    return KernelSymbol(grid, std::move(values), provenance);
}

void apply_kernel_into(const KernelSymbol& symbol, std::span<const double> density, std::span<double> potential,
                       std::span<Complex> scratch) {
    const SpectralGrid& grid = *symbol.grid();
    const std::size_t n = grid.size();
    if (density.size() != n || potential.size() != n || scratch.size() != n)
        throw ValidationError("apply_kernel: density, potential and symbol must share a grid");
    for (std::size_t i = 0; i < n; ++i) scratch[i] = density[i];
    grid.fft_forward(scratch);
    const auto& k = symbol.values();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) scratch[i] *= k[i] * inv_n;
    grid.fft_backward(scratch);
    double im2 = 0.0, rho2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        potential[i] = scratch[i].real();
        im2 += scratch[i].imag() * scratch[i].imag();
        rho2 += density[i] * density[i];
    }
    if (std::sqrt(im2) > 1e-8 * std::sqrt(rho2)) {
        std::ostringstream os;
        os << "apply_kernel: imaginary residue " << std::sqrt(im2) << " exceeds 1e-8 of the density norm "
           << std::sqrt(rho2) << " (symbol not even?)";
        throw NumericalError(os.str());
    }
}

std::vector<double> apply_kernel(const KernelSymbol& symbol, std::span<const double> density) {
    const std::size_t n = symbol.grid()->size();
    if (density.size() != n) throw ValidationError("apply_kernel: density and symbol must share a grid");
    std::vector<double> phi(n);
    std::vector<Complex> scratch(n);
    apply_kernel_into(symbol, density, phi, scratch);
    return phi;
}

}  // namespace dgpe
