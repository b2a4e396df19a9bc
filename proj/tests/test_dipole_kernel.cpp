#include "dgpe/dipole_kernel.hpp"
#include "dgpe/errors.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/expint.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace dgpe;
using std::numbers::pi;

namespace {

// Closed forms of the effective symbols for isotropic transverse confinement,
// from integrating (4pi/3)(3 z^2/(z^2+s^2) - 1) against the Gaussian weight
// exp(-s^2/(4 w)) in polar coordinates (1D target) or along a line (2D target).
double k1_closed(double z, double w) {
    const double a = 1.0 / (4.0 * w);
    const double q = a * z * z;
    const double g = q == 0.0 ? 0.0 : 1.5 * z * z * std::exp(q) * boost::math::expint(1, q);
    return (4.0 * pi / 3.0) * 2.0 * pi * (g - 1.0 / (2.0 * a)) / (4.0 * pi * pi);
}

double k2_closed(double rho, double w) {
    const double c = rho / (2.0 * std::sqrt(w));
    const double i0 = 2.0 * std::sqrt(pi * w);
    const double i2 =
        2.0 * std::sqrt(w) * (std::sqrt(pi) - (c == 0.0 ? 0.0 : pi * c * std::exp(c * c) * boost::math::erfc(c)));
    return (4.0 * pi / 3.0) * (3.0 * i2 - i0) / (2.0 * pi);
}

// Trapezoid rule over the transverse plane: spectrally accurate for the
// analytic, Gaussian-damped integrand when z != 0.
double k1_trapezoid(double z, double w1, double w2) {
    const double h = 0.05, lim = 30.0;
    double s = 0.0;
    for (double a = -lim; a <= lim; a += h)
        for (double b = -lim; b <= lim; b += h)
            s += symbol3d({a, b, z}) * std::exp(-a * a / (4 * w1) - b * b / (4 * w2));
    return s * h * h / (4 * pi * pi);
}

}  // namespace

TEST_CASE("analytic symbol values") {
    CHECK(symbol3d({0, 0, 1}) == doctest::Approx(8 * pi / 3).epsilon(1e-15));
    CHECK(symbol3d({1, 0, 0}) == doctest::Approx(-4 * pi / 3).epsilon(1e-15));
    CHECK(std::abs(symbol3d({1, 1, 1})) < 1e-15);
    CHECK(symbol3d({0, 0, 0}) == 0.0);
    CHECK(symbol3d({0, 0, 3}) == symbol3d({0, 0, 0.001}));
}

TEST_CASE("radial Bessel identity") {
    CHECK(spherical_j1_over_r(1e-8) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // series and closed form agree across the switch-over
    for (double r : {5e-4, 2e-3, 0.1, 1.0}) {
        const double closed = (std::sin(r) / (r * r) - std::cos(r) / r) / r;
        CHECK(spherical_j1_over_r(r) == doctest::Approx(closed).epsilon(r < 1e-2 ? 1e-6 : 1e-12));
    }
    CHECK(std::abs(bessel_radial_check(1e4, 1e-6) - 1.0 / 3.0) < 1e-6);
    CHECK(std::abs(bessel_radial_check(1e2, 1e-3) - 1.0 / 3.0) < 1e-3);
    CHECK_THROWS_AS(bessel_radial_check(50.0, 1e-3), ValidationError);
    CHECK_THROWS_AS(bessel_radial_check(1e2, 1e-6), NumericalError);

    // independent oracle: Gauss-Kronrod of j2(r)/r in closed form over [1e-3, 1e2]
    auto j2r = [](double r) {
        return ((3.0 / (r * r) - 1.0) * std::sin(r) / r - 3.0 * std::cos(r) / (r * r)) / r;
    };
    double oracle = 0.0;
    for (double a = 1e-3; a < 100.0; a += 1.0)
        oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(j2r, a, std::min(a + 1.0, 100.0));
    oracle += 1e-3 * 1e-3 / 30.0;  // j2(r)/r ~ r/15 near 0
    CHECK(bessel_radial_check(1e2, 1e-3) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("effective 1D symbol") {
    CHECK(symbol1d_effective(0.0, 1.0, 1.0) == doctest::Approx(-4.0 / 3.0).epsilon(1e-9));
    CHECK(symbol1d_effective(1e3, 1.0, 1.0) == doctest::Approx(8.0 / 3.0).epsilon(1e-4));
    for (double z : {0.05, 0.3, 1.0, 2.5, 7.0, 30.0}) {
        CHECK(symbol1d_effective(z, 1.0, 1.0) == doctest::Approx(k1_closed(z, 1.0)).epsilon(1e-9));
        CHECK(symbol1d_effective(z, 2.0, 2.0) == doctest::Approx(k1_closed(z, 2.0)).epsilon(1e-9));
        CHECK(symbol1d_effective(-z, 1.0, 1.0) == symbol1d_effective(z, 1.0, 1.0));
    }
    // anisotropic transverse trap against a brute-force planar sum
    for (double z : {0.7, 2.0}) {
        CHECK(symbol1d_effective(z, 1.0, 2.5) == doctest::Approx(k1_trapezoid(z, 1.0, 2.5)).epsilon(1e-8));
    }
    // the value at 0 scales like sqrt(w1 w2)
    CHECK(symbol1d_effective(0.0, 1.0, 4.0) == doctest::Approx(-8.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("effective 2D symbol") {
    CHECK(symbol2d_effective(0.0, 0.0, 1.0) == doctest::Approx(8 * pi / 3 / std::sqrt(pi)).epsilon(1e-9));
    CHECK(symbol2d_effective(1e3, 0.0, 1.0) == doctest::Approx(-4 * pi / 3 / std::sqrt(pi)).epsilon(1e-4));
    for (double r : {0.1, 0.8, 2.0, 5.0, 20.0}) {
        CHECK(symbol2d_effective(r, 0.0, 1.0) == doctest::Approx(k2_closed(r, 1.0)).epsilon(1e-9));
        CHECK(symbol2d_effective(r, 0.0, 3.0) == doctest::Approx(k2_closed(r, 3.0)).epsilon(1e-9));
        const double th = 0.37 * r;
        CHECK(symbol2d_effective(r * std::cos(th), r * std::sin(th), 1.0) ==
              doctest::Approx(symbol2d_effective(r, 0.0, 1.0)).epsilon(1e-10));
    }
}

TEST_CASE("build_symbol tabulation") {
    auto g3 = SpectralGrid::make(3, {10, 12, 14}, {16, 16, 16});
    auto s3 = build_symbol(g3, KernelProvenance::analytic3d());
    CHECK(s3.values()[0] == 0.0);
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < g3->size(); ++f) {
        CHECK(s3.values()[f] >= -4 * pi / 3 - 1e-14);
        CHECK(s3.values()[f] <= 8 * pi / 3 + 1e-14);
        g3->unflatten(f, idx);
        bool nyquist = false;
        std::size_t mirror = 0;
        for (int a = 0; a < 3; ++a) {
            const int n = g3->points(a);
            nyquist |= idx[a] == n / 2;
            mirror += static_cast<std::size_t>((n - idx[a]) % n) * g3->stride(a);
        }
        if (!nyquist) CHECK(s3.values()[f] == s3.values()[mirror]);
    }

    auto g1 = SpectralGrid::make(1, {20.0}, {32});
    auto s1 = build_symbol(g1, KernelProvenance::effective1d(1.0, 1.0));
    CHECK(s1.values()[0] == doctest::Approx(-4.0 / 3.0).epsilon(1e-9));
    for (int i = 1; i < 16; ++i) CHECK(s1.values()[i] == doctest::Approx(s1.values()[32 - i]).epsilon(1e-13));

    auto g2 = SpectralGrid::make(2, {20.0, 20.0}, {16, 16});
    auto s2 = build_symbol(g2, KernelProvenance::effective2d(1.0));
    CHECK(s2.values()[0] == doctest::Approx(8 * pi / 3 / std::sqrt(pi)).epsilon(1e-9));
    CHECK(s2.values()[3 * 16 + 5] == doctest::Approx(s2.values()[5 * 16 + 3]).epsilon(1e-13));

    CHECK_THROWS_AS(build_symbol(g1, KernelProvenance::analytic3d()), ValidationError);
    CHECK_THROWS_AS(build_symbol(g3, KernelProvenance::effective1d(1, 1)), ValidationError);
    CHECK_THROWS_AS(build_symbol(g1, KernelProvenance::effective1d(0, 1)), ValidationError);
}

TEST_CASE("symbol cache file") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dgpe_cache_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    setenv("GPE_CACHE_DIR", dir.c_str(), 1);

    auto g = SpectralGrid::make(1, {17.0}, {24});
    const auto prov = KernelProvenance::effective1d(1.5, 0.5);
    CHECK(symbol_cache_header(*g, prov) == "GPEK1 v1 1 24 1.5 0.5");
    auto sym = build_symbol(g, prov);
    const fs::path file = dir / symbol_cache_key(*g, prov);
    REQUIRE(fs::exists(file));

    std::ifstream is(file, std::ios::binary);
    std::string header;
    std::getline(is, header);
    CHECK(header == "GPEK1 v1 1 24 1.5 0.5");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
    REQUIRE(bytes.size() == 24 * 8);
    for (int i = 0; i < 24; ++i) {
        std::uint64_t bits = 0;
        for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[8 * i + b];
        CHECK(std::bit_cast<double>(bits) == sym.values()[i]);
    }

    std::vector<double> back;
    CHECK(read_symbol_cache(file.string(), *g, prov, back));
    CHECK(back == sym.values());
    CHECK_FALSE(read_symbol_cache(file.string(), *g, KernelProvenance::effective1d(1.5, 0.6), back));
    {
        std::ofstream os(file, std::ios::binary | std::ios::app);
        os << 'x';
    }
    CHECK_FALSE(read_symbol_cache(file.string(), *g, prov, back));

    // different extents give a different file
    auto g2 = SpectralGrid::make(1, {18.0}, {24});
    CHECK(symbol_cache_key(*g2, prov) != symbol_cache_key(*g, prov));
    unsetenv("GPE_CACHE_DIR");
    fs::remove_all(dir);
}

TEST_CASE("apply_kernel") {
    auto g = SpectralGrid::make(3, {16, 16, 16}, {32, 32, 32});
    auto sym = build_symbol(g, KernelProvenance::analytic3d());
    std::vector<double> zero(g->size(), 0.0);
    for (double v : apply_kernel(sym, zero)) CHECK(v == 0.0);

    std::vector<double> iso(g->size()), elong(g->size()), other(g->size());
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < g->size(); ++f) {
        g->unflatten(f, idx);
        const double x = g->coords(0)[idx[0]], y = g->coords(1)[idx[1]], z = g->coords(2)[idx[2]];
        iso[f] = std::exp(-(x * x + y * y + z * z));
        elong[f] = std::exp(-(x * x + y * y) / 0.5 - z * z / 8.0);
        other[f] = std::exp(-((x - 1) * (x - 1) + y * y + 2 * z * z));
    }
    auto pairing = [&](const std::vector<double>& rho) {
        const auto phi = apply_kernel(sym, rho);
        double s = 0.0, n = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            s += phi[i] * rho[i];
            n += rho[i] * rho[i];
        }
        return std::pair{s * g->cell_volume(), n * g->cell_volume()};
    };
    const auto [p_iso, n_iso] = pairing(iso);
    CHECK(std::abs(p_iso) <= 1e-8 * n_iso);

    // sigma_3 = 4 sigma_perp: oracle is the continuum pairing
    // (2pi)^-3 int K_hat |rho_hat|^2 in spherical coordinates.
    const auto [p_el, n_el] = pairing(elong);
    CHECK(p_el < 0.0);
    {
        // rho = exp(-|x_perp|^2/0.5 - z^2/8): rho_hat = pi^{3/2} sqrt(0.5*0.5*8) exp(-0.125 k_perp^2 - 2 k_z^2)
        const double amp2 = pi * pi * pi * 2.0;
        auto inner = [&](double u) {  // u = cos(theta)
            const double a = 0.25 * (1 - u * u) + 4.0 * u * u;  // |rho_hat|^2 = amp2 exp(-a k^2)
            const double radial = std::sqrt(pi) / (4.0 * std::pow(a, 1.5));
            return (4 * pi / 3) * (3 * u * u - 1) * radial;
        };
        const double ang = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, -1.0, 1.0);
        const double oracle = amp2 * 2 * pi * ang / std::pow(2 * pi, 3);
        // the lattice sum carries the box truncation and the cell at xi = 0
        CHECK(p_el == doctest::Approx(oracle).epsilon(1e-2));
    }

    // linearity
    std::vector<double> mix(g->size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0 * iso[i] - 0.5 * other[i];
    const auto pm = apply_kernel(sym, mix), pa = apply_kernel(sym, iso), pb = apply_kernel(sym, other);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
        worst = std::max(worst, std::abs(pm[i] - (2.0 * pa[i] - 0.5 * pb[i])));
        scale = std::max(scale, std::abs(pm[i]));
    }
    CHECK(worst < 1e-12 * scale);

    CHECK_THROWS_AS(apply_kernel(sym, std::vector<double>(10)), ValidationError);

    // an odd symbol yields an imaginary potential and is rejected
    std::vector<double> odd(g->size());
    for (std::size_t f = 0; f < g->size(); ++f) {
        g->unflatten(f, idx);
        odd[f] = g->freqs(2)[idx[2]];
    }
    KernelSymbol bad(g, odd, KernelProvenance::analytic3d());
    CHECK_THROWS_AS(apply_kernel(bad, other), NumericalError);
}
