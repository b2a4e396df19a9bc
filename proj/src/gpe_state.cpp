#include "dgpe/gpe_state.hpp"

#include "dgpe/binary_io.hpp"
#include "dgpe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace dgpe {

using std::numbers::pi;

WaveField::WaveField(GridPtr grid, std::vector<Complex> values, double t)
    : grid_(std::move(grid)), values_(std::move(values)), t_(t) {
    if (!grid_) throw ValidationError("wave field needs a grid");
    if (values_.size() != grid_->size())
        throw ValidationError("wave field has " + std::to_string(values_.size()) + " values, grid has " +
                              std::to_string(grid_->size()) + " points");
}

WaveField::WaveField(GridPtr grid, double t) : grid_(std::move(grid)), t_(t) {
    if (!grid_) throw ValidationError("wave field needs a grid");
    values_.assign(grid_->size(), Complex{});
}

bool WaveField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

double PhysicalParams::min_omega() const { return *std::min_element(omega.begin(), omega.end()); }

double PhysicalParams::stability_margin() const { return lambda1 - 4.0 * pi / 3.0 * lambda2; }

bool PhysicalParams::stable_regime() const { return lambda2 >= 0.0 && stability_margin() >= 0.0; }

void PhysicalParams::validate() const {
    if (dim < 1 || dim > 3) throw ValidationError("params: dim must be 1, 2 or 3");
    if (omega.size() != static_cast<std::size_t>(dim))
        throw ValidationError("params: expected " + std::to_string(dim) + " trap frequencies, got " +
                              std::to_string(omega.size()));
    for (double w : omega)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("params: trap frequencies must be >= 0");
    if (!std::isfinite(lambda1) || !std::isfinite(lambda2)) throw ValidationError("params: couplings must be finite");
}

void PhysicalParams::validate_for(const SpectralGrid& grid) const {
    validate();
    if (grid.dim() != dim)
        throw ValidationError("params are " + std::to_string(dim) + "D but grid is " + std::to_string(grid.dim()) +
                              "D");
}

std::vector<double> trap_potential(const SpectralGrid& grid, const PhysicalParams& params) {
    params.validate_for(grid);
    std::vector<double> v(grid.size());
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < grid.size(); ++f) {
        grid.unflatten(f, idx);
        double s = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            const double x = grid.coords(a)[idx[a]];
            s += params.omega[a] * params.omega[a] * x * x;
        }
        v[f] = 0.5 * s;
    }
    return v;
}

namespace {

void check_symbol(const WaveField& psi, const PhysicalParams& params, const KernelSymbol* symbol) {
    params.validate_for(psi.g());
    if (symbol) {
        if (!symbol->grid()->same_shape(psi.g())) throw ValidationError("kernel symbol and field grids differ");
    } else if (params.lambda2 != 0.0) {
        throw ValidationError("lambda2 != 0 needs a kernel symbol");
    }
}

std::vector<double> density(const WaveField& psi) {
    std::vector<double> rho(psi.g().size());
    auto v = psi.values();
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(v[i]);
    return rho;
}

std::vector<Complex> density_spectrum(const WaveField& psi) {
    std::vector<Complex> r(psi.g().size());
    auto v = psi.values();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::norm(v[i]);
    psi.g().fft_forward(r);
    return r;
}

}  // namespace

double mass(const WaveField& psi) {
    double s = 0.0;
    for (const Complex& z : psi.values()) s += std::norm(z);
    return s * psi.g().cell_volume();
}

double gradient_norm_sq(const WaveField& psi) {
    const SpectralGrid& g = psi.g();
    std::vector<Complex> hat(psi.values().begin(), psi.values().end());
    g.fft_forward(hat);
    const auto& k2 = g.freq_norm_sq();
    double s = 0.0;
    for (std::size_t i = 0; i < hat.size(); ++i) s += k2[i] * std::norm(hat[i]);
    // Parseval for the unnormalized DFT: sum |u|^2 = (1/N) sum |DFT u|^2.
    return s * g.cell_volume() / static_cast<double>(g.size());
}

std::vector<Complex> spectral_derivative(const WaveField& psi, int axis) {
    const SpectralGrid& g = psi.g();
    if (axis < 0 || axis >= g.dim()) throw ValidationError("derivative axis out of range");
    std::vector<Complex> d(psi.values().begin(), psi.values().end());
    g.fft_forward(d);
    std::array<int, 3> idx{};
    const double inv_n = 1.0 / static_cast<double>(g.size());
    for (std::size_t f = 0; f < d.size(); ++f) {
        g.unflatten(f, idx);
        d[f] *= Complex(0.0, g.freqs(axis)[idx[axis]] * inv_n);
    }
    g.fft_backward(d);
    return d;
}

double l4_norm4(const WaveField& psi) {
    double s = 0.0;
    for (const Complex& z : psi.values()) s += std::norm(z) * std::norm(z);
    return s * psi.g().cell_volume();
}

double l4_norm4_spectral(const WaveField& psi) {
    const SpectralGrid& g = psi.g();
    const auto r = density_spectrum(psi);
    double s = 0.0;
    for (const Complex& z : r) s += std::norm(z);
    // rho_hat = dx^d * DFT(rho) up to a phase, so (2pi)^{-d} dxi^d dx^{2d} = dx^d / N.
    return s * g.cell_volume() / static_cast<double>(g.size());
}

double interaction_energy_spectral(const WaveField& psi, const PhysicalParams& params, const KernelSymbol* symbol) {
    check_symbol(psi, params, symbol);
    const SpectralGrid& g = psi.g();
    const auto r = density_spectrum(psi);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double k = symbol ? symbol->values()[i] : 0.0;
        s += (params.lambda1 + params.lambda2 * k) * std::norm(r[i]);
    }
    return 0.5 * s * g.cell_volume() / static_cast<double>(g.size());
}

EnergyBreakdown energy(const WaveField& psi, const PhysicalParams& params, const KernelSymbol* symbol) {
    check_symbol(psi, params, symbol);
    const SpectralGrid& g = psi.g();
    const double w = g.cell_volume();
    EnergyBreakdown e;
    e.kinetic = 0.5 * gradient_norm_sq(psi);

    const auto v = trap_potential(g, params);
    const auto rho = density(psi);
    double pot = 0.0, quart = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        pot += v[i] * rho[i];
        quart += rho[i] * rho[i];
    }
    e.potential = pot * w;
    e.cubic = 0.5 * params.lambda1 * quart * w;
    if (symbol && params.lambda2 != 0.0) {
        const auto phi = apply_kernel(*symbol, rho);
        double pair = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) pair += phi[i] * rho[i];
        e.dipolar = 0.5 * params.lambda2 * pair * w;
    }
    return e;
}

VarianceRate variance_and_rate(const WaveField& psi) {
    const SpectralGrid& g = psi.g();
    const auto& x2 = g.coord_norm_sq();
    auto v = psi.values();
    VarianceRate out;
    double y = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) y += x2[i] * std::norm(v[i]);
    out.y = y * g.cell_volume();

    std::vector<Complex> hat(v.begin(), v.end());
    g.fft_forward(hat);
    const double inv_n = 1.0 / static_cast<double>(g.size());
    std::vector<Complex> d(g.size());
    std::array<int, 3> idx{};
    double rate = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        for (std::size_t f = 0; f < d.size(); ++f) {
            g.unflatten(f, idx);
            d[f] = hat[f] * Complex(0.0, g.freqs(a)[idx[a]] * inv_n);
        }
        g.fft_backward(d);
        for (std::size_t f = 0; f < d.size(); ++f) {
            g.unflatten(f, idx);
            rate += g.coords(a)[idx[a]] * (std::conj(v[f]) * d[f]).imag();
        }
    }
    out.ydot = 2.0 * rate * g.cell_volume();
    return out;
}

double axis_moment(const WaveField& psi, int axis) {
    const SpectralGrid& g = psi.g();
    if (axis < 0 || axis >= g.dim()) throw ValidationError("moment axis out of range");
    auto v = psi.values();
    std::array<int, 3> idx{};
    double s = 0.0;
    for (std::size_t f = 0; f < v.size(); ++f) {
        g.unflatten(f, idx);
        const double x = g.coords(axis)[idx[axis]];
        s += x * x * std::norm(v[f]);
    }
    return s * g.cell_volume();
}

double max_abs(const WaveField& psi) {
    double m = 0.0;
    for (const Complex& z : psi.values()) m = std::max(m, std::abs(z));
    return m;
}

ObservableRecord observe(const WaveField& psi, const PhysicalParams& params, const KernelSymbol* symbol) {
    ObservableRecord r;
    r.t = psi.time();
    r.mass = mass(psi);
    r.energy = energy(psi, params, symbol);
    const auto vr = variance_and_rate(psi);
    r.y = vr.y;
    r.ydot = vr.ydot;
    r.max_psi = max_abs(psi);
    r.grad_sq = 2.0 * r.energy.kinetic;
    return r;
}

void ObservableSeries::push(const ObservableRecord& record) {
    if (!records_.empty() && !(record.t > records_.back().t))
        throw ValidationError("observable series times must be strictly increasing");
    records_.push_back(record);
}

namespace {

void put(std::ostream& os, double v, bool last = false) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << (last ? '\n' : ',');
}

}  // namespace

void ObservableSeries::write_csv(std::ostream& os) const {
    os << kCsvHeader << '\n';
    for (const auto& r : records_) {
        put(os, r.t);
        put(os, r.mass);
        put(os, r.energy.total());
        put(os, r.energy.kinetic);
        put(os, r.energy.potential);
        put(os, r.energy.cubic);
        put(os, r.energy.dipolar);
        put(os, r.y);
        put(os, r.ydot);
        put(os, r.max_psi);
        put(os, r.grad_sq, true);
    }
}

ObservableSeries ObservableSeries::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw ValidationError("observable CSV: bad header");
    ObservableSeries s;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                f.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError("observable CSV line " + std::to_string(lineno) + ": not a number");
            }
        }
        if (f.size() != 11) throw ValidationError("observable CSV line " + std::to_string(lineno) + ": 11 fields expected");
        ObservableRecord r;
        r.t = f[0];
        r.mass = f[1];
        r.energy = {f[3], f[4], f[5], f[6]};
        r.y = f[7];
        r.ydot = f[8];
        r.max_psi = f[9];
        r.grad_sq = f[10];
        s.push(r);
    }
    return s;
}

void write_snapshot(std::ostream& os, const WaveField& psi) {
    const SpectralGrid& g = psi.g();
    std::ostringstream h;
    h.precision(17);
    h << "GPEF v1 " << g.dim();
    for (int n : g.points()) h << ' ' << n;
    for (double l : g.extents()) h << ' ' << l;
    h << ' ' << psi.time();
    os << h.str() << '\n';
    auto v = psi.values();
    std::span<const double> flat(reinterpret_cast<const double*>(v.data()), 2 * v.size());
    binio::write_f64_le(os, flat);
}

void write_snapshot(const std::string& path, const WaveField& psi) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open snapshot for writing: " + path);
    write_snapshot(os, psi);
    if (!os) throw ValidationError("failed writing snapshot: " + path);
}

WaveField read_snapshot(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ValidationError("snapshot: missing header");
    std::istringstream h(header);
    std::string magic, version;
    int dim = 0;
    h >> magic >> version >> dim;
    if (magic != "GPEF" || version != "v1") throw ValidationError("snapshot: not a GPEF v1 file");
    if (dim < 1 || dim > 3) throw ValidationError("snapshot: bad dimension");
    std::vector<int> n(dim);
    std::vector<double> l(dim);
    double t = 0.0;
    for (int& x : n) h >> x;
    for (double& x : l) h >> x;
    h >> t;
    if (!h) throw ValidationError("snapshot: malformed header");
    auto grid = SpectralGrid::make(dim, l, n);
    std::vector<Complex> values(grid->size());
    std::span<double> flat(reinterpret_cast<double*>(values.data()), 2 * values.size());
    if (!binio::read_f64_le(is, flat)) throw ValidationError("snapshot: truncated payload");
    return WaveField(grid, std::move(values), t);
}

WaveField read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open snapshot: " + path);
    return read_snapshot(is);
}

}  // namespace dgpe
