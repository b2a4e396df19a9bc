#include "dgpe/propagator.hpp"

#include "dgpe/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace dgpe {

namespace {

// Written out so the product stays inline instead of going through the
// NaN-recovering library routine.
inline Complex mul(Complex a, Complex b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace

StrangStepper::StrangStepper(GridPtr grid, PhysicalParams params, const KernelSymbol* symbol, double dt)
    : grid_(std::move(grid)), params_(std::move(params)), symbol_(symbol), dt_(dt) {
    if (!grid_) throw ValidationError("stepper needs a grid");
    params_.validate_for(*grid_);
    if (!(dt != 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be finite and non-zero");
    if (symbol_) {
        if (!symbol_->grid()->same_shape(*grid_)) throw ValidationError("kernel symbol and stepper grids differ");
    } else if (params_.lambda2 != 0.0) {
        throw ValidationError("lambda2 != 0 needs a kernel symbol");
    }
    const std::size_t n = grid_->size();
    const auto& k2 = grid_->freq_norm_sq();
    const double inv_n = 1.0 / static_cast<double>(n);
    half_phase_.resize(n);
    full_phase_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // The 1/N of the unnormalized inverse DFT is folded into the phase.
        half_phase_[i] = std::polar(inv_n, -0.25 * dt_ * k2[i]);
        full_phase_[i] = std::polar(inv_n, -0.5 * dt_ * k2[i]);
    }
    potential_ = trap_potential(*grid_, params_);
    top_octave_.assign(n, 0);
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < n; ++f) {
        grid_->unflatten(f, idx);
        for (int a = 0; a < grid_->dim(); ++a)
            if (std::abs(grid_->mode_number(a, idx[a])) >= grid_->points(a) / 4) top_octave_[f] = 1;
    }
    rho_.resize(n);
    phi_.assign(n, 0.0);
    scratch_.resize(n);
}

void StrangStepper::kinetic(WaveField& psi, const std::vector<Complex>& phase) {
    auto v = psi.values();
    grid_->fft_forward(v);
    const auto& k2 = grid_->freq_norm_sq();
    double total = 0.0, top = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double p = std::norm(v[i]);
        total += p;
        grad += k2[i] * p;
        if (top_octave_[i]) top += p;
        v[i] = mul(v[i], phase[i]);
    }
    grid_->fft_backward(v);
    if (!std::isfinite(total)) throw NumericalError("non-finite state at t = " + std::to_string(psi.time()));
    last_tail_ = total > 0.0 ? top / total : 0.0;
    last_grad_sq_ = grad * grid_->cell_volume() / static_cast<double>(grid_->size());
}

void StrangStepper::nonlinear(WaveField& psi) {
    auto v = psi.values();
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) rho_[i] = std::norm(v[i]);
    if (symbol_ && params_.lambda2 != 0.0) apply_kernel_into(*symbol_, rho_, phi_, scratch_);
    const double l1 = params_.lambda1, l2 = params_.lambda2;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = potential_[i] + l1 * rho_[i] + l2 * phi_[i];
        v[i] = mul(v[i], std::polar(1.0, -dt_ * w));
    }
}

void StrangStepper::step(WaveField& psi) {
    if (!psi.grid()->same_shape(*grid_)) throw ValidationError("field and stepper grids differ");
    kinetic(psi, half_phase_);
    nonlinear(psi);
    kinetic(psi, half_phase_);
    psi.set_time(psi.time() + dt_);
}

void StrangStepper::run(WaveField& psi, std::size_t count) {
    run_until(psi, count, [] { return false; });
}

std::size_t StrangStepper::run_until(WaveField& psi, std::size_t count, const std::function<bool()>& stop) {
    if (count == 0) return 0;
    if (!psi.grid()->same_shape(*grid_)) throw ValidationError("field and stepper grids differ");
    kinetic(psi, half_phase_);
    std::size_t s = 0;
    while (s < count) {
        nonlinear(psi);
        ++s;
        if (s == count) {
            kinetic(psi, half_phase_);
            stop();
            break;
        }
        kinetic(psi, full_phase_);
        if (stop()) {
            // take back the half of the merged kinetic flow that belongs to the next step
            const auto& k2 = grid_->freq_norm_sq();
            const double inv_n = 1.0 / static_cast<double>(k2.size());
            std::vector<Complex> back(k2.size());
            for (std::size_t i = 0; i < k2.size(); ++i) back[i] = std::polar(inv_n, 0.25 * dt_ * k2[i]);
            kinetic(psi, back);
            break;
        }
    }
    psi.set_time(psi.time() + dt_ * static_cast<double>(s));
    return s;
}

WaveField strang_step(const WaveField& psi, double dt, const PhysicalParams& params, const KernelSymbol* symbol) {
    WaveField out = psi;
    StrangStepper stepper(psi.grid(), params, symbol, dt);
    stepper.step(out);
    return out;
}

EvolveResult evolve(const WaveField& psi0, const PhysicalParams& params, const KernelSymbol* symbol, double dt,
                    double T, const MonitorSpec& monitor) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("evolve: final time T must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("evolve: dt must be positive");
    if (monitor.stride == 0) throw ValidationError("evolve: monitor stride must be >= 1");
    if (!psi0.all_finite()) throw NumericalError("evolve: initial state is not finite");

    const auto steps = static_cast<std::size_t>(std::max<long long>(1, std::llround(T / dt)));
    const double dt_eff = T / static_cast<double>(steps);
    if (std::abs(dt_eff - dt) > 1e-12 * dt) {
        std::ostringstream os;
        os << "evolve: dt adjusted from " << dt << " to " << dt_eff << " to divide T = " << T;
        warn(os.str());
    }
    check_resolution(psi0);

    EvolveResult result{ObservableSeries{}, psi0, std::nullopt};
    WaveField& psi = result.final_state;
    const double t0 = psi0.time();
    const auto first = observe(psi, params, symbol);
    result.series.push(first);
    const double grad_limit = monitor.grad_threshold > 0.0 ? monitor.grad_threshold : monitor.grad_factor * first.grad_sq;

    StrangStepper stepper(psi.grid(), params, symbol, dt_eff);
    auto over_limit = [&] {
        return stepper.last_grad_sq() > grad_limit || stepper.last_top_octave_fraction() > monitor.spectral_tail;
    };

    std::size_t done = 0;
    while (done < steps) {
        const std::size_t chunk = std::min(monitor.stride, steps - done);
        bool hit = false;
        if (monitor.check_every_step) {
            done += stepper.run_until(psi, chunk, [&] { return hit = over_limit(); });
        } else {
            stepper.run(psi, chunk);
            done += chunk;
            hit = over_limit();
        }
        // Keep the time grid exact instead of accumulating dt.
        psi.set_time(t0 + dt_eff * static_cast<double>(done));
        if (!psi.all_finite()) throw NumericalError("evolve: state became non-finite at t = " + std::to_string(psi.time()));
        if (hit) {
            CollapseReport rep;
            rep.t_stop = psi.time();
            rep.steps = done;
            rep.grad_sq = stepper.last_grad_sq();
            rep.grad_threshold = grad_limit;
            rep.tail_fraction = stepper.last_top_octave_fraction();
            rep.reason =
                rep.grad_sq > grad_limit ? "gradient norm exceeded threshold" : "spectral mass reached the top octave";
            result.collapse = rep;
        }
        result.series.push(observe(psi, params, symbol));
        if (result.collapse) break;
    }
    return result;
}

Eigenstate linear_eigenstate(const GridPtr& grid, const std::vector<double>& omega) {
    if (!grid) throw ValidationError("linear_eigenstate needs a grid");
    if (omega.size() != static_cast<std::size_t>(grid->dim()))
        throw ValidationError("linear_eigenstate: one trap frequency per axis expected");
    for (double w : omega)
        if (!(w > 0.0)) throw ValidationError("linear_eigenstate: every trap frequency must be > 0");
    std::vector<Complex> values(grid->size());
    std::array<int, 3> idx{};
    double mu = 0.0;
    for (double w : omega) mu += 0.5 * w;
    double norm_const = 1.0;
    for (double w : omega) norm_const *= std::pow(w / std::numbers::pi, 0.25);
    for (std::size_t f = 0; f < values.size(); ++f) {
        grid->unflatten(f, idx);
        double e = 0.0;
        for (int a = 0; a < grid->dim(); ++a) {
            const double x = grid->coords(a)[idx[a]];
            e += omega[a] * x * x;
        }
        values[f] = norm_const * std::exp(-0.5 * e);
    }
    WaveField field(grid, std::move(values));
    // Normalize on the lattice so the discrete mass is 1 to roundoff.
    const double m = mass(field);
    for (auto& z : field.values()) z /= std::sqrt(m);
    return {std::move(field), mu};
}

void check_resolution(const WaveField& psi) {
    const SpectralGrid& g = psi.g();
    const auto hat = forward_transform(g, psi.values());
    const double tail = top_octave_fraction(g, hat);
    if (tail > 1e-6) {
        std::ostringstream os;
        os << "field is not band-limited: top frequency octave holds " << tail << " of the spectral mass";
        warn(os.str());
    }
    const double m = mass(psi);
    if (m <= 0.0) return;
    std::array<int, 3> idx{};
    for (int a = 0; a < g.dim(); ++a) {
        double mean = 0.0, second = 0.0;
        auto v = psi.values();
        for (std::size_t f = 0; f < v.size(); ++f) {
            g.unflatten(f, idx);
            const double x = g.coords(a)[idx[a]];
            mean += x * std::norm(v[f]);
            second += x * x * std::norm(v[f]);
        }
        mean *= g.cell_volume() / m;
        second *= g.cell_volume() / m;
        const double sd = std::sqrt(std::max(0.0, second - mean * mean));
        if (g.extent(a) < 8.0 * sd) {
            std::ostringstream os;
            os << "box extent " << g.extent(a) << " on axis " << a << " is below 8 standard deviations (" << sd
               << ") of the density";
            warn(os.str());
        }
    }
}

}  // namespace dgpe
