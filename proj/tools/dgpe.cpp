#include "dgpe/config.hpp"
#include "dgpe/dipole_kernel.hpp"
#include "dgpe/errors.hpp"
#include "dgpe/gpe_state.hpp"
#include "dgpe/propagator.hpp"
#include "dgpe/reduction.hpp"
#include "dgpe/regimes.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>

namespace fs = std::filesystem;
using namespace dgpe;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::optional<KernelSymbol> symbol_for(const RunConfig& cfg, const GridPtr& grid) {
    if (cfg.params.lambda2 == 0.0) return std::nullopt;
    return build_symbol(grid, kernel_provenance(cfg));
}

int cmd_simulate(const std::string& config_path, const std::string& out_override) {
    const RunConfig cfg = load_config(config_path);
    const auto grid = make_grid(cfg);
    cfg.params.validate_for(*grid);
    const auto symbol = symbol_for(cfg, grid);
    const WaveField psi0 = make_initial_state(cfg, grid);
    check_resolution(psi0);

    const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
    fs::create_directories(out);
    {
        std::ofstream os(out / "config.resolved");
        os << serialize_config(cfg);
    }
    write_snapshot((out / "snapshot_initial.bin").string(), psi0);

    const auto res = evolve(psi0, cfg.params, symbol ? &*symbol : nullptr, cfg.dt, cfg.T, cfg.monitor);
    {
        std::ofstream os(out / "observables.csv");
        res.series.write_csv(os);
    }
    write_snapshot((out / "snapshot_final.bin").string(), res.final_state);

    const auto& first = res.series.front();
    const auto& last = res.series.back();
    std::cout << "samples = " << res.series.size() << "\n";
    std::cout << "t_final = " << num(last.t) << "\n";
    std::cout << "mass_drift = " << num(std::abs(last.mass - first.mass) / first.mass) << "\n";
    std::cout << "energy_initial = " << num(first.energy.total()) << "\n";
    std::cout << "energy_final = " << num(last.energy.total()) << "\n";
    if (res.collapse) {
        const auto& c = *res.collapse;
        std::cout << "collapse = true\n";
        std::cout << "collapse.t_stop = " << num(c.t_stop) << "\n";
        std::cout << "collapse.steps = " << c.steps << "\n";
        std::cout << "collapse.grad_sq = " << num(c.grad_sq) << "\n";
        std::cout << "collapse.grad_threshold = " << num(c.grad_threshold) << "\n";
        std::cout << "collapse.tail_fraction = " << num(c.tail_fraction) << "\n";
        std::cout << "collapse.reason = " << c.reason << "\n";
    } else {
        std::cout << "collapse = false\n";
    }
    return 0;
}

int cmd_classify(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    const auto grid = make_grid(cfg);
    cfg.params.validate_for(*grid);
    const auto symbol = symbol_for(cfg, grid);
    const WaveField phi = make_initial_state(cfg, grid);
    std::cout << classify(phi, cfg.params, symbol ? &*symbol : nullptr, cfg.gn_constant).report();
    return 0;
}

int cmd_kernel(int dim, int points, double extent, const std::string& kind, std::vector<double> omega,
               const std::string& out_path) {
    RunConfig cfg;
    cfg.dim = dim;
    cfg.kernel.kind = kind;
    cfg.kernel.omega = std::move(omega);
    if (dim < 1 || dim > 3) throw ValidationError("--dim must be 1, 2 or 3");
    const auto grid = SpectralGrid::make(dim, std::vector<double>(dim, extent), std::vector<int>(dim, points));
    const auto prov = kernel_provenance(cfg);
    if (prov.dim() != dim) throw ValidationError("kernel kind " + prov.describe() + " does not match --dim");
    const auto symbol = build_symbol(grid, prov);

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw ValidationError("cannot write " + out_path);
    }
    std::ostream& os = out_path.empty() ? std::cout : file;
    for (int a = 0; a < dim; ++a) os << "xi" << (dim == 1 ? 3 : a + 1) << ",";
    os << "symbol\n";
    std::array<int, 3> idx{};
    for (std::size_t f = 0; f < grid->size(); ++f) {
        grid->unflatten(f, idx);
        for (int a = 0; a < dim; ++a) os << num(grid->freqs(a)[idx[a]]) << ",";
        os << num(symbol.values()[f]) << "\n";
    }
    return 0;
}

int cmd_reduce(const std::string& config_path, const std::string& out_override) {
    const RunConfig cfg = load_config(config_path);
    const auto frame = make_grid(cfg);
    const ReductionSetup base = make_reduction_setup(cfg, frame);
    const auto sweep = reduction_sweep(base, cfg.reduce.eps, frame, cfg.dt, cfg.T, cfg.reduce.samples);
    const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
    fs::create_directories(out);
    {
        std::ofstream os(out / "sweep.csv");
        write_sweep_csv(os, sweep);
    }
    write_sweep_csv(std::cout, sweep);
    std::cout << "# error_slope = " << num(sweep.error_slope) << "\n";
    std::cout << "# excitation_slope = " << num(sweep.excitation_slope) << "\n";
    if (base.target == ReductionTarget::Plane2D) std::cout << "# plane target: conjectured rate\n";
    return 0;
}

int cmd_unstable_data(const std::vector<double>& eps_list, double alpha, double f_width, double g_width,
                      int transverse_points, int longitudinal_points, double lambda1, double lambda2) {
    if (eps_list.size() < 2) throw ValidationError("--eps needs at least two values");
    PhysicalParams params;
    params.lambda1 = lambda1;
    params.lambda2 = lambda2;
    params.validate();
    std::vector<double> kin, pot, inter;
    std::cout << "epsilon,mass,Ekin,Epot,Eint,E,anisotropy\n";
    for (double eps : eps_list) {
        const auto grid = unstable_data_grid(eps, f_width, g_width, transverse_points, longitudinal_points);
        const auto phi = make_unstable_data(grid, eps, alpha, f_width, g_width);
        const auto symbol = build_symbol(grid, KernelProvenance::analytic3d());
        const auto e = energy(phi, params, &symbol);
        kin.push_back(e.kinetic);
        pot.push_back(e.potential);
        inter.push_back(e.cubic + e.dipolar);
        std::cout << num(eps) << "," << num(mass(phi)) << "," << num(e.kinetic) << "," << num(e.potential) << ","
                  << num(e.cubic + e.dipolar) << "," << num(e.total()) << "," << num(anisotropy_ratio(phi)) << "\n";
    }
    std::cout << "# slope_kinetic = " << num(loglog_slope(eps_list, kin)) << " expected " << num(alpha - 1) << "\n";
    std::cout << "# slope_potential = " << num(loglog_slope(eps_list, pot)) << " expected " << num(alpha - 3) << "\n";
    std::cout << "# slope_interaction = " << num(loglog_slope(eps_list, inter)) << " expected "
              << num(2 * alpha - 1) << "\n";
    return 0;
}

int cmd_selftest(std::uint64_t seed) {
    using std::numbers::pi;
    int failures = 0;
    auto report = [&](const char* name, bool ok, double value) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << num(value) << ")\n";
        if (!ok) ++failures;
    };

    auto g3 = SpectralGrid::make(3, {12.0, 12.0, 12.0}, {16, 16, 16});
    const auto sym = build_symbol(g3, KernelProvenance::analytic3d());
    double lo = 0.0, hi = 0.0;
    for (double v : sym.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    report("symbol range", std::abs(lo + 4 * pi / 3) < 1e-13 && std::abs(hi - 8 * pi / 3) < 1e-13,
           std::max(std::abs(lo + 4 * pi / 3), std::abs(hi - 8 * pi / 3)));

    const double bessel = bessel_radial_check(1e4, 1e-6);
    report("radial Bessel integral", std::abs(bessel - 1.0 / 3.0) < 1e-6, bessel);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    WaveField psi(g3);
    for (auto& v : psi.values()) v = {nd(rng), nd(rng)};
    const auto back = inverse_transform(*g3, forward_transform(*g3, psi.values()));
    double rt = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) rt = std::max(rt, std::abs(back[i] - psi.values()[i]));
    report("Fourier round trip", rt < 1e-12, rt);

    PhysicalParams params;
    params.lambda1 = 1.0;
    params.lambda2 = 0.3;
    auto state = linear_eigenstate(g3, params.omega).field;
    for (std::size_t f = 0; f < g3->size(); ++f) state.values()[f] *= std::polar(1.0, 0.3 * g3->coords(0)[f % 16]);
    const double m0 = mass(state);
    StrangStepper fwd(g3, params, &sym, 1e-2), bwd(g3, params, &sym, -1e-2);
    WaveField w = state;
    fwd.run(w, 50);
    report("mass conservation", std::abs(mass(w) - m0) / m0 < 1e-12, std::abs(mass(w) - m0) / m0);
    bwd.run(w, 50);
    double rev = 0.0;
    for (std::size_t i = 0; i < w.values().size(); ++i) rev = std::max(rev, std::abs(w.values()[i] - state.values()[i]));
    report("time reversibility", rev < 1e-11, rev);

    const double k1 = effective_coupling(1.0, {1.0, 1.0});
    report("effective coupling", std::abs(k1 - 1.0 / (2 * pi)) < 1e-14, k1);
    const double k0 = symbol1d_effective(0.0, 1.0, 1.0);
    report("effective 1D symbol at 0", std::abs(k0 + 4.0 / 3.0) < 1e-6, k0);

    std::cout << (failures == 0 ? "selftest passed\n" : "selftest failed\n");
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral toolkit for the dipolar Gross-Pitaevskii equation"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    std::string config, out;
    auto* sim = app.add_subcommand("simulate", "Evolve a configured state and write observables and snapshots");
    sim->add_option("-c,--config", config, "Config file")->required();
    sim->add_option("-o,--out", out, "Output directory (overrides output.dir)");

    auto* cls = app.add_subcommand("classify", "Print the regime certificate of the configured initial state");
    cls->add_option("-c,--config", config, "Config file")->required();

    int kdim = 3, kpoints = 16;
    double kextent = 16.0;
    std::string kkind = "auto", kout;
    std::vector<double> komega;
    auto* ker = app.add_subcommand("kernel", "Tabulate a dipolar symbol on a cubic grid as CSV");
    ker->add_option("--dim", kdim, "Dimension")->capture_default_str();
    ker->add_option("--points", kpoints, "Points per axis")->capture_default_str();
    ker->add_option("--extent", kextent, "Box length per axis")->capture_default_str();
    ker->add_option("--kind", kkind, "auto, analytic3d, effective1d or effective2d")->capture_default_str();
    ker->add_option("--omega", komega, "Transverse frequencies of an effective kernel")->delimiter(',');
    ker->add_option("-o,--out", kout, "CSV path (default stdout)");

    auto* red = app.add_subcommand("reduce", "Dimension-reduction error sweep over eps");
    red->add_option("-c,--config", config, "Config file")->required();
    red->add_option("-o,--out", out, "Output directory (overrides output.dir)");

    std::vector<double> ueps{0.8, 0.4, 0.2};
    double ualpha = -3.0, uf = 1.0, ug = 1.0, ul1 = 0.0, ul2 = 1.0;
    int unt = 32, unl = 64;
    auto* uns = app.add_subcommand("unstable-data", "Energy terms of the concentrating family versus eps");
    uns->add_option("--eps", ueps, "eps values")->delimiter(',')->capture_default_str();
    uns->add_option("--alpha", ualpha, "Amplitude exponent")->capture_default_str();
    uns->add_option("--f-width", uf, "Transverse profile width")->capture_default_str();
    uns->add_option("--g-width", ug, "Longitudinal profile width")->capture_default_str();
    uns->add_option("--transverse-points", unt, "Points per transverse axis")->capture_default_str();
    uns->add_option("--longitudinal-points", unl, "Points on the dipole axis")->capture_default_str();
    uns->add_option("--lambda1", ul1, "Cubic coupling")->capture_default_str();
    uns->add_option("--lambda2", ul2, "Dipolar coupling")->capture_default_str();

    std::uint64_t seed = 0;
    auto* st = app.add_subcommand("selftest", "Run the quick invariant suite");
    st->add_option("--seed", seed, "Seed of the random test fields")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    set_warnings_enabled(!quiet);

    try {
        if (*sim) return cmd_simulate(config, out);
        if (*cls) return cmd_classify(config);
        if (*ker) return cmd_kernel(kdim, kpoints, kextent, kkind, komega, kout);
        if (*red) return cmd_reduce(config, out);
        if (*uns) return cmd_unstable_data(ueps, ualpha, uf, ug, unt, unl, ul1, ul2);
        if (*st) return cmd_selftest(seed);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
