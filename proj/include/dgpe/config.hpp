#pragma once

#include "dgpe/dipole_kernel.hpp"
#include "dgpe/errors.hpp"
#include "dgpe/gpe_state.hpp"
#include "dgpe/propagator.hpp"
#include "dgpe/reduction.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dgpe {

enum class InitKind { GroundState, Gaussian, Unstable, File };

struct InitSpec {
    InitKind kind = InitKind::GroundState;
    std::vector<double> widths;  // gaussian; empty means 1 on every axis
    std::vector<double> center;  // gaussian; empty means the origin
    double beta = 0.0;           // gaussian phase curvature: exp(i beta |x - c|^2)
    double mass = 1.0;           // gaussian is scaled to this mass
    double eps = 0.5;            // unstable
    double alpha = -3.0;         // unstable
    double f_width = 1.0;        // unstable
    double g_width = 1.0;        // unstable
    std::string path;            // file
};

struct KernelSpec {
    std::string kind = "auto";  // auto | analytic3d | effective1d | effective2d
    std::vector<double> omega;  // transverse frequencies for effective kernels; empty means 1
};

struct ReduceSpec {
    std::string target = "line1d";  // line1d | plane2d
    std::vector<double> eps{0.2, 0.141, 0.1};
    int samples = 4;
    bool allow_unstable = false;
    double u0_width = 1.0;
    double u0_center = 0.0;
    double u0_velocity = 1.0;
};

/// Flat `key = value` run description. Everything except the grid and the
/// coupling constants has a default.
struct RunConfig {
    int dim = 3;
    std::vector<double> extents;
    std::vector<int> points;
    PhysicalParams params;
    InitSpec init;
    KernelSpec kernel;
    double dt = 1e-3;
    double T = 1.0;
    MonitorSpec monitor;
    double gn_constant = 1.0;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    ReduceSpec reduce;
};

/// All problems found in a config, one message per entry, each prefixed with
/// its line number.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// Canonical text for a config: every key, fixed order, 17 significant digits.
std::string serialize_config(const RunConfig& cfg);

GridPtr make_grid(const RunConfig& cfg);
KernelProvenance kernel_provenance(const RunConfig& cfg);
WaveField make_initial_state(const RunConfig& cfg, const GridPtr& grid);
/// Reduction setup on the config's 3D grid, which serves as the psi^eps frame.
ReductionSetup make_reduction_setup(const RunConfig& cfg, const GridPtr& frame_grid);

}  // namespace dgpe
