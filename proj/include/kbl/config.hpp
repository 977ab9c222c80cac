#pragma once

#include <kbl/control.hpp>
#include <kbl/grid.hpp>
#include <kbl/killing.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kbl {

struct ModelConfig {
    std::string zeta = "constant"; // constant | abs_power (custom rates are API-only)
    double zeta_param = 1.0;
    int d = 1;
    double T = 1.0;
    int m = 200;

    KillingFunction make_zeta() const;
    TimeGrid make_grid() const { return TimeGrid(T, m); }
};

struct RunConfig {
    int n = 10000;
    int replicas = 8;
    uint64_t seed = 1;
    int workers = 1;
};

struct LlnConfig {
    double tolerance = 0.01;
    int dict_count = 64;
    std::vector<double> checkpoints = {1.0}; // grid times for dictionary distances
};

struct ControlConfig {
    std::vector<double> u; // constant drift; empty = zero
    std::optional<double> lambda;
    std::vector<double> piecewise_bounds, piecewise_rates;

    ControlSpec make_control(int d, int m) const;
    bool configured() const {
        return !u.empty() || lambda || !piecewise_bounds.empty() || !piecewise_rates.empty();
    }
};

struct SimConfig {
    bool kill_times = false;
};

struct FixedPointConfig {
    int M = 100000;
    double tol = 1e-4;
    int max_iter = 50;
    double damping = 1.0;
    double mass_tol = 0.02;
};

struct FrontierConfig {
    int M = 50000;
    std::vector<double> lambda_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> u_grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
    double bin_width = 0.02;
    double zero_observable = 0.5; // expected observable of the zero control
    double zero_tolerance = 0.01;
};

struct LaplaceConfig {
    std::vector<double> alpha_values = {0.25, 1.0};
    double beta = 0.0;
    double clip_lo = 0.0;
    double clip_hi = 1.0;
    std::vector<int> n_values = {100, 500, 2000};
    std::vector<double> lambda_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> u_grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
    bool refine = false;
};

struct VarrepConfig {
    int gh_nodes = 64;
    int gl_nodes = 64;
    int random_cases = 10;
    std::vector<double> alphas = {0.5, 1.0};
};

struct ExperimentConfig {
    ModelConfig model;
    RunConfig run;
    LlnConfig lln;
    ControlConfig control;
    SimConfig sim;
    FixedPointConfig fixed_point;
    FrontierConfig frontier;
    LaplaceConfig laplace;
    VarrepConfig varrep;
};

// Parse and validate a config file.  Every section/key is checked against
// the schema; unknown names raise config_error naming the exact path.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");

} // namespace kbl
