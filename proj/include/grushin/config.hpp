#pragma once

#include "grushin/grid.hpp"
#include "grushin/problem.hpp"
#include "grushin/variational.hpp"

#include <cstdint>
#include <string>

namespace grushin {

struct SolverConfig {
    double tol = 1e-8;
    long long ladder_n_max = 1LL << 20;
    double ladder_tol = 1e-10;
    int max_newton = 60;
    int max_outer = 50;
    std::int64_t mc_samples = 1000000;
    std::uint64_t seed = 20240601;
    double sobolev_tol = 1e-12;
    int sobolev_max_iter = 4000;
    int sobolev_starts = 3;
    double mpa_tol = 1e-6;
    int mpa_n_path = 12;
    int mpa_max_iter = 400;
    int sphere_samples = 200;
};

struct VerifyConfig {
    double moser_alpha = 2.0;
    double moser_R = 1.0;      ///< fraction of the largest admissible R (ball B(0, 2R) inside the box)
    double decay_lo = 0.25;    ///< annulus as fractions of the box radius
    double decay_hi = 0.5;
    double decay_tolerance = 0.25;
    double barrier_q = 0.0;    ///< 0 picks the midpoint of the admissible window
};

struct RunConfig {
    Geometry geometry;
    Box box;
    int n_x = 64, n_y = 64;
    ProblemSpec problem;
    std::string w1_table, w2_table;  ///< field dumps for tabulated weights
    SolverConfig solver;
    Calibration calibration;
    VerifyConfig verify;
    std::string output_dir = "out";
};

/// Parses an INI file; every key is checked and errors are std::invalid_argument
/// messages starting with "<section>.<key>: ".
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

/// Checks every invariant that does not need the grid, naming the field on failure.
void validate_config(const RunConfig& c);

/// Resolved configuration as INI text; parse_config(render_config(c)) reproduces c.
std::string render_config(const RunConfig& c);

Grid config_grid(const RunConfig& c);

/// Reads GRUSHIN_LAB_THREADS and caps the OpenMP worker count; returns the cap or 0 if unset.
int apply_thread_limit();

}  // namespace grushin
