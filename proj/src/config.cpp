#include "grushin/config.hpp"

#include "grushin/field_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <charconv>
#include <set>
#include <sstream>
#include <type_traits>
#include <stdexcept>

namespace grushin {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = {
        "geometry.m", "geometry.ell", "geometry.gamma",
        "grid.x_half", "grid.y_half", "grid.n_x", "grid.n_y",
        "problem.lambda1", "problem.lambda2", "problem.eta", "problem.r",
        "w1.family", "w1.c1", "w1.delta", "w1.z0_x", "w1.z0_y", "w1.rho", "w1.omega", "w1.table",
        "w2.family", "w2.c1", "w2.delta", "w2.z0_x", "w2.z0_y", "w2.rho", "w2.omega", "w2.table",
        "solver.tol", "solver.ladder_n_max", "solver.ladder_tol", "solver.max_newton", "solver.max_outer",
        "solver.mc_samples", "solver.seed", "solver.sobolev_tol", "solver.sobolev_max_iter", "solver.sobolev_starts",
        "solver.mpa_tol", "solver.mpa_n_path", "solver.mpa_max_iter", "solver.sphere_samples",
        "calibration.C_hat", "calibration.C_tilde", "calibration.C_check",
        "verify.moser_alpha", "verify.moser_R", "verify.decay_lo", "verify.decay_hi", "verify.decay_tolerance",
        "verify.barrier_q",
        "output.dir",
    };
    return keys;
}

template <class T>
T get(const pt::ptree& t, const std::string& key, T def)
{
    const auto v = t.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return def;
    std::istringstream is(*v);
    T out{};
    is >> out;
    if (is.fail() || !(is >> std::ws).eof()) throw std::invalid_argument(key + ": cannot parse '" + *v + "'");
    return out;
}

std::vector<double> get_list(const pt::ptree& t, const std::string& key, std::size_t n)
{
    const auto v = t.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::vector<double>(n, 0.0);
    std::vector<double> out;
    std::istringstream is(*v);
    std::string item;
    while (std::getline(is, item, ',')) {
        std::istringstream one(item);
        double x;
        one >> x;
        if (one.fail() || !(one >> std::ws).eof()) throw std::invalid_argument(key + ": cannot parse '" + *v + "'");
        out.push_back(x);
    }
    if (out.size() != n) throw std::invalid_argument(key + ": expected " + std::to_string(n) + " comma-separated values");
    return out;
}

WeightSpec read_weight(const pt::ptree& t, const std::string& s, const Geometry& g, std::string& table_path)
{
    WeightSpec w;
    w.family = parse_weight_family(get<std::string>(t, s + ".family", "power_decay"));
    w.c1 = get<double>(t, s + ".c1", 1.0);
    w.delta = get<double>(t, s + ".delta", g.n_gamma() + 0.5 * (g.n_gamma() - 2.0) + 1.0);
    w.z0.x = get_list(t, s + ".z0_x", g.m);
    w.z0.y = get_list(t, s + ".z0_y", g.ell);
    w.rho = get<double>(t, s + ".rho", 1.0);
    w.omega = get<double>(t, s + ".omega", 0.0);
    table_path = get<std::string>(t, s + ".table", "");
    return w;
}

// shortest text that reads back to the same value
template <class T>
std::string fmt(const T& v)
{
    if constexpr (std::is_floating_point_v<T>) {
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    } else {
        std::ostringstream os;
        os << v;
        return os.str();
    }
}

std::string join(const std::vector<double>& v)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << fmt(v[i]);
    return os.str();
}

}  // namespace

RunConfig parse_config(const std::string& text)
{
    pt::ptree t;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, t);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }
    for (const auto& sec : t)
        for (const auto& kv : sec.second) {
            const std::string key = sec.first + "." + kv.first;
            if (!known_keys().count(key)) throw std::invalid_argument(key + ": unknown key");
        }

    RunConfig c;
    c.geometry = make_geometry(get<int>(t, "geometry.m", 1), get<int>(t, "geometry.ell", 2),
                               get<double>(t, "geometry.gamma", 1.0));
    c.box.x_half = get<double>(t, "grid.x_half", 8.0);
    c.box.y_half = get<double>(t, "grid.y_half", 8.0);
    c.n_x = get<int>(t, "grid.n_x", 64);
    c.n_y = get<int>(t, "grid.n_y", 64);
    c.problem.lambda1 = get<double>(t, "problem.lambda1", 1e-3);
    c.problem.lambda2 = get<double>(t, "problem.lambda2", 1e-3);
    c.problem.eta = get<double>(t, "problem.eta", 0.5);
    c.problem.r = get<double>(t, "problem.r", 1.5);
    std::string tab1, tab2;
    c.problem.w1 = read_weight(t, "w1", c.geometry, tab1);
    c.problem.w2 = read_weight(t, "w2", c.geometry, tab2);
    auto load_table = [&](WeightSpec& w, const std::string& path, const char* name) {
        if (w.family != WeightFamily::tabulated) return;
        if (path.empty()) throw std::invalid_argument(std::string(name) + ".table: tabulated family needs a field dump");
        const FieldDump fd = read_field(path);
        w.table = fd.values;
    };
    load_table(c.problem.w1, tab1, "w1");
    load_table(c.problem.w2, tab2, "w2");
    c.w1_table = tab1;
    c.w2_table = tab2;

    SolverConfig& s = c.solver;
    s.tol = get<double>(t, "solver.tol", s.tol);
    s.ladder_n_max = get<long long>(t, "solver.ladder_n_max", s.ladder_n_max);
    s.ladder_tol = get<double>(t, "solver.ladder_tol", s.ladder_tol);
    s.max_newton = get<int>(t, "solver.max_newton", s.max_newton);
    s.max_outer = get<int>(t, "solver.max_outer", s.max_outer);
    s.mc_samples = get<std::int64_t>(t, "solver.mc_samples", s.mc_samples);
    s.seed = get<std::uint64_t>(t, "solver.seed", s.seed);
    s.sobolev_tol = get<double>(t, "solver.sobolev_tol", s.sobolev_tol);
    s.sobolev_max_iter = get<int>(t, "solver.sobolev_max_iter", s.sobolev_max_iter);
    s.sobolev_starts = get<int>(t, "solver.sobolev_starts", s.sobolev_starts);
    s.mpa_tol = get<double>(t, "solver.mpa_tol", s.mpa_tol);
    s.mpa_n_path = get<int>(t, "solver.mpa_n_path", s.mpa_n_path);
    s.mpa_max_iter = get<int>(t, "solver.mpa_max_iter", s.mpa_max_iter);
    s.sphere_samples = get<int>(t, "solver.sphere_samples", s.sphere_samples);

    c.calibration.C_hat = get<double>(t, "calibration.C_hat", 1.0);
    c.calibration.C_tilde = get<double>(t, "calibration.C_tilde", 1.0);
    c.calibration.C_check = get<double>(t, "calibration.C_check", 1.0);

    VerifyConfig& v = c.verify;
    v.moser_alpha = get<double>(t, "verify.moser_alpha", v.moser_alpha);
    v.moser_R = get<double>(t, "verify.moser_R", v.moser_R);
    v.decay_lo = get<double>(t, "verify.decay_lo", v.decay_lo);
    v.decay_hi = get<double>(t, "verify.decay_hi", v.decay_hi);
    v.decay_tolerance = get<double>(t, "verify.decay_tolerance", v.decay_tolerance);
    v.barrier_q = get<double>(t, "verify.barrier_q", v.barrier_q);

    c.output_dir = get<std::string>(t, "output.dir", c.output_dir);
    validate_config(c);
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const RunConfig& c)
{
    make_geometry(c.geometry.m, c.geometry.ell, c.geometry.gamma);
    if (c.n_x < 4) throw std::invalid_argument("grid.n_x: resolution must be >= 4");
    if (c.n_y < 4) throw std::invalid_argument("grid.n_y: resolution must be >= 4");
    if (!(c.box.x_half > 0.0) || !std::isfinite(c.box.x_half)) throw std::invalid_argument("grid.x_half: must be positive");
    if (!(c.box.y_half > 0.0) || !std::isfinite(c.box.y_half)) throw std::invalid_argument("grid.y_half: must be positive");
    validate_problem(c.geometry, c.problem);
    const SolverConfig& s = c.solver;
    if (!(s.tol > 0.0)) throw std::invalid_argument("solver.tol: must be positive");
    if (s.ladder_n_max < 1) throw std::invalid_argument("solver.ladder_n_max: must be >= 1");
    if (!(s.ladder_tol > 0.0)) throw std::invalid_argument("solver.ladder_tol: must be positive");
    if (s.max_newton < 1) throw std::invalid_argument("solver.max_newton: must be >= 1");
    if (s.max_outer < 1) throw std::invalid_argument("solver.max_outer: must be >= 1");
    if (s.mc_samples < 1) throw std::invalid_argument("solver.mc_samples: must be >= 1");
    if (!(s.sobolev_tol > 0.0)) throw std::invalid_argument("solver.sobolev_tol: must be positive");
    if (s.sobolev_starts < 1) throw std::invalid_argument("solver.sobolev_starts: must be >= 1");
    if (!(s.mpa_tol > 0.0)) throw std::invalid_argument("solver.mpa_tol: must be positive");
    if (s.mpa_n_path < 8) throw std::invalid_argument("solver.mpa_n_path: must be >= 8");
    if (s.sphere_samples < 1) throw std::invalid_argument("solver.sphere_samples: must be >= 1");
    const Calibration& k = c.calibration;
    if (!(k.C_hat > 0.0)) throw std::invalid_argument("calibration.C_hat: must be positive");
    if (!(k.C_tilde > 0.0)) throw std::invalid_argument("calibration.C_tilde: must be positive");
    if (!(k.C_check > 0.0)) throw std::invalid_argument("calibration.C_check: must be positive");
    const VerifyConfig& v = c.verify;
    if (!(v.moser_alpha > 1.0)) throw std::invalid_argument("verify.moser_alpha: must exceed 1");
    if (!(v.moser_R > 0.0 && v.moser_R <= 1.0)) throw std::invalid_argument("verify.moser_R: must lie in (0,1]");
    if (!(v.decay_lo > 0.0 && v.decay_hi > v.decay_lo && v.decay_hi <= 1.0))
        throw std::invalid_argument("verify.decay_lo: need 0 < decay_lo < decay_hi <= 1");
    if (!(v.decay_tolerance > 0.0)) throw std::invalid_argument("verify.decay_tolerance: must be positive");
    if (c.output_dir.empty()) throw std::invalid_argument("output.dir: must not be empty");
}

std::string render_config(const RunConfig& c)
{
    std::ostringstream os;
    os << "[geometry]\nm = " << fmt(c.geometry.m) << "\nell = " << fmt(c.geometry.ell) << "\ngamma = " << fmt(c.geometry.gamma) << "\n";
    os << "\n[grid]\nx_half = " << fmt(c.box.x_half) << "\ny_half = " << fmt(c.box.y_half) << "\nn_x = " << fmt(c.n_x)
       << "\nn_y = " << fmt(c.n_y) << "\n";
    const ProblemSpec& p = c.problem;
    os << "\n[problem]\nlambda1 = " << fmt(p.lambda1) << "\nlambda2 = " << fmt(p.lambda2) << "\neta = " << fmt(p.eta)
       << "\nr = " << fmt(p.r) << "\n";
    auto weight = [&](const char* name, const WeightSpec& w, const std::string& table) {
        os << "\n[" << name << "]\nfamily = " << to_string(w.family) << "\nc1 = " << fmt(w.c1) << "\ndelta = " << fmt(w.delta)
           << "\nz0_x = " << join(w.z0.x) << "\nz0_y = " << join(w.z0.y) << "\nrho = " << fmt(w.rho)
           << "\nomega = " << fmt(w.omega) << "\n";
        if (!table.empty()) os << "table = " << table << "\n";
    };
    weight("w1", p.w1, c.w1_table);
    weight("w2", p.w2, c.w2_table);
    const SolverConfig& s = c.solver;
    os << "\n[solver]\ntol = " << fmt(s.tol) << "\nladder_n_max = " << fmt(s.ladder_n_max) << "\nladder_tol = " << fmt(s.ladder_tol)
       << "\nmax_newton = " << fmt(s.max_newton) << "\nmax_outer = " << fmt(s.max_outer) << "\nmc_samples = " << fmt(s.mc_samples)
       << "\nseed = " << fmt(s.seed) << "\nsobolev_tol = " << fmt(s.sobolev_tol) << "\nsobolev_max_iter = " << fmt(s.sobolev_max_iter)
       << "\nsobolev_starts = " << fmt(s.sobolev_starts) << "\nmpa_tol = " << fmt(s.mpa_tol) << "\nmpa_n_path = " << fmt(s.mpa_n_path)
       << "\nmpa_max_iter = " << fmt(s.mpa_max_iter) << "\nsphere_samples = " << fmt(s.sphere_samples) << "\n";
    os << "\n[calibration]\nC_hat = " << fmt(c.calibration.C_hat) << "\nC_tilde = " << fmt(c.calibration.C_tilde)
       << "\nC_check = " << fmt(c.calibration.C_check) << "\n";
    const VerifyConfig& v = c.verify;
    os << "\n[verify]\nmoser_alpha = " << fmt(v.moser_alpha) << "\nmoser_R = " << fmt(v.moser_R) << "\ndecay_lo = " << fmt(v.decay_lo)
       << "\ndecay_hi = " << fmt(v.decay_hi) << "\ndecay_tolerance = " << fmt(v.decay_tolerance) << "\nbarrier_q = " << fmt(v.barrier_q)
       << "\n";
    os << "\n[output]\ndir = " << c.output_dir << "\n";
    return os.str();
}

Grid config_grid(const RunConfig& c)
{
    return build_grid(c.geometry, c.box, c.n_x, c.n_y);
}

}  // namespace grushin
