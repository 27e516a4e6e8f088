#include "fracpod/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fracpod/csv.hpp"
#include "fracpod/error.hpp"
#include "fracpod/mlf.hpp"

namespace fracpod {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<ExperimentId, std::string_view>, 6> kIds{{
    {ExperimentId::Ex1, "ex1"},
    {ExperimentId::Ex2, "ex2"},
    {ExperimentId::Ex3, "ex3"},
    {ExperimentId::Ex4a, "ex4a"},
    {ExperimentId::Ex4b, "ex4b"},
    {ExperimentId::Custom, "custom"},
}};

// Published penalty weights of the noisy reconstruction runs.
std::optional<double> printed_lambda(ExperimentId id) {
    switch (id) {
        case ExperimentId::Ex2: return 5.43e-6;
        case ExperimentId::Ex3: return 1.26e-7;
        case ExperimentId::Ex4a: return 2.44e-7;
        case ExperimentId::Ex4b: return 2.6e-6;
        default: return std::nullopt;
    }
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool parse_bool(const std::string& v) {
    const std::string s = lower(v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    fail(ErrorKind::Config, "expected a boolean, got '" + v + "'");
}

std::size_t parse_count(const std::string& v) {
    const double d = parse_number(v);
    require(d >= 0.0 && d == std::floor(d) && d < 1e15, ErrorKind::Config,
            "expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(d);
}

Norm parse_norm(const std::string& v) {
    const std::string s = lower(v);
    if (s == "l2") return Norm::L2;
    if (s == "h1") return Norm::H1;
    if (s == "h1semi") return Norm::H1Semi;
    fail(ErrorKind::Config, "unknown snapshot product '" + v + "'");
}

std::string_view norm_name(Norm n) {
    switch (n) {
        case Norm::L2: return "l2";
        case Norm::H1: return "h1";
        case Norm::H1Semi: return "h1semi";
    }
    return "l2";
}

double seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
    require(!v.empty(), ErrorKind::EmptyInput, "no timings");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Nodal columns on interior nodes: x[,y],<names...>.
void write_nodal_csv(const fs::path& path, const FemSpace& space,
                     const std::vector<std::pair<std::string, Eigen::VectorXd>>& columns) {
    std::vector<std::string> header{"x"};
    if (space.dim() == 2) {
        header.emplace_back("y");
    }
    for (const auto& [name, values] : columns) {
        require(static_cast<std::size_t>(values.size()) == space.dof(), ErrorKind::LengthMismatch,
                "column " + name + " does not match the space");
        header.push_back(name);
    }
    std::vector<csv::Row> rows;
    const auto& nodes = space.nodes();
    rows.reserve(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        csv::Row row{nodes[k].x};
        if (space.dim() == 2) {
            row.push_back(nodes[k].y);
        }
        for (const auto& col : columns) {
            row.push_back(col.second[static_cast<Eigen::Index>(k)]);
        }
        rows.push_back(std::move(row));
    }
    csv::write(path, header, rows);
}

void write_spectrum_csv(const fs::path& path, const Eigen::VectorXd& lambda) {
    std::vector<csv::Row> rows;
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
        rows.push_back({static_cast<double>(j + 1), lambda[j]});
    }
    csv::write(path, {"j", "lambda"}, rows);
}

// Resolved config first, then the run results as `# key = value` lines so
// the file itself parses as a config.
void write_metadata(const fs::path& path, const std::string& config,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::Io, "cannot write " + path.string());
    out << config;
    for (const auto& [k, v] : kv) {
        out << "# " << k << " = " << v << '\n';
    }
}

std::optional<SpectralDomain> spectral_domain(const DomainSpec& d) {
    if (d.kind == DomainKind::Interval && std::abs(d.lx - std::numbers::pi) < 1e-12) {
        return SpectralDomain::Interval;
    }
    if (d.kind == DomainKind::Rectangle && d.lx == 1.0 && d.ly == 1.0) {
        return SpectralDomain::UnitSquare;
    }
    return std::nullopt;
}

struct Discretization {
    SpacePtr space;
    GradedMesh mesh;
    std::shared_ptr<const L1Kernel> kernel;
    Field target;
};

Discretization discretize(const ReconstructionConfig& rc) {
    Discretization d;
    d.space = build_space(rc.domain, rc.h);
    d.mesh = build_graded_mesh(rc.T, rc.N, rc.r);
    d.kernel = std::make_shared<const L1Kernel>(d.mesh, rc.alpha / 2.0);
    d.target = interpolate(d.space, rc.target);
    return d;
}

ReconstructionConfig resolved_recon(const ExperimentConfig& cfg) {
    ReconstructionConfig rc = cfg.recon;
    rc.target = named_target(cfg.target, rc.domain.dim());
    rc.lambda_inverse = cfg.resolved_lambda();
    return rc;
}

RunSummary run_forward(const ExperimentConfig& cfg, const fs::path& plot_dir) {
    const ReconstructionConfig rc = resolved_recon(cfg);
    rc.validate();
    const Discretization d = discretize(rc);
    const SourceSpec src{d.target, rc.alpha};

    auto t0 = std::chrono::steady_clock::now();
    const Trajectory full = solve_full(*d.space, d.mesh, *d.kernel, src);
    const double t_full = seconds(t0);

    const SnapshotSet set =
        collect_snapshots(full, *d.kernel, rc.quotient_snapshots, d.space, rc.snapshot_product);
    const SymmetricEigen eig = eigendecompose(correlation_matrix(set));
    require(eig.rank() >= 1, ErrorKind::EmptyInput, "forward trajectory is identically zero");
    const std::size_t p = std::min(rc.pod_rank, eig.rank());
    const PodBasis basis = build_basis(set, eig, p);

    RunSummary sum;
    sum.out_dir = cfg.out_dir;
    sum.effective_rank = p;
    std::vector<csv::Row> table;
    Trajectory reduced_lifted;
    double t_reduced = 0.0;
    for (std::size_t m = 1; m <= p; ++m) {
        const ReducedOperator op =
            make_reduced_operator(*d.space, basis.psi.leftCols(static_cast<Eigen::Index>(m)));
        t0 = std::chrono::steady_clock::now();
        const Trajectory red = solve_reduced(op, d.mesh, *d.kernel, src);
        t_reduced = seconds(t0);
        reduced_lifted = op.lift(red);
        table.push_back({static_cast<double>(m), max_abs_difference(full, reduced_lifted),
                         mean_square_error(*d.space, full, reduced_lifted)});
    }
    sum.max_abs_fem_pod = table.back()[1];

    std::vector<std::pair<std::string, Eigen::VectorXd>> cols{
        {"u_full", full.terminal()}, {"u_pod", reduced_lifted.terminal()}};
    if (const auto sd = spectral_domain(rc.domain)) {
        const auto sol = SpectralSolution::from_initial_velocity(
            rc.alpha, rc.T, *sd, rc.target, rc.domain.dim() == 1 ? 64 : 16);
        const auto ref = spectral_terminal_field(sol, d.space->nodes());
        const Eigen::VectorXd exact = Eigen::Map<const Eigen::VectorXd>(
            ref.data(), static_cast<Eigen::Index>(ref.size()));
        sum.max_abs_fem_exact = (full.terminal() - exact).cwiseAbs().maxCoeff();
        cols.emplace_back("u_exact", exact);
    }

    const fs::path dir = cfg.out_dir;
    sum.csv_files.push_back(dir / "forward_terminal.csv");
    write_nodal_csv(sum.csv_files.back(), *d.space, cols);
    sum.csv_files.push_back(dir / "error_table.csv");
    csv::write(sum.csv_files.back(), {"rank", "max_abs_fem_pod", "mse_fem_pod"}, table);
    sum.csv_files.push_back(dir / "pod_spectrum.csv");
    write_spectrum_csv(sum.csv_files.back(), basis.lambda);
    sum.csv_files.push_back(dir / "basis.csv");
    write_basis_csv(sum.csv_files.back(), basis.psi);

    PlotData plot{d.space, d.target, std::nullopt, basis.psi, basis.lambda, 5};
    for (auto& f : emit_plotdata(plot, plot_dir)) {
        sum.csv_files.push_back(std::move(f));
    }

    write_metadata(dir / "metadata.txt", format_config(cfg),
                   {{"experiment", std::string(to_string(cfg.id))},
                    {"effective_rank", std::to_string(p)},
                    {"numerical_rank", std::to_string(eig.rank())},
                    {"max_abs_fem_pod", csv::format(sum.max_abs_fem_pod)},
                    {"max_abs_fem_exact", csv::format(sum.max_abs_fem_exact)},
                    {"full_solve_seconds", csv::format(t_full)},
                    {"reduced_solve_seconds", csv::format(t_reduced)}});
    return sum;
}

RunSummary run_reconstruction(const ExperimentConfig& cfg, const fs::path& plot_dir) {
    const ReconstructionConfig rc = resolved_recon(cfg);
    const ForwardSetup setup = prepare_forward(rc);
    const PipelineResult res = run_pipeline(rc, setup);
    const ReconstructionResult& r = res.result;

    RunSummary sum;
    sum.out_dir = cfg.out_dir;
    sum.effective_rank = res.basis.rank();
    sum.relative_error = relative_l2_error(r.field, setup.target);
    sum.misfit = r.misfit;
    sum.lambda = r.lambda;
    double zero = 0.0;
    for (const double v : res.observations.values) {
        zero += v * v;
    }
    sum.zero_misfit = zero / static_cast<double>(res.observations.size());

    const fs::path dir = cfg.out_dir;
    const int dim = rc.domain.dim();
    sum.csv_files.push_back(dir / "observations.csv");
    write_observations_csv(sum.csv_files.back(), res.observations, dim);
    sum.csv_files.push_back(dir / "forward_terminal.csv");
    write_nodal_csv(sum.csv_files.back(), *setup.space,
                    {{"u_T", setup.trajectory.terminal()}, {"q_mollified", res.mollified.coeffs}});
    sum.csv_files.push_back(dir / "recovered_a1.csv");
    write_nodal_csv(sum.csv_files.back(), *setup.space,
                    {{"a1_recovered", r.field.coeffs}, {"a1_true", setup.target.coeffs}});
    sum.csv_files.push_back(dir / "pod_spectrum.csv");
    write_spectrum_csv(sum.csv_files.back(), res.basis.lambda);
    sum.csv_files.push_back(dir / "basis.csv");
    write_basis_csv(sum.csv_files.back(), res.basis.psi);
    sum.csv_files.push_back(dir / "error_table.csv");
    csv::write(sum.csv_files.back(),
               {"relative_l2_error", "misfit", "zero_misfit", "penalty", "lambda",
                "lambda_mollify", "effective_rank", "requested_rank"},
               {{sum.relative_error, r.misfit, sum.zero_misfit, r.penalty, r.lambda,
                 res.lambda_mollify, static_cast<double>(res.basis.rank()),
                 static_cast<double>(res.requested_rank)}});

    PlotData plot{setup.space, setup.target, r.field, res.basis.psi, res.basis.lambda, 5};
    for (auto& f : emit_plotdata(plot, plot_dir)) {
        sum.csv_files.push_back(std::move(f));
    }

    const WallTimes& w = r.wall_times;
    write_metadata(dir / "metadata.txt", format_config(cfg),
                   {{"experiment", std::string(to_string(cfg.id))},
                    {"lambda", csv::format(r.lambda)},
                    {"lambda_mode", cfg.lambda_mode == LambdaMode::Auto    ? "auto"
                                    : cfg.lambda_mode == LambdaMode::Fixed ? "fixed"
                                                                           : "published"},
                    {"lambda_mollify", csv::format(res.lambda_mollify)},
                    {"mollifier_jitter", csv::format(res.mollifier_jitter)},
                    {"effective_rank", std::to_string(res.basis.rank())},
                    {"numerical_rank", std::to_string(res.basis.rank_r())},
                    {"relative_l2_error", csv::format(sum.relative_error)},
                    {"misfit", csv::format(r.misfit)},
                    {"penalty", csv::format(r.penalty)},
                    {"full_order_seconds", csv::format(w.full_order)},
                    {"reduced_order_seconds", csv::format(w.reduced_order)},
                    {"mollify_seconds", csv::format(w.mollify)},
                    {"observation_solve_seconds", csv::format(w.observation_solve)},
                    {"pod_seconds", csv::format(w.pod)}});
    return sum;
}

}  // namespace

std::string_view to_string(ExperimentId id) noexcept {
    for (const auto& [k, name] : kIds) {
        if (k == id) {
            return name;
        }
    }
    return "custom";
}

ExperimentId parse_experiment_id(std::string_view text) {
    const std::string s = lower(trim(text));
    for (const auto& [k, name] : kIds) {
        if (s == name) {
            return k;
        }
    }
    fail(ErrorKind::Config, "unknown experiment id '" + std::string(text) + "'");
}

std::optional<double> ExperimentConfig::resolved_lambda() const {
    switch (lambda_mode) {
        case LambdaMode::Fixed: return lambda_value;
        case LambdaMode::Auto: return std::nullopt;
        case LambdaMode::Published:
            if (recon.sigma == 0.0) {
                return 0.0;
            }
            return printed_lambda(id);
    }
    return std::nullopt;
}

ExperimentConfig default_config(ExperimentId id) {
    ExperimentConfig cfg;
    cfg.id = id;
    cfg.out_dir = fs::path("out") / std::string(to_string(id));
    ReconstructionConfig& rc = cfg.recon;
    rc.domain = DomainSpec::interval(std::numbers::pi);
    rc.alpha = 1.5;
    rc.T = 0.1;
    rc.N = 400;
    rc.r = optimal_grading(0.75);
    rc.h = std::numbers::pi / 200.0;
    rc.n_obs = 64;
    rc.pod_rank = 5;
    cfg.target = "sin";
    cfg.lambda_mode = LambdaMode::Published;
    switch (id) {
        case ExperimentId::Ex1:
            rc.sigma = 0.0;
            break;
        case ExperimentId::Ex2:
            rc.sigma = 0.015;
            break;
        case ExperimentId::Ex3:
            rc.sigma = 0.015;
            cfg.target = "step";
            break;
        case ExperimentId::Ex4a:
        case ExperimentId::Ex4b:
            rc.domain = DomainSpec::rectangle(1.0, 1.0);
            rc.alpha = 1.25;
            rc.N = 160;
            rc.r = optimal_grading(0.625);
            rc.h = 1.0 / 30.0;
            rc.n_obs = 900;
            rc.sigma = 0.005;
            cfg.target = id == ExperimentId::Ex4a ? "sin_sin" : "poly_sin";
            break;
        case ExperimentId::Custom:
            rc.sigma = 0.015;
            cfg.lambda_mode = LambdaMode::Auto;
            break;
    }
    return cfg;
}

std::function<double(Point)> named_target(const std::string& name, int dim) {
    constexpr double pi = std::numbers::pi;
    if (dim == 1) {
        if (name == "sin") return [](Point p) { return std::sin(p.x); };
        if (name == "step") return [](Point p) { return p.x <= pi / 2.0 ? 1.0 : 0.0; };
    } else {
        if (name == "sin_sin") {
            return [](Point p) { return std::sin(2.0 * pi * p.x) * std::sin(2.0 * pi * p.y); };
        }
        if (name == "poly_sin") {
            return [](Point p) { return p.x * (1.0 - p.x) * std::sin(2.0 * pi * p.y); };
        }
    }
    fail(ErrorKind::Config,
         "unknown " + std::to_string(dim) + "D target '" + name + "'");
}

double parse_number(std::string_view text) {
    const std::string s = lower(trim(text));
    require(!s.empty(), ErrorKind::Config, "empty number");
    double value = 1.0;
    char op = '*';
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t next = s.find_first_of("*/", pos);
        const std::string tok = trim(s.substr(pos, next == std::string::npos ? std::string::npos
                                                                             : next - pos));
        double v = 0.0;
        if (tok == "pi") {
            v = std::numbers::pi;
        } else {
            std::size_t used = 0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            require(!tok.empty() && used == tok.size(), ErrorKind::Config,
                    "cannot parse number '" + std::string(text) + "'");
        }
        if (op == '*') {
            value *= v;
        } else {
            require(v != 0.0, ErrorKind::Config, "division by zero in '" + std::string(text) + "'");
            value /= v;
        }
        if (next == std::string::npos) {
            break;
        }
        op = s[next];
        pos = next + 1;
    }
    return value;
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t lineno = 0;
    std::optional<ExperimentId> id;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        require(eq != std::string::npos, ErrorKind::Config,
                origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = lower(trim(body.substr(0, eq)));
        std::string value = trim(body.substr(eq + 1));
        require(!key.empty() && !value.empty(), ErrorKind::Config,
                origin + ":" + std::to_string(lineno) + ": empty key or value");
        for (const auto& e : entries) {
            require(e.first != key, ErrorKind::Config,
                    origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        if (key == "experiment") {
            id = parse_experiment_id(value);
        }
        entries.emplace_back(std::move(key), std::move(value));
    }
    require(id.has_value(), ErrorKind::Config, origin + ": missing 'experiment' key");

    ExperimentConfig cfg = default_config(*id);
    ReconstructionConfig& rc = cfg.recon;
    bool optimal_r = false;
    for (const auto& [key, value] : entries) {
        try {
            if (key == "experiment") {
            } else if (key == "domain") {
                const std::string v = lower(value);
                if (v == "interval") {
                    rc.domain = DomainSpec::interval(rc.domain.lx);
                } else if (v == "rectangle" || v == "unit_square") {
                    rc.domain = DomainSpec::rectangle(rc.domain.lx, rc.domain.ly > 0 ? rc.domain.ly : 1.0);
                } else {
                    fail(ErrorKind::Config, "unknown domain '" + value + "'");
                }
            } else if (key == "lx") {
                rc.domain.lx = parse_number(value);
            } else if (key == "ly") {
                rc.domain.ly = parse_number(value);
            } else if (key == "alpha") {
                rc.alpha = parse_number(value);
            } else if (key == "nu") {
                rc.alpha = 2.0 * parse_number(value);
            } else if (key == "t") {
                rc.T = parse_number(value);
            } else if (key == "n") {
                rc.N = parse_count(value);
            } else if (key == "r") {
                optimal_r = lower(value) == "optimal";
                if (!optimal_r) {
                    rc.r = parse_number(value);
                }
            } else if (key == "h") {
                rc.h = parse_number(value);
            } else if (key == "n_obs") {
                rc.n_obs = parse_count(value);
            } else if (key == "sigma" || key == "noise") {
                rc.sigma = parse_number(value);
            } else if (key == "pod_rank") {
                rc.pod_rank = parse_count(value);
            } else if (key == "lambda") {
                const std::string v = lower(value);
                if (v == "auto") {
                    cfg.lambda_mode = LambdaMode::Auto;
                } else if (v == "published") {
                    cfg.lambda_mode = LambdaMode::Published;
                } else {
                    cfg.lambda_mode = LambdaMode::Fixed;
                    cfg.lambda_value = parse_number(value);
                }
            } else if (key == "seed") {
                rc.seed = static_cast<std::uint64_t>(parse_count(value));
            } else if (key == "snapshot_product") {
                rc.snapshot_product = parse_norm(value);
            } else if (key == "quotient_snapshots") {
                rc.quotient_snapshots = parse_bool(value);
            } else if (key == "decay") {
                rc.decay = parse_number(value);
            } else if (key == "discrepancy") {
                rc.discrepancy = parse_number(value);
            } else if (key == "full_baseline") {
                rc.full_baseline = parse_bool(value);
            } else if (key == "target") {
                cfg.target = value;
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else if (key == "format") {
                require(lower(value) == "csv", ErrorKind::Config, "only format = csv is supported");
                cfg.format = "csv";
            } else if (key == "bench_repeats") {
                cfg.bench_repeats = static_cast<int>(parse_count(value));
            } else {
                fail(ErrorKind::Config, "unknown key");
            }
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, origin + ": key '" + key + "': " + e.detail());
        }
    }
    if (optimal_r) {
        rc.r = optimal_grading(rc.alpha / 2.0);
    }
    rc.target = named_target(cfg.target, rc.domain.dim());
    try {
        rc.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, origin + ": " + e.detail());
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot read config file '" + path.string() + "'");
    return parse_config(in, path.string());
}

std::string format_config(const ExperimentConfig& cfg) {
    const ReconstructionConfig& rc = cfg.recon;
    std::ostringstream out;
    const auto num = [](double v) { return csv::format(v); };
    out << "experiment = " << to_string(cfg.id) << '\n';
    out << "domain = " << (rc.domain.dim() == 1 ? "interval" : "rectangle") << '\n';
    out << "lx = " << num(rc.domain.lx) << '\n';
    if (rc.domain.dim() == 2) {
        out << "ly = " << num(rc.domain.ly) << '\n';
    }
    out << "alpha = " << num(rc.alpha) << '\n';
    out << "T = " << num(rc.T) << '\n';
    out << "N = " << rc.N << '\n';
    out << "r = " << num(rc.r) << '\n';
    out << "h = " << num(rc.h) << '\n';
    out << "n_obs = " << rc.n_obs << '\n';
    out << "sigma = " << num(rc.sigma) << '\n';
    out << "pod_rank = " << rc.pod_rank << '\n';
    const auto lam = cfg.resolved_lambda();
    out << "lambda = " << (lam ? num(*lam) : std::string("auto")) << '\n';
    out << "seed = " << rc.seed << '\n';
    out << "snapshot_product = " << norm_name(rc.snapshot_product) << '\n';
    out << "quotient_snapshots = " << (rc.quotient_snapshots ? "true" : "false") << '\n';
    out << "decay = " << num(rc.decay > 0.0 ? rc.decay : kDefaultDecay) << '\n';
    out << "discrepancy = " << num(rc.discrepancy) << '\n';
    out << "full_baseline = " << (rc.full_baseline ? "true" : "false") << '\n';
    out << "target = " << cfg.target << '\n';
    out << "out_dir = " << cfg.out_dir.string() << '\n';
    out << "format = " << cfg.format << '\n';
    out << "bench_repeats = " << cfg.bench_repeats << '\n';
    return out.str();
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
    require(cfg.format == "csv", ErrorKind::Config, "only csv output is supported");
    try {
        fs::create_directories(cfg.out_dir / "plot");
    } catch (const fs::filesystem_error& e) {
        fail(ErrorKind::Io, std::string("stage output: ") + e.what());
    }
    {
        std::ofstream out(cfg.out_dir / "run.cfg");
        require(out.good(), ErrorKind::Io, "stage output: cannot write run.cfg");
        out << format_config(cfg);
    }
    if (cfg.id == ExperimentId::Ex1) {
        return run_forward(cfg, cfg.out_dir / "plot");
    }
    return run_reconstruction(cfg, cfg.out_dir / "plot");
}

BenchReport bench(const ExperimentConfig& cfg, int repeats, std::size_t rank_override) {
    require(repeats >= 1, ErrorKind::InvalidParameter, "need at least one repetition");
    const ReconstructionConfig rc = resolved_recon(cfg);
    rc.validate();
    const Discretization d = discretize(rc);
    const SourceSpec src{d.target, rc.alpha};

    BenchReport rep;
    rep.repeats = repeats;
    std::vector<double> tf, tr;
    Trajectory full;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        full = solve_full(*d.space, d.mesh, *d.kernel, src);
        tf.push_back(seconds(t0));
    }
    Eigen::MatrixXd psi;
    if (rank_override > 0) {
        require(rank_override <= d.space->dof(), ErrorKind::RankExceeded,
                "rank override exceeds the number of unknowns");
        psi = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d.space->dof()),
                                        static_cast<Eigen::Index>(rank_override));
    } else {
        const SnapshotSet set = collect_snapshots(full, *d.kernel, rc.quotient_snapshots, d.space,
                                                  rc.snapshot_product);
        psi = train_basis(set, rc.pod_rank).psi;
    }
    rep.rank = static_cast<std::size_t>(psi.cols());
    const ReducedOperator op = make_reduced_operator(*d.space, psi);
    const Eigen::VectorXd load = op.reduced_load(d.target);
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const Trajectory red = solve_reduced(op, d.mesh, *d.kernel, rc.alpha, load);
        tr.push_back(seconds(t0));
    }
    rep.full_solve = median(tf);
    rep.reduced_solve = median(tr);

    if (cfg.id != ExperimentId::Ex1) {
        ReconstructionConfig prc = rc;
        prc.full_baseline = true;
        const ForwardSetup setup = prepare_forward(prc);
        std::vector<double> pf, pr;
        for (int i = 0; i < repeats; ++i) {
            const PipelineResult res = run_pipeline(prc, setup);
            pf.push_back(res.result.wall_times.full_order);
            pr.push_back(res.result.wall_times.reduced_order);
        }
        rep.pipeline_full = median(pf);
        rep.pipeline_reduced = median(pr);
    }
    return rep;
}

std::string format_bench(const BenchReport& r) {
    std::ostringstream out;
    out << "repeats = " << r.repeats << '\n';
    out << "rank = " << r.rank << '\n';
    out << "full_solve_seconds = " << csv::format(r.full_solve) << '\n';
    out << "reduced_solve_seconds = " << csv::format(r.reduced_solve) << '\n';
    out << "solve_ratio = " << csv::format(r.solve_ratio()) << '\n';
    if (r.pipeline_reduced > 0.0) {
        out << "pipeline_full_seconds = " << csv::format(r.pipeline_full) << '\n';
        out << "pipeline_reduced_seconds = " << csv::format(r.pipeline_reduced) << '\n';
        out << "pipeline_ratio = " << csv::format(r.pipeline_ratio()) << '\n';
    }
    return out.str();
}

std::vector<fs::path> emit_plotdata(const PlotData& data, const fs::path& dir) {
    require(data.space != nullptr, ErrorKind::EmptyInput, "plot data has no space");
    const bool any = data.a1_true || data.a1_recovered || data.psi.cols() > 0 ||
                     data.lambda.size() > 0;
    require(any, ErrorKind::EmptyInput, "plot data is empty");
    require(data.psi.cols() == 0 ||
                static_cast<std::size_t>(data.psi.rows()) == data.space->dof(),
            ErrorKind::SpaceMismatch, "basis does not match the space");
    fs::create_directories(dir);

    const FemSpace& space = *data.space;
    const DomainSpec& dom = space.domain();
    std::vector<Point> grid;
    const std::size_t nx = space.cells_x();
    const std::size_t ny = space.dim() == 2 ? space.cells_y() : 0;
    for (std::size_t i = 0; i <= nx; ++i) {
        const double x = i == nx ? dom.lx : dom.lx * static_cast<double>(i) / static_cast<double>(nx);
        if (space.dim() == 1) {
            grid.push_back({x, 0.0});
            continue;
        }
        for (std::size_t j = 0; j <= ny; ++j) {
            const double y = j == ny ? dom.ly : dom.ly * static_cast<double>(j) / static_cast<double>(ny);
            grid.push_back({x, y});
        }
    }

    std::vector<fs::path> written;
    const auto emit = [&](const std::string& name, const Field& f) {
        const auto vals = eval_at(f, grid);
        std::vector<csv::Row> rows;
        rows.reserve(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (space.dim() == 1) {
                rows.push_back({grid[k].x, vals[k]});
            } else {
                rows.push_back({grid[k].x, grid[k].y, vals[k]});
            }
        }
        written.push_back(dir / (name + ".csv"));
        csv::write(written.back(),
                   space.dim() == 1 ? std::vector<std::string>{"x", "value"}
                                    : std::vector<std::string>{"x", "y", "value"},
                   rows);
    };

    if (data.a1_true) {
        emit("a1_true", *data.a1_true);
    }
    if (data.a1_recovered) {
        emit("a1_recovered", *data.a1_recovered);
    }
    const auto nb = std::min<Eigen::Index>(data.psi.cols(),
                                           static_cast<Eigen::Index>(data.max_basis_files));
    for (Eigen::Index j = 0; j < nb; ++j) {
        emit("psi_" + std::to_string(j + 1), Field(data.space, data.psi.col(j)));
    }
    if (data.lambda.size() > 0) {
        std::vector<csv::Row> rows;
        for (Eigen::Index j = 0; j < data.lambda.size(); ++j) {
            rows.push_back({static_cast<double>(j + 1), data.lambda[j], data.lambda[j] / data.lambda[0]});
        }
        written.push_back(dir / "eigen_decay.csv");
        csv::write(written.back(), {"j", "lambda", "relative"}, rows);
    }
    return written;
}

}  // namespace fracpod
