#include "grushin/cli.hpp"
#include "grushin/acceptance.hpp"
#include "grushin/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>
#include <thread>

namespace grushin {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& commands()
{
    static const std::vector<std::string> names{"mesh",     "solve",   "oracle",   "deriv", "branches",
                                                "pohozaev", "scaling", "critical", "suite"};
    return names;
}

std::string join(const std::vector<double>& v)
{
    std::string out;
    for (double x : v)
        out += (out.empty() ? "" : " ") + format_double(x);
    return out;
}

const PerturbationField& first_field(const std::vector<PerturbationField>& fields, const std::string& command)
{
    if (fields.empty())
        throw ConfigError("'" + command + "' needs a [field] section or --field");
    return fields.front();
}

CommandOutput output(const std::string& identity)
{
    CommandOutput out;
    out.identity = identity;
    return out;
}

void cluster_warnings(const Clustering& c, std::vector<std::string>& warnings)
{
    if (!c.warning.empty())
        warnings.push_back(c.warning);
}

struct Problem {
    Domain domain;
    Mesh mesh;
    DiscreteForms forms;
    EigenSystem esys;
};

Problem solve_problem(const RunConfig& cfg)
{
    Domain d = make_domain(cfg);
    Mesh m = make_mesh(d, cfg);
    DiscreteForms f = assemble(m, d.s());
    EigenSystem e = solve_lowest(f, cfg.m, cfg.tol);
    return {std::move(d), std::move(m), std::move(f), std::move(e)};
}

CommandOutput cmd_mesh(const RunConfig& cfg)
{
    const Domain d = make_domain(cfg);
    const Mesh m = make_mesh(d, cfg);
    write_mesh_csv(cfg.outDir, "mesh", m);
    const Measures ms = measure(m);
    int dofs = 0;
    for (char c : m.interior)
        dofs += c;
    CommandOutput out = output("discretization");
    out.body = Json{{"nodes", m.nodes.size()},
                    {"triangles", m.triangles.size()},
                    {"boundaryEdges", m.boundary.size()},
                    {"dofs", dofs},
                    {"volume", ms.volume},
                    {"perimeter", ms.perimeter},
                    {"maxEdge", max_edge_length(m)},
                    {"meetsDegenerateSet", d.meets_degenerate_set()},
                    {"corners", d.corner_count()}};
    return out;
}

CommandOutput cmd_solve(const RunConfig& cfg)
{
    const Problem p = solve_problem(cfg);
    const Clustering cl = cluster(p.esys, cfg.clusterTol);
    CommandOutput out = output("weak-eigenproblem");
    cluster_warnings(cl, out.warnings);
    out.body = to_json(p.esys);
    out.body["clustering"] = to_json(cl);
    out.body["dofs"] = p.forms.dofs();
    if (cfg.writeEigenvectors)
        write_eigenvectors_csv(fs::path(cfg.outDir) / "eigenvectors.csv", p.esys, p.forms, p.mesh);
    if (cfg.writeMatrices) {
        write_coo_csv(fs::path(cfg.outDir) / "stiffness.csv", p.forms.stiffness);
        write_coo_csv(fs::path(cfg.outDir) / "mass.csv", p.forms.mass);
    }
    return out;
}

CommandOutput cmd_oracle(const RunConfig& cfg)
{
    const Domain d = make_domain(cfg);
    if (!d.rectangle())
        throw ConfigError("oracle needs a rectangle domain");
    const Rect r = *d.rectangle();
    const OracleSpectrum spec = rectangle_spectrum(r.xmin, r.xmax, r.ymax - r.ymin, d.s(), cfg.m, 1e-9);
    write_spectrum_csv(fs::path(cfg.outDir) / "spectrum.csv", spec);
    CommandOutput out = output("separable-reduction");
    out.body = to_json(spec);
    return out;
}

CommandOutput cmd_deriv(const RunConfig& cfg)
{
    const Problem p = solve_problem(cfg);
    const auto fields = make_fields(cfg, p.domain);
    const Cluster F = select_cluster(cfg, p.esys);
    if (cfg.tau > F.size())
        throw ConfigError("tau exceeds the cluster size");
    FdOptions opts;
    opts.eps = cfg.eps;
    opts.solverTol = cfg.tol;
    const DerivativeReport rep =
        derivative_report(p.domain, p.mesh, p.esys, p.forms, {F, cfg.tau}, first_field(fields, "deriv"), opts);
    write_fd_csv(fs::path(cfg.outDir) / "fd_sweep.csv", rep.fd);
    CommandOutput out = output(rep.boundaryForm ? "hadamard-boundary-formula" : "volume-shape-differential");
    if (!rep.gateMessage.empty())
        out.warnings.push_back(rep.gateMessage);
    if (!rep.fd.warning.empty())
        out.warnings.push_back(rep.fd.warning);
    cluster_warnings(cluster(p.esys, cfg.clusterTol), out.warnings);
    out.body = Json{{"cluster", to_json(F)},
                    {"tau", cfg.tau},
                    {"field", to_string(fields.front().kind())},
                    {"eigenvalues", to_json(p.esys.eigenvalues)},
                    {"report", to_json(rep)}};
    return out;
}

CommandOutput cmd_branches(const RunConfig& cfg)
{
    const Problem p = solve_problem(cfg);
    const auto fields = make_fields(cfg, p.domain);
    const Cluster F = select_cluster(cfg, p.esys);
    FdOptions opts;
    opts.solverTol = cfg.tol;
    const BranchSlopes b = branch_slopes(p.domain, p.mesh, F, first_field(fields, "branches"), cfg.branchEps, opts);
    std::string csv = "branch,formula,fd\n";
    for (Eigen::Index i = 0; i < b.formula.size(); ++i)
        csv += std::to_string(i + 1) + "," + format_double(b.formula[i]) + "," + format_double(b.fd[i]) + "\n";
    write_text(fs::path(cfg.outDir) / "branches.csv", csv);
    CommandOutput out = output("rellich-nagy-branches");
    if (b.crossing)
        out.warnings.push_back("a neighboring eigenvalue approached the cluster in the finite differences");
    out.body = Json{{"cluster", to_json(F)}, {"field", to_string(fields.front().kind())}, {"eps", cfg.branchEps},
                    {"slopes", to_json(b)}};
    return out;
}

CommandOutput cmd_pohozaev(const RunConfig& cfg)
{
    const Problem p = solve_problem(cfg);
    const auto traces = normal_derivative_trace(p.esys, p.forms, p.mesh, p.domain);
    FieldParams dp;
    dp.s = p.domain.s();
    const PerturbationField dil = make_field(FieldKind::DilationGenerator, dp, p.domain);
    CommandOutput out = output("rellich-pohozaev");
    if (p.domain.corner_count() > 0)
        out.warnings.push_back("domain has corners; the identity assumes a C1 boundary");
    Json rows = Json::array();
    for (int j : cfg.pohozaevIndices) {
        const auto r = pohozaev_residual(p.esys, j - 1, traces, p.domain);
        Json row{{"index", j}, {"lambda", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual}};
        if (!regularity_gate(p.domain, dil)) {
            const double h = hadamard_matrix(p.esys, traces, Cluster{{j - 1}, r.lhs}, dil, p.domain)(0, 0);
            row["hadamardDilation"] = h;
            row["matchingResidual"] = std::abs(r.rhs + 0.5 * h) / r.lhs;
        }
        rows.push_back(row);
    }
    out.body = Json{{"results", rows}};
    return out;
}

CommandOutput cmd_scaling(const RunConfig& cfg)
{
    const Domain d = make_domain(cfg);
    const Mesh m = make_mesh(d, cfg);
    CommandOutput out = output("dilation-scaling-law");
    Json rows = Json::array();
    double worst = 0.0;
    for (double t : cfg.t) {
        const auto r = scaling_check(d, m, t, cfg.m, cfg.tol);
        worst = std::max(worst, r.maxDeviation);
        rows.push_back(Json{{"t", t},
                            {"base", to_json(r.base)},
                            {"scaled", to_json(r.scaled)},
                            {"deviations", to_json(r.deviations)},
                            {"maxDeviation", r.maxDeviation}});
    }
    out.body = Json{{"results", rows}, {"maxDeviation", worst}};
    return out;
}

CommandOutput cmd_critical(const RunConfig& cfg)
{
    Problem p = solve_problem(cfg);
    const EigenSystem f = renormalize(p.esys, p.forms, Normalization::FormOrthonormal);
    const Cluster F = select_cluster(cfg, p.esys);
    const auto crit = criticality_residual(f, F, p.forms, p.mesh, p.domain, cfg.constraint);
    write_profile_csv(fs::path(cfg.outDir) / "profile.csv", crit);
    CommandOutput out = output(cfg.constraint == Constraint::Volume ? "volume-criticality" : "perimeter-criticality");
    if (!crit.fit.applicable)
        out.warnings.push_back("perimeter fit not applicable: the curvature vanishes on the boundary");
    Json multipliers = Json::array();
    for (const auto& psi : make_fields(cfg, p.domain)) {
        const double dl = dLambda(f, p.forms, {F, 1}, psi, p.mesh, p.domain, FormKind::Volume);
        const auto dc = constraint_differential(p.mesh, p.domain, psi, cfg.constraint);
        if (dc.cornerFlag)
            out.warnings.push_back("perimeter differential ignores the corners of the domain");
        multipliers.push_back(Json{{"field", to_string(psi.kind())},
                                   {"dLambda", dl},
                                   {"constraintDifferential", dc.value},
                                   {"multiplier", dc.value != 0.0 ? Json(-dl / dc.value) : Json(nullptr)}});
    }
    int used = 0;
    for (char u : crit.used)
        used += u;
    out.body = Json{{"cluster", to_json(F)},
                    {"constraint", to_string(cfg.constraint)},
                    {"fit", to_json(crit.fit)},
                    {"edgesUsed", used},
                    {"edgesExcluded", static_cast<int>(crit.used.size()) - used},
                    {"multipliers", multipliers}};
    return out;
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_error(const fs::path& dir, const std::string& command, int code, const std::string& kind,
                 const std::string& message)
{
    std::cerr << "grushin " << command << ": " << message << "\n";
    try {
        write_json(dir / "error.json", Json{{"status", "error"},
                                           {"command", command},
                                           {"exitCode", code},
                                           {"kind", kind},
                                           {"message", message}});
    } catch (const std::exception& e) {
        std::cerr << "grushin: could not write error record: " << e.what() << "\n";
    }
}

} // namespace

void apply_overrides(ConfigTree& tree, const Overrides& o)
{
    if (o.field) {
        auto& f = tree["field"];
        if (f.count("kind") == 0 || f["kind"] != *o.field)
            f = KeyValues{{"kind", *o.field}};
    }
    if (!o.t.empty())
        tree["scaling"]["t"] = join(o.t);
    if (o.tau)
        tree["derivative"]["tau"] = std::to_string(*o.tau);
    if (o.clusterTol)
        tree["solver"]["cluster_tol"] = format_double(*o.clusterTol);
}

CommandOutput run_command(const std::string& command, const RunConfig& cfg)
{
    if (command == "mesh")
        return cmd_mesh(cfg);
    if (command == "solve")
        return cmd_solve(cfg);
    if (command == "oracle")
        return cmd_oracle(cfg);
    if (command == "deriv")
        return cmd_deriv(cfg);
    if (command == "branches")
        return cmd_branches(cfg);
    if (command == "pohozaev")
        return cmd_pohozaev(cfg);
    if (command == "scaling")
        return cmd_scaling(cfg);
    if (command == "critical")
        return cmd_critical(cfg);
    throw ConfigError("unknown command '" + command + "'");
}

CommandOutput run_suite(bool quiet)
{
    const AcceptanceReport rep = run_acceptance([&](const CriterionResult& r) {
        if (!quiet)
            std::cout << summary_line(r) << std::endl;
    });
    CommandOutput out = output("acceptance-battery");
    out.body = to_json(rep);
    out.metadata = Json{{"timing", timing_json(rep)}};
    out.failed = !rep.passed();
    return out;
}

int cli_main(int argc, char** argv)
{
    CLI::App app{"Grushin Laplacian eigenvalues and shape sensitivities"};
    app.require_subcommand(1, 1);
    std::string configPath, outDir;
    int threads = 0;
    Overrides ov;
    bool quiet = false;
    for (const auto& name : commands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", configPath, "INI run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", outDir, "output directory (overrides [output] dir)");
        sub->add_option("--threads", threads, "worker cap (0: hardware concurrency)")->check(CLI::NonNegativeNumber);
        if (name == "scaling")
            sub->add_option("--t", ov.t, "dilation factors");
        if (name == "deriv" || name == "branches" || name == "critical")
            sub->add_option_function<std::string>(
                "--field", [&](const std::string& v) { ov.field = v; }, "field kind with default parameters");
        if (name == "deriv")
            sub->add_option_function<int>("--tau", [&](int v) { ov.tau = v; }, "elementary symmetric order");
        if (name != "mesh" && name != "oracle" && name != "scaling" && name != "suite")
            sub->add_option_function<double>(
                "--cluster-tol", [&](double v) { ov.clusterTol = v; }, "relative cluster tolerance");
        if (name == "suite")
            sub->add_flag("--quiet", quiet, "no per-criterion lines on stdout");
        else
            sub->get_option("--config")->required();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    thread_limit() = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());

    fs::path out = outDir.empty() ? fs::path("out") : fs::path(outDir);
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    try {
        std::string hash = "none";
        CommandOutput result;
        if (command == "suite") {
            if (!configPath.empty()) {
                const RunConfig cfg = make_run_config(read_config_tree(configPath));
                hash = config_hash(cfg);
                if (outDir.empty())
                    out = cfg.outDir;
            }
            result = run_suite(quiet);
        } else {
            ConfigTree tree = read_config_tree(configPath);
            apply_overrides(tree, ov);
            RunConfig cfg = make_run_config(tree);
            if (!outDir.empty())
                cfg.outDir = outDir;
            out = cfg.outDir;
            hash = config_hash(cfg);
            result = run_command(command, cfg);
        }
        Json meta{{"command", command},
                  {"configHash", hash},
                  {"startedAt", started},
                  {"wallSeconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                  {"threads", thread_limit().load()}};
        for (auto& [k, v] : result.metadata.items())
            meta[k] = v;
        Json report{{"command", command},
                    {"identity", result.identity},
                    {"configHash", hash},
                    {"status", result.failed ? "failed" : "ok"},
                    {"warnings", result.warnings}};
        for (auto& [k, v] : result.body.items())
            report[k] = v;
        write_json(out / (command + ".json"), report);
        write_json(out / (command + ".meta.json"), meta);
        for (const auto& w : result.warnings)
            std::cerr << "warning: " << w << "\n";
        if (result.failed) {
            std::cerr << "grushin " << command << ": some criteria failed\n";
            return 1;
        }
        return 0;
    } catch (const ConfigError& e) {
        write_error(out, command, 2, "config", e.what());
        return 2;
    } catch (const std::exception& e) {
        write_error(out, command, 1, "runtime", e.what());
        return 1;
    }
}

} // namespace grushin
