#pragma once

#include <chrono>

#include "nonlocal/config.hpp"
#include "nonlocal/rearrange.hpp"
#include "nonlocal/report.hpp"

namespace nonlocal {

// Failure inside the numerical pipeline, annotated with the stage that threw.
// Configuration problems stay ValidationError and are reported separately.
struct StageError : NonlocalError {
    std::string stage;
    StageError(const std::string& st, const std::string& what)
        : NonlocalError("stage '" + st + "': " + what), stage(st) {}
};

template <typename F>
auto run_stage(const std::string& name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

struct Tolerances {
    double hadamard_rel = 0.02;    // |formula - fd| / max(|fd|, 1e-8)
    double zero_mode = 1e-10;      // |lambda_1| for the constant-null-mode rule
    double zero_vector = 1e-6;     // deviation of that eigenvector from constant
    double derivative_zero = 1e-8; // formula and fd magnitude on the null mode
    double pullback = 1e-8;        // Hausdorff distance between spectra
    double solvability = 1e-4;     // |<u0, f_V>_w|
    double residual = 1e-8;        // derivative-system solve residual
    double orthogonality = 1e-12;  // |<w, u0>_w|
    double slack = 1e-8;           // allowed negativity of inequality slacks
    double layer_cake_rel = 1e-4;  // three-way layer-cake floor; the a priori
                                   // step-profile quadrature bound widens it
    double norm_rel = 1e-3;        // rearranged L2 norm, relative drift
    double sweep_floor = 1e-8;     // increments below this count as converged
    double fk_margin = 0.0;        // 0: measured from one refinement step
};

struct RunConfig {
    Scenario scenario;
    bool builtin = true;
    std::string task;
    int resolution = 0;
    int refined_resolution = 0;
    std::vector<VectorField> fields;
    FDOptions fd;
    Tolerances tol;
    double pullback_scale = 2.0;
    std::uint64_t seed = 20240901ull;
    int trials = 100;
    int levels = 20;
    int star_res = 0;
    std::string out_dir = "out";
    std::function<QuadratureDomain(int, double)> make_scaled;  // (res, scale)
    std::vector<std::string> config_echo;
};

namespace detail {

inline const std::set<std::string>& task_names() {
    static const std::set<std::string> s = {"spectrum",          "hadamard",    "pullback",
                                            "eigfun-derivative", "faber-krahn", "rearrange-suite"};
    return s;
}

inline const std::set<std::string>& flat_shapes() {
    static const std::set<std::string> s = {"interval", "square", "disk", "annulus", "radial-disk"};
    return s;
}

inline std::string builtin_shape(const std::string& name) {
    if (name == "dirichlet-interval" || name == "neumann-interval") return "interval";
    if (name == "dirichlet-disk" || name == "neumann-disk") return "disk";
    if (name == "hole-annulus") return "annulus";
    if (name == "sphere") return "sphere";
    if (name == "hemisphere") return "hemisphere";
    if (name == "cylinder") return "segment-slice";
    throw ValidationError("unknown scenario: " + name);
}

inline std::function<QuadratureDomain(int, double)> builtin_scaled(const std::string& name) {
    const std::string shape = builtin_shape(name);
    if (shape == "interval")
        return [](int r, double c) { return interval_domain(0.0, c, r); };
    if (shape == "disk")
        return [](int r, double c) { return disk_domain(c, r); };
    if (shape == "annulus")
        return [](int r, double c) { return annulus_domain(c, 0.35 * c, r); };
    return nullptr;
}

inline int shape_ambient_dim(const std::string& shape) {
    if (shape == "interval") return 1;
    if (shape == "sphere" || shape == "hemisphere") return 3;
    return 2;
}

inline NormalTermRoute parse_route(const std::string& s) {
    if (s == "gradient-once") return NormalTermRoute::gradient_once;
    if (s == "gradient-twice") return NormalTermRoute::gradient_twice;
    if (s == "kernel-gradient") return NormalTermRoute::kernel_gradient;
    throw ValidationError("unknown normal-term route: " + s);
}

inline CurvatureConvention parse_curvature(const std::string& s) {
    if (s == "sum-of-principal") return CurvatureConvention::sum_of_principal;
    if (s == "mean") return CurvatureConvention::mean;
    throw ValidationError("unknown curvature convention: " + s);
}

}  // namespace detail

inline Tolerances resolve_tolerances(const ConfigMap& cfg) {
    Tolerances t;
    auto read = [&](const char* key, double fallback) {
        const double v = cfg.num(std::string("tolerances.") + key, fallback);
        require(v > 0.0, std::string("tolerances.") + key + " must be positive");
        return v;
    };
    t.hadamard_rel = read("hadamard_rel", t.hadamard_rel);
    t.zero_mode = read("zero_mode", t.zero_mode);
    t.zero_vector = read("zero_vector", t.zero_vector);
    t.derivative_zero = read("derivative_zero", t.derivative_zero);
    t.pullback = read("pullback", t.pullback);
    t.solvability = read("solvability", t.solvability);
    t.residual = read("residual", t.residual);
    t.orthogonality = read("orthogonality", t.orthogonality);
    t.slack = read("slack", t.slack);
    t.layer_cake_rel = read("layer_cake_rel", t.layer_cake_rel);
    t.norm_rel = read("norm_rel", t.norm_rel);
    t.sweep_floor = read("sweep_floor", t.sweep_floor);
    // 0 means: measure the allowance from one refinement step
    t.fk_margin = cfg.num("tolerances.fk_margin", 0.0);
    require(t.fk_margin >= 0.0, "tolerances.fk_margin must be nonnegative");
    return t;
}

inline RunConfig resolve_run(const ConfigMap& cfg) {
    RunConfig rc;
    rc.task = cfg.str_required("scenario.task");
    require(detail::task_names().count(rc.task) > 0, "unknown task: " + rc.task);

    std::string shape;
    if (cfg.has("scenario.name")) {
        const std::string name = cfg.str_required("scenario.name");
        rc.scenario = find_scenario(name);
        for (const char* sec : {"domain", "kernel", "coefficient"})
            require(!cfg.section_present(sec),
                    std::string("built-in scenario '") + name + "' already fixes the [" + sec +
                        "] section");
        rc.resolution = cfg.integer("scenario.resolution", rc.scenario.reference_resolution());
        require(rc.resolution > 0, "scenario.resolution must be positive");
        shape = detail::builtin_shape(name);
        rc.make_scaled = detail::builtin_scaled(name);
    } else {
        rc.builtin = false;
        Scenario sc;
        sc.name = cfg.str("scenario.label", "custom");
        sc.description = "user-defined scenario";
        shape = cfg.str_required("domain.shape");
        sc.ambient_dim = detail::shape_ambient_dim(shape);
        rc.resolution = cfg.integer("domain.resolution", 0);
        require(rc.resolution > 0, "domain.resolution must be positive");
        {
            std::vector<double> lad = cfg.num_list(
                "scenario.resolutions",
                {std::max(4.0, std::floor(rc.resolution / 2.0)),
                 static_cast<double>(rc.resolution), 2.0 * rc.resolution});
            require(lad.size() == 3, "scenario.resolutions must list three values");
            for (double v : lad) sc.resolutions.push_back(static_cast<int>(std::llround(v)));
            require(sc.resolutions[0] < sc.resolutions[1] && sc.resolutions[1] < sc.resolutions[2],
                    "scenario.resolutions must be strictly ascending");
        }
        const KernelFamily fam =
            parse_kernel_family(cfg.str("kernel.family", "mollified-indicator"));
        const double delta = cfg.num("kernel.delta", 0.5);
        require(delta > 0.0, "kernel.delta must be positive");
        const double width = cfg.num("kernel.width", 0.2 * delta);
        require(width > 0.0, "kernel.width must be positive");
        sc.kernel = make_kernel(fam, delta, sc.ambient_dim, width);
        // eager build once so descriptor problems surface as validation errors
        build_shape(shape, cfg, rc.resolution);
        build_coefficient_spec(cfg, sc.ambient_dim, rc.resolution);
        sc.make_domain = [cfg, shape](int r) { return build_shape(shape, cfg, r); };
        sc.make_coefficient = [cfg, dim = sc.ambient_dim](int r) {
            return build_coefficient_spec(cfg, dim, r);
        };
        const std::string tgt = cfg.str("scenario.target", "principal");
        if (tgt == "principal")
            sc.target = TargetMode::principal;
        else if (tgt == "second")
            sc.target = TargetMode::second;
        else if (tgt == "first-simple")
            sc.target = TargetMode::first_simple_above_principal;
        else
            throw ValidationError("unknown scenario.target: " + tgt);
        rc.scenario = std::move(sc);
        rc.make_scaled = [cfg, shape](int r, double c) {
            return build_scaled_shape(shape, cfg, r, c);
        };
        if (!detail::flat_shapes().count(shape)) rc.make_scaled = nullptr;
    }
    if (cfg.has("scenario.route"))
        rc.scenario.options.route = detail::parse_route(cfg.str_required("scenario.route"));
    if (cfg.has("scenario.curvature"))
        rc.scenario.options.curvature =
            detail::parse_curvature(cfg.str_required("scenario.curvature"));
    {
        int fallback = 2 * rc.resolution;
        for (int r : rc.scenario.resolutions)
            if (r > rc.resolution) {
                fallback = r;
                break;
            }
        rc.refined_resolution = cfg.integer("scenario.refined_resolution", fallback);
        require(rc.refined_resolution > rc.resolution,
                "scenario.refined_resolution must exceed scenario.resolution");
    }

    const int dim = rc.scenario.ambient_dim;
    const bool extra_field_keys = cfg.has("field.direction") || cfg.has("field.center") ||
                                  cfg.has("field.width") || cfg.has("field.x") ||
                                  cfg.has("field.y") || cfg.has("field.z");
    const std::string fname = cfg.str("field.name", rc.builtin ? "all" : "");
    if (fname == "all") {
        require(rc.builtin && !extra_field_keys,
                "field.name = all only selects the pinned fields of a built-in scenario");
        rc.fields = rc.scenario.fields;
    } else if (!fname.empty()) {
        if (rc.builtin && !extra_field_keys)
            for (const auto& f : rc.scenario.fields)
                if (f.name == fname) rc.fields = {f};
        if (rc.fields.empty()) rc.fields = {build_field(cfg, fname, dim)};
    }
    if (rc.task == "hadamard" || rc.task == "eigfun-derivative")
        require(!rc.fields.empty(), "task " + rc.task + " needs a vector field descriptor");

    rc.fd.steps = cfg.num_list("fd.steps", rc.fd.steps);
    for (double s : rc.fd.steps) require(s > 0.0, "fd.steps must be positive");
    rc.fd.eigen_count = cfg.integer("fd.eigen_count", rc.fd.eigen_count);
    require(rc.fd.eigen_count >= 1, "fd.eigen_count must be at least 1");

    rc.tol = resolve_tolerances(cfg);
    rc.pullback_scale = cfg.num("pullback.scale", 2.0);
    require(rc.pullback_scale > 0.0 && rc.pullback_scale != 1.0,
            "pullback.scale must be positive and different from 1");
    rc.seed = cfg.seed("run.seed", rc.seed);
    rc.fd.seed = rc.seed;
    rc.trials = cfg.integer("run.trials", rc.trials);
    require(rc.trials > 0, "run.trials must be positive");
    rc.levels = cfg.integer("run.levels", rc.levels);
    require(rc.levels > 0, "run.levels must be positive");
    rc.star_res = cfg.integer("run.star_res", 0);
    require(rc.star_res >= 0, "run.star_res must be nonnegative");
    rc.out_dir = cfg.str("run.out", rc.out_dir);

    if (rc.task == "pullback")
        require(static_cast<bool>(rc.make_scaled),
                "pullback task needs a scalable full-dimensional domain");
    if (rc.task == "faber-krahn" || rc.task == "rearrange-suite")
        require(detail::flat_shapes().count(shape) > 0,
                "task " + rc.task + " needs a flat full-dimensional domain");

    const auto unknown = cfg.unknown_keys();
    if (!unknown.empty()) {
        std::string joined;
        for (std::size_t i = 0; i < unknown.size(); ++i) joined += (i ? " " : "") + unknown[i];
        throw ValidationError("unknown config keys: " + joined);
    }
    rc.config_echo = cfg.echo();
    return rc;
}

// ---------------------------------------------------------------------------
// Task drivers. Each fills tables, verdicts and warnings on the report.

namespace detail {

inline double constant_deviation(const VectorXd& u, const VectorXd& w) {
    const double mass = w.sum();
    const double mean = (u.array() * w.array()).sum() / mass;
    return weighted_norm(u - VectorXd::Constant(u.size(), mean), w);
}

inline FDOptions fd_options(const RunConfig& rc, int eigen_index) {
    FDOptions fo = rc.fd;
    fo.eigen_count = std::max(fo.eigen_count, eigen_index + 4);
    return fo;
}

}  // namespace detail

inline void spectrum_task(const RunConfig& rc, RunReport& rep) {
    const Scenario& sc = rc.scenario;
    ScenarioSolve sol = run_stage("solve", [&] { return solve_scenario(sc, rc.resolution); });
    const NonlocalOperator& op = sol.op;
    const double btol = band_tolerance(op);
    const bool neumann = op.spec.rule == CoefficientRule::neumann;

    struct Row {
        int idx;
        double lam;
        bool below, simple;
        double resid, cdev;
    };
    std::vector<Row> rows;
    if (op.size() <= 2048) {
        SpectrumReport sr = run_stage("full-spectrum", [&] { return full_spectrum(op); });
        for (const auto& ce : sr.discrete)
            rows.push_back({ce.index, ce.value, ce.below_band, ce.simple, ce.residual,
                            detail::constant_deviation(sr.eigenvectors.col(ce.index),
                                                       op.domain.weights)});
    } else {
        const int k = std::min(op.size(), 8);
        LanczosResult lr = run_stage(
            "iterative-spectrum", [&] { return operator_smallest(op, k, VectorXd(), true, rc.seed); });
        for (int j = 0; j < k; ++j) {
            const double lam = lr.values[j];
            if (lam >= op.band_min - btol) break;
            double gap = std::numeric_limits<double>::max();
            if (j > 0) gap = std::min(gap, lam - lr.values[j - 1]);
            if (j + 1 < k) gap = std::min(gap, lr.values[j + 1] - lam);
            const VectorXd v = lr.vectors.col(j);
            rows.push_back({j, lam, true, gap > simplicity_gap_tol(lam),
                            weighted_norm(op.apply(v) - lam * v, op.domain.weights),
                            detail::constant_deviation(v, op.domain.weights)});
        }
    }

    Table t{"spectrum",
            {"scenario", "resolution", "index", "eigenvalue", "band_min", "band_max", "band_tol",
             "below_band", "simple", "residual", "constant_deviation", "verdict"},
            {}};
    for (const auto& r : rows) {
        Verdict v = Verdict::info;
        if (neumann && r.idx == 0)
            v = (std::abs(r.lam) <= rc.tol.zero_mode && r.cdev <= rc.tol.zero_vector)
                    ? Verdict::pass
                    : Verdict::fail;
        else if (r.idx == sol.eigen_index)
            v = sol.inconclusive ? Verdict::warn : Verdict::pass;
        t.add({sc.name, cell(rc.resolution), cell(r.idx), cell(r.lam), cell(op.band_min),
               cell(op.band_max), cell(btol), cell(r.below), cell(r.simple), cell(r.resid),
               cell(r.cdev), to_string(v)});
    }
    rep.tables.push_back(std::move(t));

    if (rows.empty()) {
        rep.warnings.push_back("inconclusive: no eigenvalues separated from the essential band at "
                               "resolution " +
                               std::to_string(rc.resolution));
        rep.add_verdict("spectrum", Verdict::warn);
        ExistenceDiagnostic diag = existence_diagnostic(op.coeff, op.domain);
        if (diag.divergence_suspected)
            rep.warnings.push_back("existence diagnostic: the regularized coefficient mass keeps "
                                   "growing; the variational minimum may not be attained");
    } else {
        if (neumann) {
            const auto& r0 = rows.front();
            const bool ok = r0.idx == 0 && std::abs(r0.lam) <= rc.tol.zero_mode &&
                            r0.cdev <= rc.tol.zero_vector;
            rep.add_verdict("spectrum-zero-mode", ok ? Verdict::pass : Verdict::fail);
        }
        if (sol.inconclusive) {
            rep.warnings.push_back("inconclusive: " + sol.note);
            rep.add_verdict("spectrum-tracked", Verdict::warn);
        } else {
            rep.add_verdict("spectrum-tracked", Verdict::pass);
        }
    }
}

inline void hadamard_task(const RunConfig& rc, RunReport& rep) {
    const Scenario& sc = rc.scenario;
    ScenarioSolve sol = run_stage("solve", [&] { return solve_scenario(sc, rc.resolution); });
    if (sol.inconclusive) {
        rep.warnings.push_back("inconclusive: " + sol.note);
        rep.add_verdict("hadamard", Verdict::warn);
        return;
    }
    const FDOptions fo = detail::fd_options(rc, sol.eigen_index);
    std::vector<FDResult> fds;
    for (const auto& V : rc.fields)
        fds.push_back(run_stage("finite-difference " + V.name, [&] {
            return fd_derivative(sol.op.domain, sc.kernel, sol.op.spec, V, sol.u0, fo);
        }));

    Table spz_table{"specialization",
                    {"scenario", "field", "specialized_value", "reference_value", "gap"},
                    {}};
    for (std::size_t i = 0; i < rc.fields.size(); ++i) {
        const VectorField& V = rc.fields[i];
        HadamardReport f = run_stage("formula " + V.name, [&] {
            return hadamard_derivative(sol.op, sol.lambda0, sol.u0, V, sc.options);
        });
        const double rel =
            std::abs(f.value - fds[i].value) / std::max(std::abs(fds[i].value), 1e-8);
        const Verdict v = rel <= rc.tol.hadamard_rel ? Verdict::pass : Verdict::fail;
        Table t{"hadamard_" + V.name,
                {"scenario", "eigen_index", "lambda0", "term1", "term2", "term3", "term4",
                 "formula", "fd_value", "rel_err", "verdict"},
                {}};
        t.add({sc.name, cell(sol.eigen_index), cell(sol.lambda0), cell(f.term_boundary),
               cell(f.term_coefficient), cell(f.term_curvature), cell(f.term_normal),
               cell(f.value), cell(fds[i].value), cell(rel), to_string(v)});
        rep.tables.push_back(std::move(t));
        rep.add_verdict("hadamard-" + V.name, v);
        if (!fds[i].branch_ok)
            rep.warnings.push_back("finite differences for field " + V.name +
                                   " could not certify branch separation");
        SpecializationReport spz = specialized_value(sc, sol, V, f);
        if (spz.available) {
            const double ref = sc.name == "hole-annulus" ? f.term_coefficient : f.value;
            spz_table.add({sc.name, V.name, cell(spz.value), cell(ref), cell(spz.gap)});
        }
    }
    if (!spz_table.rows.empty()) rep.tables.push_back(std::move(spz_table));

    if (sc.adjudicate_conventions) {
        Table ct{"conventions", {"scenario", "curvature", "route", "worst_rel", "selected"}, {}};
        ConventionChoice best;
        bool first = true;
        std::vector<ConventionChoice> table;
        for (CurvatureConvention c :
             {CurvatureConvention::sum_of_principal, CurvatureConvention::mean})
            for (NormalTermRoute r :
                 {NormalTermRoute::gradient_once, NormalTermRoute::gradient_twice,
                  NormalTermRoute::kernel_gradient}) {
                HadamardOptions o;
                o.curvature = c;
                o.route = r;
                double worst = 0.0;
                for (std::size_t i = 0; i < rc.fields.size(); ++i) {
                    HadamardReport f = run_stage("conventions", [&] {
                        return hadamard_derivative(sol.op, sol.lambda0, sol.u0, rc.fields[i], o);
                    });
                    worst = std::max(worst, std::abs(f.value - fds[i].value) /
                                                std::max(std::abs(fds[i].value), 1e-8));
                }
                table.push_back({c, r, worst});
                if (first || worst < best.worst_rel) best = table.back();
                first = false;
            }
        for (const auto& ch : table)
            ct.add({sc.name, to_string(ch.curvature), to_string(ch.route), cell(ch.worst_rel),
                    cell(ch.curvature == best.curvature && ch.route == best.route)});
        rep.tables.push_back(std::move(ct));
    }
}

inline void pullback_task(const RunConfig& rc, RunReport& rep) {
    const Scenario& sc = rc.scenario;
    const double c = rc.pullback_scale;
    QuadratureDomain dom = run_stage("assemble", [&] { return sc.make_domain(rc.resolution); });
    CoefficientSpec spec = sc.make_coefficient(rc.resolution);
    QuadratureDomain image =
        run_stage("assemble-image", [&] { return rc.make_scaled(rc.resolution, c); });
    const int dim = sc.ambient_dim;
    auto h = [c](const VectorXd& x) { return (c * x).eval(); };
    auto Dh = [c, dim](const VectorXd&) { return (c * MatrixXd::Identity(dim, dim)).eval(); };
    CoefficientSpec ispec = transported_spec(spec, dilation_field(dim), c - 1.0);
    PullbackReport pr = run_stage(
        "pullback", [&] { return pullback_check(dom, image, h, Dh, sc.kernel, ispec); });
    const bool ok = pr.spectrum_hausdorff <= rc.tol.pullback && pr.band_min_difference == 0.0 &&
                    pr.band_max_difference == 0.0;
    Table t{"pullback",
            {"scenario", "scale", "node_mismatch", "matrix_mismatch", "spectrum_hausdorff",
             "band_min_diff", "band_max_diff", "tolerance", "verdict"},
            {}};
    t.add({sc.name, cell(c), cell(pr.node_mismatch), cell(pr.matrix_mismatch),
           cell(pr.spectrum_hausdorff), cell(pr.band_min_difference), cell(pr.band_max_difference),
           cell(rc.tol.pullback), to_string(ok ? Verdict::pass : Verdict::fail)});
    rep.tables.push_back(std::move(t));
    rep.add_verdict("pullback", ok ? Verdict::pass : Verdict::fail);
}

inline void eigfun_derivative_task(const RunConfig& rc, RunReport& rep) {
    const Scenario& sc = rc.scenario;
    ScenarioSolve sol = run_stage("solve", [&] { return solve_scenario(sc, rc.resolution); });
    if (sol.inconclusive) {
        rep.warnings.push_back("inconclusive: " + sol.note);
        rep.add_verdict("eigfun-derivative", Verdict::warn);
        return;
    }
    const FDOptions fo = detail::fd_options(rc, sol.eigen_index);
    Table t{"eigfun_derivative",
            {"scenario", "field", "resolution", "eigen_index", "lambda0", "dlambda_fd",
             "solvability", "residual", "orthogonality", "verdict"},
            {}};
    for (const auto& V : rc.fields) {
        FDResult fd = run_stage("finite-difference " + V.name, [&] {
            return fd_derivative(sol.op.domain, sc.kernel, sol.op.spec, V, sol.u0, fo);
        });
        EigenDerivativeReport der = run_stage("derivative-solve " + V.name, [&] {
            return eigenfunction_derivative(sol.op, sol.lambda0, sol.u0, V, fd.value);
        });
        const bool ok = der.solvability <= rc.tol.solvability && der.residual <= rc.tol.residual &&
                        der.orthogonality <= rc.tol.orthogonality;
        t.add({sc.name, V.name, cell(rc.resolution), cell(sol.eigen_index), cell(sol.lambda0),
               cell(fd.value), cell(der.solvability), cell(der.residual), cell(der.orthogonality),
               to_string(ok ? Verdict::pass : Verdict::fail)});
        rep.add_verdict("eigfun-derivative-" + V.name, ok ? Verdict::pass : Verdict::fail);
    }
    rep.tables.push_back(std::move(t));
}

inline void faber_krahn_task(const RunConfig& rc, RunReport& rep) {
    const Scenario& sc = rc.scenario;
    QuadratureDomain dom = run_stage("assemble", [&] { return sc.make_domain(rc.resolution); });
    CoefficientSpec spec = sc.make_coefficient(rc.resolution);
    FaberKrahnOptions opts;
    opts.star_res = rc.star_res;
    opts.seed = rc.seed;
    FaberKrahnReport fk =
        run_stage("symmetrize", [&] { return faber_krahn_compare(dom, sc.kernel, spec, opts); });

    const int rr = rc.refined_resolution;
    QuadratureDomain rdom = run_stage("assemble-refined", [&] { return sc.make_domain(rr); });
    CoefficientSpec rspec = sc.make_coefficient(rr);
    FaberKrahnOptions ropts = opts;
    if (rc.star_res > 0)
        ropts.star_res = static_cast<int>(std::lround(
            static_cast<double>(rc.star_res) * rr / std::max(1, rc.resolution)));
    FaberKrahnReport fk2 = run_stage(
        "symmetrize-refined", [&] { return faber_krahn_compare(rdom, sc.kernel, rspec, ropts); });

    const double tol_spec =
        rc.tol.fk_margin > 0.0 ? rc.tol.fk_margin : faber_krahn_tolerance(fk, fk2);
    const bool inconclusive = fk.inconclusive || fk2.inconclusive;
    const bool ok = !inconclusive && fk.margin >= -tol_spec;
    const Verdict v = inconclusive ? Verdict::warn : (ok ? Verdict::pass : Verdict::fail);

    Table t{"faber_krahn",
            {"scenario", "lambda1_omega", "lambda1_star", "margin", "tol_spec", "verdict"},
            {}};
    t.add({sc.name, cell(fk.lambda1), cell(fk.lambda1_star), cell(fk.margin), cell(tol_spec),
           to_string(v)});
    rep.tables.push_back(std::move(t));

    Table rt{"faber_krahn_refinement",
             {"scenario", "resolution", "star_nodes", "lambda1_omega", "lambda1_star"},
             {}};
    rt.add({sc.name, cell(rc.resolution), cell(fk.star_nodes), cell(fk.lambda1),
            cell(fk.lambda1_star)});
    rt.add({sc.name, cell(rr), cell(fk2.star_nodes), cell(fk2.lambda1), cell(fk2.lambda1_star)});
    rep.tables.push_back(std::move(rt));

    if (inconclusive) {
        rep.warnings.push_back("inconclusive: " + (fk.inconclusive ? fk.note : fk2.note));
        if (fk.existence.divergence_suspected)
            rep.warnings.push_back("existence diagnostic: the regularized coefficient mass keeps "
                                   "growing; the variational minimum may not be attained");
    }
    rep.add_verdict("faber-krahn", v);
}

inline void rearrange_suite_task(const RunConfig& rc, RunReport& rep) {
    const Scenario& sc = rc.scenario;
    ScenarioSolve sol = run_stage("solve", [&] { return solve_scenario(sc, rc.resolution); });
    const QuadratureDomain& dom = sol.op.domain;
    const VectorXd v = sol.u0.cwiseAbs();
    if (sol.inconclusive) rep.warnings.push_back("inconclusive: " + sol.note);

    Table t{"rearrange_suite", {"scenario", "check", "trials", "observed", "tolerance", "verdict"}, {}};
    auto push = [&](const std::string& check, int trials, double observed, double tolerance,
                    bool ok) {
        t.add({sc.name, check, cell(trials), cell(observed), cell(tolerance),
               to_string(ok ? Verdict::pass : Verdict::fail)});
        rep.add_verdict("rearrange-" + check, ok ? Verdict::pass : Verdict::fail);
    };

    NodalFunction star =
        run_stage("rearrange", [&] { return symmetric_decreasing(v, dom, rc.star_res); });
    {
        DistributionFunction du = distribution_function(v, dom.weights);
        DistributionFunction ds = distribution_function(star.values, star.domain.weights);
        const double wmax =
            std::max(dom.weights.maxCoeff(), star.domain.weights.maxCoeff());
        std::mt19937_64 rng(rc.seed);
        std::uniform_real_distribution<double> level(0.0, du.max_value());
        double worst = 0.0;
        for (int k = 0; k < rc.levels; ++k) {
            const double tl = level(rng);
            worst = std::max(worst, std::abs(du(tl) - ds(tl)));
        }
        push("equimeasurability", rc.levels, worst, wmax, worst <= wmax);
    }
    {
        const double nu = weighted_norm(v, dom.weights);
        const double ns = weighted_norm(star.values, star.domain.weights);
        const double drift = std::abs(ns - nu) / std::max(nu, 1e-300);
        push("l2-preservation", 1, drift, rc.tol.norm_rel, drift <= rc.tol.norm_rel);
    }
    {
        LayerCakeReport lc = run_stage("layer-cake-square", [&] {
            return layer_cake_check(v, dom, [](double s) { return s * s; }, true, rc.star_res);
        });
        const double rel = lc.gap / std::max(1.0, std::abs(lc.direct));
        const double tol =
            std::max(rc.tol.layer_cake_rel, lc.bound / std::max(1.0, std::abs(lc.direct)));
        push("layer-cake-square", 1, rel, tol, rel <= tol);
    }
    {
        const double m = v.minCoeff(), M = v.maxCoeff();
        const double eps = 1e-3 * std::max(1.0, M - m);
        LayerCakeReport lc = run_stage("layer-cake-reciprocal", [&] {
            return layer_cake_check(
                v, dom, [m, eps](double s) { return 1.0 / (s - m + eps); }, false, rc.star_res);
        });
        const double rel = lc.gap / std::max(1.0, std::abs(lc.direct));
        const double tol =
            std::max(rc.tol.layer_cake_rel, lc.bound / std::max(1.0, std::abs(lc.direct)));
        push("layer-cake-reciprocal", 1, rel, tol, rel <= tol);
    }
    {
        std::mt19937_64 rng(rc.seed ^ 0x9e3779b97f4a7c15ull);
        std::uniform_real_distribution<double> amp(0.1, 2.0);
        double worst = std::numeric_limits<double>::max();
        run_stage("hardy-littlewood", [&] {
            for (int tr = 0; tr < rc.trials; ++tr) {
                VectorXd phi(dom.size()), psi(dom.size());
                for (int i = 0; i < dom.size(); ++i) phi[i] = amp(rng);
                for (int i = 0; i < dom.size(); ++i) psi[i] = amp(rng);
                worst = std::min(worst, hardy_littlewood_check(phi, psi, dom).slack);
            }
            return 0;
        });
        push("hardy-littlewood", rc.trials, worst, rc.tol.slack, worst >= -rc.tol.slack);
    }
    {
        const bool small = dom.size() <= 400;
        QuadratureDomain rdom =
            small ? dom
                  : (dom.intrinsic_dim == 1 ? interval_domain(0.0, 1.0, 180)
                                            : disk_domain(1.0, 20));
        if (!small)
            rep.warnings.push_back(
                "riesz trials run on a reduced grid: the dense triple sum is capped at 400 nodes");
        const Kernel& kn = sc.kernel;
        auto g = [&kn](double r) { return kn(r); };
        std::mt19937_64 rng(rc.seed ^ 0xbf58476d1ce4e5b9ull);
        std::uniform_real_distribution<double> amp(0.1, 2.0);
        double worst = std::numeric_limits<double>::max();
        run_stage("riesz", [&] {
            for (int tr = 0; tr < rc.trials; ++tr) {
                VectorXd f(rdom.size()), h(rdom.size());
                for (int i = 0; i < rdom.size(); ++i) f[i] = amp(rng);
                for (int i = 0; i < rdom.size(); ++i) h[i] = amp(rng);
                worst = std::min(worst, riesz_check(f, h, rdom, g, rc.star_res).slack);
            }
            return 0;
        });
        push("riesz", rc.trials, worst, rc.tol.slack, worst >= -rc.tol.slack);
    }
    rep.tables.push_back(std::move(t));
}

inline RunReport run_task(const RunConfig& rc) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    rep.config_echo = rc.config_echo;
    if (rc.task == "spectrum")
        spectrum_task(rc, rep);
    else if (rc.task == "hadamard")
        hadamard_task(rc, rep);
    else if (rc.task == "pullback")
        pullback_task(rc, rep);
    else if (rc.task == "eigfun-derivative")
        eigfun_derivative_task(rc, rep);
    else if (rc.task == "faber-krahn")
        faber_krahn_task(rc, rep);
    else if (rc.task == "rearrange-suite")
        rearrange_suite_task(rc, rep);
    else
        throw ValidationError("unknown task: " + rc.task);
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Resolution sweep: eigenvalue and formula values across the scenario ladder,
// with the successive increments required to shrink.

struct SweepConfig {
    std::vector<std::string> names;  // empty: every built-in
    Tolerances tol;
    std::string out_dir = "out";
    std::uint64_t seed = 20240901ull;
};

inline SweepConfig resolve_sweep(const ConfigMap& cfg, const std::string& scenario_filter) {
    SweepConfig sw;
    if (!scenario_filter.empty()) {
        find_scenario(scenario_filter);  // validates the name
        sw.names = {scenario_filter};
    } else {
        sw.names = scenario_names();
    }
    sw.tol = resolve_tolerances(cfg);
    sw.out_dir = cfg.str("run.out", sw.out_dir);
    sw.seed = cfg.seed("run.seed", sw.seed);
    const auto unknown = cfg.unknown_keys();
    if (!unknown.empty()) {
        std::string joined;
        for (std::size_t i = 0; i < unknown.size(); ++i) joined += (i ? " " : "") + unknown[i];
        throw ValidationError("unknown config keys: " + joined);
    }
    sw.names.shrink_to_fit();
    return sw;
}

inline RunReport run_sweep(const SweepConfig& sw) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    rep.config_echo.push_back("sweep.scenarios = " + std::to_string(sw.names.size()));
    Table t{"sweep",
            {"scenario", "field", "resolution", "eigen_index", "lambda0", "formula",
             "lambda_increment", "formula_increment", "verdict"},
            {}};
    for (const auto& name : sw.names) {
        const Scenario& sc = find_scenario(name);
        std::vector<ScenarioSolve> sols;
        bool inconclusive = false;
        std::string note;
        for (int res : sc.resolutions) {
            sols.push_back(run_stage("solve " + name + " @" + std::to_string(res),
                                     [&] { return solve_scenario(sc, res); }));
            if (sols.back().inconclusive) {
                inconclusive = true;
                note = sols.back().note + " (resolution " + std::to_string(res) + ")";
                break;
            }
        }
        if (inconclusive) {
            rep.warnings.push_back("inconclusive: sweep " + name + ": " + note);
            rep.add_verdict("sweep-" + name, Verdict::warn);
            continue;
        }
        const double dl1 = std::abs(sols[1].lambda0 - sols[0].lambda0);
        const double dl2 = std::abs(sols[2].lambda0 - sols[1].lambda0);
        const double lam_floor = sw.tol.sweep_floor * std::max(1.0, std::abs(sols[2].lambda0));
        const bool lam_ok = dl2 < dl1 || dl2 <= lam_floor;
        bool all_ok = lam_ok;
        for (const auto& V : sc.fields) {
            double fv[3];
            for (int k = 0; k < 3; ++k)
                fv[k] = run_stage("formula " + name + " " + V.name, [&] {
                            return hadamard_derivative(sols[k].op, sols[k].lambda0, sols[k].u0, V,
                                                       sc.options);
                        }).value;
            const double df1 = std::abs(fv[1] - fv[0]);
            const double df2 = std::abs(fv[2] - fv[1]);
            const double f_floor = sw.tol.sweep_floor * std::max(1.0, std::abs(fv[2]));
            const bool f_ok = df2 < df1 || df2 <= f_floor;
            all_ok = all_ok && f_ok;
            for (int k = 0; k < 3; ++k) {
                const Verdict v = k < 2 ? Verdict::info
                                        : ((f_ok && lam_ok) ? Verdict::pass : Verdict::fail);
                t.add({name, V.name, cell(sc.resolutions[k]), cell(sols[k].eigen_index),
                       cell(sols[k].lambda0), cell(fv[k]),
                       k == 0 ? std::string() : cell(k == 1 ? dl1 : dl2),
                       k == 0 ? std::string() : cell(k == 1 ? df1 : df2), to_string(v)});
            }
        }
        rep.add_verdict("sweep-" + name, all_ok ? Verdict::pass : Verdict::fail);
    }
    rep.tables.push_back(std::move(t));
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace nonlocal
