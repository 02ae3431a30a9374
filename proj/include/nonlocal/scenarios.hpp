#pragma once

#include "nonlocal/shape.hpp"

namespace nonlocal {

// Which eigenvalue a scenario studies, as a position in the ascending list.
enum class TargetMode { principal, second, first_simple_above_principal };

// A built-in configuration: domain family across resolutions, kernel, the
// coefficient recipe, the deformation fields exercised by the derivative
// checks, and the formula conventions the scenario runs under.
struct Scenario {
    std::string name;
    std::string description;
    int ambient_dim = 1;
    std::vector<int> resolutions;  // ascending; [1] reference, [2] refined
    std::function<QuadratureDomain(int)> make_domain;
    std::function<CoefficientSpec(int)> make_coefficient;
    Kernel kernel;
    std::vector<VectorField> fields;
    HadamardOptions options;
    bool adjudicate_conventions = false;  // run the convention-vs-oracle sweep
    TargetMode target = TargetMode::principal;
    bool fk_eligible = false;  // enters the symmetrization comparison set

    int coarse_resolution() const { return resolutions.at(0); }
    int reference_resolution() const { return resolutions.at(1); }
    int refined_resolution() const { return resolutions.at(2); }
};

namespace detail {

inline VectorField rotation_about_z() {
    VectorField f;
    f.name = "rotation-z";
    f.value = [](const VectorXd& x) {
        VectorXd v = VectorXd::Zero(x.size());
        v[0] = -x[1];
        v[1] = x[0];
        return v;
    };
    f.jacobian = [](const VectorXd& x) {
        MatrixXd Jm = MatrixXd::Zero(x.size(), x.size());
        Jm(0, 1) = -1.0;
        Jm(1, 0) = 1.0;
        return Jm;
    };
    return f;
}

inline VectorXd unit_axis(int dim, int k) { return VectorXd::Unit(dim, k); }

inline CoefficientSpec zero_ambient_spec(int dim) {
    CoefficientSpec s;
    s.rule = CoefficientRule::ambient;
    s.ambient.value = [](const VectorXd&) { return 0.0; };
    s.ambient.gradient = [dim](const VectorXd&) { return VectorXd::Zero(dim).eval(); };
    return s;
}

inline CoefficientSpec cylinder_ambient_spec() {
    CoefficientSpec s;
    s.rule = CoefficientRule::ambient;
    s.ambient.value = [](const VectorXd& x) {
        return 1.0 + 0.5 * x[1] + 0.3 * x[0] * x[1];
    };
    s.ambient.gradient = [](const VectorXd& x) {
        VectorXd g(2);
        g << 0.3 * x[1], 0.5 + 0.3 * x[0];
        return g;
    };
    return s;
}

}  // namespace detail

inline std::vector<Scenario> scenario_registry() {
    std::vector<Scenario> out;

    const Kernel k1 = make_kernel(KernelFamily::mollified_indicator, 0.5, 1, 0.025);
    const Kernel k2 = make_kernel(KernelFamily::mollified_indicator, 0.6, 2, 0.25);
    const Kernel km = make_kernel(KernelFamily::mollified_indicator, 0.8, 3, 0.2);
    const Kernel kc = make_kernel(KernelFamily::mollified_indicator, 0.8, 2, 0.2);

    {
        Scenario s;
        s.name = "dirichlet-interval";
        s.description = "unit interval, constant coefficient a = 1; principal eigenvalue "
                        "below the band, boundary term drives the domain derivative";
        s.ambient_dim = 1;
        s.resolutions = {200, 400, 800};
        s.make_domain = [](int r) { return interval_domain(0.0, 1.0, r); };
        s.make_coefficient = [](int) { return CoefficientSpec{}; };
        s.kernel = k1;
        s.fields = {dilation_field(1),
                    normal_bump_field((VectorXd(1) << 0.3).finished(), 0.1, 1),
                    translation_field(detail::unit_axis(1, 0))};
        s.fk_eligible = true;
        out.push_back(std::move(s));
    }
    {
        Scenario s;
        s.name = "dirichlet-disk";
        s.description = "unit disk, constant coefficient a = 1; concentric-ring quadrature "
                        "with arc-length boundary rule";
        s.ambient_dim = 2;
        s.resolutions = {48, 64, 96};
        s.make_domain = [](int r) { return disk_domain(1.0, r); };
        s.make_coefficient = [](int) { return CoefficientSpec{}; };
        s.kernel = k2;
        s.fields = {dilation_field(2),
                    normal_bump_field((VectorXd(2) << 0.2, -0.1).finished(), 0.5, 2),
                    translation_field(detail::unit_axis(2, 0))};
        s.fk_eligible = true;
        out.push_back(std::move(s));
    }
    {
        Scenario s;
        s.name = "neumann-interval";
        s.description = "unit interval with the self-consistent kernel-mass coefficient: "
                        "constants are an exact null mode; the second eigenvalue is tracked";
        s.ambient_dim = 1;
        s.resolutions = {200, 400, 800};
        s.make_domain = [](int r) { return interval_domain(0.0, 1.0, r); };
        s.make_coefficient = [](int) {
            CoefficientSpec c;
            c.rule = CoefficientRule::neumann;
            return c;
        };
        s.kernel = k1;
        s.fields = {dilation_field(1),
                    normal_bump_field((VectorXd(1) << 0.3).finished(), 0.1, 1),
                    translation_field(detail::unit_axis(1, 0))};
        s.target = TargetMode::second;
        s.fk_eligible = true;
        out.push_back(std::move(s));
    }
    {
        Scenario s;
        s.name = "neumann-disk";
        s.description = "unit disk with the self-consistent kernel-mass coefficient; the "
                        "first excited level is a symmetry-degenerate pair, so the tracked "
                        "eigenvalue is the first simple one above the null mode";
        s.ambient_dim = 2;
        s.resolutions = {48, 64, 96};
        s.make_domain = [](int r) { return disk_domain(1.0, r); };
        s.make_coefficient = [](int) {
            CoefficientSpec c;
            c.rule = CoefficientRule::neumann;
            return c;
        };
        s.kernel = k2;
        s.fields = {dilation_field(2),
                    normal_bump_field((VectorXd(2) << 0.2, -0.1).finished(), 0.5, 2),
                    translation_field(detail::unit_axis(2, 0))};
        s.target = TargetMode::first_simple_above_principal;
        s.fk_eligible = true;
        out.push_back(std::move(s));
    }
    {
        Scenario s;
        s.name = "hole-annulus";
        s.description = "annulus with the coefficient 1 - (kernel mass over the excised "
                        "disk): the hole couples the coefficient to the deformation";
        s.ambient_dim = 2;
        s.resolutions = {48, 64, 96};
        s.make_domain = [](int r) { return annulus_domain(1.0, 0.35, r); };
        s.make_coefficient = [](int r) {
            CoefficientSpec c;
            c.rule = CoefficientRule::hole;
            // hole grid denser than the domain grid: the coefficient quadrature
            // must be converged relative to the domain error, or its residual
            // masks the formula/FD comparison
            const int nr = std::max(8, static_cast<int>(std::lround(2.0 * 0.35 * r)));
            c.hole = std::make_shared<QuadratureDomain>(radial_disk_domain(0.35, nr));
            return c;
        };
        s.kernel = k2;
        s.fields = {dilation_field(2), normal_bump_field(VectorXd::Zero(2), 0.8, 2),
                    translation_field(detail::unit_axis(2, 0))};
        s.fk_eligible = true;
        out.push_back(std::move(s));
    }
    {
        Scenario s;
        s.name = "sphere";
        s.description = "round sphere in R^3 with a = 0: the band collapses to {0} and the "
                        "discrete spectrum is negative; the curvature term carries the whole "
                        "normal response";
        s.ambient_dim = 3;
        s.resolutions = {16, 24, 32};
        s.make_domain = [](int r) { return sphere_domain(1.0, r); };
        s.make_coefficient = [](int) { return detail::zero_ambient_spec(3); };
        s.kernel = km;
        s.fields = {dilation_field(3),
                    normal_bump_field((VectorXd(3) << 0.0, 0.0, 0.6).finished(), 1.0, 3),
                    translation_field(detail::unit_axis(3, 2))};
        s.adjudicate_conventions = true;
        out.push_back(std::move(s));
    }
    {
        Scenario s;
        s.name = "hemisphere";
        s.description = "upper hemisphere with equator boundary, constant coefficient a = 1; "
                        "boundary, curvature and normal terms all active";
        s.ambient_dim = 3;
        s.resolutions = {10, 14, 20};
        s.make_domain = [](int r) { return hemisphere_domain(1.0, r); };
        s.make_coefficient = [](int) { return CoefficientSpec{}; };
        s.kernel = km;
        s.fields = {dilation_field(3),
                    normal_bump_field((VectorXd(3) << 0.0, 0.0, 0.4).finished(), 0.8, 3),
                    detail::rotation_about_z()};
        s.options.route = NormalTermRoute::kernel_gradient;
        s.adjudicate_conventions = true;
        out.push_back(std::move(s));
    }
    {
        Scenario s;
        s.name = "cylinder";
        s.description = "flat horizontal slice of a cylinder surface, embedded as a segment "
                        "at height one half, with ambient coefficient "
                        "a(x,y) = 1 + y/2 + 3xy/10 varying along and across the slice";
        s.ambient_dim = 2;
        s.resolutions = {200, 400, 800};
        s.make_domain = [](int r) { return segment_slice_domain(0.0, 1.0, 0.5, r); };
        s.make_coefficient = [](int) { return detail::cylinder_ambient_spec(); };
        s.kernel = kc;
        s.fields = {dilation_field(2),
                    normal_bump_field((VectorXd(2) << 0.5, 0.5).finished(), 0.5, 2),
                    translation_field(detail::unit_axis(2, 1))};
        s.options.route = NormalTermRoute::kernel_gradient;
        s.adjudicate_conventions = true;
        out.push_back(std::move(s));
    }
    return out;
}

inline const Scenario& find_scenario(const std::string& name) {
    static const std::vector<Scenario> reg = scenario_registry();
    for (const auto& s : reg)
        if (s.name == name) return s;
    throw ValidationError("unknown scenario: " + name);
}

inline std::vector<std::string> scenario_names() {
    std::vector<std::string> names;
    for (const auto& s : scenario_registry()) names.push_back(s.name);
    return names;
}

// Solved eigenpair a scenario tracks, with the degraded path flagged instead
// of thrown: a too-coarse grid may expose no usable simple eigenvalue.
struct ScenarioSolve {
    NonlocalOperator op;
    double lambda0 = 0.0;
    VectorXd u0;
    int eigen_index = 0;  // ascending position
    bool inconclusive = false;
    std::string note;
};

inline ScenarioSolve solve_scenario(const Scenario& sc, int res) {
    ScenarioSolve out;
    out.op = assemble_operator(sc.make_domain(res), sc.kernel, sc.make_coefficient(res));
    const double btol = band_tolerance(out.op);
    if (sc.target == TargetMode::principal) {
        auto pe = principal_eigenpair(out.op);
        out.lambda0 = pe.lambda;
        out.u0 = pe.u;
        out.eigen_index = 0;
        if (!pe.below_band) {
            out.inconclusive = true;
            out.note = "principal eigenvalue not separated from the band at this resolution";
        } else if (!pe.simple) {
            out.inconclusive = true;
            out.note = "principal eigenvalue not simple at this resolution";
        }
        return out;
    }
    // window wide enough to step over the degenerate angular pairs of the
    // disk scenarios and still see the first genuinely simple excited mode
    const int k = std::min(out.op.size(), sc.target == TargetMode::second ? 6 : 16);
    LanczosResult res_k = operator_smallest(out.op, k, VectorXd(), true);
    auto simple_at = [&](int j) {
        const double lam = res_k.values[j];
        double gap = std::numeric_limits<double>::max();
        if (j > 0) gap = std::min(gap, lam - res_k.values[j - 1]);
        if (j + 1 < k) gap = std::min(gap, res_k.values[j + 1] - lam);
        return gap > simplicity_gap_tol(lam);
    };
    if (sc.target == TargetMode::second) {
        require(k >= 2, "scenario needs at least two eigenvalues");
        out.lambda0 = res_k.values[1];
        out.u0 = res_k.vectors.col(1);
        out.eigen_index = 1;
        if (out.lambda0 >= out.op.band_min - btol || !simple_at(1)) {
            out.inconclusive = true;
            out.note = "second eigenvalue not a simple discrete eigenvalue at this resolution";
        }
        return out;
    }
    // first simple discrete eigenvalue above the principal one
    for (int j = 1; j + 1 < k; ++j) {
        if (res_k.values[j] >= out.op.band_min - btol) break;
        if (!simple_at(j)) continue;
        out.lambda0 = res_k.values[j];
        out.u0 = res_k.vectors.col(j);
        out.eigen_index = j;
        return out;
    }
    out.inconclusive = true;
    out.note = "no simple discrete eigenvalue above the null mode at this resolution";
    out.lambda0 = res_k.values[0];
    out.u0 = res_k.vectors.col(0);
    out.eigen_index = 0;
    return out;
}

// One (field, resolution) row of the derivative comparison.
struct HadamardRow {
    std::string scenario;
    std::string field;
    int resolution = 0;
    int eigen_index = 0;
    double lambda0 = 0.0;
    HadamardReport formula;
    FDResult fd;
    bool with_fd = false;
    double rel_discrepancy = 0.0;  // |formula - fd| / max(|fd|, 1e-8)
};

inline HadamardRow scenario_hadamard_row(const Scenario& sc, const ScenarioSolve& sol, int res,
                                         const VectorField& V, bool with_fd,
                                         const HadamardOptions* opts_override = nullptr,
                                         const FDOptions* fd_override = nullptr) {
    HadamardRow row;
    row.scenario = sc.name;
    row.field = V.name;
    row.resolution = res;
    row.eigen_index = sol.eigen_index;
    row.lambda0 = sol.lambda0;
    const HadamardOptions& opts = opts_override ? *opts_override : sc.options;
    row.formula = hadamard_derivative(sol.op, sol.lambda0, sol.u0, V, opts);
    row.with_fd = with_fd;
    if (with_fd) {
        FDOptions fo = fd_override ? *fd_override : FDOptions{};
        fo.eigen_count = std::max(fo.eigen_count, sol.eigen_index + 4);
        row.fd = fd_derivative(sol.op.domain, sc.kernel, sol.op.spec, V, sol.u0, fo);
        row.rel_discrepancy =
            std::abs(row.formula.value - row.fd.value) / std::max(std::abs(row.fd.value), 1e-8);
    }
    return row;
}

// Convention adjudication: every curvature/normal-route pairing against the
// oracle; the pairing minimizing the worst per-field discrepancy is selected.
struct ConventionChoice {
    CurvatureConvention curvature = CurvatureConvention::sum_of_principal;
    NormalTermRoute route = NormalTermRoute::kernel_gradient;
    double worst_rel = 0.0;
};

struct ConventionReport {
    std::vector<ConventionChoice> table;
    ConventionChoice selected;
};

inline ConventionReport adjudicate_conventions(const Scenario& sc, const ScenarioSolve& sol,
                                               int res, const FDOptions* fd_override = nullptr) {
    ConventionReport rep;
    std::vector<FDResult> fds;
    for (const auto& V : sc.fields) {
        FDOptions fo = fd_override ? *fd_override : FDOptions{};
        fo.eigen_count = std::max(fo.eigen_count, sol.eigen_index + 4);
        fds.push_back(fd_derivative(sol.op.domain, sc.kernel, sol.op.spec, V, sol.u0, fo));
    }
    for (CurvatureConvention c :
         {CurvatureConvention::sum_of_principal, CurvatureConvention::mean}) {
        for (NormalTermRoute r : {NormalTermRoute::gradient_once, NormalTermRoute::gradient_twice,
                                  NormalTermRoute::kernel_gradient}) {
            HadamardOptions o;
            o.curvature = c;
            o.route = r;
            double worst = 0.0;
            for (std::size_t i = 0; i < sc.fields.size(); ++i) {
                auto f = hadamard_derivative(sol.op, sol.lambda0, sol.u0, sc.fields[i], o);
                const double rel = std::abs(f.value - fds[i].value) /
                                   std::max(std::abs(fds[i].value), 1e-8);
                worst = std::max(worst, rel);
            }
            rep.table.push_back({c, r, worst});
        }
    }
    rep.selected = rep.table.front();
    for (const auto& cand : rep.table)
        if (cand.worst_rel < rep.selected.worst_rel) rep.selected = cand;
    return rep;
}

// Scenario-specific closed forms reported next to the general formula.
struct SpecializationReport {
    bool available = false;
    std::string description;
    double value = 0.0;
    double gap = 0.0;  // |general - specialized|
};

inline SpecializationReport specialized_value(const Scenario& sc, const ScenarioSolve& sol,
                                              const VectorField& V,
                                              const HadamardReport& general) {
    SpecializationReport rep;
    const auto& dom = sol.op.domain;
    if (sc.name == "dirichlet-interval" || sc.name == "dirichlet-disk") {
        rep.available = true;
        rep.description = "boundary-only reduction for constant coefficient";
        double v = 0.0;
        for (int b = 0; b < dom.boundary_size(); ++b) {
            VectorXd s = dom.boundary_nodes.row(b).transpose();
            v -= (1.0 - sol.lambda0) * general.boundary_trace[b] * general.boundary_trace[b] *
                 V.value(s).dot(dom.boundary_conormals.row(b).transpose()) *
                 dom.boundary_weights[b];
        }
        rep.value = v;
    } else if (sc.name == "sphere") {
        rep.available = true;
        rep.description = "curvature-only reduction (n lambda0 / R) int u0^2 <w, Vperp>";
        FieldSplit split = split_field(V, dom);
        const double n = static_cast<double>(dom.intrinsic_dim), R = 1.0;
        double v = 0.0;
        for (int i = 0; i < dom.size(); ++i) {
            VectorXd radial = dom.nodes.row(i).transpose() / R;
            v += (n * sol.lambda0 / R) * sol.u0[i] * sol.u0[i] *
                 radial.dot(split.normal.row(i).transpose()) * dom.weights[i];
        }
        rep.value = v;
    } else if (sc.name == "hole-annulus") {
        rep.available = true;
        rep.description = "coefficient term as kernel flux through the hole boundary";
        const auto& hole = *sol.op.spec.hole;
        VectorXd u2 = sol.u0.array().square();
        VectorXd conv = apply_convolution(dom, sol.op.kernel, u2, hole.boundary_nodes);
        double v = 0.0;
        for (int b = 0; b < hole.boundary_size(); ++b) {
            VectorXd s = hole.boundary_nodes.row(b).transpose();
            v -= conv[b] * V.value(s).dot(hole.boundary_conormals.row(b).transpose()) *
                 hole.boundary_weights[b];
        }
        rep.value = v;
        rep.gap = std::abs(general.term_coefficient - rep.value);
        return rep;
    }
    if (rep.available) rep.gap = std::abs(general.value - rep.value);
    return rep;
}

}  // namespace nonlocal
