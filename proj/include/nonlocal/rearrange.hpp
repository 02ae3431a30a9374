#pragma once

#include "nonlocal/fastops.hpp"

namespace nonlocal {

// Nodal data bound to the quadrature it lives on. Results of rearrangements
// own their target domain.
struct NodalFunction {
    QuadratureDomain domain;
    VectorXd values;
    bool nonnegative = false;
};

// Weight-sorted decreasing rearrangement u^# as a right-continuous step
// function on [0, |Omega|): plateau j has value |u|_(j) (descending) and
// width w_(j). Equimeasurability with u is exact at the discrete level.
struct RearrangementProfile {
    VectorXd values;  // non-increasing
    VectorXd widths;  // matching node weights
    VectorXd cum;     // cum[j] = widths[0..j] summed
    double total = 0.0;

    // u^#(s): value of the plateau whose measure window contains s
    double decreasing_at(double s) const {
        const int n = static_cast<int>(values.size());
        if (n == 0) return 0.0;
        if (s < 0.0) return values[0];
        int lo = 0, hi = n - 1;
        if (s >= cum[hi]) return values[hi];
        while (lo < hi) {  // first j with cum[j] > s
            const int mid = (lo + hi) / 2;
            if (cum[mid] > s)
                hi = mid;
            else
                lo = mid + 1;
        }
        return values[lo];
    }

    // u_#(s) = u^#(|Omega| - s), the increasing rearrangement
    double increasing_at(double s) const { return decreasing_at(total - s); }
};

inline RearrangementProfile rearrangement_profile(const VectorXd& u, const VectorXd& w) {
    require(u.size() == w.size(), "rearrangement: value/weight count mismatch");
    const int n = static_cast<int>(u.size());
    require(n >= 1, "rearrangement: empty data");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(u[a]) > std::abs(u[b]);
    });
    RearrangementProfile p;
    p.values.resize(n);
    p.widths.resize(n);
    p.cum.resize(n);
    double c = 0.0;
    for (int j = 0; j < n; ++j) {
        p.values[j] = std::abs(u[idx[j]]);
        p.widths[j] = w[idx[j]];
        c += p.widths[j];
        p.cum[j] = c;
    }
    p.total = c;
    return p;
}

// Distribution function mu(t) = sum{ w_i : |u_i| > t }, right-continuous and
// non-increasing; mu(0) is the measure of the support.
struct DistributionFunction {
    RearrangementProfile profile;

    double operator()(double t) const {
        const int n = static_cast<int>(profile.values.size());
        int lo = 0, hi = n;  // first j with values[j] <= t
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (profile.values[mid] <= t)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo == 0 ? 0.0 : profile.cum[lo - 1];
    }

    double support_measure() const { return (*this)(0.0); }
    double max_value() const { return profile.values.size() ? profile.values[0] : 0.0; }
};

inline DistributionFunction distribution_function(const VectorXd& u, const VectorXd& w) {
    return DistributionFunction{rearrangement_profile(u, w)};
}

// Centered ball of prescribed measure, with every node paired to a disjoint
// measure cell in the radial order. Rearranged values are exact plateau
// evaluations at the cell midpoints, which keeps equimeasurability within one
// node weight and introduces no interpolation.
struct StarGrid {
    QuadratureDomain domain;
    VectorXd s_mid;  // node-indexed measure-cell midpoints in [0, measure)
};

inline StarGrid star_grid(double measure, int n, int res) {
    require(measure > 0.0, "star grid: need positive measure");
    require(n == 1 || n == 2, "star grid: realized for n in {1, 2}");
    const double r = ball_radius_for_measure(measure, n);
    StarGrid g;
    g.domain = (n == 1) ? interval_domain(-r, r, res) : radial_disk_domain(r, res);
    const int N = g.domain.size();
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return g.domain.nodes.row(a).norm() < g.domain.nodes.row(b).norm();
    });
    g.s_mid.resize(N);
    double c = 0.0;
    for (int k : order) {
        g.s_mid[k] = c + 0.5 * g.domain.weights[k];
        c += g.domain.weights[k];
    }
    return g;
}

namespace detail {

inline int star_resolution(const QuadratureDomain& dom, int requested) {
    if (requested > 0) return requested;
    if (dom.intrinsic_dim == 1) return dom.size();
    const double measure = dom.weights.sum();
    const double h = std::sqrt(measure / dom.size());  // mean cell size
    const double r = ball_radius_for_measure(measure, 2);
    return std::max(4, static_cast<int>(std::lround(r / h)));
}

inline void require_flat(const QuadratureDomain& dom) {
    require(dom.intrinsic_dim == dom.ambient_dim,
            "rearrangement: defined for full-dimensional Euclidean domains");
}

}  // namespace detail

inline NodalFunction star_evaluate(const RearrangementProfile& p, const StarGrid& g,
                                   bool increasing) {
    NodalFunction f;
    f.domain = g.domain;
    f.nonnegative = true;
    const int N = g.domain.size();
    f.values.resize(N);
    for (int k = 0; k < N; ++k)
        f.values[k] = increasing ? p.increasing_at(g.s_mid[k]) : p.decreasing_at(g.s_mid[k]);
    return f;
}

// u*: radially non-increasing rearrangement onto the centered ball of the
// same measure.
inline NodalFunction symmetric_decreasing(const VectorXd& u, const QuadratureDomain& dom,
                                          int star_res = 0) {
    detail::require_flat(dom);
    auto p = rearrangement_profile(u, dom.weights);
    auto g = star_grid(dom.weights.sum(), dom.intrinsic_dim, detail::star_resolution(dom, star_res));
    return star_evaluate(p, g, false);
}

// u_*: radially non-decreasing rearrangement, u_*(x) = u_#(c_n |x|^n).
inline NodalFunction symmetric_increasing(const VectorXd& u, const QuadratureDomain& dom,
                                          int star_res = 0) {
    detail::require_flat(dom);
    auto p = rearrangement_profile(u, dom.weights);
    auto g = star_grid(dom.weights.sum(), dom.intrinsic_dim, detail::star_resolution(dom, star_res));
    return star_evaluate(p, g, true);
}

// Rearrangement invariance of int Phi(|u|): the direct quadrature against the
// quadratures of Phi(u*) and Phi(u_*) on the ball. Phi must be monotone as
// declared; it is audited on the sampled values.
struct LayerCakeReport {
    double direct = 0.0;
    double decreasing_star = 0.0;
    double increasing_star = 0.0;
    double gap = 0.0;    // max pairwise difference
    double bound = 0.0;  // a priori quadrature bound on the gap, see below
};

inline LayerCakeReport layer_cake_check(const VectorXd& u, const QuadratureDomain& dom,
                                        const std::function<double(double)>& Phi,
                                        bool increasing_Phi, int star_res = 0) {
    detail::require_flat(dom);
    auto p = rearrangement_profile(u, dom.weights);
    const int n = static_cast<int>(p.values.size());
    const double scale = std::max(1.0, std::abs(Phi(p.values[0])));
    if (increasing_Phi)
        require(std::abs(Phi(0.0)) <= 1e-12 * scale, "layer cake: increasing Phi needs Phi(0) = 0");
    for (int j = 0; j + 1 < n; ++j) {
        const double hi = Phi(p.values[j]), lo = Phi(p.values[j + 1]);  // values descending
        if (increasing_Phi)
            require(hi >= lo - 1e-12 * scale, "layer cake: Phi not increasing on sampled values");
        else
            require(hi <= lo + 1e-12 * scale, "layer cake: Phi not decreasing on sampled values");
    }
    LayerCakeReport rep;
    for (int i = 0; i < dom.size(); ++i) rep.direct += Phi(std::abs(u[i])) * dom.weights[i];
    auto g = star_grid(dom.weights.sum(), dom.intrinsic_dim, detail::star_resolution(dom, star_res));
    NodalFunction dec = star_evaluate(p, g, false);
    NodalFunction inc = star_evaluate(p, g, true);
    for (int k = 0; k < g.domain.size(); ++k) {
        rep.decreasing_star += Phi(dec.values[k]) * g.domain.weights[k];
        rep.increasing_star += Phi(inc.values[k]) * g.domain.weights[k];
    }
    rep.gap = std::max({std::abs(rep.direct - rep.decreasing_star),
                        std::abs(rep.direct - rep.increasing_star),
                        std::abs(rep.decreasing_star - rep.increasing_star)});
    // Midpoint sampling of the monotone step profile misassigns at most one
    // ball cell per plateau edge, so each star route is within
    // max_cell * TV(Phi o profile) of the exact step integral; the pairwise
    // gap sees both routes. Identity violations show up far above this.
    const double tv = std::abs(Phi(p.values[0]) - Phi(p.values[n - 1]));
    rep.bound = 2.0 * g.domain.weights.maxCoeff() * tv;
    return rep;
}

struct InequalityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // the quantity asserted nonnegative
};

// int phi psi >= int phi_* psi*: the anti-aligned profile pairing minimizes
// the product integral. The right side is the exact step-function integral of
// phi_#(s) psi^#(s) over the merged plateau breakpoints, so the slack carries
// no quadrature error.
inline InequalityReport hardy_littlewood_check(const VectorXd& phi, const VectorXd& psi,
                                               const QuadratureDomain& dom) {
    require(phi.size() == dom.size() && psi.size() == dom.size(),
            "hardy-littlewood: size mismatch");
    require(phi.minCoeff() >= 0.0 && psi.minCoeff() >= 0.0,
            "hardy-littlewood: needs nonnegative data");
    InequalityReport rep;
    rep.lhs = (phi.array() * psi.array() * dom.weights.array()).sum();
    auto P = rearrangement_profile(phi, dom.weights);
    auto Q = rearrangement_profile(psi, dom.weights);
    const double T = P.total;
    std::vector<double> bp;
    bp.push_back(0.0);
    bp.push_back(T);
    for (int j = 0; j < Q.cum.size(); ++j) bp.push_back(Q.cum[j]);
    for (int j = 0; j < P.cum.size(); ++j) bp.push_back(T - P.cum[j]);
    std::sort(bp.begin(), bp.end());
    for (std::size_t l = 0; l + 1 < bp.size(); ++l) {
        const double len = bp[l + 1] - bp[l];
        if (len <= 0.0) continue;
        const double s = 0.5 * (bp[l] + bp[l + 1]);
        rep.rhs += P.increasing_at(s) * Q.decreasing_at(s) * len;
    }
    rep.slack = rep.lhs - rep.rhs;
    return rep;
}

// int int f(y) g(y-x) h(x) <= int int f*(y) g(y-x) h*(x) for radially
// decreasing g (so g* = g). Dense double sums on both sides; confined to
// small instances.
inline InequalityReport riesz_check(const VectorXd& f, const VectorXd& h,
                                    const QuadratureDomain& dom,
                                    const std::function<double(double)>& g, int star_res = 0) {
    detail::require_flat(dom);
    require(dom.size() <= 400, "riesz check is confined to small dense instances");
    require(f.size() == dom.size() && h.size() == dom.size(), "riesz: size mismatch");
    require(f.minCoeff() >= 0.0 && h.minCoeff() >= 0.0, "riesz: needs nonnegative data");
    auto triple = [&](const VectorXd& a, const VectorXd& b, const QuadratureDomain& d) {
        double s = 0.0;
        for (int i = 0; i < d.size(); ++i) {
            if (b[i] == 0.0) continue;
            for (int j = 0; j < d.size(); ++j) {
                const double r = (d.nodes.row(j) - d.nodes.row(i)).norm();
                s += a[j] * g(r) * b[i] * d.weights[i] * d.weights[j];
            }
        }
        return s;
    };
    InequalityReport rep;
    rep.lhs = triple(f, h, dom);
    auto gr = star_grid(dom.weights.sum(), dom.intrinsic_dim, detail::star_resolution(dom, star_res));
    NodalFunction fs = star_evaluate(rearrangement_profile(f, dom.weights), gr, false);
    NodalFunction hs = star_evaluate(rearrangement_profile(h, dom.weights), gr, false);
    rep.rhs = triple(fs.values, hs.values, gr.domain);
    rep.slack = rep.rhs - rep.lhs;
    return rep;
}

// Principal eigenvalue with a solver dispatched on domain structure: FFT
// lattice path, dense assembly, or sparse neighbor matvec for large clouds.
inline double principal_value(const QuadratureDomain& dom, const Kernel& kernel,
                              const Coefficient& coeff, std::uint64_t seed = 20240901ull) {
    const int N = dom.size();
    if (dom.lattice && N > 2048) {
        LatticeConvOperator op(dom, kernel, coeff);
        return fast_smallest(op, std::min(N, 2), false, seed).values[0];
    }
    if (N > 9000) {
        SparseNeighborOperator op(dom, kernel, coeff);
        return fast_smallest(op, std::min(N, 2), false, seed).values[0];
    }
    NonlocalOperator op = assemble_operator(dom, kernel, CoefficientSpec{}, coeff);
    return operator_smallest(op, std::min(N, 2), VectorXd(), false, seed).values[0];
}

// lambda1(Omega) against lambda1 of the ball of the same measure carrying the
// rule-respecting symmetrized coefficient: Dirichlet and Neumann rules are
// rebuilt on the ball (the Neumann null mode survives symmetrization
// exactly); ambient and hole coefficients are literally rearranged, radially
// increasing. The margin is asserted against a resolution-dependent tolerance
// measured by the caller from one refinement step of lambda1.
struct FaberKrahnReport {
    double lambda1 = 0.0;
    double lambda1_star = 0.0;
    double margin = 0.0;    // lambda1 - lambda1_star
    double tol_spec = 0.0;  // allowance for discretization error
    double omega_measure = 0.0;
    double star_radius = 0.0;
    int star_nodes = 0;
    bool inconclusive = false;  // a principal eigenvalue failed band separation
    std::string note;
    bool pass = false;
    ExistenceDiagnostic existence;
};

struct FaberKrahnOptions {
    double tol_spec = 0.0;
    int star_res = 0;  // 0: matched to the source node density
    std::uint64_t seed = 20240901ull;
};

inline FaberKrahnReport faber_krahn_compare(const QuadratureDomain& dom, const Kernel& kernel,
                                            const CoefficientSpec& spec,
                                            const FaberKrahnOptions& opts = {}) {
    detail::require_flat(dom);
    const int n = dom.intrinsic_dim;
    Coefficient coeff = build_coefficient(spec, dom, kernel);
    require(coeff.values.minCoeff() >= 0.0, "faber-krahn: needs a nonnegative coefficient");
    FaberKrahnReport rep;
    rep.tol_spec = opts.tol_spec;
    rep.omega_measure = dom.weights.sum();
    rep.existence = existence_diagnostic(coeff, dom);
    rep.lambda1 = principal_value(dom, kernel, coeff, opts.seed);

    auto g = star_grid(rep.omega_measure, n, detail::star_resolution(dom, opts.star_res));
    rep.star_radius = ball_radius_for_measure(rep.omega_measure, n);
    rep.star_nodes = g.domain.size();
    Coefficient scoeff;
    if (spec.rule == CoefficientRule::dirichlet || spec.rule == CoefficientRule::neumann) {
        CoefficientSpec srule;
        srule.rule = spec.rule;
        scoeff = build_coefficient(srule, g.domain, kernel);
    } else {
        NodalFunction astar = star_evaluate(rearrangement_profile(coeff.values, dom.weights), g, true);
        scoeff.rule = spec.rule;
        scoeff.values = astar.values;
        scoeff.boundary_values = VectorXd::Constant(g.domain.boundary_size(),
                                                    astar.values.size() ? astar.values.maxCoeff() : 0.0);
        scoeff.gradients = MatrixXd::Zero(g.domain.size(), g.domain.ambient_dim);
        scoeff.band_min = astar.values.minCoeff();
        scoeff.band_max = astar.values.maxCoeff();
    }
    rep.lambda1_star = principal_value(g.domain, kernel, scoeff, opts.seed);
    rep.margin = rep.lambda1 - rep.lambda1_star;

    const double btol = 10.0 / std::max(1, dom.resolution) * (coeff.band_max - coeff.band_min);
    const double btol_star =
        10.0 / std::max(1, g.domain.resolution) * (scoeff.band_max - scoeff.band_min);
    const bool neumann = spec.rule == CoefficientRule::neumann;
    if (!neumann && rep.lambda1 >= coeff.band_min - btol) {
        rep.inconclusive = true;
        rep.note = "principal eigenvalue of the source domain is not separated from the band";
    } else if (!neumann && rep.lambda1_star >= scoeff.band_min - btol_star) {
        rep.inconclusive = true;
        rep.note = "principal eigenvalue of the symmetrized ball is not separated from the band";
    }
    rep.pass = !rep.inconclusive && rep.margin >= -rep.tol_spec;
    return rep;
}

// Assertion tolerance from one refinement step: the margin subtracts two
// independently discretized eigenvalues, so both convergence increments count.
inline double faber_krahn_tolerance(const FaberKrahnReport& coarse,
                                    const FaberKrahnReport& refined) {
    return std::max(std::abs(coarse.lambda1 - refined.lambda1),
                    std::abs(coarse.lambda1_star - refined.lambda1_star));
}

}  // namespace nonlocal
