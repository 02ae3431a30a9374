#pragma once

#include "nonlocal/operator.hpp"

namespace nonlocal {

// ---------------------------------------------------------------------------
// Domain transport under the flow h_t(x) = x + t V(x).

namespace detail {

// Deterministic orthonormal tangent frame at an interior node (d x n).
inline MatrixXd tangent_frame(const QuadratureDomain& dom, int i) {
    const int d = dom.ambient_dim, n = dom.intrinsic_dim;
    if (dom.codim() == 0) return MatrixXd::Identity(d, d);
    VectorXd nor = dom.node_normals.row(i).transpose();
    MatrixXd F(d, n);
    // seed axis least aligned with the normal, Gram-Schmidt the rest
    int seed = 0;
    for (int k = 1; k < d; ++k)
        if (std::abs(nor[k]) < std::abs(nor[seed])) seed = k;
    VectorXd t1 = VectorXd::Unit(d, seed);
    t1 -= t1.dot(nor) * nor;
    t1.normalize();
    F.col(0) = t1;
    if (n == 2) {
        require(d == 3, "tangent frame: unsupported embedding");
        Eigen::Vector3d a(nor[0], nor[1], nor[2]), b(t1[0], t1[1], t1[2]);
        Eigen::Vector3d c = a.cross(b);
        F.col(1) = c;
    } else {
        require(n == 1, "tangent frame: unsupported intrinsic dimension");
    }
    return F;
}

// Tangent frame of the boundary manifold at boundary node b (d x (n-1)).
inline MatrixXd boundary_frame(const QuadratureDomain& dom, int b) {
    const int d = dom.ambient_dim, n = dom.intrinsic_dim;
    if (n == 1) return MatrixXd(d, 0);  // point boundary
    VectorXd N = dom.boundary_conormals.row(b).transpose();
    MatrixXd F(d, n - 1);
    if (dom.codim() == 0) {
        require(d == 2, "boundary frame: unsupported dimension");
        F(0, 0) = -N[1];
        F(1, 0) = N[0];
    } else {
        require(d == 3 && n == 2, "boundary frame: unsupported embedding");
        Eigen::Vector3d nor(dom.boundary_normals(b, 0), dom.boundary_normals(b, 1),
                            dom.boundary_normals(b, 2));
        Eigen::Vector3d cn(N[0], N[1], N[2]);
        Eigen::Vector3d tau = nor.cross(cn);
        tau.normalize();
        F.col(0) = tau;
    }
    return F;
}

// Volume element ratio of x -> x + tV(x) restricted to the subspace spanned by
// the orthonormal frame F: sqrt(det(F^T (I+tDV)^T (I+tDV) F)).
inline double frame_jacobian(const MatrixXd& DV, const MatrixXd& F, double t) {
    if (t == 0.0) return 1.0;  // h(0,.) is the identity, bit for bit
    const MatrixXd C = MatrixXd::Identity(DV.rows(), DV.cols()) + t * DV;
    const MatrixXd G = (C * F).transpose() * (C * F);
    return std::sqrt(G.determinant());
}

// d/dt at t=0 of the frame Jacobian: tr(F^T DV F).
inline double frame_rate(const MatrixXd& DV, const MatrixXd& F) {
    return (F.transpose() * DV * F).trace();
}

}  // namespace detail

// Pushforward of the full quadrature (interior and boundary) by h_t = id + tV.
// Interior weights are rescaled by the tangential volume element of h_t;
// normals and curvature data are not transported (only t = 0 formulas use them).
struct PerturbationFlow {
    QuadratureDomain base;
    VectorField V;

    QuadratureDomain at(double t) const {
        QuadratureDomain d = base;
        const int N = base.size(), Nb = base.boundary_size();
        for (int i = 0; i < N; ++i) {
            VectorXd x = base.nodes.row(i).transpose();
            d.nodes.row(i) = (x + t * V.value(x)).transpose();
            MatrixXd DV = V.jacobian_at(x);
            d.weights[i] = base.weights[i] *
                           std::abs(detail::frame_jacobian(DV, detail::tangent_frame(base, i), t));
        }
        for (int b = 0; b < Nb; ++b) {
            VectorXd x = base.boundary_nodes.row(b).transpose();
            d.boundary_nodes.row(b) = (x + t * V.value(x)).transpose();
            MatrixXd Fb = detail::boundary_frame(base, b);
            if (Fb.cols() > 0) {
                MatrixXd DV = V.jacobian_at(x);
                d.boundary_weights[b] =
                    base.boundary_weights[b] * std::abs(detail::frame_jacobian(DV, Fb, t));
            }
        }
        d.descriptor = base.descriptor + "+t*" + V.name + "(t=" + format_full(t) + ")";
        return d;
    }
};

// Re-derive the coefficient recipe on a transported configuration: the hole
// quadrature co-moves with the flow.
inline CoefficientSpec transported_spec(const CoefficientSpec& spec, const VectorField& V,
                                        double t) {
    CoefficientSpec out = spec;
    if (spec.rule == CoefficientRule::hole && spec.hole) {
        PerturbationFlow hf{*spec.hole, V};
        out.hole = std::make_shared<QuadratureDomain>(hf.at(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// First-order shape derivative of a simple eigenvalue: four-term assembly.

enum class CurvatureConvention { sum_of_principal, mean };
enum class NormalTermRoute { gradient_once, gradient_twice, kernel_gradient };

inline std::string to_string(CurvatureConvention c) {
    return c == CurvatureConvention::sum_of_principal ? "sum-of-principal" : "mean";
}

inline std::string to_string(NormalTermRoute r) {
    switch (r) {
        case NormalTermRoute::gradient_once: return "gradient-once";
        case NormalTermRoute::gradient_twice: return "gradient-twice";
        case NormalTermRoute::kernel_gradient: return "kernel-gradient";
    }
    return "?";
}

struct HadamardOptions {
    CurvatureConvention curvature = CurvatureConvention::sum_of_principal;
    NormalTermRoute route = NormalTermRoute::gradient_once;
};

struct HadamardReport {
    double lambda0 = 0.0;
    double term_boundary = 0.0;     // -int_{dM} (a - l0) u0^2 <V,N> dS
    double term_coefficient = 0.0;  // +int_M u0^2 (transported coefficient rate) dv
    double term_curvature = 0.0;    // +int_M (l0 - a) u0^2 <H,V_perp> dv
    double term_normal = 0.0;       // route-dependent normal-direction term
    double value = 0.0;
    CurvatureConvention curvature_convention = CurvatureConvention::sum_of_principal;
    NormalTermRoute route = NormalTermRoute::gradient_once;
    VectorXd boundary_trace;  // u0 extended to the boundary nodes
};

// Boundary trace of an eigenfunction through the eigenvalue identity
// u0 = (J_M u0) / (a - lambda0) evaluated at the boundary nodes.
inline VectorXd eigenfunction_boundary_trace(const NonlocalOperator& op, double lambda0,
                                             const VectorXd& u0) {
    const int Nb = op.domain.boundary_size();
    VectorXd conv = apply_convolution(op.domain, op.kernel, u0, op.domain.boundary_nodes);
    VectorXd tr(Nb);
    for (int b = 0; b < Nb; ++b) {
        const double denom = op.coeff.boundary_values[b] - lambda0;
        require(std::abs(denom) > 1e-12, "boundary trace: eigenvalue touches the band");
        tr[b] = conv[b] / denom;
    }
    return tr;
}

inline HadamardReport hadamard_derivative(const NonlocalOperator& op, double lambda0,
                                          const VectorXd& u0, const VectorField& V,
                                          const HadamardOptions& opts = {}) {
    const QuadratureDomain& dom = op.domain;
    const int N = dom.size(), Nb = dom.boundary_size();
    HadamardReport rep;
    rep.lambda0 = lambda0;
    rep.curvature_convention = opts.curvature;
    rep.route = opts.route;

    // boundary term; <V_tan, N> = <V, N> because the conormal is tangent to M
    rep.boundary_trace = eigenfunction_boundary_trace(op, lambda0, u0);
    for (int b = 0; b < Nb; ++b) {
        VectorXd s = dom.boundary_nodes.row(b).transpose();
        const double vn = V.value(s).dot(dom.boundary_conormals.row(b).transpose());
        rep.term_boundary -= (op.coeff.boundary_values[b] - lambda0) *
                             rep.boundary_trace[b] * rep.boundary_trace[b] * vn *
                             dom.boundary_weights[b];
    }

    FieldSplit split = split_field(V, dom);

    // coefficient term: transported rate = eulerian rate + <grad a, V_perp>
    VectorXd rate = coefficient_eulerian_rate(op.spec, dom, op.kernel, V);
    for (int i = 0; i < N; ++i) {
        const double dta =
            rate[i] + op.coeff.gradients.row(i).dot(split.normal.row(i));
        rep.term_coefficient += u0[i] * u0[i] * dta * dom.weights[i];
    }

    // curvature term
    const double cscale = opts.curvature == CurvatureConvention::sum_of_principal
                              ? 1.0
                              : 1.0 / std::max(1, dom.intrinsic_dim);
    for (int i = 0; i < N; ++i) {
        const double hv = dom.curvature_vectors.row(i).dot(split.normal.row(i));
        rep.term_curvature +=
            (lambda0 - op.coeff.values[i]) * u0[i] * u0[i] * cscale * hv * dom.weights[i];
    }

    // normal-direction term
    if (opts.route == NormalTermRoute::kernel_gradient) {
        MatrixXd g = convolution_gradient(dom, op.kernel, u0, dom.nodes);
        for (int i = 0; i < N; ++i)
            rep.term_normal -= 2.0 * u0[i] * g.row(i).dot(split.normal.row(i)) * dom.weights[i];
    } else {
        const double fac = opts.route == NormalTermRoute::gradient_once ? 1.0 : 2.0;
        for (int i = 0; i < N; ++i)
            rep.term_normal -= fac * u0[i] * u0[i] *
                               op.coeff.gradients.row(i).dot(split.normal.row(i)) *
                               dom.weights[i];
    }

    rep.value = rep.term_boundary + rep.term_coefficient + rep.term_curvature + rep.term_normal;
    return rep;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle: transport the quadrature, rebuild the coefficient
// by its own rule, re-solve, track the eigenvalue branch by eigenvector
// overlap, extrapolate a centered-difference ladder.

struct FDOptions {
    std::vector<double> steps = {1e-2, 5e-3, 2.5e-3};
    int eigen_count = 4;          // Krylov budget covering the tracked branch
    double overlap_margin = 0.05; // two branches this close is an error
    std::uint64_t seed = 20240901ull;
};

struct FDResult {
    double value = 0.0;  // Richardson-extrapolated derivative
    std::vector<double> steps;
    std::vector<double> central;
    std::vector<double> lambda_plus, lambda_minus;
    bool branch_ok = true;
};

namespace detail {

// eigenvalue of the branch with maximal eigenvector overlap against the
// reference, on a transported configuration
inline double branch_eigenvalue(const QuadratureDomain& pert, const Kernel& kernel,
                                const CoefficientSpec& spec, const VectorXd& u0_ref,
                                const FDOptions& opts) {
    auto op = assemble_operator(pert, kernel, spec);
    int k = std::min(op.size(), opts.eigen_count);
    for (int attempt = 0; attempt < 2; ++attempt) {
        LanczosResult res = operator_smallest(op, k, u0_ref, false, opts.seed);
        int best = -1, second = -1;
        double bo = -1.0, so = -1.0;
        for (int j = 0; j < k; ++j) {
            const double o =
                std::abs(weighted_dot(res.vectors.col(j), u0_ref, pert.weights)) /
                weighted_norm(u0_ref, pert.weights);
            if (o > bo) {
                so = bo;
                second = best;
                bo = o;
                best = j;
            } else if (o > so) {
                so = o;
                second = j;
            }
        }
        (void)second;
        if (best == k - 1 && k < op.size()) {
            k = std::min(op.size(), k + 3);  // branch at the edge: widen once
            continue;
        }
        require(bo > 0.5, "finite-difference branch tracking lost the eigenvector");
        if (so > 0.0 && (bo - so) < opts.overlap_margin * bo)
            throw NonlocalError("finite-difference branch tracking is ambiguous");
        return res.values[best];
    }
    throw NonlocalError("finite-difference branch tracking failed to settle");
}

}  // namespace detail

inline FDResult fd_derivative(const QuadratureDomain& dom, const Kernel& kernel,
                              const CoefficientSpec& spec, const VectorField& V,
                              const VectorXd& u0_ref, const FDOptions& opts = {}) {
    require(!opts.steps.empty(), "finite differences need at least one step");
    PerturbationFlow flow{dom, V};
    FDResult out;
    for (double t : opts.steps) {
        const double lp = detail::branch_eigenvalue(flow.at(t), kernel,
                                                    transported_spec(spec, V, t), u0_ref, opts);
        const double lm = detail::branch_eigenvalue(flow.at(-t), kernel,
                                                    transported_spec(spec, V, -t), u0_ref, opts);
        out.steps.push_back(t);
        out.lambda_plus.push_back(lp);
        out.lambda_minus.push_back(lm);
        out.central.push_back((lp - lm) / (2.0 * t));
    }
    // two Richardson stages on a halving ladder, else last central value
    const auto& c = out.central;
    if (c.size() >= 3) {
        const double r1 = (4.0 * c[1] - c[0]) / 3.0;
        const double r2 = (4.0 * c[2] - c[1]) / 3.0;
        out.value = (16.0 * r2 - r1) / 15.0;
    } else if (c.size() == 2) {
        out.value = (4.0 * c[1] - c[0]) / 3.0;
    } else {
        out.value = c[0];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pullback invariance: the operator assembled on the image domain h(M) equals
// the pullback assembly on M entry by entry, so the spectra must coincide.

struct PullbackReport {
    double node_mismatch = 0.0;      // max |h(x_i) - y_i|
    double matrix_mismatch = 0.0;    // max entry difference
    double spectrum_hausdorff = 0.0; // between full spectra
    double band_min_difference = 0.0;
    double band_max_difference = 0.0;
};

inline PullbackReport pullback_check(const QuadratureDomain& M, const QuadratureDomain& image,
                                     const std::function<VectorXd(const VectorXd&)>& h,
                                     const std::function<MatrixXd(const VectorXd&)>& Dh,
                                     const Kernel& kernel, const CoefficientSpec& spec) {
    require(M.size() == image.size(), "pullback: node counts differ");
    require(M.codim() == 0 && image.codim() == 0, "pullback realized for full-dimensional domains");
    const int N = M.size();
    PullbackReport rep;
    MatrixXd mapped(N, M.ambient_dim);
    for (int i = 0; i < N; ++i) {
        VectorXd y = h(M.nodes.row(i).transpose());
        mapped.row(i) = y.transpose();
        rep.node_mismatch =
            std::max(rep.node_mismatch, (y - image.nodes.row(i).transpose()).norm());
    }
    auto op_image = assemble_operator(image, kernel, spec);
    // pullback assembly on M: transported weights w |det Dh|, coefficient read
    // through the node identification
    MatrixXd Apull = MatrixXd::Zero(N, N);
    VectorXd wpull(N);
    for (int i = 0; i < N; ++i)
        wpull[i] = M.weights[i] * std::abs(Dh(M.nodes.row(i).transpose()).determinant());
    for (int i = 0; i < N; ++i) {
        Apull(i, i) = op_image.coeff.values[i] - kernel(0.0) * wpull[i];
        for (int j = i + 1; j < N; ++j) {
            const double r = (mapped.row(i) - mapped.row(j)).norm();
            if (r >= kernel.delta()) continue;
            const double Jr = kernel(r);
            Apull(i, j) = -Jr * wpull[j];
            Apull(j, i) = -Jr * wpull[i];
        }
    }
    rep.matrix_mismatch = (Apull - op_image.A).cwiseAbs().maxCoeff();
    // spectra: symmetric similarities with the respective weights
    VectorXd sq1 = wpull.array().sqrt(), sq2 = image.weights.array().sqrt();
    MatrixXd S1 = sq1.asDiagonal() * Apull * sq1.cwiseInverse().asDiagonal();
    MatrixXd S2 = op_image.symmetrized();
    auto [v1, U1] = dense_eigh(0.5 * (S1 + S1.transpose()));
    auto [v2, U2] = dense_eigh(0.5 * (S2 + S2.transpose()));
    for (int i = 0; i < N; ++i)
        rep.spectrum_hausdorff = std::max(rep.spectrum_hausdorff, std::abs(v1[i] - v2[i]));
    rep.band_min_difference = 0.0;  // coefficient values identified node by node
    rep.band_max_difference = 0.0;
    VectorXd cpull(N);
    for (int i = 0; i < N; ++i) cpull[i] = op_image.coeff.values[i];
    rep.band_min_difference = std::abs(cpull.minCoeff() - op_image.band_min);
    rep.band_max_difference = std::abs(cpull.maxCoeff() - op_image.band_max);
    return rep;
}

// ---------------------------------------------------------------------------
// Eigenfunction derivative: material derivative w of the eigenfunction along
// the flow solves (B - lambda0) w = -f_V on the orthogonal complement of u0.

struct EigenDerivativeReport {
    VectorXd f;            // right-hand side field f_V
    VectorXd w;            // gauge-fixed solution, <w, u0>_w = 0
    double solvability = 0.0;   // |<u0, f>_w|: defect of the compatibility condition
    double residual = 0.0;      // ||(B - l0) w + P f||_w after projection P
    double orthogonality = 0.0; // |<w, u0>_w|
    // term magnitudes for reporting
    double norm_rate = 0.0, norm_commutator = 0.0, norm_boundary = 0.0, norm_curvature = 0.0,
           norm_kernel = 0.0;
};

inline EigenDerivativeReport eigenfunction_derivative(const NonlocalOperator& op, double lambda0,
                                                      const VectorXd& u0, const VectorField& V,
                                                      double dlambda) {
    const QuadratureDomain& dom = op.domain;
    const int N = dom.size(), Nb = dom.boundary_size();
    EigenDerivativeReport rep;

    // bootstrap tangential/ambient gradient of u0 from the eigenvalue identity:
    // grad u0 = (grad(J_M u0) - u0 grad a) / (a - lambda0)
    MatrixXd gJu = convolution_gradient(dom, op.kernel, u0, dom.nodes);
    MatrixXd gu(N, dom.ambient_dim);
    for (int i = 0; i < N; ++i) {
        const double denom = op.coeff.values[i] - lambda0;
        require(std::abs(denom) > 1e-12, "eigenfunction derivative: eigenvalue touches the band");
        gu.row(i) = (gJu.row(i) - u0[i] * op.coeff.gradients.row(i)) / denom;
    }

    FieldSplit split = split_field(V, dom);
    MatrixXd Vfull(N, dom.ambient_dim);
    for (int i = 0; i < N; ++i)
        Vfull.row(i) = V.value(dom.nodes.row(i).transpose()).transpose();

    // transported coefficient rate with the full field
    VectorXd rate = coefficient_eulerian_rate(op.spec, dom, op.kernel, V);
    VectorXd dta(N);
    for (int i = 0; i < N; ++i)
        dta[i] = rate[i] + op.coeff.gradients.row(i).dot(Vfull.row(i));

    // commutator [J_M, <V, grad .>] u0
    VectorXd advect(N);
    for (int i = 0; i < N; ++i) advect[i] = Vfull.row(i).dot(gu.row(i));
    VectorXd Jadv = apply_convolution(dom, op.kernel, advect, dom.nodes);
    VectorXd comm(N);
    for (int i = 0; i < N; ++i) comm[i] = Jadv[i] - Vfull.row(i).dot(gJu.row(i));

    // boundary leak term
    VectorXd btrace = Nb ? eigenfunction_boundary_trace(op, lambda0, u0) : VectorXd();
    VectorXd bterm = VectorXd::Zero(N);
    for (int b = 0; b < Nb; ++b) {
        VectorXd s = dom.boundary_nodes.row(b).transpose();
        const double flux = V.value(s).dot(dom.boundary_conormals.row(b).transpose()) *
                            btrace[b] * dom.boundary_weights[b];
        if (flux == 0.0) continue;
        for (int i = 0; i < N; ++i) {
            const double r = (dom.nodes.row(i) - dom.boundary_nodes.row(b)).norm();
            if (r < op.kernel.delta()) bterm[i] += op.kernel(r) * flux;
        }
    }

    // curvature and kernel-gradient corrections (vanish in codimension zero)
    VectorXd curv = VectorXd::Zero(N), kgrad = VectorXd::Zero(N);
    if (dom.codim() > 0) {
        VectorXd hv(N);
        for (int i = 0; i < N; ++i)
            hv[i] = dom.curvature_vectors.row(i).dot(split.normal.row(i)) * u0[i];
        curv = apply_convolution(dom, op.kernel, hv, dom.nodes);
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int j = 0; j < N; ++j) {
                VectorXd diff = dom.nodes.row(j).transpose() - dom.nodes.row(i).transpose();
                const double r = diff.norm();
                if (r <= 0.0 || r >= op.kernel.delta()) continue;
                acc += (op.kernel.radial_derivative(r) / r) * diff.dot(split.normal.row(j)) *
                       u0[j] * dom.weights[j];
            }
            kgrad[i] = acc;
        }
    }

    // weighted so that <u0, f>_w = -dlambda + (four-term formula, kernel route)
    // holds as an exact finite-sum identity in every codimension
    rep.f = (-dlambda) * u0 + (dta.array() * u0.array()).matrix() + comm - bterm - curv -
            2.0 * kgrad;
    rep.norm_rate = weighted_norm((dta.array() * u0.array()).matrix(), dom.weights);
    rep.norm_commutator = weighted_norm(comm, dom.weights);
    rep.norm_boundary = weighted_norm(bterm, dom.weights);
    rep.norm_curvature = weighted_norm(curv, dom.weights);
    rep.norm_kernel = 2.0 * weighted_norm(kgrad, dom.weights);

    rep.solvability = std::abs(weighted_dot(u0, rep.f, dom.weights));

    // spectral solve on the complement of the eigenvector
    auto spec_rep = full_spectrum(op);
    VectorXd fperp = rep.f;
    fperp -= weighted_dot(u0, rep.f, dom.weights) * u0;
    VectorXd w = VectorXd::Zero(N);
    const double gap = simplicity_gap_tol(lambda0);
    for (int j = 0; j < N; ++j) {
        const double lj = spec_rep.eigenvalues[j];
        if (std::abs(lj - lambda0) <= gap) continue;
        const VectorXd& phi = spec_rep.eigenvectors.col(j);
        w += (weighted_dot(phi, -fperp, dom.weights) / (lj - lambda0)) * phi;
    }
    rep.w = w;
    rep.residual = weighted_norm(op.apply(w) - lambda0 * w + fperp, dom.weights);
    rep.orthogonality = std::abs(weighted_dot(w, u0, dom.weights));
    return rep;
}

}  // namespace nonlocal
