#pragma once

#include <limits>

#include "nonlocal/coefficient.hpp"
#include "nonlocal/linalg.hpp"

namespace nonlocal {

// Dense Nystrom discretization of B u = a u - int J(.,y) u(y) dy:
//   A_ij = a_i delta_ij - J(|x_i - x_j|) w_j.
// Self-adjoint in the weighted inner product <u,v>_w = sum u_i v_i w_i; the
// similarity S = D^{1/2} A D^{-1/2} (D = diag(w)) is symmetric and is what the
// eigensolvers factor.
struct NonlocalOperator {
    QuadratureDomain domain;
    Kernel kernel;
    CoefficientSpec spec;
    Coefficient coeff;
    MatrixXd A;
    double band_min = 0.0, band_max = 0.0;

    int size() const { return static_cast<int>(A.rows()); }

    VectorXd apply(const VectorXd& u) const { return A * u; }

    // matvec of the symmetric similarity without materializing it
    VectorXd apply_sym(const VectorXd& v, const VectorXd& sqw, const VectorXd& isqw) const {
        return (sqw.array() * (A * (isqw.array() * v.array()).matrix()).array()).matrix();
    }

    MatrixXd symmetrized() const {
        VectorXd sqw = domain.weights.array().sqrt();
        return sqw.asDiagonal() * A * sqw.cwiseInverse().asDiagonal();
    }
};

// Overload taking a pre-built coefficient (literal nodal values, e.g. a
// rearranged coefficient that no rule reproduces).
inline NonlocalOperator assemble_operator(const QuadratureDomain& dom, const Kernel& kernel,
                                          const CoefficientSpec& spec, const Coefficient& coeff) {
    const int N = dom.size();
    require(N >= 1, "assemble: empty domain");
    require(N <= 9000, "assemble: node count too large for the dense path");
    require(coeff.values.size() == N, "assemble: coefficient/node count mismatch");
    NonlocalOperator op;
    op.domain = dom;
    op.kernel = kernel;
    op.spec = spec;
    op.coeff = coeff;
    op.band_min = op.coeff.band_min;
    op.band_max = op.coeff.band_max;
    op.A = MatrixXd::Zero(N, N);
    const double delta = kernel.delta();
    for (int i = 0; i < N; ++i) {
        op.A(i, i) = op.coeff.values[i] - kernel(0.0) * dom.weights[i];
        for (int j = i + 1; j < N; ++j) {
            const double r = (dom.nodes.row(i) - dom.nodes.row(j)).norm();
            if (r >= delta) continue;
            const double Jr = kernel(r);
            op.A(i, j) = -Jr * dom.weights[j];
            op.A(j, i) = -Jr * dom.weights[i];
        }
    }
    return op;
}

inline NonlocalOperator assemble_operator(const QuadratureDomain& dom, const Kernel& kernel,
                                          const CoefficientSpec& spec) {
    return assemble_operator(dom, kernel, spec, build_coefficient(spec, dom, kernel));
}

// Convolution part (J_M u) evaluated at arbitrary points.
inline VectorXd apply_convolution(const QuadratureDomain& dom, const Kernel& kernel,
                                  const VectorXd& u, const MatrixXd& points) {
    const int M = static_cast<int>(points.rows());
    VectorXd out = VectorXd::Zero(M);
    for (int p = 0; p < M; ++p) {
        double s = 0.0;
        for (int j = 0; j < dom.size(); ++j) {
            const double r = (points.row(p) - dom.nodes.row(j)).norm();
            if (r < kernel.delta()) s += kernel(r) * u[j] * dom.weights[j];
        }
        out[p] = s;
    }
    return out;
}

// Ambient gradient of (J_M u) at arbitrary points (radial kernel derivative).
inline MatrixXd convolution_gradient(const QuadratureDomain& dom, const Kernel& kernel,
                                     const VectorXd& u, const MatrixXd& points) {
    const int M = static_cast<int>(points.rows());
    const int d = dom.ambient_dim;
    MatrixXd out = MatrixXd::Zero(M, d);
    for (int p = 0; p < M; ++p) {
        VectorXd g = VectorXd::Zero(d);
        for (int j = 0; j < dom.size(); ++j) {
            VectorXd diff = points.row(p).transpose() - dom.nodes.row(j).transpose();
            const double r = diff.norm();
            if (r <= 0.0 || r >= kernel.delta()) continue;
            g += (kernel.radial_derivative(r) / r * u[j] * dom.weights[j]) * diff;
        }
        out.row(p) = g.transpose();
    }
    return out;
}

// Weighted self-adjointness defect of the assembled matrix (roundoff gauge).
inline double weighted_symmetry_error(const NonlocalOperator& op) {
    const VectorXd& w = op.domain.weights;
    const MatrixXd WA = w.asDiagonal() * op.A;
    return (WA - WA.transpose()).cwiseAbs().maxCoeff();
}

struct ClassifiedEigenvalue {
    double value = 0.0;
    int index = -1;
    bool below_band = false;
    bool simple = false;
    double residual = 0.0;
};

struct SpectrumReport {
    double band_min = 0.0, band_max = 0.0;
    double band_tol = 0.0, gap_tol_scale = 1e-6;
    VectorXd eigenvalues;   // ascending, all N
    MatrixXd eigenvectors;  // w-orthonormal columns
    std::vector<ClassifiedEigenvalue> discrete;  // outside the widened band
};

inline double band_tolerance(const NonlocalOperator& op) {
    return 10.0 / std::max(1, op.domain.resolution) * (op.band_max - op.band_min);
}

inline double simplicity_gap_tol(double lambda) { return 1e-6 * std::max(1.0, std::abs(lambda)); }

// Full dense decomposition with band classification. The similarity transform
// keeps the solve symmetric; eigenvectors are normalized to sum u_i^2 w_i = 1.
inline SpectrumReport full_spectrum(const NonlocalOperator& op, int node_cap = 2048) {
    const int N = op.size();
    require(N <= node_cap, "full spectrum requested beyond the node cap");
    SpectrumReport rep;
    rep.band_min = op.band_min;
    rep.band_max = op.band_max;
    rep.band_tol = band_tolerance(op);
    auto [vals, vecs] = dense_eigh(op.symmetrized());
    rep.eigenvalues = vals;
    VectorXd isqw = op.domain.weights.array().rsqrt();
    rep.eigenvectors.resize(N, N);
    for (int j = 0; j < N; ++j) {
        VectorXd u = isqw.array() * vecs.col(j).array();
        const double nw = weighted_norm(u, op.domain.weights);
        rep.eigenvectors.col(j) = u / nw;
    }
    for (int j = 0; j < N; ++j) {
        const double lam = vals[j];
        const bool below = lam < rep.band_min - rep.band_tol;
        const bool above = lam > rep.band_max + rep.band_tol;
        if (!below && !above) continue;
        ClassifiedEigenvalue ce;
        ce.value = lam;
        ce.index = j;
        ce.below_band = below;
        const double gap = std::min(j > 0 ? lam - vals[j - 1] : std::numeric_limits<double>::max(),
                                    j + 1 < N ? vals[j + 1] - lam : std::numeric_limits<double>::max());
        ce.simple = gap > simplicity_gap_tol(lam);
        VectorXd u = rep.eigenvectors.col(j);
        ce.residual = weighted_norm(op.apply(u) - lam * u, op.domain.weights);
        rep.discrete.push_back(ce);
    }
    return rep;
}

// k smallest eigenpairs of the operator (u-space, w-orthonormal, ascending).
// Warm starts accelerate the perturbed solves inside finite-difference flows.
inline LanczosResult operator_smallest(const NonlocalOperator& op, int k,
                                       const VectorXd& warm = VectorXd(),
                                       bool need_multiplicity = false,
                                       std::uint64_t seed = 20240901ull) {
    const int N = op.size();
    VectorXd sqw = op.domain.weights.array().sqrt();
    VectorXd isqw = sqw.cwiseInverse();
    ApplyFn f = [&](const VectorXd& v) { return op.apply_sym(v, sqw, isqw); };
    LanczosOptions opts;
    opts.seed = seed;
    if (warm.size() == N) opts.start = (sqw.array() * warm.array()).matrix();
    LanczosResult res;
    if (need_multiplicity || N <= 600) {
        res = smallest_eigenpairs(f, N, k, opts);
    } else {
        res = lanczos_smallest(f, N, k, opts);
        require(res.converged, "lanczos did not converge for the operator");
    }
    for (int j = 0; j < k; ++j) {
        VectorXd u = isqw.array() * res.vectors.col(j).array();
        res.vectors.col(j) = u / weighted_norm(u, op.domain.weights);
    }
    return res;
}

struct PrincipalEigenpair {
    double lambda = 0.0;
    VectorXd u;
    bool below_band = false;
    bool simple = false;
    double residual = 0.0;
    double min_entry = 0.0;  // after sign normalization
};

// Smallest eigenvalue with simplicity and positivity diagnostics. Sign is
// normalized so the weighted mean is positive.
inline PrincipalEigenpair principal_eigenpair(const NonlocalOperator& op,
                                              std::uint64_t seed = 20240901ull) {
    const int k = std::min(op.size(), 2);
    LanczosResult res = operator_smallest(op, k, VectorXd(), true, seed);
    PrincipalEigenpair p;
    p.lambda = res.values[0];
    p.u = res.vectors.col(0);
    if (weighted_dot(p.u, VectorXd::Ones(op.size()), op.domain.weights) < 0.0) p.u = -p.u;
    p.below_band = p.lambda < op.band_min - band_tolerance(op);
    p.simple = k < 2 || (res.values[1] - res.values[0]) > simplicity_gap_tol(res.values[0]);
    p.residual = weighted_norm(op.apply(p.u) - p.lambda * p.u, op.domain.weights);
    p.min_entry = p.u.minCoeff();
    return p;
}

// Quadrature of 1/(a - m + eps) for a decreasing regularization ladder;
// unbounded growth signals that the variational infimum may not be attained.
// Advisory output only.
struct ExistenceDiagnostic {
    std::vector<double> eps;
    std::vector<double> values;
    bool divergence_suspected = false;
};

inline ExistenceDiagnostic existence_diagnostic(const Coefficient& coeff,
                                                const QuadratureDomain& dom) {
    ExistenceDiagnostic diag;
    const double m = coeff.band_min;
    for (double e = 1e-1; e >= 0.9e-6; e *= 0.1) {
        double q = 0.0;
        for (int i = 0; i < dom.size(); ++i)
            q += dom.weights[i] / (coeff.values[i] - m + e);
        diag.eps.push_back(e);
        diag.values.push_back(q);
    }
    diag.divergence_suspected = diag.values.back() > 50.0 * diag.values.front();
    return diag;
}

}  // namespace nonlocal
