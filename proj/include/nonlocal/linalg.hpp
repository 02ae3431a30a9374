#pragma once

#include <algorithm>
#include <numeric>

#include "nonlocal/common.hpp"

namespace nonlocal {

using ApplyFn = std::function<VectorXd(const VectorXd&)>;

// Full symmetric eigendecomposition, ascending eigenvalues.
inline std::pair<VectorXd, MatrixXd> dense_eigh(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    require(es.info() == Eigen::Success, "dense eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

// Cyclic Jacobi rotations; independent cross-check for the dense path.
// Quadratic per sweep, intended for N <= 512.
inline std::pair<VectorXd, MatrixXd> jacobi_eigh(MatrixXd S, int max_sweeps = 40) {
    const int n = static_cast<int>(S.rows());
    MatrixXd V = MatrixXd::Identity(n, n);
    const double base = S.norm();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += S(p, q) * S(p, q);
        if (std::sqrt(2.0 * off) <= 1e-15 * std::max(base, 1.0)) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = S(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = 0.5 * (S(q, q) - S(p, p)) / apq;
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double skp = S(k, p), skq = S(k, q);
                    S(k, p) = c * skp - s * skq;
                    S(k, q) = s * skp + c * skq;
                }
                for (int k = 0; k < n; ++k) {
                    const double spk = S(p, k), sqk = S(q, k);
                    S(p, k) = c * spk - s * sqk;
                    S(q, k) = s * spk + c * sqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
    }
    VectorXd vals = S.diagonal();
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    VectorXd sv(n);
    MatrixXd SV(n, n);
    for (int k = 0; k < n; ++k) {
        sv[k] = vals[idx[k]];
        SV.col(k) = V.col(idx[k]);
    }
    return {sv, SV};
}

struct LanczosOptions {
    int max_iterations = 0;  // 0: automatic
    double tol = 1e-12;
    std::uint64_t seed = 20240901ull;
    VectorXd start;  // optional warm start
};

struct LanczosResult {
    VectorXd values;   // k smallest Ritz values, ascending
    MatrixXd vectors;  // n x k
    int iterations = 0;
    bool converged = false;
};

// Lanczos with full reorthogonalization for the k smallest eigenpairs of a
// symmetric operator given by its matvec. A single Krylov run resolves only
// distinct eigenvalues; use smallest_eigenpairs when multiplicity matters.
inline LanczosResult lanczos_smallest(const ApplyFn& apply, int n, int k,
                                      const LanczosOptions& opts = {}) {
    require(k >= 1 && k <= n, "lanczos: bad subspace size");
    const int maxit = std::min(n, opts.max_iterations > 0 ? opts.max_iterations
                                                          : std::max(400, 8 * k + 100));
    MatrixXd Q(n, maxit);
    std::vector<double> alpha, beta;  // beta[j] = ||r|| linking q_j -> q_{j+1}
    VectorXd q = opts.start.size() == n ? opts.start : seeded_gaussian(n, opts.seed);
    q.normalize();
    Q.col(0) = q;
    LanczosResult out;
    int m = 0;
    VectorXd prev = VectorXd::Zero(n);
    double beta_prev = 0.0;
    std::uint64_t reseed = opts.seed;
    while (m < maxit) {
        VectorXd r = apply(Q.col(m));
        const double a = Q.col(m).dot(r);
        alpha.push_back(a);
        r -= a * Q.col(m);
        if (m > 0) r -= beta_prev * prev;
        // two passes of classical Gram-Schmidt against the whole basis
        for (int pass = 0; pass < 2; ++pass)
            r -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).transpose() * r);
        double b = r.norm();
        ++m;
        // Ritz convergence test for the k lowest pairs; past 64 iterations the
        // tridiagonal solve is throttled to every 8th step
        if (m >= k && (m <= 64 || m % 8 == 0 || m == maxit || b <= 1e-14)) {
            MatrixXd T = MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
            bool ok = true;
            for (int i = 0; i < k; ++i) {
                const double resid = b * std::abs(es.eigenvectors()(m - 1, i));
                if (resid > opts.tol * std::max(1.0, std::abs(es.eigenvalues()[i]))) {
                    ok = false;
                    break;
                }
            }
            if (ok || m == maxit || b <= 1e-14) {
                if (b <= 1e-14 && !ok && m < std::min(n, maxit)) {
                    // invariant subspace hit before convergence: restart direction
                    VectorXd g = seeded_gaussian(n, ++reseed);
                    for (int pass = 0; pass < 2; ++pass)
                        g -= Q.leftCols(m) * (Q.leftCols(m).transpose() * g);
                    const double gn = g.norm();
                    if (gn > 1e-12) {
                        prev = Q.col(m - 1);
                        beta_prev = 0.0;
                        beta.push_back(0.0);
                        q = g / gn;
                        Q.col(m) = q;
                        continue;
                    }
                }
                out.values = es.eigenvalues().head(k);
                out.vectors = Q.leftCols(m) * es.eigenvectors().leftCols(k);
                out.iterations = m;
                out.converged = ok;
                return out;
            }
        }
        if (m == maxit) break;
        prev = Q.col(m - 1);
        beta_prev = b;
        beta.push_back(b);
        q = r / b;
        Q.col(m) = q;
    }
    out.iterations = m;
    return out;
}

// Crude upper bound for the spectral radius by a few power iterations.
inline double operator_norm_estimate(const ApplyFn& apply, int n, int iters = 20,
                                     std::uint64_t seed = 777) {
    VectorXd v = seeded_gaussian(n, seed).normalized();
    double nrm = 1.0;
    for (int i = 0; i < iters; ++i) {
        v = apply(v);
        nrm = v.norm();
        if (nrm == 0.0) return 0.0;
        v /= nrm;
    }
    return nrm;
}

// k smallest eigenpairs with multiplicity: Lanczos run, then a second run on
// the operator with found pairs shifted upward, merged and sorted. Dense
// fallback for small problems.
inline LanczosResult smallest_eigenpairs(const ApplyFn& apply, int n, int k,
                                         const LanczosOptions& opts = {}) {
    if (n <= 600) {
        MatrixXd S(n, n);
        VectorXd e = VectorXd::Zero(n);
        for (int j = 0; j < n; ++j) {
            e[j] = 1.0;
            S.col(j) = apply(e);
            e[j] = 0.0;
        }
        S = 0.5 * (S + S.transpose()).eval();
        auto [vals, vecs] = dense_eigh(S);
        LanczosResult out;
        out.values = vals.head(k);
        out.vectors = vecs.leftCols(k);
        out.converged = true;
        out.iterations = n;
        return out;
    }
    const int kk = std::min(n, k + 2);
    LanczosResult first = lanczos_smallest(apply, n, kk, opts);
    require(first.converged, "lanczos failed to converge (first pass)");
    const double sigma = 4.0 * std::max(1.0, operator_norm_estimate(apply, n, 20, opts.seed + 5));
    MatrixXd V = first.vectors;
    ApplyFn deflated = [&](const VectorXd& x) {
        return (apply(x) + sigma * (V * (V.transpose() * x))).eval();
    };
    LanczosOptions o2 = opts;
    o2.seed += 17;
    o2.start = VectorXd();
    LanczosResult second = lanczos_smallest(deflated, n, kk, o2);
    // The second run may stall on a clustered upper block without harming the
    // multiplicity certificate: only values below the first pass's k-th one
    // can change the answer, so candidates are certified per pair by residual
    // and an uncertified value is fatal only inside that low window.
    const double low_window =
        first.values[k - 1] - 1e-12 * std::max(1.0, std::abs(first.values[k - 1]));
    std::vector<std::pair<double, VectorXd>> cand;
    for (int i = 0; i < first.values.size(); ++i)
        cand.push_back({first.values[i], first.vectors.col(i)});
    for (int i = 0; i < second.values.size(); ++i) {
        const double val = second.values[i];
        if (val > 0.5 * sigma + first.values[0]) continue;  // shifted copy
        VectorXd v = second.vectors.col(i);
        const double resid = (deflated(v) - val * v).norm();
        if (resid > 1e-8 * std::max(1.0, std::abs(val))) {
            require(val >= low_window, "lanczos deflation pass left a low eigenvalue uncertified");
            continue;
        }
        cand.push_back({val, v});
    }
    std::sort(cand.begin(), cand.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<double, VectorXd>> keep;
    for (auto& [val, vec] : cand) {
        VectorXd v = vec;
        for (auto& [kv, kvec] : keep) v -= kvec.dot(v) * kvec;
        if (v.norm() < 1e-6) continue;  // same direction already kept
        v.normalize();
        keep.push_back({val, v});
        if (static_cast<int>(keep.size()) == k) break;
    }
    require(static_cast<int>(keep.size()) == k, "eigenpair extraction came up short");
    LanczosResult out;
    out.values.resize(k);
    out.vectors.resize(n, k);
    for (int i = 0; i < k; ++i) {
        out.values[i] = keep[i].first;
        out.vectors.col(i) = keep[i].second;
    }
    out.converged = true;
    out.iterations = first.iterations + second.iterations;
    return out;
}

}  // namespace nonlocal
