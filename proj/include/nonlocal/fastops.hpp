#pragma once

#include <fftw3.h>

#include <cstring>

#include "nonlocal/operator.hpp"

namespace nonlocal {

// Matrix-free operator on a regular 2-D lattice subset: the convolution part is
// a discrete circular convolution on a zero-padded grid, evaluated with FFTs.
// Produces the same values as the dense assembly (same node pairs, same kernel
// samples) up to FFT roundoff. Nodes carry individual weights, so clipped
// boundary cells are handled exactly.
class LatticeConvOperator {
  public:
    LatticeConvOperator(const QuadratureDomain& dom, const Kernel& kernel,
                        const Coefficient& coeff)
        : N_(dom.size()), a_(coeff.values), w_(dom.weights) {
        require(dom.lattice != nullptr, "lattice operator needs lattice metadata");
        const LatticeInfo& li = *dom.lattice;
        nx_ = li.nx;
        ny_ = li.ny;
        px_ = 2 * nx_;
        py_ = 2 * ny_;
        sqw_ = w_.array().sqrt();
        isqw_ = sqw_.cwiseInverse();
        band_min_ = coeff.band_min;
        band_max_ = coeff.band_max;
        cell_.resize(N_);
        for (int k = 0; k < N_; ++k) cell_[k] = li.cell_ix[k] * py_ + li.cell_iy[k];
        const int pc = px_ * (py_ / 2 + 1);
        buf_ = fftw_alloc_real(px_ * py_);
        hat_ = fftw_alloc_complex(pc);
        khat_ = fftw_alloc_complex(pc);
        fwd_ = fftw_plan_dft_r2c_2d(px_, py_, buf_, hat_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_2d(px_, py_, hat_, buf_, FFTW_ESTIMATE);
        // kernel stamp with periodic wrap of negative offsets
        std::fill(buf_, buf_ + px_ * py_, 0.0);
        const double h = li.spacing;
        for (int dx = -nx_ + 1; dx < nx_; ++dx)
            for (int dy = -ny_ + 1; dy < ny_; ++dy) {
                const double r = h * std::sqrt(double(dx) * dx + double(dy) * dy);
                if (r >= kernel.delta()) continue;
                const int ix = (dx + px_) % px_, iy = (dy + py_) % py_;
                buf_[ix * py_ + iy] = kernel(r);
            }
        fftw_execute(fwd_);
        std::memcpy(khat_, hat_, sizeof(fftw_complex) * pc);
    }

    LatticeConvOperator(const LatticeConvOperator&) = delete;
    LatticeConvOperator& operator=(const LatticeConvOperator&) = delete;

    ~LatticeConvOperator() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
        fftw_free(hat_);
        fftw_free(khat_);
    }

    int size() const { return N_; }
    double band_min() const { return band_min_; }
    double band_max() const { return band_max_; }
    const VectorXd& weights() const { return w_; }

    // convolution sum_j J(|x_i - x_j|) g_j for nodal data g (weights not folded)
    VectorXd convolve(const VectorXd& g) const {
        std::fill(buf_, buf_ + px_ * py_, 0.0);
        for (int k = 0; k < N_; ++k) buf_[cell_[k]] = g[k];
        fftw_execute(fwd_);
        const int pc = px_ * (py_ / 2 + 1);
        for (int k = 0; k < pc; ++k) {
            const double re = hat_[k][0], im = hat_[k][1];
            hat_[k][0] = re * khat_[k][0] - im * khat_[k][1];
            hat_[k][1] = re * khat_[k][1] + im * khat_[k][0];
        }
        fftw_execute(bwd_);
        const double scale = 1.0 / (double(px_) * py_);
        VectorXd out(N_);
        for (int k = 0; k < N_; ++k) out[k] = buf_[cell_[k]] * scale;
        return out;
    }

    VectorXd apply(const VectorXd& u) const {
        return (a_.array() * u.array()).matrix() - convolve((w_.array() * u.array()).matrix());
    }

    // symmetric similarity matvec: diag(a) - W^{1/2} J W^{1/2}
    VectorXd apply_sym(const VectorXd& v) const {
        VectorXd c = convolve((sqw_.array() * v.array()).matrix());
        return (a_.array() * v.array() - sqw_.array() * c.array()).matrix();
    }

  private:
    int N_, nx_, ny_, px_, py_;
    VectorXd a_, w_, sqw_, isqw_;
    double band_min_ = 0.0, band_max_ = 0.0;
    std::vector<int> cell_;
    mutable double* buf_;
    mutable fftw_complex* hat_;
    fftw_complex* khat_;
    fftw_plan fwd_, bwd_;
};

// Compressed-sparse-row storage of the symmetric similarity
//   S = diag(a) - W^{1/2} J W^{1/2},
// with kernel-support pruning through spatial bins. For unstructured node
// clouds too large for the dense path.
class SparseNeighborOperator {
  public:
    SparseNeighborOperator(const QuadratureDomain& dom, const Kernel& kernel,
                           const Coefficient& coeff)
        : N_(dom.size()), a_(coeff.values), w_(dom.weights) {
        band_min_ = coeff.band_min;
        band_max_ = coeff.band_max;
        sqw_ = w_.array().sqrt();
        const double delta = kernel.delta();
        const int d = dom.ambient_dim;
        require(d == 2, "sparse neighbor operator realized for planar clouds");
        // bin nodes on a delta-sized grid
        double x0 = dom.nodes.col(0).minCoeff(), y0 = dom.nodes.col(1).minCoeff();
        const int bx = std::max(1, int((dom.nodes.col(0).maxCoeff() - x0) / delta) + 1);
        const int by = std::max(1, int((dom.nodes.col(1).maxCoeff() - y0) / delta) + 1);
        std::vector<std::vector<int>> bins(std::size_t(bx) * by);
        auto bin_of = [&](double x, double y) {
            int ix = std::min(bx - 1, std::max(0, int((x - x0) / delta)));
            int iy = std::min(by - 1, std::max(0, int((y - y0) / delta)));
            return ix * by + iy;
        };
        for (int k = 0; k < N_; ++k) bins[bin_of(dom.nodes(k, 0), dom.nodes(k, 1))].push_back(k);
        rowptr_.assign(N_ + 1, 0);
        std::vector<std::pair<int, double>> row;
        for (int i = 0; i < N_; ++i) {
            row.clear();
            const double xi = dom.nodes(i, 0), yi = dom.nodes(i, 1);
            const int cix = std::min(bx - 1, std::max(0, int((xi - x0) / delta)));
            const int ciy = std::min(by - 1, std::max(0, int((yi - y0) / delta)));
            for (int ix = std::max(0, cix - 1); ix <= std::min(bx - 1, cix + 1); ++ix)
                for (int iy = std::max(0, ciy - 1); iy <= std::min(by - 1, ciy + 1); ++iy)
                    for (int j : bins[std::size_t(ix) * by + iy]) {
                        const double dx = xi - dom.nodes(j, 0), dy = yi - dom.nodes(j, 1);
                        const double r = std::sqrt(dx * dx + dy * dy);
                        if (r >= delta) continue;
                        double v = -kernel(r) * sqw_[i] * sqw_[j];
                        if (j == i) v += a_[i];
                        row.push_back({j, v});
                    }
            std::sort(row.begin(), row.end());
            for (auto& [j, v] : row) {
                col_.push_back(j);
                val_.push_back(v);
            }
            rowptr_[i + 1] = static_cast<int>(col_.size());
        }
    }

    int size() const { return N_; }
    double band_min() const { return band_min_; }
    double band_max() const { return band_max_; }
    const VectorXd& weights() const { return w_; }
    std::size_t nonzeros() const { return val_.size(); }

    VectorXd apply_sym(const VectorXd& v) const {
        VectorXd out(N_);
        for (int i = 0; i < N_; ++i) {
            double s = 0.0;
            for (int p = rowptr_[i]; p < rowptr_[i + 1]; ++p) s += val_[p] * v[col_[p]];
            out[i] = s;
        }
        return out;
    }

  private:
    int N_;
    VectorXd a_, w_, sqw_;
    double band_min_ = 0.0, band_max_ = 0.0;
    std::vector<int> rowptr_, col_;
    std::vector<double> val_;
};

// Smallest eigenvalues via the symmetric matvec of either fast path.
template <typename Op>
LanczosResult fast_smallest(const Op& op, int k, bool need_multiplicity = false,
                            std::uint64_t seed = 20240901ull) {
    ApplyFn f = [&](const VectorXd& v) { return op.apply_sym(v); };
    LanczosOptions opts;
    opts.seed = seed;
    if (need_multiplicity) return smallest_eigenpairs(f, op.size(), k, opts);
    LanczosResult res = lanczos_smallest(f, op.size(), k, opts);
    require(res.converged, "lanczos did not converge on the fast path");
    return res;
}

}  // namespace nonlocal
