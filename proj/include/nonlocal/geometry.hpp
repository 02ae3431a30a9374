#pragma once

#include <memory>

#include "nonlocal/common.hpp"

namespace nonlocal {

// Regular-lattice metadata kept by lattice builders so convolution products can
// be evaluated on the grid (fast paths); absent for unstructured quadratures.
struct LatticeInfo {
    double origin_x = 0.0, origin_y = 0.0;
    double spacing = 0.0;
    int nx = 0, ny = 0;
    std::vector<int> cell_ix, cell_iy;  // lattice coordinates of each node
};

// Quadrature model of a compact n-dimensional domain embedded in R^d.
// Interior nodes carry volume weights; boundary nodes carry surface weights and
// unit outward conormals lying in the tangent space. For hypersurfaces (n = d-1)
// node_normals holds a unit normal per interior node; curvature_vectors holds the
// sum-of-principal-curvatures vector (zero for flat or full-dimensional domains).
struct QuadratureDomain {
    int ambient_dim = 1;
    int intrinsic_dim = 1;
    MatrixXd nodes;               // N x d
    VectorXd weights;             // N
    MatrixXd boundary_nodes;      // Nb x d
    VectorXd boundary_weights;    // Nb
    MatrixXd boundary_conormals;  // Nb x d
    MatrixXd boundary_normals;    // Nb x d, surface normal at boundary (zero when n == d)
    MatrixXd node_normals;        // N x d (zero rows when n == d)
    MatrixXd curvature_vectors;   // N x d
    int resolution = 0;
    std::string shape_kind;
    std::string descriptor;
    std::shared_ptr<const LatticeInfo> lattice;

    int size() const { return static_cast<int>(nodes.rows()); }
    int boundary_size() const { return static_cast<int>(boundary_nodes.rows()); }
    int codim() const { return ambient_dim - intrinsic_dim; }
    double volume() const { return weights.sum(); }
    double boundary_measure() const {
        return boundary_weights.size() ? boundary_weights.sum() : 0.0;
    }

    // Orthogonal projector onto the tangent space at interior node i.
    MatrixXd tangent_projector(int i) const {
        MatrixXd P = MatrixXd::Identity(ambient_dim, ambient_dim);
        if (codim() > 0) {
            VectorXd n = node_normals.row(i).transpose();
            P -= n * n.transpose();
        }
        return P;
    }
};

namespace detail {

inline void finish_flat(QuadratureDomain& d) {
    d.node_normals = MatrixXd::Zero(d.size(), d.ambient_dim);
    d.curvature_vectors = MatrixXd::Zero(d.size(), d.ambient_dim);
}

inline void zero_boundary_normals(QuadratureDomain& d) {
    d.boundary_normals = MatrixXd::Zero(d.boundary_size(), d.ambient_dim);
}

}  // namespace detail

// Midpoint nodes on (a, b); weights (b-a)/res; boundary {a, b} with conormals -1, +1.
inline QuadratureDomain interval_domain(double a, double b, int res) {
    require(b > a && res >= 1, "interval: need b > a and res >= 1");
    QuadratureDomain d;
    d.ambient_dim = d.intrinsic_dim = 1;
    d.resolution = res;
    d.shape_kind = "interval";
    d.descriptor = "interval(" + format_full(a) + "," + format_full(b) + ")@" + std::to_string(res);
    const double h = (b - a) / res;
    d.nodes.resize(res, 1);
    d.weights = VectorXd::Constant(res, h);
    for (int k = 0; k < res; ++k) d.nodes(k, 0) = a + (k + 0.5) * h;
    d.boundary_nodes.resize(2, 1);
    d.boundary_nodes << a, b;
    d.boundary_weights = VectorXd::Ones(2);
    d.boundary_conormals.resize(2, 1);
    d.boundary_conormals << -1.0, 1.0;
    detail::finish_flat(d);
    detail::zero_boundary_normals(d);
    return d;
}

namespace detail {

// Circle boundary sample: nb midpoint angles, arc weights, radial conormals
// scaled by sign (+1 outer boundary, -1 inner boundary of an annulus).
inline void append_circle_boundary(QuadratureDomain& d, double R, int nb, double sign) {
    const int off = d.boundary_size();
    d.boundary_nodes.conservativeResize(off + nb, 2);
    d.boundary_weights.conservativeResize(off + nb);
    d.boundary_conormals.conservativeResize(off + nb, 2);
    for (int j = 0; j < nb; ++j) {
        const double t = (j + 0.5) * 2.0 * pi / nb;
        d.boundary_nodes(off + j, 0) = R * std::cos(t);
        d.boundary_nodes(off + j, 1) = R * std::sin(t);
        d.boundary_weights[off + j] = 2.0 * pi * R / nb;
        d.boundary_conormals(off + j, 0) = sign * std::cos(t);
        d.boundary_conormals(off + j, 1) = sign * std::sin(t);
    }
}

inline int even_count(double target, int floor_val) {
    int n = std::max(floor_val, static_cast<int>(std::lround(target)));
    if (n % 2) ++n;
    return n;
}

// Count rounded up to a multiple of 4: grids built with it are invariant under
// quarter turns and both axis mirrors, so exactly degenerate mode pairs and
// translation cancellations survive discretization.
inline int quad_count(double target, int floor_val) {
    int n = std::max(floor_val, static_cast<int>(std::lround(target)));
    n = ((n + 3) / 4) * 4;
    return n;
}

// Concentric rings of midpoint radii between rin and Rout: nr bands, each
// ring's node count proportional to its circumference. Every band area is
// integrated exactly (midpoint rule is exact for the linear integrand 2*pi*r),
// so the total weight equals the exact annular area.
inline void append_polar_rings(QuadratureDomain& d, double rin, double Rout, int nr) {
    const double dr = (Rout - rin) / nr;
    std::vector<double> xs, ys, ws;
    for (int k = 0; k < nr; ++k) {
        const double r = rin + (k + 0.5) * dr;
        const int nth = quad_count(2.0 * pi * r / dr, 8);
        const double warea = 2.0 * pi * r * dr / nth;
        for (int j = 0; j < nth; ++j) {
            const double t = (j + 0.5) * 2.0 * pi / nth;
            xs.push_back(r * std::cos(t));
            ys.push_back(r * std::sin(t));
            ws.push_back(warea);
        }
    }
    const int N = static_cast<int>(xs.size());
    d.nodes.resize(N, 2);
    d.weights.resize(N);
    for (int k = 0; k < N; ++k) {
        d.nodes(k, 0) = xs[k];
        d.nodes(k, 1) = ys[k];
        d.weights[k] = ws[k];
    }
    finish_flat(d);
}

}  // namespace detail

// Midpoint lattice on the full square: weights are uniform h^2 and the cell
// index table enables the FFT convolution path for large node counts.
inline QuadratureDomain square_domain(double side, int res) {
    require(res >= 2, "square: need res >= 2");
    const double R = 0.5 * side;
    QuadratureDomain d;
    d.ambient_dim = d.intrinsic_dim = 2;
    d.resolution = res;
    d.shape_kind = "square";
    d.descriptor = "square(side=" + format_full(side) + ")@" + std::to_string(res);
    const double h = 2.0 * R / res;
    auto li = std::make_shared<LatticeInfo>();
    li->origin_x = li->origin_y = -R;
    li->spacing = h;
    li->nx = li->ny = res;
    d.nodes.resize(res * res, 2);
    d.weights = VectorXd::Constant(res * res, h * h);
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            const int k = i * res + j;
            d.nodes(k, 0) = -R + (i + 0.5) * h;
            d.nodes(k, 1) = -R + (j + 0.5) * h;
            li->cell_ix.push_back(i);
            li->cell_iy.push_back(j);
        }
    d.lattice = li;
    detail::finish_flat(d);
    const int nbs = detail::even_count(2 * res, 16);
    d.boundary_nodes.resize(4 * nbs, 2);
    d.boundary_weights = VectorXd::Constant(4 * nbs, side / nbs);
    d.boundary_conormals.resize(4 * nbs, 2);
    for (int j = 0; j < nbs; ++j) {
        const double s = -R + (j + 0.5) * side / nbs;
        d.boundary_nodes.row(0 * nbs + j) << s, -R;
        d.boundary_conormals.row(0 * nbs + j) << 0, -1;
        d.boundary_nodes.row(1 * nbs + j) << R, s;
        d.boundary_conormals.row(1 * nbs + j) << 1, 0;
        d.boundary_nodes.row(2 * nbs + j) << -s, R;
        d.boundary_conormals.row(2 * nbs + j) << 0, 1;
        d.boundary_nodes.row(3 * nbs + j) << -R, -s;
        d.boundary_conormals.row(3 * nbs + j) << -1, 0;
    }
    detail::zero_boundary_normals(d);
    return d;
}

// Concentric-ring quadrature of the disk (res/2 bands, exact total area) with
// an arc-length boundary rule. Ring quadrature keeps the eigenvalue error a
// smooth function of the resolution, which convergence sweeps rely on.
inline QuadratureDomain disk_domain(double R, int res) {
    require(res >= 4, "disk: need res >= 4");
    QuadratureDomain d;
    d.ambient_dim = d.intrinsic_dim = 2;
    d.resolution = res;
    d.shape_kind = "disk";
    d.descriptor = "disk(R=" + format_full(R) + ")@" + std::to_string(res);
    detail::append_polar_rings(d, 0.0, R, std::max(2, res / 2));
    const int nb = detail::quad_count(pi * res, 64);
    detail::append_circle_boundary(d, R, nb, +1.0);
    detail::zero_boundary_normals(d);
    return d;
}

inline QuadratureDomain annulus_domain(double Rout, double rin, int res) {
    require(Rout > rin && rin > 0.0, "annulus: need Rout > rin > 0");
    require(res >= 4, "annulus: need res >= 4");
    QuadratureDomain d;
    d.ambient_dim = d.intrinsic_dim = 2;
    d.resolution = res;
    d.shape_kind = "annulus";
    d.descriptor = "annulus(R=" + format_full(Rout) + ",r=" + format_full(rin) + ")@" + std::to_string(res);
    const int nr = std::max(2, static_cast<int>(std::lround(res * (Rout - rin) / (2.0 * Rout))));
    detail::append_polar_rings(d, rin, Rout, nr);
    detail::append_circle_boundary(d, Rout, detail::quad_count(pi * res, 64), +1.0);
    detail::append_circle_boundary(d, rin, detail::quad_count(pi * res * rin / Rout, 32), -1.0);
    detail::zero_boundary_normals(d);
    return d;
}

// Closed curve in R^2; intrinsic dimension 1, no boundary.
inline QuadratureDomain circle_domain(double R, int res) {
    require(res >= 4, "circle: need res >= 4");
    QuadratureDomain d;
    d.ambient_dim = 2;
    d.intrinsic_dim = 1;
    d.resolution = res;
    d.shape_kind = "circle";
    d.descriptor = "circle(R=" + format_full(R) + ")@" + std::to_string(res);
    d.nodes.resize(res, 2);
    d.weights = VectorXd::Constant(res, 2.0 * pi * R / res);
    d.node_normals.resize(res, 2);
    d.curvature_vectors.resize(res, 2);
    for (int j = 0; j < res; ++j) {
        const double t = (j + 0.5) * 2.0 * pi / res;
        const double cx = std::cos(t), sy = std::sin(t);
        d.nodes.row(j) << R * cx, R * sy;
        d.node_normals.row(j) << cx, sy;
        d.curvature_vectors.row(j) << cx / R, sy / R;
    }
    d.boundary_nodes.resize(0, 2);
    d.boundary_weights.resize(0);
    d.boundary_conormals.resize(0, 2);
    detail::zero_boundary_normals(d);
    return d;
}

namespace detail {

// Latitude-longitude midpoint grid on a radius-R sphere patch theta in
// (theta0, theta1); isotropic angular spacing. Curvature vector (n/R) * unit
// radial, outward, with n = 2 the intrinsic dimension.
inline QuadratureDomain sphere_grid(double R, int nt, double theta0, double theta1,
                                    const std::string& kind) {
    QuadratureDomain d;
    d.ambient_dim = 3;
    d.intrinsic_dim = 2;
    d.resolution = nt;
    d.shape_kind = kind;
    const double dth = (theta1 - theta0) / nt;
    const int nphi = detail::even_count(2.0 * pi / dth, 8);
    const double dph = 2.0 * pi / nphi;
    const int N = nt * nphi;
    d.nodes.resize(N, 3);
    d.weights.resize(N);
    d.node_normals.resize(N, 3);
    d.curvature_vectors.resize(N, 3);
    int k = 0;
    for (int i = 0; i < nt; ++i) {
        const double th = theta0 + (i + 0.5) * dth;
        for (int j = 0; j < nphi; ++j) {
            const double ph = (j + 0.5) * dph;
            Eigen::Vector3d u(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                              std::cos(th));
            d.nodes.row(k) = (R * u).transpose();
            d.node_normals.row(k) = u.transpose();
            d.curvature_vectors.row(k) = (2.0 / R) * u.transpose();
            d.weights[k] = R * R * std::sin(th) * dth * dph;
            ++k;
        }
    }
    d.boundary_nodes.resize(0, 3);
    d.boundary_weights.resize(0);
    d.boundary_conormals.resize(0, 3);
    zero_boundary_normals(d);
    return d;
}

}  // namespace detail

inline QuadratureDomain sphere_domain(double R, int res) {
    require(res >= 4, "sphere: need res >= 4");
    auto d = detail::sphere_grid(R, res, 0.0, pi, "sphere");
    d.descriptor = "sphere(R=" + format_full(R) + ")@" + std::to_string(res);
    return d;
}

// Upper hemisphere z >= 0; boundary is the equator, conormal -e3 (outward, tangent).
inline QuadratureDomain hemisphere_domain(double R, int res) {
    require(res >= 4, "hemisphere: need res >= 4");
    auto d = detail::sphere_grid(R, res, 0.0, 0.5 * pi, "hemisphere");
    d.descriptor = "hemisphere(R=" + format_full(R) + ")@" + std::to_string(res);
    const int nb = detail::even_count(4.0 * res, 32);
    d.boundary_nodes.resize(nb, 3);
    d.boundary_weights = VectorXd::Constant(nb, 2.0 * pi * R / nb);
    d.boundary_conormals.resize(nb, 3);
    d.boundary_normals.resize(nb, 3);
    for (int j = 0; j < nb; ++j) {
        const double t = (j + 0.5) * 2.0 * pi / nb;
        d.boundary_nodes.row(j) << R * std::cos(t), R * std::sin(t), 0.0;
        d.boundary_conormals.row(j) << 0.0, 0.0, -1.0;
        d.boundary_normals.row(j) << std::cos(t), std::sin(t), 0.0;
    }
    return d;
}

// Horizontal segment (a, b) x {height} in R^2: a flat curve with boundary; the
// simplest codimension-one domain with nonzero normal field.
inline QuadratureDomain segment_slice_domain(double a, double b, double height, int res) {
    require(b > a && res >= 2, "slice: need b > a, res >= 2");
    QuadratureDomain d;
    d.ambient_dim = 2;
    d.intrinsic_dim = 1;
    d.resolution = res;
    d.shape_kind = "slice";
    d.descriptor = "slice(" + format_full(a) + "," + format_full(b) + ";y=" + format_full(height) + ")@" + std::to_string(res);
    const double h = (b - a) / res;
    d.nodes.resize(res, 2);
    d.weights = VectorXd::Constant(res, h);
    d.node_normals.resize(res, 2);
    d.curvature_vectors = MatrixXd::Zero(res, 2);
    for (int k = 0; k < res; ++k) {
        d.nodes.row(k) << a + (k + 0.5) * h, height;
        d.node_normals.row(k) << 0.0, 1.0;
    }
    d.boundary_nodes.resize(2, 2);
    d.boundary_nodes << a, height, b, height;
    d.boundary_weights = VectorXd::Ones(2);
    d.boundary_conormals.resize(2, 2);
    d.boundary_conormals << -1.0, 0.0, 1.0, 0.0;
    d.boundary_normals.resize(2, 2);
    d.boundary_normals << 0.0, 1.0, 0.0, 1.0;
    return d;
}

// Concentric-ring quadrature of a disk: ring areas are reproduced exactly, so
// the total weight equals pi R^2 to machine precision. Used as the target grid
// for radially symmetric rearrangements.
inline QuadratureDomain radial_disk_domain(double R, int nr) {
    require(nr >= 2, "radial-disk: need nr >= 2");
    QuadratureDomain d;
    d.ambient_dim = d.intrinsic_dim = 2;
    d.resolution = nr;
    d.shape_kind = "radial-disk";
    d.descriptor = "radial-disk(R=" + format_full(R) + ")@" + std::to_string(nr);
    detail::append_polar_rings(d, 0.0, R, nr);
    const int nb = detail::quad_count(2.0 * pi * nr, 64);
    detail::append_circle_boundary(d, R, nb, +1.0);
    detail::zero_boundary_normals(d);
    return d;
}

inline double ball_radius_for_measure(double measure, int n) {
    require(measure > 0.0 && n >= 1, "ball: need positive measure, n >= 1");
    return std::pow(measure / unit_ball_volume(n), 1.0 / n);
}

// Ball (centred at the origin) of prescribed n-dimensional measure.
inline QuadratureDomain ball_domain_with_measure(double measure, int n, int res) {
    const double r = ball_radius_for_measure(measure, n);
    if (n == 1) return interval_domain(-r, r, res);
    if (n == 2) return disk_domain(r, res);
    require(n == 3, "ball: only n <= 3 realized as a quadrature");
    QuadratureDomain d;
    d.ambient_dim = d.intrinsic_dim = 3;
    d.resolution = res;
    d.shape_kind = "ball3";
    d.descriptor = "ball3(R=" + format_full(r) + ")@" + std::to_string(res);
    const double h = 2.0 * r / res;
    const int sub = 4;
    std::vector<Eigen::Vector3d> pts;
    std::vector<double> ws;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j)
            for (int k = 0; k < res; ++k) {
                Eigen::Vector3d c(-r + (i + 0.5) * h, -r + (j + 0.5) * h, -r + (k + 0.5) * h);
                int cnt = 0;
                for (int si = 0; si < sub; ++si)
                    for (int sj = 0; sj < sub; ++sj)
                        for (int sk = 0; sk < sub; ++sk) {
                            Eigen::Vector3d p = c + Eigen::Vector3d(
                                ((si + 0.5) / sub - 0.5) * h,
                                ((sj + 0.5) / sub - 0.5) * h,
                                ((sk + 0.5) / sub - 0.5) * h);
                            if (p.squaredNorm() < r * r) ++cnt;
                        }
                if (cnt == 0) continue;
                pts.push_back(c);
                ws.push_back(h * h * h * cnt / double(sub * sub * sub));
            }
    const int N = static_cast<int>(pts.size());
    d.nodes.resize(N, 3);
    d.weights.resize(N);
    for (int k = 0; k < N; ++k) {
        d.nodes.row(k) = pts[k].transpose();
        d.weights[k] = ws[k];
    }
    d.boundary_nodes.resize(0, 3);
    d.boundary_weights.resize(0);
    d.boundary_conormals.resize(0, 3);
    detail::finish_flat(d);
    detail::zero_boundary_normals(d);
    return d;
}

// ---------------------------------------------------------------------------
// Vector fields on the ambient space.

struct VectorField {
    std::string name;
    std::function<VectorXd(const VectorXd&)> value;
    std::function<MatrixXd(const VectorXd&)> jacobian;  // null: finite differences

    MatrixXd jacobian_at(const VectorXd& x) const {
        if (jacobian) return jacobian(x);
        const int d = static_cast<int>(x.size());
        const double h = 1e-6;
        MatrixXd Jm(d, d);
        for (int j = 0; j < d; ++j) {
            VectorXd xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            Jm.col(j) = (value(xp) - value(xm)) / (2.0 * h);
        }
        return Jm;
    }
};

inline VectorField translation_field(const VectorXd& dir) {
    VectorField f;
    f.name = "translation";
    const VectorXd d = dir;
    f.value = [d](const VectorXd&) { return d; };
    f.jacobian = [n = static_cast<int>(d.size())](const VectorXd&) {
        return MatrixXd::Zero(n, n).eval();
    };
    return f;
}

inline VectorField dilation_field(int dim) {
    VectorField f;
    f.name = "dilation";
    f.value = [](const VectorXd& x) { return x; };
    f.jacobian = [dim](const VectorXd&) { return MatrixXd::Identity(dim, dim).eval(); };
    return f;
}

// Gaussian bump of the radial direction: V(x) = exp(-|x-c|^2 / s) * x.
// Along a sphere about the origin this is a normal field; on star-shaped
// Euclidean boundaries it has positive outward component.
inline VectorField normal_bump_field(const VectorXd& center, double s, int dim) {
    require(s > 0.0, "normal-bump: width must be positive");
    VectorField f;
    f.name = "normal-bump";
    const VectorXd c = center;
    f.value = [c, s](const VectorXd& x) { return (std::exp(-(x - c).squaredNorm() / s) * x).eval(); };
    f.jacobian = [c, s, dim](const VectorXd& x) {
        const double g = std::exp(-(x - c).squaredNorm() / s);
        MatrixXd Jm = g * MatrixXd::Identity(dim, dim);
        Jm += x * ((-2.0 / s) * g * (x - c)).transpose();
        return Jm.eval();
    };
    return f;
}

// Component-wise polynomial field; term (coef, exponents) contributes
// coef * prod_j x_j^{e_j} to one component.
struct MonomialTerm {
    double coef = 0.0;
    std::vector<int> exponents;
};

inline VectorField polynomial_field(const std::vector<std::vector<MonomialTerm>>& comps) {
    VectorField f;
    f.name = "polynomial";
    const auto terms = comps;
    f.value = [terms](const VectorXd& x) {
        VectorXd v = VectorXd::Zero(static_cast<int>(terms.size()));
        for (std::size_t i = 0; i < terms.size(); ++i)
            for (const auto& t : terms[i]) {
                double m = t.coef;
                for (std::size_t j = 0; j < t.exponents.size(); ++j)
                    m *= std::pow(x[static_cast<int>(j)], t.exponents[j]);
                v[static_cast<int>(i)] += m;
            }
        return v;
    };
    return f;
}

// Tangential / normal decomposition of a field at the interior nodes.
struct FieldSplit {
    MatrixXd tangential;  // N x d
    MatrixXd normal;      // N x d
};

inline FieldSplit split_field(const VectorField& V, const QuadratureDomain& dom) {
    const int N = dom.size(), d = dom.ambient_dim;
    FieldSplit s;
    s.tangential.resize(N, d);
    s.normal = MatrixXd::Zero(N, d);
    for (int i = 0; i < N; ++i) {
        VectorXd v = V.value(dom.nodes.row(i).transpose());
        if (dom.codim() > 0) {
            VectorXd n = dom.node_normals.row(i).transpose();
            const double vn = v.dot(n);
            s.normal.row(i) = (vn * n).transpose();
            v -= vn * n;
        }
        s.tangential.row(i) = v.transpose();
    }
    return s;
}

}  // namespace nonlocal
