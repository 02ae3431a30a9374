#pragma once

#include "nonlocal/geometry.hpp"
#include "nonlocal/kernel.hpp"

namespace nonlocal {

enum class CoefficientRule { dirichlet, neumann, ambient, hole };

inline std::string to_string(CoefficientRule r) {
    switch (r) {
        case CoefficientRule::dirichlet: return "dirichlet";
        case CoefficientRule::neumann: return "neumann";
        case CoefficientRule::ambient: return "ambient";
        case CoefficientRule::hole: return "hole";
    }
    return "?";
}

inline CoefficientRule coefficient_rule_from_string(const std::string& s) {
    if (s == "dirichlet") return CoefficientRule::dirichlet;
    if (s == "neumann") return CoefficientRule::neumann;
    if (s == "ambient") return CoefficientRule::ambient;
    if (s == "hole") return CoefficientRule::hole;
    throw ValidationError("unknown coefficient rule: " + s);
}

struct AmbientCoefficient {
    std::function<double(const VectorXd&)> value;
    std::function<VectorXd(const VectorXd&)> gradient;  // null: finite differences
};

// Recipe for the coefficient; re-applied verbatim on perturbed domains so finite
// difference flows see the same construction rule.
struct CoefficientSpec {
    CoefficientRule rule = CoefficientRule::dirichlet;
    AmbientCoefficient ambient;                   // rule == ambient
    std::shared_ptr<QuadratureDomain> hole;       // rule == hole: quadrature of the excised set
    std::string describe() const {
        std::string s = to_string(rule);
        if (rule == CoefficientRule::hole && hole) s += "[" + hole->descriptor + "]";
        return s;
    }
};

// Realized coefficient on one domain: nodal values, boundary trace values and
// ambient gradients. The gradient rows live in R^d (unprojected).
struct Coefficient {
    CoefficientRule rule = CoefficientRule::dirichlet;
    VectorXd values;
    VectorXd boundary_values;
    MatrixXd gradients;  // N x d
    double band_min = 0.0, band_max = 0.0;
};

namespace detail {

inline double kernel_mass_at(const VectorXd& x, const QuadratureDomain& src, const Kernel& k) {
    double s = 0.0;
    for (int j = 0; j < src.size(); ++j) {
        const double r = (x - src.nodes.row(j).transpose()).norm();
        if (r < k.delta()) s += k(r) * src.weights[j];
    }
    return s;
}

inline VectorXd kernel_mass_gradient(const VectorXd& x, const QuadratureDomain& src,
                                     const Kernel& k) {
    VectorXd g = VectorXd::Zero(x.size());
    for (int j = 0; j < src.size(); ++j) {
        VectorXd diff = x - src.nodes.row(j).transpose();
        const double r = diff.norm();
        if (r <= 0.0 || r >= k.delta()) continue;
        g += (k.radial_derivative(r) / r * src.weights[j]) * diff;
    }
    return g;
}

}  // namespace detail

inline Coefficient build_coefficient(const CoefficientSpec& spec, const QuadratureDomain& dom,
                                     const Kernel& kernel) {
    const int N = dom.size(), Nb = dom.boundary_size(), d = dom.ambient_dim;
    Coefficient c;
    c.rule = spec.rule;
    c.values.resize(N);
    c.boundary_values.resize(Nb);
    c.gradients = MatrixXd::Zero(N, d);
    switch (spec.rule) {
        case CoefficientRule::dirichlet:
            c.values.setOnes();
            c.boundary_values.setOnes();
            break;
        case CoefficientRule::neumann:
            for (int i = 0; i < N; ++i) {
                c.values[i] = detail::kernel_mass_at(dom.nodes.row(i).transpose(), dom, kernel);
                c.gradients.row(i) =
                    detail::kernel_mass_gradient(dom.nodes.row(i).transpose(), dom, kernel)
                        .transpose();
            }
            for (int b = 0; b < Nb; ++b)
                c.boundary_values[b] =
                    detail::kernel_mass_at(dom.boundary_nodes.row(b).transpose(), dom, kernel);
            break;
        case CoefficientRule::ambient:
            require(static_cast<bool>(spec.ambient.value), "ambient rule needs a value function");
            for (int i = 0; i < N; ++i) {
                VectorXd x = dom.nodes.row(i).transpose();
                c.values[i] = spec.ambient.value(x);
                if (spec.ambient.gradient) {
                    c.gradients.row(i) = spec.ambient.gradient(x).transpose();
                } else {
                    const double h = 1e-6;
                    for (int j = 0; j < d; ++j) {
                        VectorXd xp = x, xm = x;
                        xp[j] += h;
                        xm[j] -= h;
                        c.gradients(i, j) =
                            (spec.ambient.value(xp) - spec.ambient.value(xm)) / (2.0 * h);
                    }
                }
            }
            for (int b = 0; b < Nb; ++b)
                c.boundary_values[b] = spec.ambient.value(dom.boundary_nodes.row(b).transpose());
            break;
        case CoefficientRule::hole:
            require(static_cast<bool>(spec.hole), "hole rule needs an excised-set quadrature");
            for (int i = 0; i < N; ++i) {
                VectorXd x = dom.nodes.row(i).transpose();
                c.values[i] = 1.0 - detail::kernel_mass_at(x, *spec.hole, kernel);
                c.gradients.row(i) =
                    (-detail::kernel_mass_gradient(x, *spec.hole, kernel)).transpose();
            }
            for (int b = 0; b < Nb; ++b)
                c.boundary_values[b] =
                    1.0 - detail::kernel_mass_at(dom.boundary_nodes.row(b).transpose(),
                                                 *spec.hole, kernel);
            break;
    }
    c.band_min = c.values.minCoeff();
    c.band_max = c.values.maxCoeff();
    return c;
}

// Eulerian time derivative of the coefficient field at the interior nodes when
// the domain (and, for the hole rule, the excised set) is transported by V.
// dirichlet and ambient coefficients are static; neumann and hole react through
// the moving integration region (surface-flux form of the transport theorem).
inline VectorXd coefficient_eulerian_rate(const CoefficientSpec& spec,
                                          const QuadratureDomain& dom, const Kernel& kernel,
                                          const VectorField& V) {
    const int N = dom.size();
    VectorXd rate = VectorXd::Zero(N);
    if (spec.rule == CoefficientRule::neumann) {
        require(dom.codim() == 0,
                "neumann eulerian rate realized for full-dimensional domains only");
        const int Nb = dom.boundary_size();
        VectorXd flux(Nb);
        for (int b = 0; b < Nb; ++b) {
            VectorXd s = dom.boundary_nodes.row(b).transpose();
            flux[b] = V.value(s).dot(dom.boundary_conormals.row(b).transpose()) *
                      dom.boundary_weights[b];
        }
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int b = 0; b < Nb; ++b) {
                const double r = (dom.nodes.row(i) - dom.boundary_nodes.row(b)).norm();
                if (r < kernel.delta()) acc += kernel(r) * flux[b];
            }
            rate[i] = acc;
        }
    } else if (spec.rule == CoefficientRule::hole) {
        const auto& A = *spec.hole;
        const int Nb = A.boundary_size();
        require(Nb > 0, "hole rule rate needs the excised-set boundary quadrature");
        VectorXd flux(Nb);
        for (int b = 0; b < Nb; ++b) {
            VectorXd s = A.boundary_nodes.row(b).transpose();
            flux[b] = V.value(s).dot(A.boundary_conormals.row(b).transpose()) *
                      A.boundary_weights[b];
        }
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int b = 0; b < Nb; ++b) {
                const double r = (dom.nodes.row(i) - A.boundary_nodes.row(b)).norm();
                if (r < kernel.delta()) acc += kernel(r) * flux[b];
            }
            rate[i] = -acc;
        }
    }
    return rate;
}

}  // namespace nonlocal
