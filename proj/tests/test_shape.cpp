#include <gtest/gtest.h>

#include "nonlocal/shape.hpp"

using namespace nonlocal;

namespace {

Kernel kernel_1d() { return make_kernel(KernelFamily::mollified_indicator, 0.5, 1, 0.025); }
Kernel kernel_2d() { return make_kernel(KernelFamily::mollified_indicator, 0.6, 2, 0.25); }
Kernel kernel_m3() { return make_kernel(KernelFamily::mollified_indicator, 0.8, 3, 0.2); }

CoefficientSpec dirichlet_spec() { return CoefficientSpec{}; }

CoefficientSpec neumann_spec() {
    CoefficientSpec s;
    s.rule = CoefficientRule::neumann;
    return s;
}

VectorField linear_combination(double alpha, const VectorField& A, double beta,
                               const VectorField& B) {
    VectorField f;
    f.name = "combo";
    f.value = [alpha, A, beta, B](const VectorXd& x) {
        return (alpha * A.value(x) + beta * B.value(x)).eval();
    };
    f.jacobian = [alpha, A, beta, B](const VectorXd& x) {
        return (alpha * A.jacobian_at(x) + beta * B.jacobian_at(x)).eval();
    };
    return f;
}

VectorField rotation_field_2d() {
    VectorField f;
    f.name = "rotation";
    f.value = [](const VectorXd& x) {
        VectorXd v(2);
        v << -x[1], x[0];
        return v;
    };
    f.jacobian = [](const VectorXd&) {
        MatrixXd Jm(2, 2);
        Jm << 0.0, -1.0, 1.0, 0.0;
        return Jm;
    };
    return f;
}

VectorField rotation_field_3d_z() {
    VectorField f;
    f.name = "rotation-z";
    f.value = [](const VectorXd& x) {
        VectorXd v(3);
        v << -x[1], x[0], 0.0;
        return v;
    };
    return f;
}

PrincipalEigenpair solve_principal(const NonlocalOperator& op) { return principal_eigenpair(op); }

}  // namespace

TEST(PerturbationFlow, IdentityAtZeroTime) {
    auto dom = disk_domain(1.0, 16);
    PerturbationFlow flow{dom, normal_bump_field(VectorXd::Zero(2), 0.5, 2)};
    auto d0 = flow.at(0.0);
    EXPECT_EQ((d0.nodes - dom.nodes).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((d0.weights - dom.weights).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((d0.boundary_weights - dom.boundary_weights).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PerturbationFlow, DilationMatchesIndependentRequadrature) {
    const double t = 7e-3;
    {
        auto base = interval_domain(0.0, 1.0, 50);
        PerturbationFlow flow{base, dilation_field(1)};
        auto d = flow.at(t);
        auto indep = interval_domain(0.0, 1.0 + t, 50);
        EXPECT_LT((d.nodes - indep.nodes).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((d.weights - indep.weights).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_NEAR(d.volume(), 1.0 + t, 1e-13);
    }
    {
        auto base = disk_domain(1.0, 24);
        PerturbationFlow flow{base, dilation_field(2)};
        auto d = flow.at(t);
        EXPECT_NEAR(d.volume(), (1.0 + t) * (1.0 + t) * base.volume(), 1e-12);
        auto indep = disk_domain(1.0 + t, 24);
        EXPECT_NEAR(d.volume(), indep.volume(), 5e-3 * indep.volume());
        // boundary arc elements stretch linearly
        EXPECT_NEAR(d.boundary_measure(), (1.0 + t) * base.boundary_measure(), 1e-12);
    }
}

TEST(PerturbationFlow, ManifoldWeightsUseTangentialJacobian) {
    const double t = 5e-3;
    {
        auto base = circle_domain(1.0, 64);
        PerturbationFlow flow{base, dilation_field(2)};
        auto d = flow.at(t);
        EXPECT_LT((d.weights - (1.0 + t) * base.weights).cwiseAbs().maxCoeff(), 1e-14);
    }
    {
        auto base = sphere_domain(1.0, 12);
        PerturbationFlow flow{base, dilation_field(3)};
        auto d = flow.at(t);
        EXPECT_LT((d.weights - (1.0 + t) * (1.0 + t) * base.weights).cwiseAbs().maxCoeff(), 1e-12);
    }
    {
        auto base = hemisphere_domain(1.0, 12);
        PerturbationFlow flow{base, dilation_field(3)};
        auto d = flow.at(t);
        EXPECT_LT((d.boundary_weights - (1.0 + t) * base.boundary_weights).cwiseAbs().maxCoeff(),
                  1e-12);
    }
    {
        // vertical lift of a flat slice: lengths change only at second order
        auto base = segment_slice_domain(0.0, 1.0, 0.5, 40);
        VectorField lift = translation_field((VectorXd(2) << 0.0, 1.0).finished());
        PerturbationFlow flow{base, lift};
        auto d = flow.at(t);
        EXPECT_LT((d.weights - base.weights).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(PerturbationFlow, NoNodeCollisionsInsideBracket) {
    auto base = disk_domain(1.0, 20);
    PerturbationFlow flow{base, normal_bump_field((VectorXd(2) << 0.3, 0.1).finished(), 0.4, 2)};
    auto d = flow.at(1e-2);
    double dmin = std::numeric_limits<double>::max();
    for (int i = 0; i < d.size(); ++i)
        for (int j = i + 1; j < d.size(); ++j)
            dmin = std::min(dmin, (d.nodes.row(i) - d.nodes.row(j)).norm());
    EXPECT_GT(dmin, 1e-9);
}

TEST(Hadamard, LinearInTheField) {
    auto dom = disk_domain(1.0, 20);
    auto op = assemble_operator(dom, kernel_2d(), dirichlet_spec());
    auto pe = solve_principal(op);
    VectorField V1 = dilation_field(2);
    VectorField V2 = normal_bump_field((VectorXd(2) << 0.2, -0.1).finished(), 0.7, 2);
    const double a = 0.7, b = -1.3;
    auto r1 = hadamard_derivative(op, pe.lambda, pe.u, V1);
    auto r2 = hadamard_derivative(op, pe.lambda, pe.u, V2);
    auto rc = hadamard_derivative(op, pe.lambda, pe.u, linear_combination(a, V1, b, V2));
    EXPECT_NEAR(rc.value, a * r1.value + b * r2.value, 1e-10);
    EXPECT_NEAR(rc.term_boundary, a * r1.term_boundary + b * r2.term_boundary, 1e-10);
    EXPECT_NEAR(rc.term_coefficient, a * r1.term_coefficient + b * r2.term_coefficient, 1e-10);
}

TEST(Hadamard, FourTermsSumExactly) {
    auto dom = annulus_domain(1.0, 0.35, 24);
    CoefficientSpec spec;
    spec.rule = CoefficientRule::hole;
    spec.hole = std::make_shared<QuadratureDomain>(radial_disk_domain(0.35, 10));
    auto op = assemble_operator(dom, kernel_2d(), spec);
    auto pe = solve_principal(op);
    auto rep = hadamard_derivative(op, pe.lambda, pe.u, dilation_field(2));
    EXPECT_EQ(rep.value,
              rep.term_boundary + rep.term_coefficient + rep.term_curvature + rep.term_normal);
}

TEST(Hadamard, TangentialFieldsMoveNothing) {
    {
        auto dom = disk_domain(1.0, 20);
        auto op = assemble_operator(dom, kernel_2d(), dirichlet_spec());
        auto pe = solve_principal(op);
        auto rep = hadamard_derivative(op, pe.lambda, pe.u, rotation_field_2d());
        EXPECT_NEAR(rep.term_boundary, 0.0, 1e-13);
        EXPECT_EQ(rep.term_curvature, 0.0);
        EXPECT_EQ(rep.term_normal, 0.0);
        EXPECT_NEAR(rep.value, 0.0, 1e-13);
    }
    {
        CoefficientSpec spec;
        spec.rule = CoefficientRule::ambient;
        spec.ambient.value = [](const VectorXd&) { return 0.0; };
        spec.ambient.gradient = [](const VectorXd&) { return VectorXd::Zero(3).eval(); };
        auto dom = sphere_domain(1.0, 12);
        auto op = assemble_operator(dom, kernel_m3(), spec);
        auto pe = solve_principal(op);
        auto rep = hadamard_derivative(op, pe.lambda, pe.u, rotation_field_3d_z());
        EXPECT_NEAR(rep.term_curvature, 0.0, 1e-12);
        EXPECT_NEAR(rep.term_normal, 0.0, 1e-12);
        EXPECT_NEAR(rep.value, 0.0, 1e-12);
    }
}

TEST(Hadamard, AmbientGradientTermsCancel) {
    CoefficientSpec spec;
    spec.rule = CoefficientRule::ambient;
    spec.ambient.value = [](const VectorXd& x) { return 1.0 + 0.5 * x[1] + 0.3 * x[0] * x[1]; };
    spec.ambient.gradient = [](const VectorXd& x) {
        VectorXd g(2);
        g << 0.3 * x[1], 0.5 + 0.3 * x[0];
        return g;
    };
    auto dom = segment_slice_domain(0.0, 1.0, 0.5, 60);
    auto op = assemble_operator(dom, kernel_1d(), spec);
    auto pe = solve_principal(op);
    VectorField V = normal_bump_field((VectorXd(2) << 0.5, 0.0).finished(), 0.6, 2);
    auto rep = hadamard_derivative(op, pe.lambda, pe.u, V);
    EXPECT_NE(rep.term_coefficient, 0.0);
    EXPECT_NEAR(rep.term_coefficient + rep.term_normal, 0.0,
                1e-14 * std::abs(rep.term_coefficient));
}

TEST(Hadamard, NeumannZeroModeRateIsNull) {
    auto dom = interval_domain(0.0, 1.0, 120);
    auto op = assemble_operator(dom, kernel_1d(), neumann_spec());
    auto pe = solve_principal(op);
    ASSERT_NEAR(pe.lambda, 0.0, 1e-12);
    std::vector<VectorField> fields = {
        dilation_field(1), translation_field(VectorXd::Ones(1)),
        normal_bump_field((VectorXd(1) << 0.4).finished(), 0.5, 1)};
    for (const auto& V : fields) {
        auto rep = hadamard_derivative(op, pe.lambda, pe.u, V);
        // boundary and coefficient terms cancel through the self-consistent mass
        EXPECT_NEAR(rep.term_boundary + rep.term_coefficient, 0.0, 1e-12) << V.name;
        EXPECT_NEAR(rep.value, 0.0, 1e-12) << V.name;
    }
}

TEST(Hadamard, DirichletReducesToBoundaryTerm) {
    auto dom = interval_domain(0.0, 1.0, 100);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    auto rep = hadamard_derivative(op, pe.lambda, pe.u, dilation_field(1));
    EXPECT_EQ(rep.term_coefficient, 0.0);
    EXPECT_EQ(rep.term_curvature, 0.0);
    EXPECT_EQ(rep.term_normal, 0.0);
    double specialized = 0.0;
    for (int b = 0; b < dom.boundary_size(); ++b) {
        VectorXd s = dom.boundary_nodes.row(b).transpose();
        specialized -= (1.0 - pe.lambda) * rep.boundary_trace[b] * rep.boundary_trace[b] *
                       dilation_field(1).value(s).dot(dom.boundary_conormals.row(b).transpose()) *
                       dom.boundary_weights[b];
    }
    EXPECT_NEAR(rep.value, specialized, 1e-12 * std::max(1.0, std::abs(specialized)));
    EXPECT_LT(rep.value, 0.0);  // growing the interval lowers the ground state
}

TEST(Hadamard, TranslationInvarianceOnMirrorLattices) {
    {
        auto dom = interval_domain(0.0, 1.0, 100);
        auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
        auto pe = solve_principal(op);
        auto rep = hadamard_derivative(op, pe.lambda, pe.u, translation_field(VectorXd::Ones(1)));
        EXPECT_NEAR(rep.value, 0.0, 1e-12 * std::max(1.0, std::abs(pe.lambda)));
    }
    {
        auto dom = disk_domain(1.0, 24);
        auto op = assemble_operator(dom, kernel_2d(), dirichlet_spec());
        auto pe = solve_principal(op);
        VectorXd e1 = VectorXd::Zero(2);
        e1[0] = 1.0;
        auto rep = hadamard_derivative(op, pe.lambda, pe.u, translation_field(e1));
        EXPECT_NEAR(rep.value, 0.0, 1e-10 * std::max(1.0, std::abs(pe.lambda)));
    }
}

TEST(Hadamard, HoleCoefficientTermEqualsHoleBoundaryFlux) {
    auto hole = std::make_shared<QuadratureDomain>(radial_disk_domain(0.35, 12));
    CoefficientSpec spec;
    spec.rule = CoefficientRule::hole;
    spec.hole = hole;
    auto dom = annulus_domain(1.0, 0.35, 28);
    auto op = assemble_operator(dom, kernel_2d(), spec);
    auto pe = solve_principal(op);
    VectorField V = normal_bump_field(VectorXd::Zero(2), 0.8, 2);
    auto rep = hadamard_derivative(op, pe.lambda, pe.u, V);
    // Fubini swap of the same finite double sum: exact identity
    VectorXd u2 = pe.u.array().square();
    VectorXd conv = apply_convolution(dom, op.kernel, u2, hole->boundary_nodes);
    double flux = 0.0;
    for (int b = 0; b < hole->boundary_size(); ++b) {
        VectorXd s = hole->boundary_nodes.row(b).transpose();
        flux -= conv[b] * V.value(s).dot(hole->boundary_conormals.row(b).transpose()) *
                hole->boundary_weights[b];
    }
    EXPECT_NEAR(rep.term_coefficient, flux, 1e-13 * std::max(1.0, std::abs(flux)));
}

TEST(Hadamard, SphereClosedFormSpecialization) {
    CoefficientSpec spec;
    spec.rule = CoefficientRule::ambient;
    spec.ambient.value = [](const VectorXd&) { return 0.0; };
    spec.ambient.gradient = [](const VectorXd&) { return VectorXd::Zero(3).eval(); };
    auto dom = sphere_domain(1.0, 16);
    auto op = assemble_operator(dom, kernel_m3(), spec);
    auto pe = solve_principal(op);
    ASSERT_LT(pe.lambda, -1e-3);  // discrete eigenvalue below the trivial band {0}
    VectorField V = normal_bump_field((VectorXd(3) << 0.0, 0.0, 0.6).finished(), 1.0, 3);
    auto rep = hadamard_derivative(op, pe.lambda, pe.u, V);
    EXPECT_EQ(rep.term_boundary, 0.0);
    EXPECT_NEAR(rep.term_coefficient, 0.0, 1e-15);
    EXPECT_NEAR(rep.term_normal, 0.0, 1e-15);
    FieldSplit split = split_field(V, dom);
    const double n = 2.0, R = 1.0;
    double closed = 0.0;
    for (int i = 0; i < dom.size(); ++i) {
        VectorXd radial = dom.nodes.row(i).transpose() / R;
        closed += (n * pe.lambda / R) * pe.u[i] * pe.u[i] *
                  radial.dot(split.normal.row(i).transpose()) * dom.weights[i];
    }
    EXPECT_NEAR(rep.value, closed, 1e-10 * std::max(1.0, std::abs(closed)));
}

TEST(FiniteDifference, NullFieldGivesZero) {
    auto dom = interval_domain(0.0, 1.0, 80);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    VectorField zero;
    zero.name = "null";
    zero.value = [](const VectorXd& x) { return VectorXd::Zero(x.size()).eval(); };
    zero.jacobian = [](const VectorXd& x) {
        return MatrixXd::Zero(x.size(), x.size()).eval();
    };
    auto fd = fd_derivative(dom, op.kernel, op.spec, zero, pe.u);
    EXPECT_EQ(fd.value, 0.0);
}

TEST(FiniteDifference, TranslationIsExactlyFlat) {
    auto dom = interval_domain(0.0, 1.0, 100);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    auto fd = fd_derivative(dom, op.kernel, op.spec, translation_field(VectorXd::Ones(1)), pe.u);
    EXPECT_NEAR(fd.value, 0.0, 1e-10);
}

TEST(FiniteDifference, MatchesFormulaOnDirichletInterval) {
    auto dom = interval_domain(0.0, 1.0, 400);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    ASSERT_TRUE(pe.simple);
    auto rep = hadamard_derivative(op, pe.lambda, pe.u, dilation_field(1));
    auto fd = fd_derivative(dom, op.kernel, op.spec, dilation_field(1), pe.u);
    const double rel = std::abs(rep.value - fd.value) / std::max(std::abs(fd.value), 1e-8);
    EXPECT_LT(rel, 1e-2);
    EXPECT_EQ(fd.central.size(), 3u);
}

TEST(FiniteDifference, NeumannZeroModeStaysZero) {
    auto dom = interval_domain(0.0, 1.0, 100);
    auto op = assemble_operator(dom, kernel_1d(), neumann_spec());
    auto pe = solve_principal(op);
    auto fd = fd_derivative(dom, op.kernel, op.spec, dilation_field(1), pe.u);
    EXPECT_NEAR(fd.value, 0.0, 1e-10);
    for (double lp : fd.lambda_plus) EXPECT_NEAR(lp, 0.0, 1e-10);
}

TEST(Pullback, DoublingTheIntervalIsInvariant) {
    auto M = interval_domain(0.0, 1.0, 60);
    auto image = interval_domain(0.0, 2.0, 60);
    auto h = [](const VectorXd& x) { return (2.0 * x).eval(); };
    auto Dh = [](const VectorXd& x) {
        return (2.0 * MatrixXd::Identity(x.size(), x.size())).eval();
    };
    auto rep = pullback_check(M, image, h, Dh, kernel_1d(), dirichlet_spec());
    EXPECT_LT(rep.node_mismatch, 1e-14);
    EXPECT_LT(rep.matrix_mismatch, 1e-13);
    EXPECT_LT(rep.spectrum_hausdorff, 1e-8);
    EXPECT_EQ(rep.band_min_difference, 0.0);
    EXPECT_EQ(rep.band_max_difference, 0.0);
}

TEST(Pullback, IdentityIsBitIdentical) {
    auto M = interval_domain(0.0, 1.0, 40);
    auto h = [](const VectorXd& x) { return x; };
    auto Dh = [](const VectorXd& x) {
        return MatrixXd::Identity(x.size(), x.size()).eval();
    };
    auto rep = pullback_check(M, M, h, Dh, kernel_1d(), neumann_spec());
    EXPECT_EQ(rep.node_mismatch, 0.0);
    EXPECT_EQ(rep.matrix_mismatch, 0.0);
    EXPECT_LT(rep.spectrum_hausdorff, 1e-12);
}

TEST(EigenfunctionDerivative, TranslationSystemIsConsistent) {
    auto dom = interval_domain(0.0, 1.0, 200);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    VectorXd e1 = VectorXd::Ones(1);
    auto rep_h = hadamard_derivative(op, pe.lambda, pe.u, translation_field(e1));
    auto rep = eigenfunction_derivative(op, pe.lambda, pe.u, translation_field(e1), rep_h.value);
    EXPECT_LT(rep.solvability, 1e-6);
    EXPECT_LT(rep.residual, 1e-8);
    EXPECT_LT(rep.orthogonality, 1e-12);
}

TEST(EigenfunctionDerivative, NullFieldGivesZeroSolution) {
    auto dom = interval_domain(0.0, 1.0, 80);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    VectorField zero;
    zero.name = "null";
    zero.value = [](const VectorXd& x) { return VectorXd::Zero(x.size()).eval(); };
    zero.jacobian = [](const VectorXd& x) {
        return MatrixXd::Zero(x.size(), x.size()).eval();
    };
    auto rep = eigenfunction_derivative(op, pe.lambda, pe.u, zero, 0.0);
    EXPECT_EQ(rep.f.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(rep.w.cwiseAbs().maxCoeff(), 0.0);
}

TEST(EigenfunctionDerivative, FormulaInputMakesSolvabilityExact) {
    // discrete Fubini/eigen-identity cancellations make <u0, f_V>_w vanish to
    // roundoff when dlambda is the formula value on the same quadrature
    auto dom = interval_domain(0.0, 1.0, 150);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    VectorField V = normal_bump_field((VectorXd(1) << 0.3).finished(), 0.5, 1);
    auto rep_h = hadamard_derivative(op, pe.lambda, pe.u, V);
    auto rep = eigenfunction_derivative(op, pe.lambda, pe.u, V, rep_h.value);
    EXPECT_LT(rep.solvability, 1e-12);
    EXPECT_LT(rep.residual, 1e-8);
    EXPECT_LT(rep.orthogonality, 1e-12);
}

TEST(EigenfunctionDerivative, OracleInputSolvabilityShrinksUnderRefinement) {
    // with the independent oracle value the compatibility defect measures the
    // formula/oracle gap, an honest discretization error
    std::vector<int> res = {400, 800};
    std::vector<double> gaps;
    for (int r : res) {
        auto dom = interval_domain(0.0, 1.0, r);
        auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
        auto pe = solve_principal(op);
        VectorField V = normal_bump_field((VectorXd(1) << 0.3).finished(), 0.1, 1);
        auto fd = fd_derivative(dom, op.kernel, op.spec, V, pe.u);
        auto rep = eigenfunction_derivative(op, pe.lambda, pe.u, V, fd.value);
        gaps.push_back(rep.solvability);
        EXPECT_LT(rep.residual, 1e-8);
        EXPECT_LT(rep.orthogonality, 1e-12);
    }
    EXPECT_LT(gaps[0], 1e-4);
    EXPECT_LT(gaps[1], gaps[0]);
}

TEST(EigenfunctionDerivative, SolvabilityIsTheFormulaGapInAllCodimensions) {
    // exact finite-sum identity: <u0, f_V>_w = -dlambda + four-term formula
    // through the kernel-gradient route, boundary, curvature and kernel terms
    // included; checked on a curved manifold with boundary
    auto dom = hemisphere_domain(1.0, 14);
    auto op = assemble_operator(dom, kernel_m3(), dirichlet_spec());
    auto pe = solve_principal(op);
    VectorField V = normal_bump_field((VectorXd(3) << 0.0, 0.0, 0.4).finished(), 0.8, 3);
    HadamardOptions ho;
    ho.route = NormalTermRoute::kernel_gradient;
    auto rep_h = hadamard_derivative(op, pe.lambda, pe.u, V, ho);
    const double dl_in = 0.123;
    auto rep = eigenfunction_derivative(op, pe.lambda, pe.u, V, dl_in);
    EXPECT_NEAR(rep.solvability, std::abs(rep_h.value - dl_in),
                1e-13 * std::max(1.0, std::abs(rep_h.value)));
}

TEST(ShapeValidation, ContractViolationsThrow) {
    auto dom = interval_domain(0.0, 1.0, 40);
    auto op = assemble_operator(dom, kernel_1d(), dirichlet_spec());
    auto pe = solve_principal(op);
    FDOptions opts;
    opts.steps.clear();
    EXPECT_THROW(fd_derivative(dom, op.kernel, op.spec, dilation_field(1), pe.u, opts),
                 ValidationError);
    auto other = interval_domain(0.0, 1.0, 41);
    auto h = [](const VectorXd& x) { return x; };
    auto Dh = [](const VectorXd& x) {
        return MatrixXd::Identity(x.size(), x.size()).eval();
    };
    EXPECT_THROW(pullback_check(dom, other, h, Dh, kernel_1d(), dirichlet_spec()),
                 ValidationError);
    // an eigenvalue inside the essential band has no boundary-trace identity
    EXPECT_THROW(eigenfunction_boundary_trace(op, 1.0, pe.u), ValidationError);
}
