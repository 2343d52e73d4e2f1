#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "ugwb/landau.hpp"
#include "ugwb/operator_core.hpp"

using Catch::Approx;
using namespace ugwb;

TEST_CASE("eigendecompose small matrices") {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    d(2, 2) = 2.0;
    const auto e = eigendecompose(d);
    CHECK(e.values(0) == Approx(3.0));
    CHECK(e.values(1) == Approx(2.0));
    CHECK(e.values(2) == Approx(1.0));
    CHECK(std::abs(e.vectors(0, 0)) == Approx(1.0));
    CHECK(std::abs(e.vectors(2, 1)) == Approx(1.0));
    CHECK(std::abs(e.vectors(1, 2)) == Approx(1.0));

    Eigen::MatrixXcd s(2, 2);
    s << 0.0, 1.0, 1.0, 0.0;
    const auto es = eigendecompose(s);
    CHECK(es.values(0) == Approx(1.0));
    CHECK(es.values(1) == Approx(-1.0));
    CHECK(std::abs(es.vectors(0, 0)) == Approx(1.0 / std::sqrt(2.0)));
    CHECK(std::abs(es.vectors(0, 0) - es.vectors(1, 0)) == Approx(0.0).margin(1e-14));

    CHECK_THROWS_AS(eigendecompose(Eigen::MatrixXcd::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("eigendecompose reconstructs random Hermitian matrices") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 5; ++t) {
        const auto a = oracle::random_hermitian(50, rng);
        const auto e = eigendecompose(a);
        const Eigen::MatrixXcd rec = e.vectors * e.values.asDiagonal() * e.vectors.adjoint();
        CHECK((rec - a).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((e.vectors.adjoint() * e.vectors - Eigen::MatrixXcd::Identity(50, 50)).cwiseAbs().maxCoeff() <= 1e-10);
        const double nrm = e.values.cwiseAbs().maxCoeff();
        for (int j = 0; j < 50; ++j) {
            CHECK((a * e.vectors.col(j) - e.values(j) * e.vectors.col(j)).norm() <= 1e-10 * nrm);
            if (j > 0) CHECK(e.values(j) <= e.values(j - 1));
        }
    }
}

TEST_CASE("assemble_wf for the identity kernel is multiplication by f") {
    GridSpec g(2, 1.0, 5);
    const auto n = static_cast<Eigen::Index>(g.total_points());
    KernelProjection id(Eigen::MatrixXcd::Identity(n, n) / g.weight(), g);
    const Eigen::VectorXd f = radial_decay_weight(g, 0.7);
    const auto w = assemble_wf(id, f);
    CHECK((w - Eigen::MatrixXcd(f.cast<cplx>().asDiagonal())).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK_THROWS_AS(assemble_wf(id, Eigen::VectorXd::Ones(3)), DimensionMismatch);
}

TEST_CASE("assemble_wf for a rank-1 projection with f = 1") {
    GridSpec g(2, 5.0, 24);
    const auto p = support::gaussian_rank1(g, 1.0);
    const auto w = assemble_wf(p, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.total_points())));
    const auto e = eigendecompose(w);
    CHECK(e.values(0) == Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(e.values(1)) <= 1e-12);
    CHECK(hermiticity_residual(w) == 0.0);
}

TEST_CASE("assemble_wf is positive semidefinite and W_1 = P") {
    GridSpec g(2, 4.0, 24);
    const auto p = landau_grid_projection(0, 2.0, g);
    const auto w = assemble_wf(p, radial_decay_weight(g, 1.0));
    const auto e = eigendecompose(w);
    CHECK(e.values.minCoeff() >= -1e-10 * e.values.maxCoeff());

    const auto w1 = assemble_wf(p, [](const std::array<double, 3>&) { return 1.0; });
    CHECK((w1 - p.orthonormal_matrix()).cwiseAbs().maxCoeff() <= 1e-12);
    const auto e1 = eigendecompose(w1);
    for (Eigen::Index i = 0; i < e1.values.size(); ++i)
        CHECK(std::min(std::fabs(e1.values(i)), std::fabs(e1.values(i) - 1.0)) <= 1e-10);
}

TEST_CASE("group_degeneracies") {
    Eigen::VectorXd v(3);
    v << 1.0, 0.9999999, 0.5;
    const auto g = group_degeneracies(v, 1e-5, 1e-12);
    REQUIRE(g.size() == 2u);
    CHECK(g[0].multiplicity() == 2u);
    CHECK(g[0].lambda == Approx(0.99999995));
    CHECK(g[1].multiplicity() == 1u);
    CHECK(group_degeneracies(v, 1e-5, 2.0).empty());

    Eigen::VectorXd z(4);
    z << 1e-14, 1e-15, 0.0, -1e-16;
    CHECK(group_degeneracies(z, 1e-6, 1e-13).empty());
}

TEST_CASE("localization integral basics") {
    GridSpec g(2, 6.0, 48);
    const double r = 3.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < g.total_points(); ++i)
        if (std::fabs(g.norm(i) - r) < std::fabs(g.norm(best) - r)) best = i;
    Eigen::VectorXcd cell = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(g.total_points()));
    cell(static_cast<Eigen::Index>(best)) = 1.0 / std::sqrt(g.weight());
    CHECK(localization_integral(cell, r, 1.0, g) == Approx(1.0).margin(0.2));

    double prev = 0.0;
    for (double d : {0.0, 1.0, 2.0, 3.0}) {
        const auto bump = support::gaussian_samples(g, 0.3, d, 0.0);
        const double v = localization_integral(bump, 0.0, 1.0, g);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(localization_integral(Eigen::VectorXcd::Zero(3), 1.0, 1.0, g), DimensionMismatch);
}

TEST_CASE("hs bound for a rank-1 projection") {
    GridSpec g(2, 5.0, 24);
    const auto p = support::gaussian_rank1(g, 1.0);
    const auto hs = hs_bound(p, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.total_points())),
                             LocalizationFunction::constant());
    CHECK(hs.m_bound == Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(hs.overflow);
}

TEST_CASE("build_ugwb on a rank-1 Gaussian") {
    GridSpec g(2, 6.0, 48);
    const auto p = support::gaussian_rank1(g, 0.8);
    const double q = 1.0;
    const auto u = build_ugwb(p, q);
    REQUIRE(u.levels.size() == 1u);
    const auto psi = support::gaussian_samples(g, 0.8);
    double direct = 0.0;
    for (std::size_t i = 0; i < g.total_points(); ++i)
        direct += std::exp(-q * g.jbracket_at(i)) * std::norm(psi(static_cast<Eigen::Index>(i))) * g.weight();
    CHECK(u.levels[0].lambda == Approx(direct).epsilon(1e-12));
    CHECK(u.levels[0].radius == Approx(radius_from_lambda(direct, q).radius).epsilon(1e-10));
    CHECK(check_ugwb(u).ok());
}

TEST_CASE("build_ugwb on the zero projection") {
    GridSpec g(2, 2.0, 8);
    CHECK(build_ugwb(KernelProjection::zero(g), 1.0).levels.empty());
    KernelProjection z(Eigen::MatrixXcd::Zero(64, 64), g);
    const auto u = build_ugwb(z, 1.0);
    CHECK(u.levels.empty());
    CHECK(u.route == UgwbRoute::dense_c4);
    CHECK_THROWS_AS(build_ugwb(z, 0.0), std::invalid_argument);
}

TEST_CASE("Landau grid UGWB reproduces the radial eigenvalues") {
    const double b = 2.0, q = 1.0;
    GridSpec g(2, 6.0, 64);
    const auto p = landau_grid_projection(0, b, g);
    const auto u = build_ugwb(p, q);
    CHECK(u.route == UgwbRoute::range_basis);
    REQUIRE(u.levels.size() >= 6u);
    for (int k = 0; k < 6; ++k) {
        const double ref = lambda_nk(LandauSpec{b, 0, q, k}, k, 1e-12).lambda;
        CHECK(std::fabs(u.levels[static_cast<std::size_t>(k)].lambda - ref) <= 2e-2 * ref);
    }
    for (const auto& l : u.levels) CHECK(l.multiplicity() == 1u);
    const auto radii = u.radii();
    for (std::size_t i = 1; i < 10; ++i) CHECK(radii[i] > radii[i - 1]);
    const auto rep = check_ugwb(u);
    CHECK(rep.ok());
    CHECK(rep.max_g_localization_ratio <= 1.0);
    CHECK_FALSE(u.hs_overflow);
}

TEST_CASE("range, dense and rotation-sector routes agree") {
    GridSpec g(2, 4.5, 24);
    const auto p = landau_grid_projection(0, 2.0, g);
    KernelProjection plain(p.kernel(), g);
    const auto c4 = c4_structure(g);
    REQUIRE(c4);
    CHECK(is_c4_invariant(plain, *c4, 1e-10));

    UgwbOptions range_opts;
    UgwbOptions dense_opts;
    dense_opts.use_symmetry = false;
    const auto ur = build_ugwb(p, 1.0, range_opts);
    const auto ud = build_ugwb(plain, 1.0, dense_opts);
    const auto uc = build_ugwb(plain, 1.0);
    CHECK(ur.route == UgwbRoute::range_basis);
    CHECK(ud.route == UgwbRoute::dense);
    CHECK(uc.route == UgwbRoute::dense_c4);
    const std::size_t n = std::min({ur.levels.size(), ud.levels.size(), uc.levels.size()});
    REQUIRE(n >= 10u);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(ur.levels[i].lambda == Approx(ud.levels[i].lambda).epsilon(1e-10));
        CHECK(uc.levels[i].lambda == Approx(ud.levels[i].lambda).epsilon(1e-10));
    }
    CHECK(check_ugwb(uc).ok());
    CHECK(check_ugwb(ud).ok());
}

TEST_CASE("grid eigenvalues converge with observed order at least one") {
    const double b = 2.0, q = 1.0;
    const double ref = lambda_nk(LandauSpec{b, 0, q, 0}, 0, 1e-13).lambda;
    std::vector<double> hs, errs;
    for (int n : {8, 12, 16}) {
        GridSpec g(2, 6.0, n);
        const auto u = build_ugwb(landau_grid_projection(0, b, g), q);
        hs.push_back(g.spacing());
        errs.push_back(std::fabs(u.levels[0].lambda - ref));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    const double order = std::log(errs[0] / errs[2]) / std::log(hs[0] / hs[2]);
    CHECK(order >= 1.0);
}

TEST_CASE("overflow flag when the weight outgrows the kernel decay") {
    GridSpec g(2, 8.0, 48);
    const auto fast = build_ugwb(support::gaussian_rank1(g, 0.5), 0.5);
    CHECK_FALSE(fast.hs_overflow);
    // a wide exponential profile decays at rate ~0.5, well below q = 3
    Eigen::VectorXcd v(static_cast<Eigen::Index>(g.total_points()));
    for (std::size_t i = 0; i < g.total_points(); ++i) v(static_cast<Eigen::Index>(i)) = std::exp(-0.5 * g.norm(i));
    v /= std::sqrt(v.squaredNorm());
    const auto p = KernelProjection::from_range_basis(v, g);
    CHECK(build_ugwb(p, 3.0).hs_overflow);
}
