#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qslant/derivatives.hpp"
#include "qslant/map.hpp"
#include "support/test_helpers.hpp"

using namespace qslant;
using testsup::vec;

namespace {

SmoothMap norm_map() {
    return testsup::parse_map(4, 1, {"sqrt(x1^2 + x2^2 + x3^2 + x4^2)"});
}

// Central-difference cross-check for first and second derivatives.
Matrix fd_jacobian(const SmoothMap& f, const Vector& p, double h = 1e-5) {
    Matrix j(f.codomain_dim(), f.domain_dim());
    for (Index a = 0; a < f.domain_dim(); ++a) {
        Vector hi = p, lo = p;
        hi[a] += h;
        lo[a] -= h;
        j.col(a) = (f.value(hi) - f.value(lo)) / (2.0 * h);
    }
    return j;
}

}  // namespace

TEST_CASE("dual arithmetic basics") {
    Dual1 x(2.0, 1.0);
    auto y = x * x + 3.0 * x;  // d/dx (x^2 + 3x) = 2x + 3
    CHECK(y.val == Catch::Approx(10.0));
    CHECK(y.dot == Catch::Approx(7.0));

    auto q = Dual1(1.0, 1.0) / Dual1(2.0, 0.0);
    CHECK(q.dot == Catch::Approx(0.5));

    CHECK_THROWS_AS(sqrt(Dual1(-1.0, 1.0)), EvalError);
    CHECK_THROWS_AS(abs(Dual1(0.0, 1.0)), EvalError);
    CHECK(pow_int(Dual1(2.0, 1.0), -2).val == Catch::Approx(0.25));
    CHECK(pow_int(Dual1(2.0, 1.0), -2).dot == Catch::Approx(-2.0 / 8.0));
}

TEST_CASE("jacobian of expression maps") {
    SECTION("rotational fixture rows are constant") {
        double a = 0.7;
        auto f = testsup::parse_map(8, 4,
                                    {"x2", "x1*sin(alpha) - x3*cos(alpha)", "2012", "x4"},
                                    {{"alpha", a}});
        Rng rng(11);
        Matrix j = f.jac(rng.normal_vector(8));
        Matrix expect = Matrix::Zero(4, 8);
        expect(0, 1) = 1.0;
        expect(1, 0) = std::sin(a);
        expect(1, 2) = -std::cos(a);
        expect(3, 3) = 1.0;
        CHECK(max_abs(Matrix(j - expect)) < 1e-15);
    }
    SECTION("identity map") {
        auto f = testsup::parse_map(4, 4, {"x1", "x2", "x3", "x4"});
        CHECK(max_abs(Matrix(f.jac(vec({1, 2, 3, 4})) - Matrix::Identity(4, 4))) == 0.0);
    }
    SECTION("norm map gradient is the unit radial row") {
        auto f = norm_map();
        Vector p = vec({0.8, -0.6, 1.1, 0.4});
        CHECK(max_abs(Matrix(f.jac(p) - testsup::sphere_jacobian(p))) < 1e-14);
    }
    SECTION("singular evaluation names the component") {
        auto f = testsup::parse_map(2, 2, {"x1", "x1/x2"});
        try {
            f.jac(vec({1.0, 0.0}));
            FAIL("expected an evaluation error");
        } catch (const EvalError& e) {
            CHECK(std::string(e.what()).find("component 2") != std::string::npos);
        }
    }
}

TEST_CASE("hessian of expression maps") {
    SECTION("affine maps have vanishing second derivatives, exactly") {
        auto f = testsup::parse_map(8, 4, {"x2", "x1*sin(alpha) - x3*cos(alpha)", "2012", "x4"},
                                    {{"alpha", 0.3}});
        CHECK(f.hess(Vector::Zero(8)).max_entry() == 0.0);
    }
    SECTION("norm map hessian matches the closed form") {
        auto f = norm_map();
        Vector p = vec({1.2, 0.3, -0.5, 0.9});
        Hessian3Tensor h = f.hess(p);
        CHECK(max_abs(Matrix(h.slice(0) - testsup::sphere_hessian(p))) < 1e-13);
    }
    SECTION("simple polynomial") {
        auto f = testsup::parse_map(4, 2, {"x1^2", "x2"});
        Hessian3Tensor h = f.hess(vec({1, 2, 3, 4}));
        CHECK(h.slice(0)(0, 0) == Catch::Approx(2.0));
        CHECK(std::abs(h.slice(0)(0, 0) - 2.0) == 0.0);
        Matrix rest = h.slice(0);
        rest(0, 0) = 0.0;
        CHECK(max_abs(rest) == 0.0);
        CHECK(max_abs(h.slice(1)) == 0.0);
    }
    SECTION("symmetry is exact by construction") {
        auto f = testsup::parse_map(4, 1, {"sin(x1)*cos(x2) + x3^3*x1"});
        Hessian3Tensor h = f.hess(vec({0.4, 1.1, -0.7, 0.2}));
        CHECK(max_abs(Matrix(h.slice(0) - h.slice(0).transpose())) == 0.0);
    }
}

TEST_CASE("derivatives agree with central finite differences") {
    Rng rng(23);
    auto trig = testsup::parse_map(4, 3, {"sin(x1)*x2", "cos(x3)^2", "x4*x1 + x2^3"});
    auto f = norm_map();
    for (int t = 0; t < 5; ++t) {
        Vector p = rng.normal_vector(4) + vec({3, 3, 3, 3});  // stay away from the origin
        CHECK((trig.jac(p) - fd_jacobian(trig, p)).norm() <=
              1e-6 * (1.0 + trig.jac(p).norm()));
        CHECK((f.jac(p) - fd_jacobian(f, p)).norm() <= 1e-6 * (1.0 + f.jac(p).norm()));

        Hessian3Tensor h = trig.hess(p);
        for (Index a = 0; a < 4; ++a) {
            Vector hi = p, lo = p;
            double step = 1e-5;
            hi[a] += step;
            lo[a] -= step;
            Matrix dslice = (trig.jac(hi) - trig.jac(lo)) / (2.0 * step);
            for (Index c = 0; c < 3; ++c)
                for (Index b = 0; b < 4; ++b)
                    CHECK(std::abs(h.slice(c)(a, b) - dslice(c, b)) <=
                          1e-6 * (1.0 + std::abs(dslice(c, b))));
        }
    }
}

TEST_CASE("derivatives agree with finite differences on every fixture") {
    for (const auto& stem : {"example_5_5", "example_5_6", "example_5_7", "example_5_8",
                             "example_5_9", "example_5_10", "sphere_norm"}) {
        MapSpec spec = load_map_spec_file(testsup::corpus_file(stem));
        Rng rng(211);
        Vector p = rng.uniform_vector(spec.sample_box->first, spec.sample_box->second);
        INFO(stem);
        Matrix j = spec.map.jac(p);
        CHECK((j - fd_jacobian(spec.map, p)).norm() <= 1e-6 * (1.0 + j.norm()));
        Hessian3Tensor h = spec.map.hess(p);
        double step = 1e-5;
        for (Index a = 0; a < spec.map.domain_dim(); ++a) {
            Vector hi = p, lo = p;
            hi[a] += step;
            lo[a] -= step;
            Matrix dslice = (spec.map.jac(hi) - spec.map.jac(lo)) / (2.0 * step);
            for (Index c = 0; c < spec.map.codomain_dim(); ++c)
                CHECK((h.slice(c).row(a).transpose() - dslice.row(c).transpose()).norm() <=
                      1e-6 * (1.0 + dslice.row(c).norm()));
        }
    }
}

TEST_CASE("projector field derivative") {
    SECTION("affine maps have constant projectors") {
        auto f = testsup::parse_map(4, 2, {"x1 + 2*x3", "x2"});
        auto d = projector_derivative(f, vec({0.3, 1.0, -2.0, 0.5}), vec({1, 1, 0, 0}));
        CHECK(max_abs(d.estimate) < 1e-11);
        CHECK(d.error < 1e-10);
    }
    SECTION("norm map matches the closed-form projector derivative") {
        auto f = norm_map();
        Vector p = vec({1.0, 0.0, 0.0, 0.0});
        Vector dir = vec({0.0, 1.0, 0.0, 0.0});
        auto d = projector_derivative(f, p, dir);
        CHECK(max_abs(Matrix(d.estimate - testsup::sphere_projector_derivative(p, dir))) < 1e-8);
        CHECK(d.error < 1e-6);
    }
    SECTION("derivative is linear in the direction") {
        auto f = norm_map();
        Vector p = vec({0.9, 0.4, -0.2, 1.3});
        Vector dir = vec({0.3, -1.0, 0.2, 0.1});
        auto d1 = projector_derivative(f, p, dir);
        auto d3 = projector_derivative(f, p, Vector(3.0 * dir));
        CHECK(max_abs(Matrix(d3.estimate - 3.0 * d1.estimate)) < 1e-7);
    }
    SECTION("rank change near the base point is detected") {
        auto f = testsup::parse_map(4, 1, {"x1^2"});
        // df = (2 x1, 0, 0, 0): rank 0 exactly at x1 = 0, rank 1 at the
        // probe offsets.
        CHECK_THROWS_AS(projector_derivative(f, Vector::Zero(4), vec({1, 0, 0, 0})),
                        ConstantRankViolation);
    }
    SECTION("plain central differences converge at second order") {
        auto f = norm_map();
        Vector p = vec({1.1, -0.7, 0.5, 0.9});
        Vector dir = vec({0.2, 0.4, -1.0, 0.3});
        Matrix exact = testsup::sphere_projector_derivative(p, Vector(dir / dir.norm())) * dir.norm();
        double e1 = max_abs(Matrix(
            fd_directional(VerticalProjectorField(f, 1), p, dir, 0.2, false).estimate - exact));
        double e2 = max_abs(Matrix(
            fd_directional(VerticalProjectorField(f, 1), p, dir, 0.1, false).estimate - exact));
        double ratio = e1 / e2;
        CHECK(ratio > 2.5);
        CHECK(ratio < 6.0);
    }
}
