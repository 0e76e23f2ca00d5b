#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qslant/map.hpp"
#include "qslant/slant.hpp"
#include "support/test_helpers.hpp"

using namespace qslant;
using testsup::vec;

namespace {

std::vector<Vector> box_points(const MapSpec& spec, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> pts;
    for (int i = 0; i < n; ++i)
        pts.push_back(rng.uniform_vector(spec.sample_box->first, spec.sample_box->second));
    return pts;
}

}  // namespace

TEST_CASE("tangent splitting") {
    SECTION("rotational fixture: rank 3, kernel dimension 5, isometric") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_5"));
        auto split = split_tangent(spec.map, box_points(spec, 1, 2)[0]);
        CHECK(split.rank == 3);
        CHECK(split.vertical.dim() == 5);
        CHECK(split.horizontal.dim() == 3);
        CHECK(split.range.dim() == 3);
        CHECK(split.range_perp.dim() == 1);
        CHECK(split.is_riemannian);
        CHECK(split.eikonal_residual <= 1e-9);
    }
    SECTION("identity map splits trivially") {
        auto f = testsup::parse_map(4, 4, {"x1", "x2", "x3", "x4"});
        auto split = split_tangent(f, vec({1, 2, 3, 4}));
        CHECK(split.vertical.dim() == 0);
        CHECK(split.is_riemannian);
    }
    SECTION("a scaled coordinate breaks the isometry") {
        auto f = testsup::parse_map(4, 1, {"2*x1"});
        auto split = split_tangent(f, vec({1, 0, 0, 0}));
        CHECK_FALSE(split.is_riemannian);
        CHECK(split.horizontal_singular_values[0] == Catch::Approx(2.0));
    }
    SECTION("singular values near the rank threshold are refused") {
        Matrix a = Matrix::Zero(2, 4);
        a(0, 0) = 1.0;
        a(1, 1) = 5e-10;  // between threshold decades
        auto f = SmoothMap::affine(a, Vector::Zero(2));
        CHECK_THROWS_AS(split_tangent(f, vec({1, 1, 1, 1})), AmbiguousRankError);
    }
}

TEST_CASE("energy density") {
    SECTION("rank-4 fixture has energy 2") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_7"));
        CHECK(energy_density(spec.map, box_points(spec, 1, 5)[0]) == Catch::Approx(2.0).margin(1e-12));
    }
    SECTION("zero map") {
        auto f = testsup::parse_map(4, 2, {"0", "0"});
        CHECK(energy_density(f, vec({1, 2, 3, 4})) == 0.0);
    }
    SECTION("norm map has unit gradient") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("sphere_norm"));
        CHECK(energy_density(spec.map, vec({1.0, 0.5, 0.5, 0.7})) ==
              Catch::Approx(0.5).margin(1e-12));
    }
}

TEST_CASE("semi-slant decomposition per structure") {
    auto h12 = canonical_hypercomplex(3);

    SECTION("pi/4 slant block") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_7"));
        auto split = split_tangent(spec.map, box_points(spec, 1, 7)[0]);
        auto rep = semi_slant_decompose(split, h12.i, "I");
        REQUIRE(rep.is_semi_slant);
        REQUIRE(rep.theta.has_value());
        CHECK(*rep.theta == Catch::Approx(M_PI / 4).margin(1e-9));
        CHECK(rep.d1.dim() == 4);
        CHECK(rep.d2.dim() == 4);
        CHECK(rep.omega_d2.dim() == 4);
        CHECK(rep.mu.dim() == 0);
    }
    SECTION("fully invariant kernel reports the complex case") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_9"));
        auto split = split_tangent(spec.map, box_points(spec, 1, 7)[0]);
        auto rep = semi_slant_decompose(split, h12.i, "I");
        REQUIRE(rep.is_semi_slant);
        CHECK_FALSE(rep.theta.has_value());
        CHECK(rep.theta_label() == "0 (complex case)");
        CHECK(rep.d1.dim() == 6);
        CHECK(rep.d2.dim() == 0);
    }
    SECTION("projection onto the first block has an invariant kernel") {
        auto f = testsup::parse_map(8, 4, {"x1", "x2", "x3", "x4"});
        auto h8 = canonical_hypercomplex(2);
        auto split = split_tangent(f, Vector::Zero(8));
        for (const auto& tag : structure_tags()) {
            auto rep = semi_slant_decompose(split, h8.structure(tag), tag);
            CHECK(rep.is_semi_slant);
            CHECK_FALSE(rep.theta.has_value());
            CHECK(rep.d1.dim() == 4);
        }
    }
}

TEST_CASE("structural identities hold on every fixture") {
    for (const auto& stem : {"example_5_5", "example_5_6", "example_5_7", "example_5_8",
                             "example_5_9", "example_5_10"}) {
        MapSpec spec = load_map_spec_file(testsup::corpus_file(stem));
        auto h = canonical_hypercomplex(spec.map.domain_dim() / 4);
        auto split = split_tangent(spec.map, box_points(spec, 1, 13)[0]);
        for (const auto& tag : structure_tags()) {
            auto rep = semi_slant_decompose(split, h.structure(tag), tag);
            REQUIRE(rep.is_semi_slant);
            for (const auto& [name, res] : rep.identity_residuals) {
                INFO(stem << " " << tag << " " << name);
                CHECK(res < 1e-10);
            }
        }
    }
}

TEST_CASE("structural identities on the norm map at random points") {
    MapSpec spec = load_map_spec_file(testsup::corpus_file("sphere_norm"));
    auto h = canonical_hypercomplex(1);
    for (const auto& p : box_points(spec, 10, 19)) {
        auto split = split_tangent(spec.map, p);
        for (const auto& tag : structure_tags()) {
            auto rep = semi_slant_decompose(split, h.structure(tag), tag);
            REQUIRE(rep.is_semi_slant);
            for (const auto& [name, res] : rep.identity_residuals) {
                INFO(tag << " " << name);
                CHECK(res < 1e-9);
            }
        }
    }
}

TEST_CASE("kernel complex structure") {
    auto h12 = canonical_hypercomplex(3);
    MapSpec spec9 = load_map_spec_file(testsup::corpus_file("example_5_9"));
    auto split9 = split_tangent(spec9.map, box_points(spec9, 1, 23)[0]);

    SECTION("complex case: rhat is the restriction of R itself") {
        auto rep = semi_slant_decompose(split9, h12.i, "I");
        Matrix rh = rhat(rep);
        CHECK(max_abs(Matrix(rh - rep.phi)) == 0.0);
        CHECK(max_abs(Matrix(rh * rh + Matrix::Identity(6, 6))) < 1e-10);
    }
    SECTION("pi/4 slant: rhat squares to minus the identity") {
        MapSpec spec7 = load_map_spec_file(testsup::corpus_file("example_5_7"));
        auto split7 = split_tangent(spec7.map, box_points(spec7, 1, 23)[0]);
        auto rep = semi_slant_decompose(split7, h12.i, "I");
        Matrix rh = rhat(rep);
        CHECK(max_abs(Matrix(rh * rh + Matrix::Identity(8, 8))) < 1e-10);
    }
    SECTION("right angle leaves rhat undefined") {
        MapSpec spec7 = load_map_spec_file(testsup::corpus_file("example_5_7"));
        auto split7 = split_tangent(spec7.map, box_points(spec7, 1, 23)[0]);
        auto rep = semi_slant_decompose(split7, h12.j, "J");
        REQUIRE(rep.right_angle());
        CHECK_THROWS_AS(rhat(rep), UndefinedOperationError);
    }
}

TEST_CASE("classification of the fixtures") {
    SECTION("strict fixture with one shared invariant distribution") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_5"));
        auto h = canonical_hypercomplex(2);
        auto cls = classify(spec.map, h, box_points(spec, 3, 31));
        CHECK(cls.verdict == Verdict::strictly_h_semi_slant);
        CHECK(cls.rank == 3);
        CHECK(cls.vertical_dim == 5);
        CHECK(cls.shared_d1.has_value());
        for (const auto& tag : structure_tags()) {
            REQUIRE(cls.angles.at(tag).has_value());
            CHECK(*cls.angles.at(tag) == Catch::Approx(M_PI / 2).margin(1e-9));
            CHECK(cls.d1_dims.at(tag) == 4);
            CHECK(cls.d2_dims.at(tag) == 1);
        }
    }
    SECTION("unequal angles keep the shared-distribution fixture below strict") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_7"));
        auto cls = classify(spec.map, canonical_hypercomplex(3), box_points(spec, 3, 37));
        CHECK(cls.verdict == Verdict::h_semi_slant);
        CHECK(cls.shared_d1.has_value());
        CHECK(*cls.angles.at("I") == Catch::Approx(M_PI / 4).margin(1e-9));
        CHECK(*cls.angles.at("J") == Catch::Approx(M_PI / 2).margin(1e-9));
        CHECK(*cls.angles.at("K") == Catch::Approx(M_PI / 4).margin(1e-9));
    }
    SECTION("closed-form angles at the default parameters") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_8"));
        auto cls = classify(spec.map, canonical_hypercomplex(3), box_points(spec, 3, 41));
        CHECK(cls.verdict == Verdict::h_semi_slant);
        CHECK(std::cos(*cls.angles.at("I")) == Catch::Approx(std::sin(0.5)).margin(1e-9));
        CHECK(std::cos(*cls.angles.at("K")) == Catch::Approx(std::cos(0.5)).margin(1e-9));
        CHECK(*cls.angles.at("J") == Catch::Approx(M_PI / 2).margin(1e-9));
    }
    SECTION("per-structure dimensions differ: almost") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_10"));
        auto cls = classify(spec.map, canonical_hypercomplex(3), box_points(spec, 3, 43));
        CHECK(cls.verdict == Verdict::almost_h_semi_slant);
        CHECK(cls.d1_dims.at("I") == 6);
        CHECK(cls.d1_dims.at("J") == 6);
        CHECK(cls.d1_dims.at("K") == 4);
        CHECK(cls.d2_dims.at("K") == 4);
        for (const auto& tag : structure_tags())
            CHECK(*cls.angles.at(tag) == Catch::Approx(M_PI / 2).margin(1e-9));
    }
    SECTION("norm map: equal dimensions and angles but no shared distribution") {
        MapSpec spec = load_map_spec_file(testsup::corpus_file("sphere_norm"));
        auto cls = classify(spec.map, canonical_hypercomplex(1), box_points(spec, 3, 47));
        CHECK(cls.verdict == Verdict::strictly_h_semi_slant);
        CHECK(cls.rank == 1);
        CHECK(cls.vertical_dim == 3);
        // the per-structure invariant planes genuinely differ here
        CHECK_FALSE(cls.shared_d1.has_value());
        for (const auto& tag : structure_tags()) {
            CHECK(cls.d1_dims.at(tag) == 2);
            CHECK(cls.d2_dims.at(tag) == 1);
            CHECK(*cls.angles.at(tag) == Catch::Approx(M_PI / 2).margin(1e-9));
        }
    }
    SECTION("injective map is degenerate and vacuously strict") {
        auto f = testsup::parse_map(4, 4, {"x1", "x2", "x3", "x4"});
        auto cls = classify(f, canonical_hypercomplex(1), {vec({0.1, 0.2, 0.3, 0.4})});
        CHECK(cls.verdict == Verdict::strictly_h_semi_slant);
        CHECK(cls.degenerate_vertical);
        CHECK(cls.vertical_dim == 0);
    }
    SECTION("non-isometric map is flagged") {
        auto f = testsup::parse_map(4, 1, {"2*x1"});
        auto cls = classify(f, canonical_hypercomplex(1), {vec({1, 0, 0, 0})});
        CHECK(cls.verdict == Verdict::not_riemannian);
    }
    SECTION("at least one analysis point is required") {
        auto f = testsup::parse_map(4, 4, {"x1", "x2", "x3", "x4"});
        CHECK_THROWS_AS(classify(f, canonical_hypercomplex(1), {}), InputError);
    }
    SECTION("rank-2 maps are pointwise semi-slant by the block identities") {
        // with a 2-dim horizontal space, c^2 + omega b = -id forces the
        // omega Gram matrix to be a multiple of the identity, so the slant
        // eigenvalues pair up automatically
        Rng rng(53);
        auto f = testsup::random_isometric_affine(rng, 8, 2, 2);
        auto cls = classify(f, canonical_hypercomplex(2), {rng.normal_vector(8)});
        CHECK(cls.verdict == Verdict::h_semi_slant);
    }
    SECTION("random kernel orientation at corank 3 is generic") {
        Rng rng(53);
        auto f = testsup::random_isometric_affine(rng, 8, 3, 3);
        auto cls = classify(f, canonical_hypercomplex(2), {rng.normal_vector(8)});
        CHECK(cls.verdict == Verdict::generic);
        CHECK_FALSE(cls.detail.empty());
    }
    SECTION("slant angle varying across points is refuted") {
        // two radial distances: an isometric map whose slant data moves with
        // the point for J and K
        auto f = testsup::parse_map(4, 2, {"sqrt(x1^2 + x2^2)", "sqrt(x3^2 + x4^2)"});
        std::vector<Vector> pts = {vec({1.0, 0.5, 0.7, 0.3}), vec({0.9, 0.2, 0.4, 1.1})};
        auto cls = classify(f, canonical_hypercomplex(1), pts);
        CHECK(cls.verdict == Verdict::generic);
        CHECK(cls.detail.find("varies across points") != std::string::npos);
    }
}

TEST_CASE("metric contractions on the slant part") {
    for (const auto& stem : {"example_5_7", "example_5_8"}) {
        MapSpec spec = load_map_spec_file(testsup::corpus_file(stem));
        auto h = canonical_hypercomplex(3);
        auto split = split_tangent(spec.map, box_points(spec, 1, 59)[0]);
        Rng rng(61);
        for (const auto& tag : structure_tags()) {
            auto rep = semi_slant_decompose(split, h.structure(tag), tag);
            REQUIRE(rep.is_semi_slant);
            if (rep.d2.empty()) continue;
            double c2 = std::cos(*rep.theta) * std::cos(*rep.theta);
            double s2 = 1.0 - c2;
            Matrix p_v = projector(split.vertical);
            const Matrix& r = h.structure(tag);
            for (int t = 0; t < 20; ++t) {
                Vector x = rep.d2.basis * rng.normal_vector(rep.d2.dim());
                Vector y = rep.d2.basis * rng.normal_vector(rep.d2.dim());
                Vector phi_x = p_v * (r * x), phi_y = p_v * (r * y);
                Vector om_x = r * x - phi_x, om_y = r * y - phi_y;
                CHECK(std::abs(phi_x.dot(phi_y) - c2 * x.dot(y)) < 1e-9 * (1 + std::abs(x.dot(y))));
                CHECK(std::abs(om_x.dot(om_y) - s2 * x.dot(y)) < 1e-9 * (1 + std::abs(x.dot(y))));
            }
        }
    }
}

TEST_CASE("kernel dimension splits exactly") {
    for (const auto& stem : {"example_5_5", "example_5_6", "example_5_7", "example_5_8",
                             "example_5_9", "example_5_10", "sphere_norm"}) {
        MapSpec spec = load_map_spec_file(testsup::corpus_file(stem));
        auto h = canonical_hypercomplex(spec.map.domain_dim() / 4);
        auto cls = classify(spec.map, h, box_points(spec, 2, 67));
        for (const auto& tag : structure_tags())
            CHECK(cls.d1_dims.at(tag) + cls.d2_dims.at(tag) == cls.vertical_dim);
    }
}

TEST_CASE("angle oracle agrees with the spectral path") {
    Rng rng(71);
    for (const auto& stem : {"example_5_7", "example_5_8", "sphere_norm"}) {
        MapSpec spec = load_map_spec_file(testsup::corpus_file(stem));
        auto h = canonical_hypercomplex(spec.map.domain_dim() / 4);
        auto split = split_tangent(spec.map, box_points(spec, 1, 73)[0]);
        for (const auto& tag : structure_tags()) {
            auto rep = semi_slant_decompose(split, h.structure(tag), tag);
            CHECK(slant_angle_oracle_defect(split, rep, h.structure(tag), rng) <= 1e-8);
        }
    }
}

TEST_CASE("conjugation equivariance of the analysis") {
    MapSpec spec = load_map_spec_file(testsup::corpus_file("example_5_7"));
    auto h = canonical_hypercomplex(3);
    auto pts = box_points(spec, 2, 79);
    auto cls = classify(spec.map, h, pts);

    Rng rng(83);
    Matrix q = rng.orthogonal(12);
    Matrix a = spec.map.jac(pts[0]);
    Vector b = spec.map.value(Vector::Zero(12));
    SmoothMap rotated = SmoothMap::affine(a * q.transpose(), b);
    std::vector<Vector> qpts;
    for (const auto& p : pts) qpts.push_back(q * p);
    auto cls_q = classify(rotated, conjugate(h, q), qpts);

    CHECK(cls_q.verdict == cls.verdict);
    for (const auto& tag : structure_tags())
        CHECK(std::abs(cls_q.angle_or_zero(tag) - cls.angle_or_zero(tag)) < 1e-9);
}
