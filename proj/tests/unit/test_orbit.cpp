#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "quasicontract/bounds.hpp"
#include "quasicontract/orbit.hpp"

#include "support.hpp"

using namespace quasicontract;

namespace {

SelfMap scalar_map(double a, double b, const char* name) {
    return {[a, b](const Point& x, std::size_t) { return Point{a * x[0] + b}; },
            name};
}

OrbitRecord record_from_distances(std::vector<double> distances) {
    OrbitRecord rec{{}, {}, std::move(distances), Metric::l2()};
    for (std::size_t i = 0; i < rec.distances.size(); ++i) {
        rec.x_orbit.push_back(Point{rec.distances[i]});
        rec.y_orbit.push_back(Point{0.0});
    }
    return rec;
}

}  // namespace

TEST_CASE("iterate_pair: scalar contraction distances") {
    const OrbitRecord rec = iterate_pair(scalar_map(0.5, 0.0, "halve"),
                                         Point{4.0}, Point{0.0}, 2, Metric::l2());
    REQUIRE(rec.distances.size() == 3);
    CHECK(rec.distances[0] == 4.0);
    CHECK(rec.distances[1] == 2.0);
    CHECK(rec.distances[2] == 1.0);
    CHECK(rec.x_orbit.size() == 3);
    CHECK(rec.y_orbit.size() == 3);
}

TEST_CASE("iterate_pair: identity map keeps distances constant") {
    const SelfMap identity{[](const Point& x, std::size_t) { return x; }, "id"};
    const OrbitRecord rec =
        iterate_pair(identity, Point{3.0, 1.0}, Point{0.0, 1.0}, 5, Metric::l2());
    for (double d : rec.distances) CHECK(d == 3.0);
    CHECK(empirical_entry_index(rec, 3.0).value() == 0);
}

TEST_CASE("iterate_pair: affine offsets cancel in differences") {
    // Hand iteration: x 4 -> 3 -> 2.5, y 0 -> 1 -> 1.5, distances 4, 2, 1.
    const OrbitRecord rec = iterate_pair(scalar_map(0.5, 1.0, "affine"),
                                         Point{4.0}, Point{0.0}, 2, Metric::l2());
    CHECK(rec.distances == std::vector<double>{4.0, 2.0, 1.0});
}

TEST_CASE("iterate_pair: errors") {
    const SelfMap id{[](const Point& x, std::size_t) { return x; }, "id"};
    CHECK_THROWS_AS(iterate_pair(id, Point{1.0}, Point{1.0}, 0, Metric::l2()),
                    std::invalid_argument);
    CHECK_THROWS_AS(iterate_pair(id, Point{1.0}, Point{1.0, 2.0}, 3, Metric::l2()),
                    std::invalid_argument);

    const SelfMap blows_up{[](const Point& x, std::size_t j) {
                               if (j >= 2) return Point{std::exp(x[0] * 1e6)};
                               return x;
                           },
                           "explodes"};
    try {
        iterate_pair(blows_up, Point{700.0}, Point{0.0}, 10, Metric::l2());
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("step 3") != std::string::npos);
    }
}

TEST_CASE("check_bound_domination: hand-crafted records") {
    const ContractionParams p(0.5, 1.0);
    const auto hits = check_bound_domination(record_from_distances({4.0, 3.5}), p, 0.0);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].j == 1);
    CHECK(hits[0].observed == 3.5);
    CHECK(hits[0].bound == Catch::Approx(3.0));

    CHECK(check_bound_domination(record_from_distances({2.0, 2.0, 2.0}), p, 0.0)
              .empty());
    CHECK_THROWS_AS(
        check_bound_domination(record_from_distances({1.0}), {0.0, 1.0}, 0.0),
        std::domain_error);
}

TEST_CASE("empirical_entry_index: worked values") {
    CHECK(empirical_entry_index(record_from_distances({4.0, 3.0, 2.5, 2.25, 2.1}),
                                2.3)
              .value() == 3);
    CHECK(empirical_entry_index(record_from_distances({1.0, 1.0, 1.0}), 2.0)
              .value() == 0);
    CHECK_FALSE(
        empirical_entry_index(record_from_distances({4.0, 3.0, 4.0}), 3.5)
            .has_value());
    CHECK_THROWS_AS(empirical_entry_index(record_from_distances({1.0}), 0.0),
                    std::invalid_argument);
    OrbitRecord empty{{}, {}, {}, Metric::l2()};
    CHECK_THROWS_AS(empirical_entry_index(empty, 1.0), std::invalid_argument);
}

TEST_CASE("fixed_point_iteration: scalar fixed points") {
    const auto r1 = fixed_point_iteration(scalar_map(0.5, 0.0, "halve"), Point{8.0},
                                          Metric::l2(), 1e-10);
    CHECK(std::abs(r1.point[0]) < 1e-9);
    CHECK(r1.residual <= 1e-10);

    // Solve x = 0.5 x + 1.
    const auto r2 = fixed_point_iteration(scalar_map(0.5, 1.0, "affine"), Point{0.0},
                                          Metric::l2(), 1e-10);
    CHECK(r2.point[0] == Catch::Approx(2.0).margin(1e-9));

    CHECK_THROWS_AS(fixed_point_iteration(scalar_map(1.0, 1.0, "shift"), Point{0.0},
                                          Metric::l2(), 1e-10, 100),
                    std::runtime_error);
    CHECK_THROWS_AS(fixed_point_iteration(scalar_map(0.5, 0.0, "halve"), Point{1.0},
                                          Metric::l2(), 0.0),
                    std::invalid_argument);
}

TEST_CASE("fixed_point_iteration: residual contracts at the map's rate") {
    qctest::Rng rng(127);
    for (int trial = 0; trial < 20; ++trial) {
        const double K = rng.range(0.1, 0.9);
        const ContractionParams p(K, 0.0);
        const SelfMap T = make_compliant_test_map(p, 2, 500 + trial);
        const Point x0 = rng.point(2, -5.0, 5.0);
        double prev = -1.0;
        Point x = x0;
        for (int j = 0; j < 30; ++j) {
            const Point next = T.apply(x, 0);
            const double residual = distance(x, next, Metric::l2());
            if (prev > 1e-300) {
                CHECK(residual / prev <= (1.0 - K) + 1e-9);
            }
            prev = residual;
            x = next;
        }
    }
}

TEST_CASE("make_compliant_test_map: M = 0 reduces to a pure linear contraction") {
    const SelfMap T = make_compliant_test_map({0.4, 0.0}, 3, 99);
    qctest::Rng rng(131);
    for (int i = 0; i < 100; ++i) {
        const Point x = rng.point(3, -10.0, 10.0);
        const Point Tx = T.apply(x, 0);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(Tx[c] == Catch::Approx(0.6 * x[c]).margin(1e-15));
        }
    }
}

TEST_CASE("make_compliant_test_map: sampled pairs always satisfy the constraint") {
    const ContractionParams p(0.5, 1.0);
    const SelfMap T = make_compliant_test_map(p, 1, 7);
    qctest::Rng rng(137);
    for (int i = 0; i < 10000; ++i) {
        const Point x = rng.point(1, -20.0, 20.0);
        const Point y = rng.point(1, -20.0, 20.0);
        const DistanceSample s(distance(x, y, Metric::l2()),
                               distance(T.apply(x, 0), T.apply(y, 0), Metric::l2()));
        CHECK(verify_pair(s, p, 1e-12));
    }
}

TEST_CASE("make_compliant_test_map: equal seeds give bitwise-equal orbits") {
    const ContractionParams p(0.3, 0.7);
    const SelfMap a = make_compliant_test_map(p, 2, 12345);
    const SelfMap b = make_compliant_test_map(p, 2, 12345);
    const SelfMap c = make_compliant_test_map(p, 2, 54321);
    const OrbitRecord ra = iterate_pair(a, Point{4.0, -1.0}, Point{0.5, 2.0}, 40,
                                        Metric::l2());
    const OrbitRecord rb = iterate_pair(b, Point{4.0, -1.0}, Point{0.5, 2.0}, 40,
                                        Metric::l2());
    const OrbitRecord rc = iterate_pair(c, Point{4.0, -1.0}, Point{0.5, 2.0}, 40,
                                        Metric::l2());
    CHECK(ra.distances == rb.distances);
    CHECK(ra.x_orbit.back() == rb.x_orbit.back());
    CHECK(ra.distances != rc.distances);

    CHECK_THROWS_AS(make_compliant_test_map({0.0, 1.0}, 2, 1), std::domain_error);
    CHECK_THROWS_AS(make_compliant_test_map(p, 0, 1), std::invalid_argument);
}

TEST_CASE("compliant maps: domination and permanence over random trials") {
    qctest::Rng rng(139);
    for (int trial = 0; trial < 50; ++trial) {
        const ContractionParams p(rng.range(0.05, 0.95), rng.range(0.05, 3.0));
        const std::size_t dim = 1 + rng.integer(4);
        const SelfMap T = make_compliant_test_map(p, dim, 1000 + trial);
        const double limit = p.M / p.K;
        const double R = limit * rng.range(0.5, 4.0);
        Point x0 = rng.point(dim, -1.0, 1.0);
        std::vector<double> shifted = x0.coords();
        shifted[0] += R * rng.range(0.5, 1.0);
        const double eps = rng.range(0.05, 0.5);
        const std::size_t j0 = permanence_index({R, eps, p});
        const std::size_t steps = std::max<std::size_t>(200, j0 + 10);
        const OrbitRecord rec =
            iterate_pair(T, x0, Point(shifted), steps, Metric::l2());
        REQUIRE(rec.distances.front() <= R + 1e-12);

        CHECK(check_bound_domination(rec, p, 1e-9).empty());

        const auto entry = empirical_entry_index(rec, limit + eps);
        REQUIRE(entry.has_value());
        CHECK(*entry <= j0);
    }
}
