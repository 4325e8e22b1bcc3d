#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "bhlab/lattice.hpp"

using namespace bhlab;

namespace {

std::set<Coord> coords_of(const SiteSet& X) {
    std::set<Coord> out;
    for (int i : X.members) out.insert(X.parent->coord(i));
    return out;
}

// brute-force distance oracle, independent of the SiteSet machinery
std::set<Coord> brute_force_within(const Lattice& lat, const std::vector<Coord>& centers, double R) {
    std::set<Coord> out;
    for (const Coord& site : lat.sites()) {
        for (const Coord& c : centers) {
            double s = 0;
            for (std::size_t k = 0; k < site.size(); ++k)
                s += double(site[k] - c[k]) * double(site[k] - c[k]);
            if (std::sqrt(s) <= R) {
                out.insert(site);
                break;
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("make_lattice builds centered boxes") {
    auto lat = make_lattice(1, {5});
    REQUIRE(lat->num_sites() == 5);
    std::vector<Coord> expect = {{-2}, {-1}, {0}, {1}, {2}};
    REQUIRE(lat->sites() == expect);
    REQUIRE(lat->coord(lat->origin_index()) == Coord{0});

    auto sq = make_lattice(2, {3, 3});
    REQUIRE(sq->num_sites() == 9);
    REQUIRE(sq->coord(sq->origin_index()) == Coord({0, 0}));

    REQUIRE_THROWS_AS(make_lattice(1, {0}), std::invalid_argument);
    REQUIRE_THROWS_AS(make_lattice(0, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(make_lattice(2, {3}), std::invalid_argument);
}

TEST_CASE("ball collects sites within Euclidean distance") {
    auto chain = make_lattice(1, {7});
    SiteSet b = ball(chain, chain->origin_index(), 2.0);
    REQUIRE(coords_of(b) == std::set<Coord>({{-2}, {-1}, {0}, {1}, {2}}));

    SiteSet b0 = ball(chain, chain->origin_index(), 0.0);
    REQUIRE(coords_of(b0) == std::set<Coord>({{0}}));

    auto sq = make_lattice(2, {5, 5});
    SiteSet b15 = ball(sq, sq->origin_index(), 1.5);
    // sqrt(2) <= 1.5, so the diagonal neighbors join the plus shape
    REQUIRE(b15.size() == 9);
    REQUIRE(coords_of(b15) == brute_force_within(*sq, {{0, 0}}, 1.5));

    REQUIRE_THROWS_AS(ball(chain, 0, -1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ball(chain, 99, 1.0), std::invalid_argument);
}

TEST_CASE("enlarge is the R-enlargement") {
    auto chain = make_lattice(1, {9});
    SiteSet X = make_site_set(chain, {chain->origin_index()});
    REQUIRE(coords_of(enlarge(X, 3.0)) == std::set<Coord>({{-3}, {-2}, {-1}, {0}, {1}, {2}, {3}}));
    REQUIRE(coords_of(enlarge(X, 0.0)) == coords_of(X));

    SiteSet two = make_site_set(chain, {chain->index_of({-1}), chain->index_of({1})});
    REQUIRE(coords_of(enlarge(two, 1.0)) == brute_force_within(*chain, {{-1}, {1}}, 1.0));
    REQUIRE(coords_of(enlarge(two, 1.0)) == std::set<Coord>({{-2}, {-1}, {0}, {1}, {2}}));

    SiteSet empty{chain, {}};
    REQUIRE_THROWS_AS(enlarge(empty, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(enlarge(X, -0.5), std::invalid_argument);
}

TEST_CASE("diameter is 1 + max pairwise distance") {
    auto chain = make_lattice(1, {9});
    REQUIRE(diameter(make_site_set(chain, {3})) == 1.0);
    REQUIRE(diameter(make_site_set(chain, {chain->index_of({0}), chain->index_of({3})})) == 4.0);

    auto sq = make_lattice(2, {9, 9});
    SiteSet pair = make_site_set(sq, {sq->index_of({0, 0}), sq->index_of({3, 4})});
    REQUIRE(diameter(pair) == 6.0);

    SiteSet empty{chain, {}};
    REQUIRE_THROWS_AS(diameter(empty), std::invalid_argument);
}

TEST_CASE("edges lists ordered nearest-neighbor pairs") {
    auto chain = make_lattice(1, {3});
    SiteSet X = full_set(chain);
    auto e = edges(X);
    std::set<std::pair<Coord, Coord>> as_coords;
    for (auto [a, b] : e) as_coords.insert({chain->coord(a), chain->coord(b)});
    std::set<std::pair<Coord, Coord>> expect = {
        {{-1}, {0}}, {{0}, {-1}}, {{0}, {1}}, {{1}, {0}}};
    REQUIRE(as_coords == expect);

    REQUIRE(edges(make_site_set(chain, {0})).empty());

    auto sq = make_lattice(2, {2, 2});
    REQUIRE(edges(full_set(sq)).size() == 8);

    // closed under pair reversal
    auto big = make_lattice(2, {3, 3});
    auto eb = edges(full_set(big));
    std::set<std::pair<int, int>> has(eb.begin(), eb.end());
    for (auto [a, b] : eb) REQUIRE(has.count({b, a}) == 1);
}

TEST_CASE("lattice set inclusions") {
    auto sq = make_lattice(2, {7, 7});
    for (double r : {0.0, 1.0, 2.0}) {
        for (double R : {2.0, 3.0}) {
            if (r > R) continue;
            SiteSet inner = ball(sq, sq->origin_index(), r);
            SiteSet grown = enlarge(inner, R - r);
            SiteSet outer = ball(sq, sq->origin_index(), R);
            for (int m : grown.members) REQUIRE(outer.contains(m));
            REQUIRE(diameter(inner) <= 1.0 + 2.0 * r);
        }
    }
}
