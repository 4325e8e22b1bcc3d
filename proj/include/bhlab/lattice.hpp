#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "bhlab/common.hpp"

namespace bhlab {

using Coord = std::vector<int>;

/// Finite box in Z^d with centered integer coordinates and Euclidean metric.
/// Sites are stored in lexicographic order; ordering is stable across runs.
class Lattice {
  public:
    Lattice(int d, std::vector<int> extents, std::vector<Coord> sites, int origin_index)
        : d_(d), extents_(std::move(extents)), sites_(std::move(sites)), origin_(origin_index) {}

    int dimension() const { return d_; }
    const std::vector<int>& extents() const { return extents_; }
    int num_sites() const { return static_cast<int>(sites_.size()); }
    const Coord& coord(int i) const { return sites_.at(static_cast<std::size_t>(i)); }
    const std::vector<Coord>& sites() const { return sites_; }
    int origin_index() const { return origin_; }

    int index_of(const Coord& c) const {
        auto it = std::lower_bound(sites_.begin(), sites_.end(), c);
        if (it == sites_.end() || *it != c) throw std::invalid_argument("lattice: coordinate not on lattice");
        return static_cast<int>(it - sites_.begin());
    }

    bool contains(const Coord& c) const {
        auto it = std::lower_bound(sites_.begin(), sites_.end(), c);
        return it != sites_.end() && *it == c;
    }

    static double distance(const Coord& a, const Coord& b) {
        double s = 0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            double dk = static_cast<double>(a[k] - b[k]);
            s += dk * dk;
        }
        return std::sqrt(s);
    }

    // Euclidean distance from the coordinate origin.
    double radius(int i) const {
        double s = 0;
        for (int c : coord(i)) s += static_cast<double>(c) * c;
        return std::sqrt(s);
    }

  private:
    int d_;
    std::vector<int> extents_;
    std::vector<Coord> sites_;
    int origin_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

/// Sorted, duplicate-free set of site indices into a parent lattice.
struct SiteSet {
    LatticePtr parent;
    std::vector<int> members;

    bool contains(int i) const { return std::binary_search(members.begin(), members.end(), i); }
    int size() const { return static_cast<int>(members.size()); }
    bool empty() const { return members.empty(); }
};

inline SiteSet make_site_set(LatticePtr lat, std::vector<int> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    for (int m : members)
        if (m < 0 || m >= lat->num_sites()) throw std::invalid_argument("site set: index out of range");
    return SiteSet{std::move(lat), std::move(members)};
}

inline SiteSet full_set(LatticePtr lat) {
    std::vector<int> all(static_cast<std::size_t>(lat->num_sites()));
    for (int i = 0; i < lat->num_sites(); ++i) all[static_cast<std::size_t>(i)] = i;
    return SiteSet{std::move(lat), std::move(all)};
}

/// Builds the centered box lattice. For extent L the coordinates run over
/// [-(L-1)/2, L/2] rounded so that 0 is always a site.
inline LatticePtr make_lattice(int d, const std::vector<int>& extents) {
    if (d < 1) throw std::invalid_argument("make_lattice: dimension must be >= 1");
    if (static_cast<int>(extents.size()) != d)
        throw std::invalid_argument("make_lattice: extents size must equal dimension");
    for (int e : extents)
        if (e < 1) throw std::invalid_argument("make_lattice: every extent must be >= 1");

    std::vector<int> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        int L = extents[static_cast<std::size_t>(k)];
        lo[static_cast<std::size_t>(k)] = -(L / 2);
        hi[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)] + L - 1;
    }

    std::vector<Coord> sites;
    Coord cur(lo);
    while (true) {
        sites.push_back(cur);
        int k = d - 1;
        while (k >= 0) {
            if (++cur[static_cast<std::size_t>(k)] <= hi[static_cast<std::size_t>(k)]) break;
            cur[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)];
            --k;
        }
        if (k < 0) break;
    }
    std::sort(sites.begin(), sites.end());

    Coord zero(static_cast<std::size_t>(d), 0);
    auto it = std::lower_bound(sites.begin(), sites.end(), zero);
    int origin = static_cast<int>(it - sites.begin());
    return std::make_shared<Lattice>(d, extents, std::move(sites), origin);
}

/// All sites y with |y - center| <= r. B_0(x) = {x}.
inline SiteSet ball(const LatticePtr& lat, int center, double r) {
    if (center < 0 || center >= lat->num_sites()) throw std::invalid_argument("ball: invalid center");
    if (r < 0) throw std::invalid_argument("ball: radius must be >= 0");
    const Coord& c = lat->coord(center);
    std::vector<int> members;
    for (int i = 0; i < lat->num_sites(); ++i)
        if (Lattice::distance(lat->coord(i), c) <= r) members.push_back(i);
    return SiteSet{lat, std::move(members)};
}

/// R-enlargement: all lattice sites within distance R of X.
inline SiteSet enlarge(const SiteSet& X, double R) {
    if (X.empty()) throw std::invalid_argument("enlarge: set must be nonempty");
    if (R < 0) throw std::invalid_argument("enlarge: radius must be >= 0");
    const Lattice& lat = *X.parent;
    std::vector<int> members;
    for (int i = 0; i < lat.num_sites(); ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (int m : X.members) dmin = std::min(dmin, Lattice::distance(lat.coord(i), lat.coord(m)));
        if (dmin <= R) members.push_back(i);
    }
    return SiteSet{X.parent, std::move(members)};
}

/// 1 + max pairwise Euclidean distance; 1 for a singleton.
inline double diameter(const SiteSet& X) {
    if (X.empty()) throw std::invalid_argument("diameter: set must be nonempty");
    const Lattice& lat = *X.parent;
    double mx = 0;
    for (std::size_t a = 0; a < X.members.size(); ++a)
        for (std::size_t b = a + 1; b < X.members.size(); ++b)
            mx = std::max(mx, Lattice::distance(lat.coord(X.members[a]), lat.coord(X.members[b])));
    return 1.0 + mx;
}

inline double set_distance(const SiteSet& X, const SiteSet& Y) {
    if (X.empty() || Y.empty()) throw std::invalid_argument("set_distance: sets must be nonempty");
    const Lattice& lat = *X.parent;
    double dmin = std::numeric_limits<double>::infinity();
    for (int a : X.members)
        for (int b : Y.members) dmin = std::min(dmin, Lattice::distance(lat.coord(a), lat.coord(b)));
    return dmin;
}

inline bool intersects(const SiteSet& X, const SiteSet& Y) {
    for (int a : X.members)
        if (Y.contains(a)) return true;
    return false;
}

/// Ordered nearest-neighbor pairs (x,y), x,y in X, |x-y| = 1.
/// Both orientations appear; the double sums over x~y run over ordered pairs.
inline std::vector<std::pair<int, int>> edges(const SiteSet& X) {
    const Lattice& lat = *X.parent;
    std::vector<std::pair<int, int>> out;
    for (int a : X.members)
        for (int b : X.members)
            if (a != b && Lattice::distance(lat.coord(a), lat.coord(b)) == 1.0) out.emplace_back(a, b);
    return out;
}

}  // namespace bhlab
