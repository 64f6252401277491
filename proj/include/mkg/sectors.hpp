#pragma once

#include <utility>
#include <vector>

#include "mkg/field.hpp"

namespace mkg {

// Angular cover of S^3 at aperture 2^l, l in {0, -1, -2, -3}. Directions are the
// vertices of the 600-cell (l = 0) and of its midpoint refinements, projected
// to the sphere. The set is centrally symmetric.
class SectorSet {
public:
    static SectorSet make(int l);

    int aperture_exponent() const { return l_; }
    // Support radius (radians) of each angular bump.
    double support() const { return rho_; }
    const std::vector<Vec4>& directions() const { return dirs_; }
    std::size_t size() const { return dirs_.size(); }

    // Unnormalized bump b_w(u) for a unit vector u.
    double bump(std::size_t w, const Vec4& u) const;
    // Normalized cutoffs c_w(u) = b_w / sqrt(sum b^2), nonzero entries only.
    std::vector<std::pair<std::size_t, double>> cutoffs(const Vec4& u) const;
    // Index of the antipodal direction.
    std::size_t antipode(std::size_t w) const { return antipode_[w]; }

private:
    int l_ = 0;
    double rho_ = 0;
    std::vector<Vec4> dirs_;
    std::vector<std::size_t> antipode_;
};

// Sector cutoffs sampled on a spatial lattice: for each direction, the modes
// where c_w is nonzero. Cached per (grid, l).
struct SectorTable {
    GridSpec grid;
    int l = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> entries;
};
const SectorTable& sector_table(const GridSpec& g, const SectorSet& s);

// P^w_l f: multiply the spectrum by c_w(xi/|xi|). The zero mode is dropped.
SpatialField sector_project(const SpatialField& f, const SectorSet& s, std::size_t w);
SpatialSpectrum sector_project(const SpatialSpectrum& c, const SectorSet& s, std::size_t w);

// Angle between two unit vectors, robust near 0 and pi.
double angle_between(const Vec4& a, const Vec4& b);

}  // namespace mkg
