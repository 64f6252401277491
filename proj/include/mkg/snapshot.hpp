#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mkg/field.hpp"
#include "mkg/state.hpp"

namespace mkg {

// MKGF binary record: "MKGF", u16 version, u16 rank, rank x u64 extents, then
// little-endian f64 pairs (re, im), row-major with the slowest axis first.
struct RawArray {
    std::vector<std::uint64_t> extents;
    std::vector<cplx> values;
};

inline constexpr std::uint16_t kSnapshotVersion = 1;

void write_mkgf(const std::string& path, const RawArray& a);
RawArray read_mkgf(const std::string& path);

void write_field(const std::string& path, const SpatialField& f);
void write_field(const std::string& path, const SpacetimeField& f);
SpatialField read_spatial(const std::string& path, const GridSpec& g);
SpacetimeField read_spacetime(const std::string& path, const GridSpec& g);

// A state as one record per component plus manifest.json in `dir`.
void save_state(const std::string& dir, const GaugeState& s);
GaugeState load_state(const std::string& dir);

}  // namespace mkg
