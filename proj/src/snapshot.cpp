#include "mkg/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace mkg {

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw Error("SnapshotError", "truncated MKGF file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

void write_mkgf(const std::string& path, const RawArray& a) {
    std::uint64_t total = 1;
    for (auto e : a.extents) total *= e;
    if (total != a.values.size()) throw InvalidArgument("extents do not match payload size");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("SnapshotError", "cannot open " + path + " for writing");
    os.write("MKGF", 4);
    put_le<std::uint16_t>(os, kSnapshotVersion);
    put_le<std::uint16_t>(os, std::uint16_t(a.extents.size()));
    for (auto e : a.extents) put_le<std::uint64_t>(os, e);
    for (const auto& z : a.values) {
        put_le<double>(os, z.real());
        put_le<double>(os, z.imag());
    }
    if (!os) throw Error("SnapshotError", "write failed for " + path);
}

RawArray read_mkgf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("SnapshotError", "cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "MKGF", 4) != 0) throw Error("SnapshotError", "bad magic in " + path);
    const auto ver = get_le<std::uint16_t>(is);
    if (ver != kSnapshotVersion) throw Error("SnapshotError", "unsupported MKGF version " + std::to_string(ver));
    const auto rank = get_le<std::uint16_t>(is);
    RawArray a;
    std::uint64_t total = 1;
    for (int i = 0; i < rank; ++i) {
        a.extents.push_back(get_le<std::uint64_t>(is));
        total *= a.extents.back();
    }
    a.values.resize(total);
    for (auto& z : a.values) {
        const double re = get_le<double>(is);
        const double im = get_le<double>(is);
        z = {re, im};
    }
    return a;
}

void write_field(const std::string& path, const SpatialField& f) {
    const auto n = std::uint64_t(f.grid.n);
    write_mkgf(path, {{n, n, n, n}, std::vector<cplx>(f.v.begin(), f.v.end())});
}

void write_field(const std::string& path, const SpacetimeField& f) {
    const auto n = std::uint64_t(f.grid.n);
    write_mkgf(path, {{std::uint64_t(f.grid.nt), n, n, n, n}, std::vector<cplx>(f.v.begin(), f.v.end())});
}

SpatialField read_spatial(const std::string& path, const GridSpec& g) {
    const auto a = read_mkgf(path);
    const auto n = std::uint64_t(g.n);
    if (a.extents != std::vector<std::uint64_t>{n, n, n, n}) throw GridMismatch("snapshot extents differ from grid");
    SpatialField f(g);
    std::copy(a.values.begin(), a.values.end(), f.v.begin());
    return f;
}

SpacetimeField read_spacetime(const std::string& path, const GridSpec& g) {
    const auto a = read_mkgf(path);
    const auto n = std::uint64_t(g.n);
    if (a.extents != std::vector<std::uint64_t>{std::uint64_t(g.nt), n, n, n, n})
        throw GridMismatch("snapshot extents differ from grid");
    SpacetimeField f(g);
    std::copy(a.values.begin(), a.values.end(), f.v.begin());
    return f;
}

namespace {

const char* taper_name(Taper t) { return t == Taper::hann ? "hann" : "none"; }

std::vector<std::pair<std::string, SpatialField*>> components(GaugeState& s) {
    std::vector<std::pair<std::string, SpatialField*>> out;
    for (int i = 0; i < kDim; ++i) out.emplace_back("A" + std::to_string(i + 1), &s.A[i]);
    for (int i = 0; i < kDim; ++i) out.emplace_back("dtA" + std::to_string(i + 1), &s.dtA[i]);
    out.emplace_back("A0", &s.A0);
    out.emplace_back("dtA0", &s.dtA0);
    out.emplace_back("phi", &s.phi);
    out.emplace_back("dtphi", &s.dtphi);
    return out;
}

}  // namespace

void save_state(const std::string& dir, const GaugeState& s) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::ordered_json m;
    m["format"] = "MKGF";
    m["version"] = kSnapshotVersion;
    m["grid"] = {{"n", s.grid.n}, {"period", s.grid.period}, {"nt", s.grid.nt},
                 {"window", s.grid.window}, {"taper", taper_name(s.grid.taper)}};
    m["time"] = s.time;
    auto copy = s;
    for (auto& [name, f] : components(copy)) {
        const std::string file = name + ".mkgf";
        write_field((fs::path(dir) / file).string(), *f);
        m["components"].push_back({{"name", name},
                                   {"file", file},
                                   {"parity", f->parity == Parity::real ? "real" : "complex"}});
    }
    std::ofstream os(fs::path(dir) / "manifest.json");
    os << m.dump(2) << "\n";
    if (!os) throw Error("SnapshotError", "cannot write manifest in " + dir);
}

GaugeState load_state(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw Error("SnapshotError", "missing manifest.json in " + dir);
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(is);
        GridSpec g;
        g.n = m.at("grid").at("n");
        g.period = m.at("grid").at("period");
        g.nt = m.at("grid").at("nt");
        g.window = m.at("grid").at("window");
        g.taper = m.at("grid").at("taper") == "hann" ? Taper::hann : Taper::none;
        g.validate();
        auto s = GaugeState::zero(g);
        s.time = m.at("time");
        auto slots = components(s);
        for (const auto& c : m.at("components")) {
            const std::string name = c.at("name");
            auto it = std::find_if(slots.begin(), slots.end(), [&](auto& p) { return p.first == name; });
            if (it == slots.end()) throw Error("SnapshotError", "unknown component " + name);
            *it->second = read_spatial((fs::path(dir) / std::string(c.at("file"))).string(), g);
            it->second->parity = c.at("parity") == "real" ? Parity::real : Parity::complex;
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error("SnapshotError", std::string("bad manifest: ") + e.what());
    }
}

}  // namespace mkg
