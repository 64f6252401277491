#include "mkg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "mkg/errors.hpp"

namespace mkg {

ConfigError::ConfigError(std::vector<std::string> v) : std::runtime_error([&] {
    std::string m = "invalid configuration";
    for (const auto& x : v) m += "\n  " + x;
    return m;
}()), violations(std::move(v)) {}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string fmt(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    std::string s(buf, r.ptr);
    // Keep a float marker so the text reads back as a float.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

// Value parsers return an error message, empty on success.
std::string get_double(const std::string& v, double& out) {
    std::string s = v;
    if (!s.empty() && s[0] == '+') s = s.substr(1);
    if (s == "inf") {
        out = INFINITY;
        return "";
    }
    const char* end = s.data() + s.size();
    auto r = std::from_chars(s.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end || s.empty() || std::isnan(out)) return "expected a number, got '" + v + "'";
    return "";
}

std::string get_int(const std::string& v, long long& out) {
    const char* end = v.data() + v.size();
    auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end || v.empty()) return "expected an integer, got '" + v + "'";
    return "";
}

std::string get_string(const std::string& v, std::string& out) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') return "expected a quoted string, got '" + v + "'";
    out.clear();
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] == '\\') {
            if (i + 2 >= v.size()) return "dangling escape in string";
            ++i;
        } else if (v[i] == '"') {
            return "unescaped quote in string";
        }
        out += v[i];
    }
    return "";
}

struct Key {
    std::function<std::string(const std::string&, ExperimentConfig&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Key int_key(std::function<T&(ExperimentConfig&)> ref) {
    return {[ref](const std::string& v, ExperimentConfig& c) {
                long long x = 0;
                auto e = get_int(v, x);
                if (e.empty() && (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()))
                    e = "integer out of range: '" + v + "'";
                if (e.empty()) ref(c) = T(x);
                return e;
            },
            [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }};
}

Key seed_key(std::function<std::uint64_t&(ExperimentConfig&)> ref) {
    return {[ref](const std::string& v, ExperimentConfig& c) {
                std::uint64_t x = 0;
                const char* end = v.data() + v.size();
                auto r = std::from_chars(v.data(), end, x);
                if (r.ec != std::errc() || r.ptr != end || v.empty())
                    return "expected a non-negative integer, got '" + v + "'";
                ref(c) = x;
                return std::string();
            },
            [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }};
}

Key double_key(std::function<double&(ExperimentConfig&)> ref) {
    return {[ref](const std::string& v, ExperimentConfig& c) {
                double x = 0;
                auto e = get_double(v, x);
                if (e.empty()) ref(c) = x;
                return e;
            },
            [ref](const ExperimentConfig& c) { return fmt(ref(const_cast<ExperimentConfig&>(c))); }};
}

Key string_key(std::function<std::string&(ExperimentConfig&)> ref) {
    return {[ref](const std::string& v, ExperimentConfig& c) {
                std::string x;
                auto e = get_string(v, x);
                if (e.empty()) ref(c) = x;
                return e;
            },
            [ref](const ExperimentConfig& c) { return quote(ref(const_cast<ExperimentConfig&>(c))); }};
}

#define IKEY(expr) int_key<int>([](ExperimentConfig& c) -> int& { return expr; })
#define DKEY(expr) double_key([](ExperimentConfig& c) -> double& { return expr; })
#define SKEY(expr) string_key([](ExperimentConfig& c) -> std::string& { return expr; })

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> k = [] {
        std::map<std::string, Key> k;
        k["grid.n"] = IKEY(c.grid.n);
        k["grid.nt"] = IKEY(c.grid.nt);
        k["grid.period"] = DKEY(c.grid.period);
        k["grid.window"] = DKEY(c.grid.window);
        k["grid.taper"] = {[](const std::string& v, ExperimentConfig& c) {
                               std::string s;
                               auto e = get_string(v, s);
                               if (!e.empty()) return e;
                               if (s == "none") c.grid.taper = Taper::none;
                               else if (s == "hann") c.grid.taper = Taper::hann;
                               else return "taper must be \"none\" or \"hann\"" + std::string();
                               return std::string();
                           },
                           [](const ExperimentConfig& c) {
                               return quote(c.grid.taper == Taper::hann ? "hann" : "none");
                           }};
        k["data.seed"] = seed_key([](ExperimentConfig& c) -> std::uint64_t& { return c.data.seed; });
        k["data.kmin"] = IKEY(c.data.kmin);
        k["data.kmax"] = IKEY(c.data.kmax);
        k["data.eps"] = DKEY(c.data.eps);
        k["cutoff.c"] = IKEY(c.cutoff_c);
        k["psi.delta"] = DKEY(c.psi_delta);
        k["psi.k_cut"] = IKEY(c.psi_k_cut);
        k["nullform.eta"] = DKEY(c.nullform_eta);
        k["nullform.band"] = IKEY(c.nullform_band);
        k["solver.scheme"] = {[](const std::string& v, ExperimentConfig& c) {
                                  std::string s;
                                  auto e = get_string(v, s);
                                  if (!e.empty()) return e;
                                  try {
                                      c.scheme = parse_scheme(s);
                                  } catch (const InvalidArgument&) {
                                      return "scheme must be \"spectral_exact\", \"leapfrog\" or \"trigonometric\"" +
                                             std::string();
                                  }
                                  return std::string();
                              },
                              [](const ExperimentConfig& c) { return quote(scheme_name(c.scheme)); }};
        k["solver.T"] = DKEY(c.solver_T);
        k["solver.dt"] = DKEY(c.solver_dt);
        k["solver.store_every"] = IKEY(c.store_every);
        k["picard.eps"] = DKEY(c.picard_eps);
        k["picard.max_iterates"] = IKEY(c.picard_max_iterates);
        k["picard.min_iterates"] = IKEY(c.picard_min_iterates);
        k["picard.tol"] = DKEY(c.picard_tol);
        k["picard.substeps"] = IKEY(c.picard_substeps);
        k["parametrix.eps_sweep"] = {[](const std::string& v, ExperimentConfig& c) {
                                         if (v.size() < 2 || v.front() != '[' || v.back() != ']')
                                             return "expected a list like [0.04, 0.02], got '" + v + "'";
                                         std::vector<double> out;
                                         std::stringstream ss(v.substr(1, v.size() - 2));
                                         std::string item;
                                         while (std::getline(ss, item, ',')) {
                                             item = trim(item);
                                             if (item.empty()) continue;
                                             double x = 0;
                                             auto e = get_double(item, x);
                                             if (!e.empty()) return e;
                                             out.push_back(x);
                                         }
                                         c.eps_sweep = out;
                                         return std::string();
                                     },
                                     [](const ExperimentConfig& c) {
                                         std::string s = "[";
                                         for (std::size_t i = 0; i < c.eps_sweep.size(); ++i)
                                             s += (i ? ", " : "") + fmt(c.eps_sweep[i]);
                                         return s + "]";
                                     }};
        k["parametrix.aperture"] = IKEY(c.aperture);
        k["parametrix.probe"] = SKEY(c.probe);
        k["parametrix.symbol_cutoff"] = DKEY(c.symbol_cutoff);
        k["parametrix.c"] = IKEY(c.parametrix_c);
        k["parametrix.n"] = IKEY(c.parametrix_n);
        k["parametrix.cells"] = IKEY(c.parametrix_cells);
        k["parametrix.nt"] = IKEY(c.parametrix_nt);
        k["parametrix.T"] = DKEY(c.parametrix_T);
        k["parametrix.seed"] = seed_key([](ExperimentConfig& c) -> std::uint64_t& { return c.parametrix_seed; });
        k["parametrix.probe_time"] = DKEY(c.probe_time);
        k["kernel.cells"] = IKEY(c.kernel_cells);
        k["norms.input"] = SKEY(c.norms_input);
        k["norms.q"] = DKEY(c.norms_q);
        k["norms.r"] = DKEY(c.norms_r);
        k["norms.s"] = DKEY(c.norms_s);
        k["norms.b"] = DKEY(c.norms_b);
        k["norms.p"] = DKEY(c.norms_p);
        k["output.dir"] = SKEY(c.output_dir);
        k["output.deterministic"] = {[](const std::string& v, ExperimentConfig& c) {
                                         if (v == "true") c.deterministic = true;
                                         else if (v == "false") c.deterministic = false;
                                         else return "expected true or false, got '" + v + "'";
                                         return std::string();
                                     },
                                     [](const ExperimentConfig& c) {
                                         return std::string(c.deterministic ? "true" : "false");
                                     }};
        return k;
    }();
    return k;
}

#undef IKEY
#undef DKEY
#undef SKEY

// (key, message) pairs.
std::vector<std::pair<std::string, std::string>> check(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::string>> v;
    auto need = [&](bool ok, const char* key, const std::string& msg) {
        if (!ok) v.push_back({key, msg});
    };
    const auto& g = c.grid;
    auto pow2 = [](int x) { return x > 0 && (x & (x - 1)) == 0; };
    need(pow2(g.n) && g.n >= 4 && g.n <= 128, "grid.n", "must be a power of two in [4, 128]");
    need(g.period > 0 && std::isfinite(g.period), "grid.period", "must be positive");
    need(pow2(g.nt) && g.nt >= 2 && g.nt <= 4096, "grid.nt", "must be a power of two in [2, 4096]");
    need(g.window > 0 && std::isfinite(g.window), "grid.window", "must be positive");
    need(c.data.kmin >= -8 && c.data.kmin <= 8, "data.kmin", "must be in [-8, 8]");
    need(c.data.kmax >= -8 && c.data.kmax <= 8, "data.kmax", "must be in [-8, 8]");
    need(c.data.kmin <= c.data.kmax, "data.kmax", "must not be below data.kmin");
    need(c.data.eps >= 0 && std::isfinite(c.data.eps), "data.eps", "must be non-negative");
    need(c.cutoff_c >= 0 && c.cutoff_c <= 16, "cutoff.c", "must be in [0, 16]");
    need(c.psi_delta > 0 && c.psi_delta <= 1, "psi.delta", "must be in (0, 1]");
    need(c.psi_k_cut >= -8 && c.psi_k_cut <= 8, "psi.k_cut", "must be in [-8, 8]");
    need(c.nullform_eta >= 0 && std::isfinite(c.nullform_eta), "nullform.eta", "must be non-negative");
    need(c.nullform_band >= 1 && 2 * c.nullform_band < g.n, "nullform.band", "must be in [1, grid.n / 2)");
    need(c.solver_T > 0 && std::isfinite(c.solver_T), "solver.T", "must be positive");
    need(c.solver_dt >= 0 && c.solver_dt <= c.solver_T, "solver.dt", "must be in [0, solver.T]");
    need(c.store_every >= 1, "solver.store_every", "must be at least 1");
    need(c.picard_eps >= 0 && std::isfinite(c.picard_eps), "picard.eps", "must be non-negative");
    need(c.picard_max_iterates >= 2 && c.picard_max_iterates <= 64, "picard.max_iterates", "must be in [2, 64]");
    need(c.picard_min_iterates >= 2 && c.picard_min_iterates <= c.picard_max_iterates, "picard.min_iterates",
         "must be in [2, picard.max_iterates]");
    need(c.picard_tol > 0, "picard.tol", "must be positive");
    need(c.picard_substeps >= 1 && c.picard_substeps <= 64, "picard.substeps", "must be in [1, 64]");
    need(!c.eps_sweep.empty(), "parametrix.eps_sweep", "must not be empty");
    for (double e : c.eps_sweep) need(e >= 0 && std::isfinite(e), "parametrix.eps_sweep", "entries must be non-negative");
    need(c.probe == "l2" || c.probe == "ortho" || c.probe == "residual" || c.probe == "kernel", "parametrix.probe",
         "must be \"l2\", \"ortho\", \"residual\" or \"kernel\"");
    need(c.symbol_cutoff > 0 && std::isfinite(c.symbol_cutoff), "parametrix.symbol_cutoff", "must be positive");
    need(c.parametrix_c >= 0 && c.parametrix_c <= 16, "parametrix.c", "must be in [0, 16]");
    need(pow2(c.parametrix_n) && c.parametrix_n >= 8 && c.parametrix_n <= 64, "parametrix.n",
         "must be a power of two in [8, 64]");
    need(c.parametrix_cells >= 1 && c.parametrix_cells <= 16, "parametrix.cells", "must be in [1, 16]");
    need(pow2(c.parametrix_nt) && c.parametrix_nt >= 4 && c.parametrix_nt <= 1024, "parametrix.nt",
         "must be a power of two in [4, 1024]");
    need(c.parametrix_T > 0 && std::isfinite(c.parametrix_T), "parametrix.T", "must be positive");
    need(c.probe_time >= 0 && std::isfinite(c.probe_time), "parametrix.probe_time", "must be non-negative");
    need(c.kernel_cells >= 4 && c.kernel_cells <= 64, "kernel.cells", "must be in [4, 64]");
    need(c.norms_q >= 2, "norms.q", "must be in [2, inf]");
    need(c.norms_r >= 2, "norms.r", "must be in [2, inf]");
    need(std::isfinite(c.norms_s), "norms.s", "must be finite");
    need(std::isfinite(c.norms_b), "norms.b", "must be finite");
    need(c.norms_p >= 1, "norms.p", "must be in [1, inf]");
    need(!c.output_dir.empty(), "output.dir", "must not be empty");
    return v;
}

}  // namespace

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> out;
    for (const auto& [k, m] : check(c)) out.push_back(k + " " + m);
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::vector<std::string> errors;
    std::map<std::string, int> seen;
    std::string section;
    std::stringstream in(text);
    std::string raw;
    int lineno = 0;
    auto err = [&](const std::string& m) { errors.push_back("line " + std::to_string(lineno) + ": " + m); };
    while (std::getline(in, raw)) {
        ++lineno;
        // Strip a comment unless the # sits inside a string.
        std::string line;
        bool quoted = false;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const char ch = raw[i];
            if (ch == '\\' && quoted && i + 1 < raw.size()) {
                line += ch;
                line += raw[++i];
                continue;
            }
            if (ch == '"') quoted = !quoted;
            if (ch == '#' && !quoted) break;
            line += ch;
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                err("malformed section header '" + line + "'");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty() || section.find_first_of(" \t") != std::string::npos) {
                err("malformed section header '" + line + "'");
                section.clear();
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            err("expected 'key = value', got '" + line + "'");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            err("expected 'key = value', got '" + line + "'");
            continue;
        }
        if (!section.empty()) key = section + "." + key;
        const auto it = keys().find(key);
        if (it == keys().end()) {
            err("unknown key '" + key + "'");
            continue;
        }
        if (seen.count(key)) {
            err("duplicate key '" + key + "' (first set on line " + std::to_string(seen[key]) + ")");
            continue;
        }
        seen[key] = lineno;
        const auto m = it->second.set(value, c);
        if (!m.empty()) err(key + ": " + m);
    }
    for (const auto& [k, m] : check(c)) {
        const auto s = seen.find(k);
        const std::string where = s == seen.end() ? "default" : "line " + std::to_string(s->second);
        errors.push_back(where + ": " + k + " " + m);
    }
    if (!errors.empty()) throw ConfigError(errors);
    return c;
}

void set_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
    const auto it = keys().find(key);
    if (it == keys().end()) throw ConfigError({"unknown key '" + key + "'"});
    ExperimentConfig t = c;
    const auto m = it->second.set(trim(value), t);
    if (!m.empty()) throw ConfigError({key + ": " + m});
    std::vector<std::string> errors;
    for (const auto& [k, msg] : check(t)) errors.push_back(k + " " + msg);
    if (!errors.empty()) throw ConfigError(errors);
    c = t;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidArgument("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
    std::string out, section;
    for (const auto& [key, k] : keys()) {
        const auto dot = key.find('.');
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            out += (out.empty() ? "[" : "\n[") + sec + "]\n";
            section = sec;
        }
        out += key.substr(dot + 1) + " = " + k.get(c) + "\n";
    }
    return out;
}

int thread_limit() {
    const char* v = std::getenv("MKG_THREADS");
    if (!v || !*v) return 1;
    long long x = 0;
    const std::string s = trim(v);
    if (!get_int(s, x).empty() || x < 1) throw InvalidArgument("MKG_THREADS must be a positive integer");
    const long long hw = std::max(1u, std::thread::hardware_concurrency());
    return int(std::min(x, hw));
}

}  // namespace mkg
