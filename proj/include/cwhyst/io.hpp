#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cwhyst/chain.hpp"
#include "cwhyst/errors.hpp"

namespace cwhyst::io {

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// Columnar text export: '#'-prefixed header lines carry the schema tag,
// config hash and seed; data rows are whitespace-separated columns.
inline void write_columnar(const std::string& path, const std::string& schema,
                           const std::string& config_hash, std::uint64_t seed,
                           const std::vector<std::string>& columns,
                           const std::vector<std::vector<double>>& data) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_columnar: cannot open " + path);
    out << "# " << schema << " config=" << config_hash << " seed=" << seed << "\n";
    out << "#";
    for (const auto& c : columns) out << " " << c;
    out << "\n";
    const std::size_t rows = data.empty() ? 0 : data.front().size();
    out << std::setprecision(17);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < data.size(); ++c) {
            if (c) out << " ";
            out << data[c][r];
        }
        out << "\n";
    }
    if (!out) throw ConfigError("write_columnar: write failed for " + path);
}

// Binary event journal, little-endian, versioned magic header.
namespace detail_io {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_f64(std::ostream& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(out, u);
}
inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}
inline std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
inline double get_f64(std::istream& in) {
    const std::uint64_t u = get_u64(in);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace detail_io

inline constexpr std::uint32_t kJournalMagic = 0x4A48'5743u;  // "CWHJ" little-endian
inline constexpr std::uint32_t kJournalVersion = 1;

inline void write_journal(const std::string& path, const ChainTrajectory& traj,
                          std::uint64_t config_hash, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_journal: cannot open " + path);
    using namespace detail_io;
    put_u32(out, kJournalMagic);
    put_u32(out, kJournalVersion);
    put_u64(out, static_cast<std::uint64_t>(traj.N));
    put_f64(out, traj.params.beta);
    put_u64(out, config_hash);
    put_u64(out, seed);
    put_f64(out, traj.t_start);
    put_f64(out, traj.t_end);
    put_u64(out, static_cast<std::uint64_t>(traj.k_start));
    put_u64(out, static_cast<std::uint64_t>(traj.events.size()));
    long long prev_k = traj.k_start;
    for (const JumpEvent& e : traj.events) {
        put_f64(out, e.t);
        const char dir = (e.k > prev_k) ? 1 : -1;
        out.write(&dir, 1);
        prev_k = e.k;
    }
    if (!out) throw ConfigError("write_journal: write failed for " + path);
}

struct JournalData {
    long long N = 0;
    double beta = 0.0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    double t_start = 0.0, t_end = 0.0;
    long long k_start = 0;
    std::vector<JumpEvent> events;
};

inline JournalData read_journal(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("read_journal: cannot open " + path);
    using namespace detail_io;
    if (get_u32(in) != kJournalMagic) throw ConfigError("read_journal: bad magic");
    if (get_u32(in) != kJournalVersion) throw ConfigError("read_journal: unsupported version");
    JournalData j;
    j.N = static_cast<long long>(get_u64(in));
    j.beta = get_f64(in);
    j.config_hash = get_u64(in);
    j.seed = get_u64(in);
    j.t_start = get_f64(in);
    j.t_end = get_f64(in);
    j.k_start = static_cast<long long>(get_u64(in));
    const std::uint64_t n = get_u64(in);
    j.events.reserve(n);
    long long k = j.k_start;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double t = get_f64(in);
        char dir;
        in.read(&dir, 1);
        k += (dir > 0) ? 1 : -1;
        j.events.push_back({t, k});
    }
    if (!in) throw ConfigError("read_journal: truncated file " + path);
    return j;
}

}  // namespace cwhyst::io
