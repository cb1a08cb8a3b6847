// config.hpp — the shared key-value config dialect.
//
// Format: INI-style sections with `key = value` pairs, `#` comments.
// Unit conventions are carried in the key names (`_ghz`, `_mhz`, `_khz`,
// `_us`, `_ns`, `_db`, `_km`) and converted at load time, so a file reads
// like a lab settings sheet:
//
//   [system]
//   omega_q_ghz = 4.257
//   chi_sq_mhz  = 0.417
//
// All sections are optional; missing keys keep their defaults.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace boslink {

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);

    // Deterministic section/key ordering, suitable for hashing.
    std::string serialize() const;
    void save(const std::string& path) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// FNV-1a over a byte string; used to content-address configs and pulses.
std::uint64_t fnv1a64(const std::string& bytes);

// Locale-independent float formatting used by every CSV/JSON writer so that
// fixed-seed runs are byte-identical.
std::string format_double(double v);

} // namespace boslink
