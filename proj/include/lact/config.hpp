#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lact/errors.hpp"

namespace lact {

/// One [section] of a structured-text config: ordered key=value pairs.
struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    bool has(const std::string& key) const;
    const std::string& require(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;

    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    int get_int_or(const std::string& key, int fallback) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, long long value);
    void set_double(const std::string& key, double value);
    void set_bool(const std::string& key, bool value);

    /// Throws config_error if any key is not in `known`.
    void reject_unknown_keys(const std::vector<std::string>& known) const;
};

/// Ordered collection of sections; parses from and serializes to the
/// `[section]` / `key = value` text format shared by configs, manifests
/// and sidecar headers. Duplicate keys within a section are rejected.
struct ConfigDoc {
    std::vector<ConfigSection> sections;

    bool has_section(const std::string& name) const;
    ConfigSection& section(const std::string& name); // creates when absent
    const ConfigSection& require_section(const std::string& name) const;
    const ConfigSection* find_section(const std::string& name) const;

    std::string serialize() const;
    static ConfigDoc parse(const std::string& text);

    friend bool operator==(const ConfigDoc& a, const ConfigDoc& b);
};

/// 17-significant-digit formatting; round-trips any double exactly.
std::string format_double(double v);

} // namespace lact
