#include "lact/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace lact {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

bool ConfigSection::has(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return true;
    return false;
}

const std::string& ConfigSection::require(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    throw config_error("missing key '" + key + "' in section [" + name + "]");
}

std::optional<std::string> ConfigSection::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return std::nullopt;
}

int ConfigSection::get_int(const std::string& key) const {
    const std::string& s = require(key);
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw config_error("key '" + key + "' in [" + name + "] is not an integer: '" + s + "'");
    return static_cast<int>(v);
}

double ConfigSection::get_double(const std::string& key) const {
    const std::string& s = require(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw config_error("key '" + key + "' in [" + name + "] is not a number: '" + s + "'");
    return v;
}

bool ConfigSection::get_bool(const std::string& key) const {
    const std::string& s = require(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw config_error("key '" + key + "' in [" + name + "] is not a boolean: '" + s + "'");
}

int ConfigSection::get_int_or(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}
double ConfigSection::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}
bool ConfigSection::get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}
std::string ConfigSection::get_or(const std::string& key, const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

void ConfigSection::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries)
        if (k == key) {
            v = value;
            return;
        }
    entries.emplace_back(key, value);
}

void ConfigSection::set_int(const std::string& key, long long value) {
    set(key, std::to_string(value));
}
void ConfigSection::set_double(const std::string& key, double value) {
    set(key, format_double(value));
}
void ConfigSection::set_bool(const std::string& key, bool value) {
    set(key, value ? "true" : "false");
}

void ConfigSection::reject_unknown_keys(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : entries)
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw config_error("unknown key '" + k + "' in section [" + name + "]");
}

bool ConfigDoc::has_section(const std::string& name) const {
    return find_section(name) != nullptr;
}

ConfigSection& ConfigDoc::section(const std::string& name) {
    for (auto& s : sections)
        if (s.name == name) return s;
    sections.push_back(ConfigSection{name, {}});
    return sections.back();
}

const ConfigSection& ConfigDoc::require_section(const std::string& name) const {
    if (const ConfigSection* s = find_section(name)) return *s;
    throw config_error("missing section [" + name + "]");
}

const ConfigSection* ConfigDoc::find_section(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

std::string ConfigDoc::serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& s : sections) {
        if (!first) out << "\n";
        first = false;
        out << "[" << s.name << "]\n";
        for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
    }
    return out.str();
}

ConfigDoc ConfigDoc::parse(const std::string& text) {
    ConfigDoc doc;
    ConfigSection* current = nullptr;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw parse_error("unterminated section header", lineno);
            std::string name = trim(t.substr(1, t.size() - 2));
            if (name.empty()) throw parse_error("empty section name", lineno);
            if (doc.has_section(name)) throw parse_error("duplicate section [" + name + "]", lineno);
            current = &doc.section(name);
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw parse_error("expected 'key = value'", lineno);
        if (!current) throw parse_error("key outside any [section]", lineno);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw parse_error("empty key", lineno);
        if (current->has(key))
            throw parse_error("duplicate key '" + key + "' in [" + current->name + "]", lineno);
        current->entries.emplace_back(key, value);
    }
    return doc;
}

bool operator==(const ConfigDoc& a, const ConfigDoc& b) {
    if (a.sections.size() != b.sections.size()) return false;
    for (size_t i = 0; i < a.sections.size(); ++i) {
        if (a.sections[i].name != b.sections[i].name) return false;
        if (a.sections[i].entries != b.sections[i].entries) return false;
    }
    return true;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace lact
