#include "lact/metadata.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lact/config.hpp"
#include "lact/io.hpp"

namespace lact {

namespace {

// Minimal numeric rendering: integral values print without a decimal point,
// so {scanAngle}=90.0 substitutes as "90".
std::string render_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void require_field(bool ok, const char* field) {
    if (!ok) throw config_error(std::string("metadata: enabled category requires field '") +
                                field + "'");
}

std::string join_diseases(const std::vector<std::string>& d) {
    std::string out;
    for (size_t i = 0; i < d.size(); ++i) {
        if (i) out += ", ";
        out += d[i];
    }
    return out;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    out += "\"";
    return out;
}

} // namespace

std::string render_prompt(const MetadataRecord& record) {
    std::vector<std::string> parts;
    if (record.enabled(MetaCategory::Phy)) {
        require_field(!record.exposure_time.empty(), "exposure_time");
        require_field(!record.tube_current.empty(), "tube_current");
        parts.push_back("CT Parameters: Scan angle is " + render_number(record.scan_angle_deg) +
                        " degree, exposure time is " + record.exposure_time +
                        ", X-Ray tube current is " + record.tube_current + ".");
    }
    bool demo = record.enabled(MetaCategory::Demo);
    bool diag = record.enabled(MetaCategory::Diag);
    if (demo || diag) {
        std::string s;
        if (demo) {
            require_field(!record.sex.empty(), "sex");
            s = std::to_string(record.slice_idx) + "th slice of " + std::to_string(record.age) +
                " years old " + record.sex;
        }
        if (diag) {
            require_field(!record.diseases.empty(), "diseases");
            require_field(!record.impressions.empty(), "impressions");
            if (demo) s += " with ";
            s += join_diseases(record.diseases) + ": " + record.impressions;
        }
        s += ".";
        parts.push_back(std::move(s));
    }
    std::string prompt;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) prompt += " ";
        prompt += parts[i];
    }
    return prompt;
}

unsigned parse_category_list(const std::string& csv) {
    unsigned mask = 0;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        size_t a = tok.find_first_not_of(" \t");
        size_t b = tok.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        std::string t = tok.substr(a, b - a + 1);
        if (t == "phy") mask |= static_cast<unsigned>(MetaCategory::Phy);
        else if (t == "demo") mask |= static_cast<unsigned>(MetaCategory::Demo);
        else if (t == "diag") mask |= static_cast<unsigned>(MetaCategory::Diag);
        else throw config_error("unknown metadata category '" + t + "'");
    }
    return mask;
}

namespace {

bool ident_char(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }

struct Cursor {
    const std::string& text;
    size_t pos = 0;
    int line = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void advance() {
        if (text[pos] == '\n') ++line;
        ++pos;
    }
    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n'))
            advance();
        if (!eof() && peek() == '#') { // comment to end of line
            while (!eof() && peek() != '\n') advance();
            skip_ws();
        }
    }
    // within a value: stay on the current line
    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }
};

std::string parse_quoted(Cursor& c) {
    int start = c.line;
    c.advance(); // opening quote
    std::string out;
    while (!c.eof() && c.peek() != '"') {
        char ch = c.peek();
        if (ch == '\\') {
            c.advance();
            if (c.eof()) break;
            char esc = c.peek();
            if (esc == 'n') out += '\n';
            else if (esc == '"') out += '"';
            else if (esc == '\\') out += '\\';
            else throw parse_error("unknown escape sequence", c.line);
        } else {
            out += ch;
        }
        c.advance();
    }
    if (c.eof()) throw parse_error("unterminated string", start);
    c.advance(); // closing quote
    return out;
}

std::string parse_bare(Cursor& c) {
    std::string out;
    while (!c.eof()) {
        char ch = c.peek();
        if (ch == '\n' || ch == ',' || ch == '}' || ch == '#') break;
        out += ch;
        c.advance();
    }
    size_t b = out.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : out.substr(0, b + 1);
}

// Whole rest of the line, commas included (for comma-separated bare lists).
std::string parse_line(Cursor& c) {
    std::string out;
    while (!c.eof()) {
        char ch = c.peek();
        if (ch == '\n' || ch == '}' || ch == '#') break;
        out += ch;
        c.advance();
    }
    size_t b = out.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : out.substr(0, b + 1);
}

int parse_int_field(const std::string& s, const char* field, int line) {
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || v < 0)
        throw parse_error("field '" + std::string(field) + "' expects a nonnegative integer, got '" +
                              s + "'",
                          line);
    return static_cast<int>(v);
}

double parse_double_field(const std::string& s, const char* field, int line) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw parse_error("field '" + std::string(field) + "' expects a number, got '" + s + "'",
                          line);
    return v;
}

} // namespace

std::vector<MetadataRecord> parse_records(const std::string& text) {
    std::vector<MetadataRecord> records;
    Cursor c{text};
    c.skip_ws();
    while (!c.eof()) {
        // expect: record {
        int rec_line = c.line;
        std::string head;
        while (!c.eof() && ident_char(c.peek())) {
            head += c.peek();
            c.advance();
        }
        if (head != "record") throw parse_error("expected 'record {'", rec_line);
        c.skip_ws();
        if (c.eof() || c.peek() != '{') throw parse_error("expected '{' after 'record'", c.line);
        c.advance();
        MetadataRecord r;
        for (;;) {
            c.skip_ws();
            if (c.eof()) throw parse_error("unterminated record", rec_line);
            if (c.peek() == '}') {
                c.advance();
                break;
            }
            int key_line = c.line;
            std::string key;
            while (!c.eof() && ident_char(c.peek())) {
                key += c.peek();
                c.advance();
            }
            c.skip_inline_ws();
            if (c.eof() || c.peek() != '=') throw parse_error("expected '=' after field name", key_line);
            c.advance();
            c.skip_inline_ws();

            if (key == "scan_angle_deg") {
                r.scan_angle_deg = parse_double_field(parse_bare(c), "scan_angle_deg", key_line);
            } else if (key == "exposure_time") {
                r.exposure_time = c.peek() == '"' ? parse_quoted(c) : parse_bare(c);
            } else if (key == "tube_current") {
                r.tube_current = c.peek() == '"' ? parse_quoted(c) : parse_bare(c);
            } else if (key == "slice_idx") {
                r.slice_idx = parse_int_field(parse_bare(c), "slice_idx", key_line);
            } else if (key == "age") {
                r.age = parse_int_field(parse_bare(c), "age", key_line);
            } else if (key == "sex") {
                r.sex = c.peek() == '"' ? parse_quoted(c) : parse_bare(c);
            } else if (key == "impressions") {
                r.impressions = c.peek() == '"' ? parse_quoted(c) : parse_bare(c);
            } else if (key == "diseases") {
                for (;;) {
                    c.skip_inline_ws();
                    if (c.eof() || c.peek() == '\n') break;
                    if (c.peek() == '"') r.diseases.push_back(parse_quoted(c));
                    else {
                        std::string bare = parse_bare(c);
                        if (!bare.empty()) r.diseases.push_back(bare);
                    }
                    c.skip_inline_ws();
                    if (!c.eof() && c.peek() == ',') {
                        c.advance();
                        continue;
                    }
                    break;
                }
            } else if (key == "categories") {
                r.enabled_categories = parse_category_list(parse_line(c));
            } else {
                throw parse_error("unknown field '" + key + "'", key_line);
            }
        }
        records.push_back(std::move(r));
        c.skip_ws();
    }
    return records;
}

std::string serialize_records(const std::vector<MetadataRecord>& records) {
    std::ostringstream out;
    for (const auto& r : records) {
        out << "record {\n";
        out << "  scan_angle_deg = " << format_double(r.scan_angle_deg) << "\n";
        out << "  exposure_time = " << quote(r.exposure_time) << "\n";
        out << "  tube_current = " << quote(r.tube_current) << "\n";
        out << "  slice_idx = " << r.slice_idx << "\n";
        out << "  age = " << r.age << "\n";
        out << "  sex = " << quote(r.sex) << "\n";
        out << "  diseases = ";
        for (size_t i = 0; i < r.diseases.size(); ++i) {
            if (i) out << ", ";
            out << quote(r.diseases[i]);
        }
        out << "\n";
        out << "  impressions = " << quote(r.impressions) << "\n";
        out << "  categories = ";
        bool first = true;
        auto emit = [&](MetaCategory cat, const char* name) {
            if (!r.enabled(cat)) return;
            if (!first) out << ", ";
            out << name;
            first = false;
        };
        emit(MetaCategory::Phy, "phy");
        emit(MetaCategory::Demo, "demo");
        emit(MetaCategory::Diag, "diag");
        out << "\n}\n";
    }
    return out.str();
}

std::vector<MetadataRecord> load_records(const std::string& path) {
    return parse_records(read_text(path));
}

void save_records(const std::string& path, const std::vector<MetadataRecord>& records) {
    atomic_write_text(path, serialize_records(records));
}

} // namespace lact
