#pragma once

#include <string>
#include <vector>

#include "lact/errors.hpp"

namespace lact {

enum class MetaCategory : unsigned { Phy = 1u << 0, Demo = 1u << 1, Diag = 1u << 2 };

/// Structured per-slice clinical metadata plus prompt-category toggles.
/// Ablation toggles live in the record so per-slice ablations are
/// expressible in one dataset file.
struct MetadataRecord {
    double scan_angle_deg = 0.0;
    std::string exposure_time;
    std::string tube_current;
    int slice_idx = 0;
    int age = 0;
    std::string sex; // "male", "female", or free text
    std::vector<std::string> diseases;
    std::string impressions;
    unsigned enabled_categories = 0; // bitmask of MetaCategory

    bool enabled(MetaCategory c) const { return enabled_categories & static_cast<unsigned>(c); }
    void enable(MetaCategory c) { enabled_categories |= static_cast<unsigned>(c); }
    void disable(MetaCategory c) { enabled_categories &= ~static_cast<unsigned>(c); }

    friend bool operator==(const MetadataRecord& a, const MetadataRecord& b) = default;
};

/// Render the structured prompt. Categories appear in order Phy then
/// Demo/Diag, joined by single spaces; disabled categories contribute
/// nothing. Throws config_error naming the field when an enabled category
/// is missing data.
std::string render_prompt(const MetadataRecord& record);

std::vector<MetadataRecord> load_records(const std::string& path);
void save_records(const std::string& path, const std::vector<MetadataRecord>& records);

/// Parse/serialize without touching the filesystem.
std::vector<MetadataRecord> parse_records(const std::string& text);
std::string serialize_records(const std::vector<MetadataRecord>& records);

/// Parse an "--ablate phy,demo,diag" style list into a category bitmask.
unsigned parse_category_list(const std::string& csv);

} // namespace lact
