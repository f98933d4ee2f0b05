#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wese {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Collapse every whitespace run to a single space and trim the ends.
std::string collapse_ws(std::string_view s);

/// Canonical entity/relation form: lower-cased, whitespace-collapsed,
/// surrounding punctuation stripped. Strips quotes, brackets and clause
/// punctuation but keeps trailing '!' / '?' (part of many proper names).
std::string normalize_text(std::string_view raw);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view s);

/// Lower-cased alphanumeric token runs.
std::vector<std::string> tokenize_lower(std::string_view s);

uint64_t fnv1a64(std::string_view s);
std::string hex64(uint64_t v);

/// Fixed-point rendering, round half away from zero.
std::string format_fixed(double v, int decimals);

/// Substitute every {{name}} placeholder from the (name, value) pairs.
/// Returns the names that were requested by the template but missing.
std::string substitute_slots(std::string_view tmpl,
                             const std::vector<std::pair<std::string, std::string>>& slots,
                             std::vector<std::string>* missing = nullptr);

bool contains_slot(std::string_view tmpl, std::string_view name);

}  // namespace wese
