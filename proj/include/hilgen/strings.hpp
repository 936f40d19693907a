#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hilgen {

std::vector<std::string> split(std::string_view text, char sep);
std::vector<std::string> split_whitespace(std::string_view text);
std::vector<std::string> split_lines(std::string_view text);

std::string trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower(std::string_view text);

bool starts_with(std::string_view text, std::string_view prefix);

// lowercase, collapse internal whitespace runs to one space, strip
// leading/trailing punctuation. Shared by term lookup and query exclusion.
std::string normalize_term(std::string_view surface);

// "{name}" placeholders replaced by values; unknown placeholders left as-is.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace hilgen
