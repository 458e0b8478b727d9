#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace moebius {

// Canonical answer form used for every equality test between answers:
// whitespace trimmed, `\boxed{...}` / `boxed{...}` / `$...$` wrappers removed,
// numerals rewritten in minimal form ("007" -> "7", "2.50" -> "2.5",
// "-0" -> "0"). Applied to a fixed point, so it is idempotent.
std::string canonicalize_answer(std::string_view raw);

// Pulls the final answer out of free-form model text. With no pattern the
// last balanced `\boxed{...}` wins, otherwise the last integer or decimal
// token. A custom ECMAScript pattern takes the last match (capture group 1 if
// present). Returns nullopt when nothing matches. The result is canonical.
std::optional<std::string> extract_answer(std::string_view text,
                                          const std::string& pattern = {});

}  // namespace moebius
