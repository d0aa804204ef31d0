#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace paramforge::utf8 {

// Returns the byte offset of the first invalid sequence, or nullopt when the
// whole buffer is well-formed UTF-8 (overlongs and surrogates rejected).
std::optional<std::size_t> first_invalid(std::string_view bytes);

// Decodes well-formed UTF-8. Throws EncodingError on malformed input.
std::u32string decode(std::string_view bytes);
void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view cps);

std::size_t length(std::string_view bytes);

char32_t to_lower(char32_t cp);
bool is_control(char32_t cp);
bool is_space(char32_t cp);
// Emoji, pictographs, dingbats, arrows, math/technical symbols, variation
// selectors and joiners.
bool is_symbol(char32_t cp);
bool is_alnum(char32_t cp);

}  // namespace paramforge::utf8
