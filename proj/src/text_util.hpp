#pragma once

#include <string>
#include <string_view>

namespace toxinspect::text {

bool is_valid_utf8(std::string_view s);

// Strips leading and trailing Unicode whitespace.
std::string_view trim(std::string_view s);

// Full Unicode case folding.
std::string fold_case(std::string_view s);

}  // namespace toxinspect::text
