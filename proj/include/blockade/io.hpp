#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace blockade {

inline constexpr const char* kVersion = "1.0.0";

// Locale-independent representation with 15 significant digits.
std::string format_double(double value);

std::string csv_row(std::span<const double> values);

// Writes content to a sibling temp file and renames it into place.
void atomic_write_text(const std::filesystem::path& path, std::string_view content);

}  // namespace blockade
