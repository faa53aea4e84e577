#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "swarmloc/evaluation.hpp"

namespace swarmloc::cli {

inline constexpr std::string_view kCsvHeader = "method,param_name,param_value,seed,rmse_m,ber,runtime_s,status";

/// LF-terminated CSV text; floats with 9 significant digits, absent values
/// as empty fields.
std::string format_csv(const SweepResult& result);

/// Inverse of format_csv. Throws Error(kIo) on a malformed document.
SweepResult parse_csv(std::string_view text);

/// One line chart of the per-method mean of `metric` ("rmse_m" or "ber")
/// against param_value; one series per (method, param_name).
std::string render_svg(const SweepResult& result, std::string_view metric);

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file. Throws Error(kIo).
void write_atomic(const std::filesystem::path& path, std::string_view content);

void emit_csv(const SweepResult& result, const std::filesystem::path& path);

}  // namespace swarmloc::cli
