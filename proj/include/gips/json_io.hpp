#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

namespace gips {

// Reads a JSON document; missing files raise Errc::io, syntax errors
// Errc::format.
nlohmann::json read_json(const std::filesystem::path& path);
// Pretty-printed (2-space indent) with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// Checks the "schema" field against the supported version. Data headers may
// omit it; run configs must carry it.
void check_schema(const nlohmann::json& doc, int supported, const char* what,
                  bool required = false);

}  // namespace gips
