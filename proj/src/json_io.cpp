#include "gips/json_io.hpp"

#include "gips/error.hpp"

#include <fstream>

namespace gips {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::io: return "i/o error";
    case Errc::format: return "format error";
    case Errc::size_mismatch: return "size mismatch";
    case Errc::non_finite: return "non-finite value";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::contract: return "contract violation";
    case Errc::degenerate: return "degenerate input";
  }
  return "error";
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  require(static_cast<bool>(out), Errc::io, "write failed: " + path.string());
}

void check_schema(const nlohmann::json& doc, int supported, const char* what, bool required) {
  require(doc.is_object(), Errc::format, std::string(what) + ": expected a JSON object");
  require(!required || doc.contains("schema"), Errc::format,
          std::string(what) + ": missing \"schema\" field");
  if (auto it = doc.find("schema"); it != doc.end()) {
    require(it->is_number_integer() && it->get<int>() == supported, Errc::format,
            std::string(what) + ": unsupported schema version");
  }
}

}  // namespace gips
