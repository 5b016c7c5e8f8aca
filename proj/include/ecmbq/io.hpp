#pragma once

#include "ecmbq/numeric.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace ecmbq {

using json = nlohmann::json;

// Writes to a sibling temp file then renames, so readers never see a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

json to_json(const Vector& v);
json to_json(const Matrix& m);
Vector vector_from_json(const json& j, const std::string& field);
Matrix matrix_from_json(const json& j, const std::string& field);

// Field access that throws SchemaError naming the missing / mistyped field.
const json& require_field(const json& obj, const std::string& field);

}  // namespace ecmbq
