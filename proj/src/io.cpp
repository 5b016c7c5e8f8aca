#include "ecmbq/io.hpp"

#include "ecmbq/errors.hpp"

#include <fstream>
#include <sstream>

namespace ecmbq {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

const json& require_field(const json& obj, const std::string& field) {
    if (!obj.is_object() || !obj.contains(field)) throw SchemaError("missing field '" + field + "'");
    return obj.at(field);
}

Vector vector_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw SchemaError("field '" + field + "' must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw SchemaError("field '" + field + "' contains a non-numeric entry");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw SchemaError("field '" + field + "' must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Vector first = vector_from_json(j[0], field);
    Matrix m(rows, first.size());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Vector row = vector_from_json(j[static_cast<std::size_t>(i)], field);
        if (row.size() != first.size()) throw SchemaError("field '" + field + "' has ragged rows");
        m.row(i) = row.transpose();
    }
    return m;
}

}  // namespace ecmbq
