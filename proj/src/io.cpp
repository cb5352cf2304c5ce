// SPDX-License-Identifier: Apache-2.0
#include "epchiral/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

#include "json.hpp"

#include "epchiral/errors.hpp"

namespace epchiral {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

double finite_number(const json& node, const std::string& what) {
  if (!node.is_number()) {
    throw ParseError(what + " must be a number");
  }
  const double v = node.get<double>();
  if (!std::isfinite(v)) {
    throw ParseError(what + " must be finite");
  }
  return v;
}

RMatrix read_matrix(const json& doc, const char* key, int n) {
  if (!doc.contains(key) || !doc[key].is_array() || static_cast<int>(doc[key].size()) != n) {
    throw ParseError(std::string(key) + " must be an array of " + std::to_string(n) + " rows");
  }
  RMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const json& row = doc[key][static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw ParseError(std::string(key) + " row " + std::to_string(i) + " must have " + std::to_string(n) +
                       " entries");
    }
    for (int j = 0; j < n; ++j) {
      m(i, j) = finite_number(row[static_cast<std::size_t>(j)], std::string(key) + " entry");
    }
  }
  return m;
}

json matrix_json(const RMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace

MatrixPencil parse_pencil(const std::string& text, const Tolerances& tol) {
  const json doc = parse_json(text);
  if (!doc.is_object() || !doc.contains("n") || !doc["n"].is_number_integer()) {
    throw ParseError("pencil needs an integer field n");
  }
  const int n = doc["n"].get<int>();
  if (n < 2) {
    throw ParseError("pencil dimension must be at least 2");
  }
  return MatrixPencil(read_matrix(doc, "h0", n), read_matrix(doc, "h1", n), tol.symmetry);
}

MatrixPencil load_pencil(const std::string& path, const Tolerances& tol) {
  return parse_pencil(read_file(path), tol);
}

std::string pencil_to_json(const MatrixPencil& pencil) {
  json doc;
  doc["n"] = pencil.n();
  doc["h0"] = matrix_json(pencil.h0());
  doc["h1"] = matrix_json(pencil.h1());
  return doc.dump(2) + "\n";
}

TwoLevelParams parse_two_level(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) {
    throw ParseError("two-level file must be a JSON object");
  }
  auto field = [&](const char* key) {
    if (!doc.contains(key)) {
      throw ParseError(std::string("missing field ") + key);
    }
    return finite_number(doc[key], key);
  };
  TwoLevelParams p;
  p.eps1 = field("eps1");
  p.eps2 = field("eps2");
  p.omega1 = field("omega1");
  p.omega2 = field("omega2");
  p.phi = field("phi");
  return p;
}

TwoLevelParams load_two_level(const std::string& path) {
  return parse_two_level(read_file(path));
}

std::string two_level_to_json(const TwoLevelParams& params) {
  json doc;
  doc["eps1"] = params.eps1;
  doc["eps2"] = params.eps2;
  doc["omega1"] = params.omega1;
  doc["omega2"] = params.omega2;
  doc["phi"] = params.phi;
  return doc.dump(2) + "\n";
}

cplx parse_complex(const std::string& text) {
  static const std::string num = R"(([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?))";
  // Imaginary coefficient: digits are optional so that "i" and "-i" parse.
  static const std::string coeff = R"(((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?)";
  static const std::regex real_only("^\\s*" + num + "\\s*$");
  static const std::regex imag_only("^\\s*([+-]?)\\s*" + coeff + "\\s*\\*?\\s*i\\s*$");
  static const std::regex full("^\\s*" + num + "\\s*([+-])\\s*" + coeff + "\\s*\\*?\\s*i\\s*$");
  static const std::regex pair("^\\s*" + num + "\\s*,\\s*" + num + "\\s*$");
  const auto imag_part = [](const std::ssub_match& sign, const std::ssub_match& digits) {
    const double magnitude = digits.matched ? std::stod(digits.str()) : 1.0;
    return sign.str() == "-" ? -magnitude : magnitude;
  };
  std::smatch m;
  if (std::regex_match(text, m, real_only)) {
    return {std::stod(m[1]), 0.0};
  }
  if (std::regex_match(text, m, imag_only)) {
    return {0.0, imag_part(m[1], m[2])};
  }
  if (std::regex_match(text, m, full)) {
    return {std::stod(m[1]), imag_part(m[2], m[3])};
  }
  if (std::regex_match(text, m, pair)) {
    return {std::stod(m[1]), std::stod(m[2])};
  }
  throw ParseError("not a complex number: '" + text + "'");
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write " + tmp.string());
    }
    out << content;
    if (!out.flush()) {
      throw Error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

std::string tracks_to_csv(const TrackTable& table) {
  std::ostringstream out;
  out << std::setprecision(17);
  bool first = true;
  for (const auto& name : table.leading_names) {
    out << (first ? "" : ",") << name;
    first = false;
  }
  const std::size_t tracks = table.values.empty() ? 0 : table.values.front().size();
  for (std::size_t k = 0; k < tracks; ++k) {
    const std::string name = k < table.value_names.size() ? table.value_names[k] : "E" + std::to_string(k + 1);
    out << (first ? "" : ",") << name << "_re," << name << "_im";
    first = false;
  }
  out << "\n";
  for (std::size_t r = 0; r < table.values.size(); ++r) {
    first = true;
    for (double v : table.leading[r]) {
      out << (first ? "" : ",") << v;
      first = false;
    }
    for (const cplx& v : table.values[r]) {
      out << (first ? "" : ",") << v.real() << "," << v.imag();
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

} // namespace epchiral
