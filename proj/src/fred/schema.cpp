#include "fred/schema.hpp"

#include <algorithm>
#include <fstream>

#include "fred/error.hpp"

namespace fred::schema {
namespace {

bool has_type(const nlohmann::json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>()));
  }
  return false;
}

void check(const nlohmann::json& v, const nlohmann::json& s, const std::string& path,
           std::vector<std::string>& errors) {
  if (!s.is_object()) return;
  const std::string where = path.empty() ? "/" : path;

  if (auto it = s.find("type"); it != s.end()) {
    std::vector<std::string> types;
    if (it->is_string()) {
      types.push_back(*it);
    } else {
      for (const auto& t : *it) types.push_back(t);
    }
    if (std::none_of(types.begin(), types.end(), [&](const auto& t) { return has_type(v, t); })) {
      std::string expected;
      for (const auto& t : types) expected += (expected.empty() ? "" : "|") + t;
      errors.push_back(where + ": expected " + expected + ", got " + v.type_name());
      return;
    }
  }
  if (auto it = s.find("enum"); it != s.end()) {
    if (std::find(it->begin(), it->end(), v) == it->end()) {
      errors.push_back(where + ": value " + v.dump() + " not in enum");
    }
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (auto it = s.find("minimum"); it != s.end() && x < it->get<double>()) {
      errors.push_back(where + ": " + v.dump() + " is below minimum " + it->dump());
    }
    if (auto it = s.find("maximum"); it != s.end() && x > it->get<double>()) {
      errors.push_back(where + ": " + v.dump() + " is above maximum " + it->dump());
    }
  }
  if (v.is_object()) {
    if (auto it = s.find("required"); it != s.end()) {
      for (const auto& key : *it) {
        if (!v.contains(key.get<std::string>())) {
          errors.push_back(where + ": missing required property '" + key.get<std::string>() + "'");
        }
      }
    }
    const auto props = s.find("properties");
    for (const auto& [key, value] : v.items()) {
      if (props != s.end() && props->contains(key)) {
        check(value, (*props)[key], path + "/" + key, errors);
      } else if (auto ap = s.find("additionalProperties");
                 ap != s.end() && ap->is_boolean() && !ap->get<bool>()) {
        errors.push_back(where + ": unexpected property '" + key + "'");
      }
    }
  }
  if (v.is_array()) {
    if (auto it = s.find("minItems"); it != s.end() && v.size() < it->get<std::size_t>()) {
      errors.push_back(where + ": fewer than " + it->dump() + " items");
    }
    if (auto it = s.find("maxItems"); it != s.end() && v.size() > it->get<std::size_t>()) {
      errors.push_back(where + ": more than " + it->dump() + " items");
    }
    if (auto it = s.find("items"); it != s.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], *it, path + "/" + std::to_string(i), errors);
    }
  }
}

}  // namespace

std::vector<std::string> validate(const nlohmann::json& instance, const nlohmann::json& schema) {
  std::vector<std::string> errors;
  check(instance, schema, "", errors);
  return errors;
}

nlohmann::json load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed schema " + path + ": " + e.what());
  }
}

}  // namespace fred::schema
