// Copyright 2026 The crnn-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace crnn {

/// Bad or unknown configuration; `what()` starts with "<file>:<line>:".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FieldType { Int, UInt, Number, Bool, String, IntList, StringList, StringOrList };

using Schema = std::map<std::string, std::map<std::string, FieldType>>;

inline const Schema& run_schema() {
  static const Schema s = {
      {"task",
       {{"n", FieldType::Int},
        {"k", FieldType::Int},
        {"count", FieldType::Int},
        {"seed", FieldType::UInt},
        {"init_state", FieldType::String},
        {"modified", FieldType::Bool},
        {"adversarial_triples", FieldType::Int}}},
      {"model", {{"cell_kind", FieldType::StringOrList}, {"n", FieldType::IntList}, {"m", FieldType::Int}}},
      {"train",
       {{"epochs", FieldType::Int},
        {"batch_size", FieldType::Int},
        {"train_fraction", FieldType::Number},
        {"lr", FieldType::Number},
        {"beta1", FieldType::Number},
        {"beta2", FieldType::Number},
        {"eps", FieldType::Number},
        {"seed", FieldType::UInt},
        {"threads", FieldType::Int}}},
      {"separation",
       {{"n", FieldType::Int},
        {"train_triples", FieldType::Int},
        {"test_triples", FieldType::Int},
        {"latent_dims", FieldType::IntList},
        {"epochs", FieldType::Int},
        {"batch_size", FieldType::Int},
        {"lr", FieldType::Number},
        {"cell_kind", FieldType::String}}},
      {"verify", {{"alphas", FieldType::StringList}, {"random", FieldType::Int}}},
      {"io",
       {{"out", FieldType::String},
        {"corpus", FieldType::String},
        {"checkpoint", FieldType::String},
        {"dataset", FieldType::String},
        {"resume", FieldType::Bool}}},
  };
  return s;
}

/// 1-based line of `"key"` inside the object that starts at `"section"`.
inline int locate_key(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  int no = 0, sec_line = section.empty() ? 1 : 0;
  std::string sq = "\"" + section + "\"", kq = "\"" + key + "\"";
  while (std::getline(in, line)) {
    ++no;
    if (!sec_line && line.find(sq) != std::string::npos) {
      sec_line = no;
      if (key.empty()) return no;
      if (line.find(kq, line.find(sq) + sq.size()) != std::string::npos) return no;
      continue;
    }
    if (sec_line && !key.empty() && line.find(kq) != std::string::npos) return no;
  }
  return sec_line ? sec_line : 1;
}

inline bool type_ok(const nlohmann::json& v, FieldType t) {
  auto all = [&](auto pred) {
    if (!v.is_array()) return false;
    for (const auto& x : v)
      if (!pred(x)) return false;
    return true;
  };
  switch (t) {
    case FieldType::Int: return v.is_number_integer();
    case FieldType::UInt: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    case FieldType::Number: return v.is_number();
    case FieldType::Bool: return v.is_boolean();
    case FieldType::String: return v.is_string();
    case FieldType::IntList:
      return v.is_number_integer() || all([](const nlohmann::json& x) { return x.is_number_integer(); });
    case FieldType::StringList: return all([](const nlohmann::json& x) { return x.is_string(); });
    case FieldType::StringOrList:
      return v.is_string() || all([](const nlohmann::json& x) { return x.is_string(); });
  }
  return false;
}

inline const char* type_name(FieldType t) {
  switch (t) {
    case FieldType::Int: return "an integer";
    case FieldType::UInt: return "a non-negative integer";
    case FieldType::Number: return "a number";
    case FieldType::Bool: return "a boolean";
    case FieldType::String: return "a string";
    case FieldType::IntList: return "an integer or a list of integers";
    case FieldType::StringList: return "a list of strings";
    case FieldType::StringOrList: return "a string or a list of strings";
  }
  return "?";
}

/// Parses and schema-checks a run config. `origin` names the source in errors.
inline nlohmann::json parse_config(const std::string& text, const std::string& origin = "<config>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Byte offset to line.
    std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    int line = 1;
    for (std::size_t i = 0; i + 1 < upto; ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(origin + ":" + std::to_string(line) + ": invalid JSON");
  }
  if (!j.is_object()) throw ConfigError(origin + ":1: config must be a JSON object");
  const auto& schema = run_schema();
  for (const auto& [sec, body] : j.items()) {
    auto it = schema.find(sec);
    if (it == schema.end())
      throw ConfigError(origin + ":" + std::to_string(locate_key(text, sec, "")) + ": unknown section '" + sec + "'");
    if (!body.is_object())
      throw ConfigError(origin + ":" + std::to_string(locate_key(text, sec, "")) + ": section '" + sec +
                        "' must be an object");
    for (const auto& [key, val] : body.items()) {
      auto f = it->second.find(key);
      int line = locate_key(text, sec, key);
      if (f == it->second.end())
        throw ConfigError(origin + ":" + std::to_string(line) + ": unknown key '" + sec + "." + key + "'");
      if (!type_ok(val, f->second))
        throw ConfigError(origin + ":" + std::to_string(line) + ": '" + sec + "." + key + "' must be " +
                          type_name(f->second));
    }
  }
  return j;
}

inline nlohmann::json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ":0: cannot open config");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

/// Value at section.key, or `def` when absent.
template <class T>
T cfg_get(const nlohmann::json& j, const std::string& sec, const std::string& key, T def) {
  if (!j.contains(sec) || !j[sec].contains(key)) return def;
  return j[sec][key].get<T>();
}

inline std::vector<int> cfg_int_list(const nlohmann::json& j, const std::string& sec, const std::string& key,
                                     std::vector<int> def) {
  if (!j.contains(sec) || !j[sec].contains(key)) return def;
  const auto& v = j[sec][key];
  if (v.is_number_integer()) return {v.get<int>()};
  return v.get<std::vector<int>>();
}

inline std::vector<std::string> cfg_string_list(const nlohmann::json& j, const std::string& sec,
                                                const std::string& key, std::vector<std::string> def) {
  if (!j.contains(sec) || !j[sec].contains(key)) return def;
  const auto& v = j[sec][key];
  if (v.is_string()) return {v.get<std::string>()};
  return v.get<std::vector<std::string>>();
}

}  // namespace crnn
