#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace torusforge::cli {

using json = nlohmann::json;

// Bad command line, unreadable input or invalid configuration (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Defaults of every command section. A null default accepts any value (fields, series, grids);
// object defaults are merged key by key and reject keys they do not list.
json default_config();

// Merges `user` into the defaults; unknown keys raise UsageError naming the dotted path.
json resolve_config(const json& user);

json load_json_file(const std::string& path);

// A field, series or result given inline or as a path to a JSON file.
json inline_or_file(const json& value, const std::string& what);

}  // namespace torusforge::cli
