#pragma once

#include "strand/core/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>

namespace strand::yaml {

[[noreturn]] void fail(const YAML::Node& node, const std::string& message);

/// Parses a document, turning syntax errors into a line-anchored ParseError.
YAML::Node parse_document(const std::string& text);
YAML::Node load_file(const std::string& path);
std::string read_text(const std::string& path);

double as_double(const YAML::Node& node, const std::string& path);
std::int64_t as_int(const YAML::Node& node, const std::string& path);
std::uint64_t as_uint64(const YAML::Node& node, const std::string& path);
bool as_bool(const YAML::Node& node, const std::string& path);
std::string as_string(const YAML::Node& node, const std::string& path);

/// A mapping node whose keys are checked against an allow-list.
class Fields {
public:
    Fields(const YAML::Node& node, std::string path, std::initializer_list<const char*> allowed);

    bool has(const std::string& key) const;
    YAML::Node get(const std::string& key) const;
    /// Required child; fails with the map's position when missing.
    YAML::Node need(const std::string& key) const;
    std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const YAML::Node& node() const { return node_; }

private:
    YAML::Node node_;
    std::string path_;
};

}  // namespace strand::yaml
