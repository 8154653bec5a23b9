#include "strand/core/yaml_fields.hpp"

#include <fstream>
#include <sstream>

namespace strand::yaml {

void fail(const YAML::Node& node, const std::string& message) {
    const auto mark = node.Mark();
    if (mark.is_null()) {
        throw ParseError(message);
    }
    throw ParseError(message, static_cast<std::size_t>(mark.line) + 1, static_cast<std::size_t>(mark.column) + 1);
}

YAML::Node parse_document(const std::string& text) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line) + 1,
                         static_cast<std::size_t>(e.mark.column) + 1);
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

YAML::Node load_file(const std::string& path) { return parse_document(read_text(path)); }

namespace {

void require_scalar(const YAML::Node& node, const std::string& path, const char* what) {
    if (!node.IsScalar()) {
        fail(node, "'" + path + "' must be " + what);
    }
}

}  // namespace

double as_double(const YAML::Node& node, const std::string& path) {
    require_scalar(node, path, "a number");
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        fail(node, "'" + path + "' must be a number, got '" + node.Scalar() + "'");
    }
}

std::int64_t as_int(const YAML::Node& node, const std::string& path) {
    require_scalar(node, path, "an integer");
    try {
        return node.as<std::int64_t>();
    } catch (const YAML::Exception&) {
        fail(node, "'" + path + "' must be an integer, got '" + node.Scalar() + "'");
    }
}

std::uint64_t as_uint64(const YAML::Node& node, const std::string& path) {
    require_scalar(node, path, "an unsigned integer");
    try {
        return node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
        fail(node, "'" + path + "' must be an unsigned integer, got '" + node.Scalar() + "'");
    }
}

bool as_bool(const YAML::Node& node, const std::string& path) {
    require_scalar(node, path, "a boolean");
    try {
        return node.as<bool>();
    } catch (const YAML::Exception&) {
        fail(node, "'" + path + "' must be true or false, got '" + node.Scalar() + "'");
    }
}

std::string as_string(const YAML::Node& node, const std::string& path) {
    require_scalar(node, path, "a string");
    return node.Scalar();
}

Fields::Fields(const YAML::Node& node, std::string path, std::initializer_list<const char*> allowed)
    : node_(node), path_(std::move(path)) {
    if (!node.IsMap()) {
        fail(node, "'" + (path_.empty() ? std::string("document") : path_) + "' must be a mapping");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.Scalar();
        if (!ok.count(key)) {
            fail(kv.first, "unknown field '" + key + "' in '" + (path_.empty() ? std::string("document") : path_) + "'");
        }
    }
}

bool Fields::has(const std::string& key) const { return static_cast<bool>(node_[key]); }

YAML::Node Fields::get(const std::string& key) const { return node_[key]; }

YAML::Node Fields::need(const std::string& key) const {
    auto child = node_[key];
    if (!child) {
        fail(node_, "missing required field '" + path(key) + "'");
    }
    return child;
}

}  // namespace strand::yaml
