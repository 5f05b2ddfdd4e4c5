#include "tclpop/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tclpop/errors.hpp"

namespace tclpop {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& text, bool& ok) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    ok = end != begin && *end == '\0';
    return v;
}

} // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ScenarioError("cannot open configuration file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

KeyValueFile KeyValueFile::parse_string(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": expected 'key = value', got \"" << line << "\"";
            throw ScenarioError(msg.str());
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": empty key";
            throw ScenarioError(msg.str());
        }
        if (kv.values_.count(key)) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": duplicate key '" << key << "' (first at line "
                << kv.line_of_[key] << ")";
            throw ScenarioError(msg.str());
        }
        kv.values_[key] = value;
        kv.line_of_[key] = lineno;
    }
    return kv;
}

bool KeyValueFile::has(const std::string& key) const {
    return values_.count(key) != 0;
}

const std::string& KeyValueFile::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ScenarioError(origin_ + ": missing required key '" + key + "'");
    read_.insert(key);
    return it->second;
}

void KeyValueFile::fail(const std::string& key, const std::string& why) const {
    std::ostringstream msg;
    msg << origin_;
    auto it = line_of_.find(key);
    if (it != line_of_.end())
        msg << ":" << it->second;
    msg << ": key '" << key << "': " << why;
    throw ScenarioError(msg.str());
}

double KeyValueFile::get_double(const std::string& key) const {
    bool ok = false;
    double v = parse_double(raw(key), ok);
    if (!ok)
        fail(key, "not a number: \"" + values_.at(key) + "\"");
    return v;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
    if (!has(key))
        return fallback;
    double v = get_double(key);
    auto i = static_cast<long long>(v);
    if (static_cast<double>(i) != v)
        fail(key, "expected an integer");
    return i;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key))
        return fallback;
    const std::string& v = raw(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    fail(key, "expected a boolean (true/false), got \"" + v + "\"");
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

std::vector<std::pair<double, double>> KeyValueFile::get_pair_list(const std::string& key) const {
    const std::string& text = raw(key);
    std::vector<std::pair<double, double>> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
        if (pos >= text.size())
            break;
        if (text[pos] != '[')
            fail(key, "expected '[' starting a pair, got \"" + text.substr(pos) + "\"");
        auto close = text.find(']', pos);
        if (close == std::string::npos)
            fail(key, "unterminated pair");
        std::string body = text.substr(pos + 1, close - pos - 1);
        auto comma = body.find(',');
        if (comma == std::string::npos)
            fail(key, "pair \"" + body + "\" needs a comma");
        bool ok0 = false, ok1 = false;
        double e0 = parse_double(trim(body.substr(0, comma)), ok0);
        double e1 = parse_double(trim(body.substr(comma + 1)), ok1);
        if (!ok0 || !ok1)
            fail(key, "pair \"" + body + "\" is not numeric");
        out.emplace_back(e0, e1);
        pos = close + 1;
    }
    if (out.empty())
        fail(key, "empty pair list");
    return out;
}

std::vector<std::string> KeyValueFile::unread_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
        if (!read_.count(key))
            out.push_back(key);
    return out;
}

} // namespace tclpop
