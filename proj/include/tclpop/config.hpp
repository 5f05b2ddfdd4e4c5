#ifndef TCLPOP_CONFIG_HPP
#define TCLPOP_CONFIG_HPP

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tclpop {

/// Flat `key = value` configuration text with '#' comments. Keys are
/// dot-scoped by convention (sim.dt, signal.period, ...). The reader tracks
/// which keys were consumed so a loader can reject typos.
class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    /// Parses a value of the form "[x0,y0] [x1,y1] ..." into pairs.
    std::vector<std::pair<double, double>> get_pair_list(const std::string& key) const;

    /// Keys present in the file but never read; nonempty means the file
    /// contains entries the schema does not know.
    std::vector<std::string> unread_keys() const;

    const std::map<std::string, std::string>& entries() const { return values_; }
    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
    std::map<std::string, int> line_of_;
    mutable std::set<std::string> read_;

    const std::string& raw(const std::string& key) const;
    [[noreturn]] void fail(const std::string& key, const std::string& why) const;
};

} // namespace tclpop

#endif
