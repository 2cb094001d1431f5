#include "wsl/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace wsl {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void Summary::add(const std::string& key, double value) {
    items_.emplace_back(key, format_double(value));
}

void Summary::add(const std::string& key, long long value) {
    items_.emplace_back(key, std::to_string(value));
}

void Summary::add(const std::string& key, const std::string& value) {
    items_.emplace_back(key, value);
}

void Summary::assert_that(const std::string& name, bool passed) {
    ++assertions_;
    items_.emplace_back("assert." + name, passed ? "pass" : "FAIL");
    if (!passed) failures_.push_back(name);
}

bool Summary::all_passed() const { return failures_.empty(); }

void Summary::write(std::ostream& os) const {
    for (const auto& [k, v] : items_) os << k << " = " << v << '\n';
    os << "assertions = " << assertions_ << '\n';
    os << "failures = " << failures_.size() << '\n';
}

void write_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace wsl
