#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace wsl {

/// Deterministic key/value summary with an assertion ledger. Numeric values
/// are formatted identically across runs so repeated runs are byte-identical.
class Summary {
  public:
    void add(const std::string& key, double value);
    void add(const std::string& key, long long value);
    void add(const std::string& key, const std::string& value);
    void assert_that(const std::string& name, bool passed);

    bool all_passed() const;
    const std::vector<std::string>& failures() const { return failures_; }
    void write(std::ostream& os) const;

  private:
    std::vector<std::pair<std::string, std::string>> items_;
    std::vector<std::string> failures_;
    int assertions_ = 0;
};

std::string format_double(double v);

/// Writes text to a file, creating parent directories; throws on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace wsl
