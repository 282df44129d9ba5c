#pragma once

#include <initializer_list>
#include <istream>
#include <string>
#include <vector>

namespace netoed {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

/// Minimal reader for the comma-separated files this project writes: no
/// quoting, `#` lines are comments, first non-comment line is the header.
class CsvReader {
public:
    CsvReader(std::istream& in, std::string name);

    /// Reads the header line and throws InputError unless it matches exactly.
    void expect_header(std::initializer_list<const char*> columns);

    /// Next data row; false at end of input. Throws on a wrong field count.
    bool next(std::vector<std::string>& fields);

    double to_double(const std::string& field) const;
    long to_int(const std::string& field) const;
    std::string where() const;

    const std::vector<std::string>& comments() const { return comments_; }

private:
    bool read_line(std::string& line);

    std::istream& in_;
    std::string name_;
    std::size_t line_no_ = 0;
    std::size_t columns_ = 0;
    std::vector<std::string> comments_;
};

}  // namespace netoed
