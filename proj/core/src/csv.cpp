#include "netoed/csv.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "netoed/error.hpp"

namespace netoed {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw Error("format_double: conversion failed");
    return std::string(buf.data(), end);
}

CsvReader::CsvReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

bool CsvReader::read_line(std::string& line) {
    while (std::getline(in_, line)) {
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            comments_.push_back(line);
            continue;
        }
        return true;
    }
    return false;
}

void CsvReader::expect_header(std::initializer_list<const char*> columns) {
    std::string line;
    if (!read_line(line)) throw InputError(name_ + ": missing header");
    std::string expected;
    for (const char* c : columns) {
        if (!expected.empty()) expected += ',';
        expected += c;
    }
    if (line != expected) throw InputError(name_ + ": expected header '" + expected + "', got '" + line + "'");
    columns_ = columns.size();
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string line;
    if (!read_line(line)) return false;
    fields.clear();
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (columns_ != 0 && fields.size() != columns_) {
        throw InputError(where() + ": expected " + std::to_string(columns_) + " fields");
    }
    return true;
}

double CsvReader::to_double(const std::string& field) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw InputError(where() + ": not a number: '" + field + "'");
    }
    return v;
}

long CsvReader::to_int(const std::string& field) const {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw InputError(where() + ": not an integer: '" + field + "'");
    }
    return v;
}

std::string CsvReader::where() const { return name_ + ":" + std::to_string(line_no_); }

}  // namespace netoed
