#pragma once
// Minimal RFC-4180 CSV writer.

#include <ostream>
#include <string>
#include <vector>

#include "rvfield/format.hpp"

namespace rvf {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    CsvWriter& operator<<(const std::string& s) { return push(csv_field(s)); }
    CsvWriter& operator<<(const char* s) { return push(csv_field(s)); }
    CsvWriter& operator<<(double v) { return push(format_double(v)); }
    CsvWriter& operator<<(long long v) { return push(std::to_string(v)); }
    CsvWriter& operator<<(long v) { return push(std::to_string(v)); }
    CsvWriter& operator<<(unsigned long v) { return push(std::to_string(v)); }
    CsvWriter& operator<<(int v) { return push(std::to_string(v)); }

    void header(const std::vector<std::string>& names) {
        for (const auto& n : names) *this << n;
        end_row();
    }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& push(const std::string& cell) {
        if (!first_) out_ << ',';
        out_ << cell;
        first_ = false;
        return *this;
    }

    std::ostream& out_;
    bool first_ = true;
};

}  // namespace rvf
