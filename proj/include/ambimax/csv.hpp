#ifndef AMBIMAX_CSV_HPP
#define AMBIMAX_CSV_HPP

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace ambimax::csv {

/// 12 significant digits; the same double always prints the same text.
inline std::string number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // folds -0 into 0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string number(long long x) { return std::to_string(x); }
inline std::string number(int x) { return std::to_string(x); }

/// Quotes a field only when it contains a delimiter, quote or newline.
inline std::string field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << field(cells[i]);
    }
    os << '\n';
}

inline void write_row(std::ostream& os, std::initializer_list<std::string> cells) {
    write_row(os, std::vector<std::string>(cells));
}

}  // namespace ambimax::csv

#endif
