#include "ppsel/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ppsel/error.hpp"

namespace ppsel {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw InputError("cannot format number");
    return std::string(buf, end);
}

double parse_double(const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (t.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw InputError("'" + t + "' is not a finite number");
    return v;
}

PointPattern parse_pattern(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<Window> window;
    bool header_seen = false;
    std::vector<Point> pts;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const auto tok = split_ws(t.substr(1));
            if (!tok.empty() && tok[0] == "window") {
                if (tok.size() != 5)
                    throw InputError(where(source, lineno) + "window line needs four numbers");
                try {
                    window.emplace(parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]),
                                   parse_double(tok[4]));
                } catch (const InputError& e) {
                    throw InputError(where(source, lineno) + e.what());
                }
            }
            continue;
        }
        if (!header_seen) {
            const auto cols = split(t, ',');
            if (cols.size() != 2 || cols[0] != "x" || cols[1] != "y")
                throw InputError(where(source, lineno) + "expected header 'x,y'");
            header_seen = true;
            continue;
        }
        const auto cols = split(t, ',');
        if (cols.size() != 2)
            throw InputError(where(source, lineno) + "expected two columns");
        try {
            pts.push_back({parse_double(cols[0]), parse_double(cols[1])});
        } catch (const InputError& e) {
            throw InputError(where(source, lineno) + e.what());
        }
    }
    if (!window) throw InputError(source + ": missing '# window x_min x_max y_min y_max' line");
    if (!header_seen) throw InputError(source + ": missing 'x,y' header");
    try {
        return PointPattern(*window, std::move(pts));
    } catch (const InputError& e) {
        throw InputError(source + ": " + e.what());
    }
}

PointPattern read_pattern(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_pattern(in, path.string());
}

void write_pattern(const PointPattern& pattern, std::ostream& out,
                   const std::vector<std::pair<std::string, std::string>>& metadata) {
    const Window& w = pattern.window();
    out << "# window " << format_double(w.x_min()) << ' ' << format_double(w.x_max()) << ' '
        << format_double(w.y_min()) << ' ' << format_double(w.y_max()) << '\n';
    for (const auto& [k, v] : metadata) out << "# " << k << ' ' << v << '\n';
    out << "x,y\n";
    for (const Point& u : pattern.points())
        out << format_double(u.x) << ',' << format_double(u.y) << '\n';
}

void write_pattern(const PointPattern& pattern, const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& metadata) {
    auto out = open_out(path);
    write_pattern(pattern, out, metadata);
}

CovariateField parse_raster(std::istream& in, const std::string& name) {
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!trim(line).empty()) return true;
        }
        return false;
    };
    if (!next_line()) throw InputError(name + ": empty raster file");
    const auto head = split_ws(line);
    if (head.size() != 6)
        throw InputError(where(name, lineno) + "header must be 'ncols nrows x0 y0 dx dy'");
    std::size_t n_cols = 0, n_rows = 0;
    double x0, y0, dx, dy;
    try {
        const double c = parse_double(head[0]);
        const double r = parse_double(head[1]);
        if (c < 1 || r < 1 || c != std::floor(c) || r != std::floor(r))
            throw InputError("ncols and nrows must be positive integers");
        n_cols = static_cast<std::size_t>(c);
        n_rows = static_cast<std::size_t>(r);
        x0 = parse_double(head[2]);
        y0 = parse_double(head[3]);
        dx = parse_double(head[4]);
        dy = parse_double(head[5]);
    } catch (const InputError& e) {
        throw InputError(where(name, lineno) + e.what());
    }
    std::vector<double> values;
    values.reserve(n_rows * n_cols);
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (!next_line())
            throw InputError(name + ": expected " + std::to_string(n_rows) + " rows, found " +
                             std::to_string(r));
        const auto tok = split_ws(line);
        if (tok.size() != n_cols)
            throw InputError(where(name, lineno) + "expected " + std::to_string(n_cols) +
                             " values, found " + std::to_string(tok.size()));
        for (const auto& t : tok) {
            try {
                values.push_back(parse_double(t));
            } catch (const InputError& e) {
                throw InputError(where(name, lineno) + e.what());
            }
        }
    }
    if (next_line()) throw InputError(where(name, lineno) + "unexpected trailing data");
    return CovariateField(name, n_rows, n_cols, x0, y0, dx, dy, std::move(values));
}

CovariateField read_raster(const std::filesystem::path& path, const std::string& name) {
    auto in = open_in(path);
    try {
        return parse_raster(in, name.empty() ? path.stem().string() : name);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_raster(const CovariateField& f, std::ostream& out) {
    out << f.n_cols() << ' ' << f.n_rows() << ' ' << format_double(f.x0()) << ' '
        << format_double(f.y0()) << ' ' << format_double(f.dx()) << ' ' << format_double(f.dy())
        << '\n';
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
        for (std::size_t c = 0; c < f.n_cols(); ++c) {
            if (c) out << ' ';
            out << format_double(f.at(r, c));
        }
        out << '\n';
    }
}

void write_raster(const CovariateField& field, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_raster(field, out);
}

void write_csv(const CsvTable& table, std::ostream& out) {
    auto row_out = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    };
    row_out(table.header);
    for (const auto& r : table.rows) {
        if (r.size() != table.header.size())
            throw InputError("CSV row width does not match header");
        row_out(r);
    }
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_csv(table, out);
}

CsvTable read_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto cells = split(s, ',');
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size())
                throw InputError(path.string() + ": row width does not match header");
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw InputError(path.string() + ": missing CSV header");
    return t;
}

} // namespace ppsel
