#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ppsel/geometry.hpp"

namespace ppsel {

// Header row plus string cells; numbers are formatted with format_double.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

// Pattern CSV: "# window x_min x_max y_min y_max", optional "# key value"
// metadata lines, header "x,y", one point per line.
PointPattern read_pattern(const std::filesystem::path& path);
PointPattern parse_pattern(std::istream& in, const std::string& source = "<stream>");
void write_pattern(const PointPattern& pattern, const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& metadata = {});
void write_pattern(const PointPattern& pattern, std::ostream& out,
                   const std::vector<std::pair<std::string, std::string>>& metadata = {});

// Raster ASCII: "ncols nrows x0 y0 dx dy" then nrows lines of ncols values,
// first line = row 0 = southernmost. The field is named after the file stem
// unless a name is given.
CovariateField read_raster(const std::filesystem::path& path, const std::string& name = {});
CovariateField parse_raster(std::istream& in, const std::string& name);
void write_raster(const CovariateField& field, const std::filesystem::path& path);
void write_raster(const CovariateField& field, std::ostream& out);

void write_csv(const CsvTable& table, const std::filesystem::path& path);
void write_csv(const CsvTable& table, std::ostream& out);
CsvTable read_csv(const std::filesystem::path& path);

} // namespace ppsel
