#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bmat::csv {

// Comma-separated table: mandatory header, double-quoted fields where needed, '.' decimals.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column; throws InputError when absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view source_name = "<memory>");

// Require the header to contain every name in `required` (order free).
void require_columns(const Table& t, const std::vector<std::string>& required, std::string_view source_name);

// Strict numeric parse of a whole field. Throws InputError naming `what`.
double parse_double(std::string_view field, std::string_view what);
long parse_long(std::string_view field, std::string_view what);
std::optional<double> parse_optional(std::string_view field, std::string_view what);
bool parse_bool(std::string_view field, std::string_view what);

// Shortest round-trip decimal form; stable across runs on one platform.
std::string format(double v);
// Fixed significant digits for report files.
std::string format_sig(double v, int digits = 10);

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    Writer& field(std::string_view s);
    Writer& field(double v);
    Writer& field(long v);
    Writer& field(int v) { return field(static_cast<long>(v)); }
    Writer& field(std::size_t v) { return field(static_cast<long>(v)); }
    Writer& empty();
    void end_row();
    void header(const std::vector<std::string>& names);

private:
    std::ostream& out_;
    bool first_ = true;
};

}  // namespace bmat::csv
