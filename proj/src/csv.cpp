#include "bmat/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bmat/errors.hpp"

namespace bmat::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Fields containing commas or quotes are double-quoted, with "" for a literal quote.
std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
            was_quoted = true;
        } else if (ch == ',') {
            out.emplace_back(was_quoted ? cur : std::string(trim(cur)));
            cur.clear();
            was_quoted = false;
        } else {
            cur += ch;
        }
    }
    out.emplace_back(was_quoted ? cur : std::string(trim(cur)));
    return out;
}

}  // namespace

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::size_t Table::column(std::string_view name) const {
    auto c = find_column(name);
    if (!c) throw InputError("malformed header: missing column '" + std::string(name) + "'");
    return *c;
}

Table parse(std::string_view text, std::string_view source_name) {
    Table t;
    std::size_t pos = 0;
    bool have_header = false;
    std::size_t line_no = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw InputError(std::string(source_name) + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(fields.size()) + " fields, header has " +
                             std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw InputError(std::string(source_name) + ": malformed header: file is empty");
    return t;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("missing file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void require_columns(const Table& t, const std::vector<std::string>& required, std::string_view source_name) {
    for (const auto& name : required) {
        if (!t.find_column(name)) {
            throw InputError(std::string(source_name) + ": malformed header: missing column '" + name + "'");
        }
    }
}

double parse_double(std::string_view field, std::string_view what) {
    field = trim(field);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw InputError("unparseable numeric field " + std::string(what) + ": '" + std::string(field) + "'");
    }
    return v;
}

long parse_long(std::string_view field, std::string_view what) {
    field = trim(field);
    long v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw InputError("unparseable integer field " + std::string(what) + ": '" + std::string(field) + "'");
    }
    return v;
}

std::optional<double> parse_optional(std::string_view field, std::string_view what) {
    if (trim(field).empty()) return std::nullopt;
    return parse_double(field, what);
}

bool parse_bool(std::string_view field, std::string_view what) {
    field = trim(field);
    if (field == "1" || field == "true" || field == "TRUE" || field == "yes") return true;
    if (field == "0" || field == "false" || field == "FALSE" || field == "no" || field.empty()) return false;
    throw InputError("unparseable boolean field " + std::string(what) + ": '" + std::string(field) + "'");
}

std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_sig(double v, int digits) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

Writer& Writer::field(std::string_view s) {
    if (!first_) out_ << ',';
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        out_ << s;
    } else {
        out_ << '"';
        for (char ch : s) {
            if (ch == '"') out_ << '"';
            out_ << ch;
        }
        out_ << '"';
    }
    first_ = false;
    return *this;
}

Writer& Writer::field(double v) { return field(std::string_view(format(v))); }

Writer& Writer::field(long v) { return field(std::string_view(std::to_string(v))); }

Writer& Writer::empty() { return field(std::string_view()); }

void Writer::end_row() {
    out_ << '\n';
    first_ = true;
}

void Writer::header(const std::vector<std::string>& names) {
    for (const auto& n : names) field(n);
    end_row();
}

}  // namespace bmat::csv
