#include "projmon/stream.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "projmon/common.hpp"

namespace projmon {

ValidationReport validate_stream(const ObservationStream& s) {
    ValidationReport rep;
    if (s.dim == 0 || s.data.empty()) {
        rep.notes.push_back("train_len unavailable");
        rep.notes.push_back("empty stream");
        return rep;
    }
    if (s.data.size() % s.dim != 0) {
        rep.notes.push_back("row storage is not a multiple of dim");
        return rep;
    }
    const std::size_t n = s.rows();
    for (std::size_t i = 0; i < n; ++i) {
        auto y = s.row(i);
        for (std::size_t j = 0; j < s.dim; ++j) {
            if (!std::isfinite(y[j])) {
                rep.issues.push_back({i + 1, j + 1, "non-finite value"});
            }
        }
    }
    if (s.has_response()) {
        if (s.response.size() != n) {
            rep.notes.push_back("response column length differs from row count");
        }
        for (std::size_t i = 0; i < s.response.size(); ++i) {
            if (!std::isfinite(s.response[i])) {
                rep.issues.push_back({i + 1, 0, "non-finite response"});
            }
        }
    }
    if (s.train_len == 0) {
        rep.notes.push_back("train_len unavailable");
    } else if (s.train_len < 2) {
        rep.notes.push_back("train_len below 2");
    } else if (n < s.train_len) {
        rep.notes.push_back("fewer rows than train_len");
    }
    rep.ok = rep.issues.empty() && rep.notes.empty();
    return rep;
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["ok"] = ok;
    j["issues"] = nlohmann::json::array();
    for (const auto& is : issues) {
        j["issues"].push_back({{"t", is.t}, {"j", is.j}, {"what", is.what}});
    }
    j["notes"] = notes;
    return j.dump();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& tok, std::size_t line_no) {
    const std::string t = trim(tok);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        if (t == "nan" || t == "NaN") return std::nan("");
        throw_invalid("line " + std::to_string(line_no) + ": cannot parse value '" + t + "'");
    }
    return v;
}

}  // namespace

ObservationStream parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw_invalid("empty CSV input");

    auto header = split_line(line);
    ObservationStream s;
    std::size_t d = 0;
    bool has_z = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        const std::string want = "y" + std::to_string(i + 1);
        if (name == want) {
            ++d;
        } else if (name == "z" && i == header.size() - 1) {
            has_z = true;
        } else {
            throw_invalid("missing column " + want + " (found '" + name + "')");
        }
    }
    if (d == 0) throw_invalid("missing column y1");
    s.dim = d;

    std::size_t line_no = 1;
    std::vector<double> rowbuf(d);
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto toks = split_line(line);
        if (toks.size() != d + (has_z ? 1 : 0)) {
            throw_invalid("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(d + (has_z ? 1 : 0)) + " fields, got " +
                          std::to_string(toks.size()));
        }
        for (std::size_t j = 0; j < d; ++j) rowbuf[j] = parse_double(toks[j], line_no);
        s.append(rowbuf);
        if (has_z) s.response.push_back(parse_double(toks[d], line_no));
    }
    return s;
}

ObservationStream read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw_io("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_csv(buf.str());
}

std::string to_csv(const ObservationStream& s) {
    std::ostringstream out;
    for (std::size_t j = 0; j < s.dim; ++j) {
        if (j) out << ',';
        out << 'y' << (j + 1);
    }
    if (s.has_response()) out << ",z";
    out << '\n';
    char buf[64];
    auto put = [&](double v, char sep) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        out.write(buf, p - buf);
        if (sep) out << sep;
    };
    const std::size_t n = s.rows();
    for (std::size_t i = 0; i < n; ++i) {
        auto y = s.row(i);
        for (std::size_t j = 0; j < s.dim; ++j) {
            put(y[j], (j + 1 < s.dim || s.has_response()) ? ',' : '\n');
        }
        if (s.has_response()) put(s.response[i], '\n');
    }
    return out.str();
}

void write_csv(const ObservationStream& s, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw_io("cannot open '" + path + "' for writing");
    f << to_csv(s);
    if (!f) throw_io("write failed for '" + path + "'");
}

}  // namespace projmon
