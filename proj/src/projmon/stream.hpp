#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace projmon {

// A d-dimensional observation stream with a training/monitoring split at
// index m (train_len). Rows are stored row-major and indexed 0-based in
// code; reports and file formats use the 1-based time index t.
struct ObservationStream {
    std::size_t dim = 0;
    std::size_t train_len = 0;         // m; 0 means "not set yet"
    std::vector<double> data;          // rows() x dim, row-major
    std::vector<double> response;      // empty, or one z per row

    std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
    bool has_response() const { return !response.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    void append(std::span<const double> y) { data.insert(data.end(), y.begin(), y.end()); }
};

struct ValidationIssue {
    std::size_t t = 0;   // 1-based row
    std::size_t j = 0;   // 1-based coordinate; 0 = response column
    std::string what;
};

struct ValidationReport {
    bool ok = false;
    std::vector<ValidationIssue> issues;
    std::vector<std::string> notes;

    std::string to_json() const;
};

// Report-only scan: dimension consistency, non-finite entries, and whether
// train_len observations are available.
ValidationReport validate_stream(const ObservationStream& s);

// CSV with header y1,...,yd and an optional trailing z column.
ObservationStream read_csv(const std::string& path);
ObservationStream parse_csv(const std::string& text);
void write_csv(const ObservationStream& s, const std::string& path);
std::string to_csv(const ObservationStream& s);

}  // namespace projmon
