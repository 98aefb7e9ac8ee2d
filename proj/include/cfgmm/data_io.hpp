#pragma once

#include <cstddef>
#include <string>
#include <vector>

// CSV column ingestion and the intensity transform used for marker data.

namespace cfgmm {

struct Dataset {
    std::vector<double> values;
    std::string source;
    std::string name;
    std::size_t skipped_rows = 0;  // rows that failed to parse
};

struct IngestOptions {
    // Header handling: auto-detects by default (first row not parseable as a
    // number in the selected column); force_header pins it.
    bool force_header = false;
    bool force_no_header = false;
    // Apply transform_mif before positivity validation.
    bool mif_transform = false;
};

// Reads one column (by name, or 0-based index when `column` parses as an
// integer) of a comma-separated UTF-8 file. Unparseable rows are counted and
// skipped; non-positive values are an error naming the offending row.
Dataset ingest_csv(const std::string& path, const std::string& column,
                   const IngestOptions& options = {});

// y = log10(x / mean(x) + 1). Input must be nonnegative with positive mean;
// zero maps to zero and the output is nonnegative.
std::vector<double> transform_mif(const std::vector<double>& values);

}  // namespace cfgmm
