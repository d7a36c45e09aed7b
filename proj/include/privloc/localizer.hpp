#pragma once

#include <optional>
#include <string>
#include <vector>

#include "privloc/model.hpp"
#include "privloc/prcs.hpp"
#include "privloc/trainer.hpp"

namespace privloc {

enum class SkipReason { Ambiguous, ObfuscatedAbsent };

std::string to_string(SkipReason r);
SkipReason skip_reason_from_string(const std::string& s);

struct MappedLine {
    std::string file;
    int line = 0;  // 1-based, absolute within the file
    std::string statement_text;

    bool operator==(const MappedLine&) const = default;
};

struct LocEntry {
    int path_index = 0;
    double weight = 0.0;
    std::string start_terminal;
    std::string end_terminal;
    std::optional<MappedLine> mapped;
    std::optional<SkipReason> skip_reason;

    bool operator==(const LocEntry&) const = default;
};

struct LocalizationReport {
    std::string sample_id;
    std::vector<std::vector<LocEntry>> hops;  // <= top_k entries each, weight-descending

    bool operator==(const LocalizationReport&) const = default;
};

// Indices of the k largest weights, descending, ties to the lower index.
// Zero-weight entries (null paths) are never returned.
std::vector<int> top_k_paths(const std::vector<double>& weights, int k = 20);

struct MapOutcome {
    std::optional<MappedLine> mapped;
    std::optional<SkipReason> skip;
};

// Span-exact when the path carries terminal spans; otherwise a verbatim text
// search over the hop source that must hit exactly one line. Start terminal
// first, then the end terminal.
MapOutcome map_path_to_line(const AstPath& path, const MethodAst& hop);

struct LocalizeOptions {
    int top_k = 20;
    std::uint64_t seed = 0;  // must match the training-time sampling seed for reproducibility
};

// Runs the model forward, keeps the top-k attention paths per hop, maps each
// to a source line and deduplicates lines keeping the heaviest path.
LocalizationReport localize(const CodeSample& sample, const Model& model, const Vocab& vocab,
                            const LocalizeOptions& opt = {});

enum class ReportFormat { Text, Html, Json };
ReportFormat report_format_from_string(const std::string& s);

// Text output prefixes highlighted lines with `>> [w=...]`; html wraps them
// in <mark>; json is the report itself.
std::string render_annotated(const LocalizationReport& report, const CodeSample& sample,
                             ReportFormat format);

std::string report_to_json(const LocalizationReport& report);
LocalizationReport report_from_json(const std::string& text);

}  // namespace privloc
