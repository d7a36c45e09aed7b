#include "privloc/localizer.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace privloc {

using nlohmann::json;

std::string to_string(SkipReason r) {
    return r == SkipReason::Ambiguous ? "ambiguous" : "obfuscated_absent";
}

SkipReason skip_reason_from_string(const std::string& s) {
    if (s == "ambiguous") return SkipReason::Ambiguous;
    if (s == "obfuscated_absent") return SkipReason::ObfuscatedAbsent;
    throw UnknownFormat(s);
}

std::vector<int> top_k_paths(const std::vector<double>& weights, int k) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (weights[i] > 0.0) idx.push_back(static_cast<int>(i));
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (weights[static_cast<std::size_t>(a)] != weights[static_cast<std::size_t>(b)])
            return weights[static_cast<std::size_t>(a)] > weights[static_cast<std::size_t>(b)];
        return a < b;
    });
    if (static_cast<int>(idx.size()) > k) idx.resize(static_cast<std::size_t>(k));
    return idx;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            out.push_back(text.substr(pos));
            break;
        }
        out.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

// all 1-based absolute line numbers whose text contains `needle` verbatim
std::vector<int> candidate_lines(const std::vector<std::string>& lines, int first_line,
                                 const std::string& needle) {
    std::vector<int> out;
    if (needle.empty()) return out;
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].find(needle) != std::string::npos) out.push_back(first_line + static_cast<int>(i));
    return out;
}

}  // namespace

MapOutcome map_path_to_line(const AstPath& path, const MethodAst& hop) {
    MapOutcome out;
    auto lines = split_lines(hop.source_text);
    auto line_text = [&](int line) -> std::string {
        int rel = line - hop.start_line;
        if (rel < 0 || rel >= static_cast<int>(lines.size())) return "";
        return trimmed(lines[static_cast<std::size_t>(rel)]);
    };

    // exact spans win when the miner produced this path in-process
    if (path.start_span.known()) {
        out.mapped = MappedLine{hop.file, path.start_span.start_line, line_text(path.start_span.start_line)};
        return out;
    }
    if (path.end_span.known()) {
        out.mapped = MappedLine{hop.file, path.end_span.start_line, line_text(path.end_span.start_line)};
        return out;
    }

    bool saw_multiple = false;
    for (const std::string& term : {path.start_terminal, path.end_terminal}) {
        auto hits = candidate_lines(lines, hop.start_line, term);
        if (hits.size() == 1) {
            out.mapped = MappedLine{hop.file, hits[0], line_text(hits[0])};
            return out;
        }
        if (hits.size() > 1) saw_multiple = true;
    }
    out.skip = saw_multiple ? SkipReason::Ambiguous : SkipReason::ObfuscatedAbsent;
    return out;
}

LocalizationReport localize(const CodeSample& sample, const Model& model, const Vocab& vocab,
                            const LocalizeOptions& opt) {
    const ModelConfig& cfg = model.config();
    LocalizationReport report;
    report.sample_id = sample.id;

    std::vector<std::vector<double>> hop_weights;   // per hop, num_paths long, 0 on null rows
    std::vector<const HopMatrix*> matrices;
    std::array<HopMatrix, 3> hops_storage;
    HopMatrix pooled_storage;

    if (cfg.architecture == Architecture::MultiHead) {
        hops_storage = sample_hop_matrices(sample, vocab, cfg, opt.seed);
        auto fr = model.forward_multi_head(hops_storage);
        for (int h = 0; h < 3; ++h) {
            matrices.push_back(&hops_storage[static_cast<std::size_t>(h)]);
            hop_weights.push_back(fr.hops[static_cast<std::size_t>(h)].attention_weights);
        }
    } else {
        pooled_storage = sample_pooled_matrix(sample, vocab, cfg, opt.seed);
        auto fr = model.forward_single_head(pooled_storage);
        matrices.push_back(&pooled_storage);
        hop_weights.push_back(fr.hops[0].attention_weights);
    }

    std::size_t reported_hops =
        cfg.architecture == Architecture::MultiHead ? sample.hop_count() : 1;
    for (std::size_t h = 0; h < std::min<std::size_t>(reported_hops, hop_weights.size()); ++h) {
        const HopMatrix& matrix = *matrices[h];
        std::vector<double> weights = hop_weights[h];
        for (std::size_t r = 0; r < weights.size(); ++r)
            if (matrix.row_is_null(r)) weights[r] = 0.0;  // uniform fallback rows are not reportable

        std::vector<LocEntry> entries;
        std::map<std::pair<std::string, int>, std::size_t> line_seen;
        for (int row : top_k_paths(weights, opt.top_k)) {
            int src = matrix.src_path[static_cast<std::size_t>(row)];
            // single-head pooling loses hop provenance; mined multi-head rows index hop h
            const AstPath* path = nullptr;
            if (cfg.architecture == Architecture::MultiHead) {
                path = &sample.hop_paths[h][static_cast<std::size_t>(src)];
            } else {
                std::size_t flat = static_cast<std::size_t>(src);
                for (const auto& hp : sample.hop_paths) {
                    if (flat < hp.size()) {
                        path = &hp[flat];
                        break;
                    }
                    flat -= hp.size();
                }
            }
            if (path == nullptr) continue;
            LocEntry e;
            e.path_index = row;
            e.weight = weights[static_cast<std::size_t>(row)];
            e.start_terminal = path->start_terminal;
            e.end_terminal = path->end_terminal;
            if (h < sample.hops.size()) {
                MapOutcome mo = map_path_to_line(*path, sample.hops[h]);
                e.mapped = mo.mapped;
                e.skip_reason = mo.skip;
            } else {
                e.skip_reason = SkipReason::ObfuscatedAbsent;  // no source available
            }
            if (e.mapped) {
                auto key = std::make_pair(e.mapped->file, e.mapped->line);
                auto it = line_seen.find(key);
                if (it != line_seen.end()) continue;  // keep the heavier (earlier) path
                line_seen[key] = entries.size();
            }
            entries.push_back(std::move(e));
        }
        report.hops.push_back(std::move(entries));
    }
    return report;
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "text") return ReportFormat::Text;
    if (s == "html") return ReportFormat::Html;
    if (s == "json") return ReportFormat::Json;
    throw UnknownFormat(s);
}

namespace {

std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", w);
    return buf;
}

std::string escape_html(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_annotated(const LocalizationReport& report, const CodeSample& sample,
                             ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(report);

    std::ostringstream os;
    bool html = format == ReportFormat::Html;
    if (html) os << "<!DOCTYPE html>\n<html><body>\n";
    for (std::size_t h = 0; h < sample.hop_count(); ++h) {
        std::map<int, double> highlight;  // absolute line -> weight
        if (h < report.hops.size())
            for (const auto& e : report.hops[h])
                if (e.mapped) {
                    auto it = highlight.find(e.mapped->line);
                    if (it == highlight.end() || it->second < e.weight) highlight[e.mapped->line] = e.weight;
                }
        if (h < sample.hops.size()) {
            const MethodAst& hop = sample.hops[h];
            std::string header = "hop " + std::to_string(h + 1) + ": " + hop.name + " (" + hop.file + ")";
            if (html)
                os << "<h3>" << escape_html(header) << "</h3>\n<pre>\n";
            else
                os << "== " << header << " ==\n";
            auto lines = split_lines(hop.source_text);
            for (std::size_t i = 0; i < lines.size(); ++i) {
                int abs_line = hop.start_line + static_cast<int>(i);
                auto it = highlight.find(abs_line);
                if (html) {
                    if (it != highlight.end())
                        os << "<mark>" << escape_html(lines[i]) << "</mark>\n";
                    else
                        os << escape_html(lines[i]) << "\n";
                } else {
                    if (it != highlight.end())
                        os << ">> [w=" << format_weight(it->second) << "] " << lines[i] << "\n";
                    else
                        os << lines[i] << "\n";
                }
            }
            if (html) os << "</pre>\n";
        } else if (h < report.hops.size() && !report.hops[h].empty()) {
            // no source text: list the entries
            os << (html ? "<h3>hop " : "== hop ") << (h + 1) << (html ? " (no source)</h3>\n<ul>\n" : " (no source) ==\n");
            for (const auto& e : report.hops[h]) {
                std::string line = e.start_terminal + " .. " + e.end_terminal + " [w=" + format_weight(e.weight) + "]";
                os << (html ? "<li>" + escape_html(line) + "</li>\n" : line + "\n");
            }
            if (html) os << "</ul>\n";
        }
    }
    if (html) os << "</body></html>\n";
    return os.str();
}

std::string report_to_json(const LocalizationReport& report) {
    json j;
    j["sample_id"] = report.sample_id;
    j["hops"] = json::array();
    for (const auto& hop : report.hops) {
        json arr = json::array();
        for (const auto& e : hop) {
            json je;
            je["path_index"] = e.path_index;
            je["weight"] = e.weight;
            je["start_terminal"] = e.start_terminal;
            je["end_terminal"] = e.end_terminal;
            if (e.mapped) {
                je["mapped"] = {{"file", e.mapped->file},
                                {"line", e.mapped->line},
                                {"statement_text", e.mapped->statement_text}};
            }
            if (e.skip_reason) je["skip_reason"] = to_string(*e.skip_reason);
            arr.push_back(std::move(je));
        }
        j["hops"].push_back(std::move(arr));
    }
    return j.dump(2) + "\n";
}

LocalizationReport report_from_json(const std::string& text) {
    json j = json::parse(text);
    LocalizationReport r;
    r.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& hop : j.at("hops")) {
        std::vector<LocEntry> entries;
        for (const auto& je : hop) {
            LocEntry e;
            e.path_index = je.at("path_index").get<int>();
            e.weight = je.at("weight").get<double>();
            e.start_terminal = je.at("start_terminal").get<std::string>();
            e.end_terminal = je.at("end_terminal").get<std::string>();
            if (je.contains("mapped")) {
                MappedLine m;
                m.file = je["mapped"].at("file").get<std::string>();
                m.line = je["mapped"].at("line").get<int>();
                m.statement_text = je["mapped"].at("statement_text").get<std::string>();
                e.mapped = m;
            }
            if (je.contains("skip_reason"))
                e.skip_reason = skip_reason_from_string(je["skip_reason"].get<std::string>());
            entries.push_back(std::move(e));
        }
        r.hops.push_back(std::move(entries));
    }
    return r;
}

}  // namespace privloc
