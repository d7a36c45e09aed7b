#include "privloc/prcs.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "privloc/errors.hpp"

namespace fs = std::filesystem;

namespace privloc {

namespace {

bool valid_dotted_name(const std::string& s) {
    if (s.empty()) return false;
    bool at_start = true;
    for (char c : s) {
        if (at_start) {
            if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$')) return false;
            at_start = false;
        } else if (c == '.') {
            at_start = true;
        } else if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$')) {
            return false;
        }
    }
    return !at_start;  // must not end with '.'
}

std::string simple_name(const std::string& dotted) {
    auto pos = dotted.rfind('.');
    return pos == std::string::npos ? dotted : dotted.substr(pos + 1);
}

}  // namespace

ApiSignatureList ApiSignatureList::from_lines(const std::vector<std::string>& lines) {
    ApiSignatureList out;
    std::size_t line_no = 0;
    for (const auto& raw : lines) {
        ++line_no;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        auto e = line.find_last_not_of(" \t\r");
        if (b == std::string::npos) continue;
        line = line.substr(b, e - b + 1);
        if (!valid_dotted_name(line))
            throw FormatError(line_no, "'" + line + "' is not a dotted method name");
        out.entries.insert(line);
    }
    if (out.entries.empty()) throw Error("API signature list is empty");
    return out;
}

ApiSignatureList ApiSignatureList::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open API list " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return from_lines(lines);
}

bool ApiSignatureList::matches_call(const std::string& name) const {
    for (const auto& e : entries)
        if (simple_name(e) == name) return true;
    return false;
}

CodeSample link_hops(const MethodAst& seed, const std::vector<MethodAst>& project_methods, int max_hops) {
    CodeSample sample;
    sample.hops.push_back(seed);
    std::vector<std::string> in_chain{seed.name};
    const MethodAst* current = &seed;
    while (static_cast<int>(sample.hops.size()) < max_hops) {
        const MethodAst* next_hop = nullptr;
        Span call_site;
        bool ambiguous = false;
        for (const auto& call : current->calls) {
            std::vector<const MethodAst*> candidates;
            for (const auto& m : project_methods)
                if (m.name == call.name) candidates.push_back(&m);
            if (candidates.empty()) continue;  // external call, keep scanning
            // refine by arity
            std::vector<const MethodAst*> by_arity;
            for (const auto* m : candidates) {
                int params = 0;
                for (const auto& c : m->root.children)
                    if (c.kind == "SingleVariableDeclaration") ++params;
                if (params == call.arity) by_arity.push_back(m);
            }
            if (by_arity.empty()) continue;  // no matching overload, treat as external
            if (by_arity.size() > 1) {
                ambiguous = true;  // same name, same arity: unresolvable
                break;
            }
            if (std::find(in_chain.begin(), in_chain.end(), by_arity[0]->name) != in_chain.end())
                continue;  // recursion / re-entry guard
            next_hop = by_arity[0];
            call_site = call.span;
            break;
        }
        if (ambiguous || next_hop == nullptr) break;
        sample.call_edges.push_back({static_cast<int>(sample.hops.size()) - 1,
                                     static_cast<int>(sample.hops.size()), call_site});
        sample.hops.push_back(*next_hop);
        in_chain.push_back(next_hop->name);
        current = &sample.hops.back();
    }
    return sample;
}

std::vector<CodeSample> find_prcs(const std::string& project_dir, const ApiSignatureList& apis,
                                  std::vector<std::string>* warnings) {
    if (!fs::exists(project_dir) || !fs::is_directory(project_dir)) throw NoSourcesFound(project_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(project_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".java") files.push_back(entry.path());
    if (files.empty()) throw NoSourcesFound(project_dir);
    std::sort(files.begin(), files.end());  // deterministic merge order

    std::vector<MethodAst> methods;
    for (const auto& file : files) {
        std::ifstream is(file);
        std::stringstream ss;
        ss << is.rdbuf();
        try {
            ParsedFile parsed = parse_java_file(ss.str(), fs::relative(file, project_dir).generic_string());
            for (auto& m : parsed.methods) methods.push_back(std::move(m));
        } catch (const Error& e) {
            if (warnings) warnings->push_back(file.generic_string() + ": " + e.what());
        }
    }

    std::vector<CodeSample> samples;
    for (const auto& m : methods) {
        int match_ordinal = 0;
        for (const auto& call : m.calls) {
            if (!apis.matches_call(call.name)) continue;
            CodeSample s = link_hops(m, methods);
            s.id = m.file + "#" + m.name + "#" + std::to_string(match_ordinal++);
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

void mine_sample_paths(CodeSample& sample, int max_nonterminals) {
    sample.hop_paths.clear();
    sample.hop_paths.reserve(sample.hops.size());
    for (const auto& hop : sample.hops) sample.hop_paths.push_back(extract_ast_paths(hop, max_nonterminals));
}

}  // namespace privloc
