#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "privloc/ast.hpp"
#include "privloc/paths.hpp"

namespace privloc {

// Fully-qualified names of permission-requiring APIs. A call site matches an
// entry when its simple name equals the entry's final segment; receiver types
// are not resolved (source-level heuristic).
struct ApiSignatureList {
    std::set<std::string> entries;

    static ApiSignatureList from_file(const std::string& path);
    static ApiSignatureList from_lines(const std::vector<std::string>& lines);
    bool matches_call(const std::string& simple_name) const;
};

struct CallEdge {
    int caller_hop = 0;  // 0-based hop indices
    int callee_hop = 0;
    Span call_site;
};

// A permission-requiring code segment: 1..3 call-linked methods. Mined
// samples carry the full method ASTs; samples loaded from a .c2s file carry
// only the per-hop path sets.
struct CodeSample {
    std::string id;
    std::optional<int> label;
    std::vector<MethodAst> hops;                  // empty when loaded from disk
    std::vector<std::vector<AstPath>> hop_paths;  // parallel to hops once mined
    std::vector<CallEdge> call_edges;

    std::size_t hop_count() const { return std::max(hops.size(), hop_paths.size()); }
};

// Scans project_dir recursively for .java files; files that fail to parse are
// reported through `warnings` and skipped. One sample per (method, matched
// API call site), chained by link_hops.
std::vector<CodeSample> find_prcs(const std::string& project_dir, const ApiSignatureList& apis,
                                  std::vector<std::string>* warnings = nullptr);

// Follows at most max_hops-1 outgoing calls from the seed: at each hop, the
// lexically first call whose simple name matches any project method either
// resolves uniquely by name+arity and extends the chain, or (several
// same-name same-arity candidates) ends it. Calls matching no project method
// are skipped; methods already in the chain are never re-entered.
CodeSample link_hops(const MethodAst& seed, const std::vector<MethodAst>& project_methods,
                     int max_hops = 3);

// Populates hop_paths for a mined sample.
void mine_sample_paths(CodeSample& sample, int max_nonterminals = kMaxNonterminals);

}  // namespace privloc
