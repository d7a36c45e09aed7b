#pragma once

#include <string>
#include <vector>

#include "privloc/ast.hpp"

namespace privloc {

// One terminal-to-terminal tree walk: the start token, the interior node
// kinds along start -> lowest common ancestor -> end, and the end token.
// The terminal appearing earlier in the source is always the start.
struct AstPath {
    std::string start_terminal;
    std::vector<std::string> nonterminals;  // length 1..8 after mining
    std::string end_terminal;
    Span start_span;
    Span end_span;

    // spans are presentation metadata; content identity ignores them
    bool operator==(const AstPath& o) const {
        return start_terminal == o.start_terminal && nonterminals == o.nonterminals &&
               end_terminal == o.end_terminal;
    }
};

constexpr int kMaxNonterminals = 8;

// Every unordered pair of distinct terminals whose connecting walk stays
// within `max_nonterminals` interior nodes; longer pairs are dropped.
std::vector<AstPath> extract_ast_paths(const MethodAst& method, int max_nonterminals = kMaxNonterminals);

// `start,nt1|nt2|...,end` with %-escapes for the separator characters.
std::string path_to_string(const AstPath& path);
AstPath path_from_string(const std::string& text, std::size_t line_no);

}  // namespace privloc
