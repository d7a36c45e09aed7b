#pragma once

#include <string>
#include <vector>

#include "privloc/errors.hpp"

namespace privloc {

// 1-based source positions; all-zero means "unknown" (e.g. paths loaded from
// a .c2s file rather than mined in-process).
struct Span {
    int start_line = 0;
    int start_col = 0;
    int end_line = 0;
    int end_col = 0;

    bool known() const { return start_line > 0; }
    bool operator==(const Span&) const = default;
};

// Either an interior node (kind set, >= 1 child) or a leaf carrying the
// identifier/literal token text. Keywords and operators never become leaves;
// they are absorbed into the interior node kinds, and interior nodes left
// without any leaf descendant are pruned from the tree.
struct AstNode {
    std::string kind;
    std::string text;
    std::vector<AstNode> children;
    Span span;

    bool terminal() const { return children.empty(); }
};

struct CallSite {
    std::string name;      // called method's simple name
    int arity = 0;
    std::string receiver;  // dotted receiver chain when it is a plain name chain, else ""
    Span span;             // span of the name token
};

struct MethodAst {
    std::string name;
    std::string source_text;  // the declaration's source slice
    AstNode root;             // kind MethodDeclaration or ConstructorDeclaration
    std::string file;
    int start_line = 1;               // file line of source_text's first line
    std::vector<CallSite> calls;      // method invocations in lexical order
};

struct ParsedFile {
    std::string file;
    std::vector<MethodAst> methods;  // declaration order, nested types included
};

// Parses exactly one method (or constructor) declaration.
MethodAst parse_java_method(const std::string& source_text, const std::string& file = "<memory>");

// Parses a compilation unit and collects every method with a body.
ParsedFile parse_java_file(const std::string& source_text, const std::string& file);

// Leaves of the tree in source order.
std::vector<const AstNode*> collect_terminals(const AstNode& root);

}  // namespace privloc
