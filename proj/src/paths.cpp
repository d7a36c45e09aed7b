#include "privloc/paths.hpp"

#include <algorithm>

#include "privloc/errors.hpp"

namespace privloc {

namespace {

struct TerminalRef {
    const AstNode* node;
    std::vector<const AstNode*> ancestors;  // root..parent, interior nodes only
};

void collect(const AstNode& node, std::vector<const AstNode*>& stack, std::vector<TerminalRef>& out) {
    if (node.terminal()) {
        out.push_back({&node, stack});
        return;
    }
    stack.push_back(&node);
    for (const auto& c : node.children) collect(c, stack, out);
    stack.pop_back();
}

}  // namespace

std::vector<AstPath> extract_ast_paths(const MethodAst& method, int max_nonterminals) {
    std::vector<TerminalRef> terminals;
    std::vector<const AstNode*> stack;
    collect(method.root, stack, terminals);

    std::vector<AstPath> out;
    for (std::size_t i = 0; i < terminals.size(); ++i) {
        for (std::size_t j = i + 1; j < terminals.size(); ++j) {
            const auto& a = terminals[i].ancestors;
            const auto& b = terminals[j].ancestors;
            std::size_t common = 0;
            while (common < a.size() && common < b.size() && a[common] == b[common]) ++common;
            // walk: up from a through the LCA (a[common-1]), then down to b
            std::size_t count = (a.size() - common + 1) + (b.size() - common);
            if (count > static_cast<std::size_t>(max_nonterminals)) continue;
            AstPath p;
            p.nonterminals.reserve(count);
            for (std::size_t k = a.size(); k-- > common;) p.nonterminals.push_back(a[k]->kind);
            p.nonterminals.push_back(a[common - 1]->kind);  // LCA (root is always shared)
            for (std::size_t k = common; k < b.size(); ++k) p.nonterminals.push_back(b[k]->kind);
            p.start_terminal = terminals[i].node->text;
            p.end_terminal = terminals[j].node->text;
            p.start_span = terminals[i].node->span;
            p.end_span = terminals[j].node->span;
            out.push_back(std::move(p));
        }
    }
    return out;
}

namespace {

const char kReserved[] = {',', '|', ' ', '\t', '\n', '%'};

bool reserved(char c) {
    for (char r : kReserved)
        if (c == r) return true;
    return false;
}

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    static const char* hex = "0123456789ABCDEF";
    for (char c : s) {
        if (reserved(c)) {
            out += '%';
            out += hex[(static_cast<unsigned char>(c) >> 4) & 0xF];
            out += hex[static_cast<unsigned char>(c) & 0xF];
        } else {
            out += c;
        }
    }
    return out;
}

std::string unescape(const std::string& s, std::size_t line_no) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%') {
            if (i + 2 >= s.size()) throw FormatError(line_no, "truncated %-escape in token");
            auto hexval = [&](char c) -> int {
                if (c >= '0' && c <= '9') return c - '0';
                if (c >= 'A' && c <= 'F') return c - 'A' + 10;
                if (c >= 'a' && c <= 'f') return c - 'a' + 10;
                throw FormatError(line_no, "bad %-escape in token");
            };
            out += static_cast<char>(hexval(s[i + 1]) * 16 + hexval(s[i + 2]));
            i += 2;
        } else {
            out += s[i];
        }
    }
    return out;
}

}  // namespace

std::string path_to_string(const AstPath& path) {
    std::string out = escape(path.start_terminal);
    out += ',';
    for (std::size_t i = 0; i < path.nonterminals.size(); ++i) {
        if (i) out += '|';
        out += escape(path.nonterminals[i]);
    }
    out += ',';
    out += escape(path.end_terminal);
    return out;
}

AstPath path_from_string(const std::string& text, std::size_t line_no) {
    auto c1 = text.find(',');
    auto c2 = text.rfind(',');
    if (c1 == std::string::npos || c2 == c1)
        throw FormatError(line_no, "path needs 'start,nts,end', got '" + text + "'");
    AstPath p;
    p.start_terminal = unescape(text.substr(0, c1), line_no);
    p.end_terminal = unescape(text.substr(c2 + 1), line_no);
    std::string nts = text.substr(c1 + 1, c2 - c1 - 1);
    if (nts.empty()) throw FormatError(line_no, "path has no non-terminals");
    std::size_t pos = 0;
    while (true) {
        auto bar = nts.find('|', pos);
        p.nonterminals.push_back(unescape(nts.substr(pos, bar - pos), line_no));
        if (bar == std::string::npos) break;
        pos = bar + 1;
    }
    if (p.start_terminal.empty() || p.end_terminal.empty())
        throw FormatError(line_no, "path has an empty terminal");
    if (p.nonterminals.size() > kMaxNonterminals)
        throw FormatError(line_no, "path has " + std::to_string(p.nonterminals.size()) +
                                       " non-terminals (max 8)");
    return p;
}

}  // namespace privloc
