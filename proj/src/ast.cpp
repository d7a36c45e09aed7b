#include "privloc/ast.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <unordered_set>

// A hand-rolled lexer + recursive-descent parser for the Java subset this
// pipeline mines: compilation units, class/interface/enum bodies, method and
// constructor declarations, the usual statements, and expressions with
// generics, lambdas, anonymous classes and array creation. Comments and
// annotations are consumed and never reach the tree. Node kinds follow the
// conventional Java grammar production names (see NODE_KINDS.md).

namespace privloc {

namespace {

enum class Tok { Ident, Keyword, Number, String, Char, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Span span;
};

const std::unordered_set<std::string>& keywords() {
    static const std::unordered_set<std::string> kw = {
        "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
        "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
        "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long", "native",
        "new", "package", "private", "protected", "public", "return", "short", "static", "strictfp",
        "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try", "void",
        "volatile", "while", "true", "false", "null"};
    return kw;
}

bool is_primitive(const std::string& s) {
    static const std::unordered_set<std::string> prim = {"boolean", "byte", "char", "short", "int",
                                                         "long", "float", "double", "void"};
    return prim.contains(s);
}

bool is_modifier(const std::string& s) {
    static const std::unordered_set<std::string> mods = {"public", "protected", "private", "static",
                                                         "final", "abstract", "native", "synchronized",
                                                         "transient", "volatile", "strictfp", "default"};
    return mods.contains(s);
}

class Lexer {
public:
    Lexer(const std::string& src, const std::string& file) : src_(src), file_(file) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments();
            if (pos_ >= src_.size()) break;
            out.push_back(next_token());
        }
        Token end;
        end.kind = Tok::End;
        end.span = {line_, col_, line_, col_};
        out.push_back(end);
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(line_, col_, msg); }

    char cur() const { return src_[pos_]; }
    char peek(std::size_t off = 1) const { return pos_ + off < src_.size() ? src_[pos_ + off] : '\0'; }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space_and_comments() {
        while (pos_ < src_.size()) {
            char c = cur();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '/' && peek() == '/') {
                while (pos_ < src_.size() && cur() != '\n') advance();
            } else if (c == '/' && peek() == '*') {
                advance();
                advance();
                while (pos_ < src_.size() && !(cur() == '*' && peek() == '/')) advance();
                if (pos_ >= src_.size()) fail("unterminated block comment");
                advance();
                advance();
            } else {
                break;
            }
        }
    }

    Token next_token() {
        int l = line_, c = col_;
        char ch = cur();
        Token t;
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_' || ch == '$') {
            std::string word;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_' || cur() == '$')) {
                word += cur();
                advance();
            }
            t.kind = keywords().contains(word) ? Tok::Keyword : Tok::Ident;
            t.text = std::move(word);
        } else if (std::isdigit(static_cast<unsigned char>(ch)) ||
                   (ch == '.' && std::isdigit(static_cast<unsigned char>(peek())))) {
            t.kind = Tok::Number;
            t.text = lex_number();
        } else if (ch == '"') {
            t.kind = Tok::String;
            t.text = lex_quoted('"');
        } else if (ch == '\'') {
            t.kind = Tok::Char;
            t.text = lex_quoted('\'');
        } else {
            t.kind = Tok::Punct;
            t.text = lex_punct();
        }
        t.span = {l, c, line_, col_ > 1 ? col_ - 1 : col_};
        return t;
    }

    std::string lex_number() {
        std::string out;
        auto take = [&] {
            out += cur();
            advance();
        };
        if (cur() == '0' && (peek() == 'x' || peek() == 'X' || peek() == 'b' || peek() == 'B')) {
            take();
            take();
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_'))
                take();
            return out;
        }
        bool seen_dot = false, seen_exp = false;
        while (pos_ < src_.size()) {
            char c = cur();
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '_') {
                take();
            } else if (c == '.' && !seen_dot && !seen_exp &&
                       std::isdigit(static_cast<unsigned char>(peek()))) {
                seen_dot = true;
                take();
            } else if ((c == 'e' || c == 'E') && !seen_exp &&
                       (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '-' || peek() == '+')) {
                seen_exp = true;
                take();
                if (cur() == '-' || cur() == '+') take();
            } else if (c == 'l' || c == 'L' || c == 'f' || c == 'F' || c == 'd' || c == 'D') {
                take();
                break;
            } else {
                break;
            }
        }
        return out;
    }

    std::string lex_quoted(char quote) {
        std::string out;
        out += cur();
        advance();
        while (pos_ < src_.size() && cur() != quote) {
            if (cur() == '\n') fail("unterminated literal");
            if (cur() == '\\') {
                out += cur();
                advance();
                if (pos_ >= src_.size()) fail("unterminated literal");
            }
            out += cur();
            advance();
        }
        if (pos_ >= src_.size()) fail("unterminated literal");
        out += cur();
        advance();
        return out;
    }

    std::string lex_punct() {
        // '>' is always lexed alone so generics close cleanly; the expression
        // parser reassembles '>=' and shifts from adjacent tokens.
        static const std::vector<std::string> multi = {
            "<<=", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
            "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", "..."};
        for (const auto& op : multi) {
            if (src_.compare(pos_, op.size(), op) == 0) {
                for (std::size_t i = 0; i < op.size(); ++i) advance();
                return op;
            }
        }
        std::string one(1, cur());
        advance();
        return one;
    }

    const std::string& src_;
    const std::string& file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ---------------------------------------------------------------------------

AstNode leaf(const Token& t) {
    AstNode n;
    n.text = t.text;
    n.span = t.span;
    return n;
}

AstNode wrap(const std::string& kind, const Token& t) {
    AstNode n;
    n.kind = kind;
    n.span = t.span;
    n.children.push_back(leaf(t));
    return n;
}

Span merge(const Span& a, const Span& b) {
    if (!a.known()) return b;
    if (!b.known()) return a;
    Span s = a;
    if (b.start_line < s.start_line || (b.start_line == s.start_line && b.start_col < s.start_col)) {
        s.start_line = b.start_line;
        s.start_col = b.start_col;
    }
    if (b.end_line > s.end_line || (b.end_line == s.end_line && b.end_col > s.end_col)) {
        s.end_line = b.end_line;
        s.end_col = b.end_col;
    }
    return s;
}

// Drops interior nodes with no leaf descendant (empty blocks, bare breaks).
bool prune(AstNode& node) {
    if (node.terminal()) return !node.text.empty();
    auto& ch = node.children;
    ch.erase(std::remove_if(ch.begin(), ch.end(), [](AstNode& c) { return !prune(c); }), ch.end());
    return !ch.empty();
}

class Parser {
public:
    Parser(std::vector<Token> tokens, const std::string& src, const std::string& file)
        : toks_(std::move(tokens)), src_(src), file_(file) {}

    MethodAst parse_single_method() {
        skip_modifiers_and_annotations();
        MethodAst m = parse_method_declaration(/*class_name=*/"");
        if (!at_end()) fail("trailing input after method declaration");
        return m;
    }

    ParsedFile parse_unit() {
        ParsedFile out;
        out.file = file_;
        if (check_kw("package")) {
            next();
            parse_qualified_text();
            expect_punct(";");
        }
        while (check_kw("import")) {
            next();
            if (check_kw("static")) next();
            parse_qualified_text();
            if (check_punct("*")) next();
            expect_punct(";");
        }
        while (!at_end()) {
            skip_modifiers_and_annotations();
            if (at_end()) break;
            parse_type_declaration(out.methods);
        }
        return out;
    }

private:
    // ---- token plumbing ----
    const Token& cur() const { return toks_[idx_]; }
    const Token& prev() const { return toks_[idx_ - 1]; }
    const Token& peek(std::size_t off = 1) const {
        return toks_[std::min(idx_ + off, toks_.size() - 1)];
    }
    bool at_end() const { return cur().kind == Tok::End; }
    const Token& next() { return toks_[idx_++]; }

    bool check_punct(const std::string& p) const { return cur().kind == Tok::Punct && cur().text == p; }
    bool check_kw(const std::string& k) const { return cur().kind == Tok::Keyword && cur().text == k; }
    bool check_ident() const { return cur().kind == Tok::Ident; }

    bool accept_punct(const std::string& p) {
        if (!check_punct(p)) return false;
        next();
        return true;
    }

    void expect_punct(const std::string& p) {
        if (!accept_punct(p)) fail("expected '" + p + "', got '" + cur().text + "'");
    }

    Token expect_ident() {
        if (!check_ident()) fail("expected identifier, got '" + cur().text + "'");
        return next();
    }

    void expect_kw(const std::string& k) {
        if (!check_kw(k)) fail("expected '" + k + "', got '" + cur().text + "'");
        next();
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(cur().span.start_line, cur().span.start_col, msg);
    }

    std::string parse_qualified_text() {
        std::string out = expect_ident().text;
        while (check_punct(".") && peek().kind == Tok::Ident) {
            next();
            out += "." + next().text;
        }
        return out;
    }

    void skip_annotation() {
        next();  // '@'
        if (check_kw("interface")) return;  // annotation type declaration: let caller handle
        parse_qualified_text();
        if (check_punct("(")) skip_balanced("(", ")");
    }

    void skip_balanced(const std::string& open, const std::string& close) {
        expect_punct(open);
        int depth = 1;
        while (depth > 0) {
            if (at_end()) fail("unbalanced '" + open + "'");
            if (check_punct(open)) ++depth;
            if (check_punct(close)) --depth;
            next();
        }
    }

    void skip_modifiers_and_annotations() {
        while (true) {
            if (cur().kind == Tok::Keyword && is_modifier(cur().text)) {
                next();
            } else if (check_punct("@") && !(peek().kind == Tok::Keyword && peek().text == "interface")) {
                skip_annotation();
            } else {
                break;
            }
        }
    }

    // ---- declarations ----
    void parse_type_declaration(std::vector<MethodAst>& methods) {
        if (check_punct("@")) {  // @interface
            next();
            expect_kw("interface");
            expect_ident();
            skip_balanced("{", "}");
            return;
        }
        if (check_kw("enum")) {
            next();
            std::string name = expect_ident().text;
            skip_implements_extends();
            parse_enum_body(name, methods);
            return;
        }
        bool iface = check_kw("interface");
        if (!check_kw("class") && !iface) fail("expected type declaration, got '" + cur().text + "'");
        next();
        std::string name = expect_ident().text;
        if (check_punct("<")) skip_type_parameters();
        skip_implements_extends();
        parse_class_body(name, methods);
    }

    void skip_implements_extends() {
        while (check_kw("extends") || check_kw("implements")) {
            next();
            parse_type();  // discard
            while (accept_punct(",")) parse_type();
        }
    }

    void skip_type_parameters() {
        expect_punct("<");
        int depth = 1;
        while (depth > 0) {
            if (at_end()) fail("unbalanced type parameters");
            if (check_punct("<")) ++depth;
            if (check_punct(">")) --depth;
            next();
        }
    }

    void parse_enum_body(const std::string& class_name, std::vector<MethodAst>& methods) {
        expect_punct("{");
        // constants
        while (check_ident()) {
            next();
            if (check_punct("(")) skip_balanced("(", ")");
            if (check_punct("{")) parse_class_body_inner(class_name, methods);
            if (!accept_punct(",")) break;
        }
        accept_punct(";");
        parse_members_until_close(class_name, methods);
    }

    void parse_class_body(const std::string& class_name, std::vector<MethodAst>& methods) {
        expect_punct("{");
        parse_members_until_close(class_name, methods);
    }

    void parse_class_body_inner(const std::string& class_name, std::vector<MethodAst>& methods) {
        expect_punct("{");
        parse_members_until_close(class_name, methods);
    }

    void parse_members_until_close(const std::string& class_name, std::vector<MethodAst>& methods) {
        while (!check_punct("}")) {
            if (at_end()) fail("unexpected end of class body");
            if (accept_punct(";")) continue;
            std::size_t decl_start = idx_;
            skip_modifiers_and_annotations();
            if (check_kw("class") || check_kw("interface") || check_kw("enum") || check_punct("@")) {
                parse_type_declaration(methods);
                continue;
            }
            if (check_punct("{")) {  // instance/static initializer
                parse_block();
                continue;
            }
            if (check_punct("<")) skip_type_parameters();
            // constructor?
            if (check_ident() && cur().text == class_name && peek().kind == Tok::Punct && peek().text == "(") {
                methods.push_back(parse_method_like(/*ctor=*/true, decl_start));
                continue;
            }
            // method or field: parse a type, then decide
            std::size_t save = idx_;
            bool method = false;
            try {
                parse_type();
                method = check_ident() && peek().kind == Tok::Punct && peek().text == "(";
            } catch (const ParseError&) {
                idx_ = save;
                fail("unsupported class member starting at '" + cur().text + "'");
            }
            idx_ = save;
            if (method) {
                methods.push_back(parse_method_like(/*ctor=*/false, decl_start));
            } else {
                parse_field();
            }
        }
        next();  // '}'
    }

    void parse_field() {
        parse_type();
        do {
            expect_ident();
            while (accept_punct("[")) expect_punct("]");
            if (accept_punct("=")) {
                if (check_punct("{"))
                    parse_array_initializer();
                else
                    parse_expression();
            }
        } while (accept_punct(","));
        expect_punct(";");
    }

    MethodAst parse_method_like(bool ctor, std::size_t decl_start) {
        calls_.clear();
        MethodAst m = parse_method_declaration_inner(ctor);
        m.calls = std::move(calls_);
        finish_method(m, decl_start);
        return m;
    }

    MethodAst parse_method_declaration(const std::string& /*class_name*/) {
        std::size_t decl_start = idx_;
        calls_.clear();
        if (check_punct("<")) skip_type_parameters();
        MethodAst m = parse_method_declaration_inner(/*ctor=*/false);
        m.calls = std::move(calls_);
        finish_method(m, decl_start);
        return m;
    }

    void finish_method(MethodAst& m, std::size_t decl_start) {
        const Span first = toks_[decl_start].span;
        const Span last = prev().span;
        m.file = file_;
        m.start_line = first.start_line;
        m.source_text = slice_lines(first, last);
        if (!prune(m.root)) throw ParseError(first.start_line, first.start_col, "method has no tokens");
        m.root.span = merge(first, last);
    }

    // Source slice covering full lines from `first` to `last`.
    std::string slice_lines(const Span& first, const Span& last) {
        std::vector<std::size_t> line_starts{0};
        for (std::size_t i = 0; i < src_.size(); ++i)
            if (src_[i] == '\n') line_starts.push_back(i + 1);
        auto line_begin = [&](int line) {
            return line_starts[std::min<std::size_t>(static_cast<std::size_t>(line - 1), line_starts.size() - 1)];
        };
        std::size_t b = line_begin(first.start_line);
        std::size_t e = last.end_line < static_cast<int>(line_starts.size())
                            ? line_starts[static_cast<std::size_t>(last.end_line)]
                            : src_.size();
        std::string out = src_.substr(b, e - b);
        while (!out.empty() && out.back() == '\n') out.pop_back();
        return out;
    }

    MethodAst parse_method_declaration_inner(bool ctor) {
        AstNode root;
        root.kind = ctor ? "ConstructorDeclaration" : "MethodDeclaration";
        if (!ctor) root.children.push_back(parse_type());
        Token name = expect_ident();
        root.children.push_back(wrap("Name", name));
        expect_punct("(");
        if (!check_punct(")")) {
            do {
                root.children.push_back(parse_parameter());
            } while (accept_punct(","));
        }
        expect_punct(")");
        while (accept_punct("[")) expect_punct("]");
        if (check_kw("throws")) {
            next();
            do {
                root.children.push_back(parse_type());
            } while (accept_punct(","));
        }
        MethodAst m;
        m.name = name.text;
        if (check_punct(";")) {
            next();  // abstract/interface method
        } else {
            root.children.push_back(parse_block());
        }
        m.root = std::move(root);
        return m;
    }

    AstNode parse_parameter() {
        AstNode p;
        p.kind = "SingleVariableDeclaration";
        while ((cur().kind == Tok::Keyword && cur().text == "final") || check_punct("@")) {
            if (check_punct("@"))
                skip_annotation();
            else
                next();
        }
        p.children.push_back(parse_type());
        accept_punct("...");
        Token name = expect_ident();
        p.children.push_back(wrap("Name", name));
        while (accept_punct("[")) expect_punct("]");
        p.span = merge(p.children.front().span, name.span);
        return p;
    }

    // ---- types ----
    AstNode parse_type() {
        AstNode t;
        if (cur().kind == Tok::Keyword && is_primitive(cur().text)) {
            t = wrap("PrimitiveType", next());
        } else if (check_ident()) {
            AstNode simple;
            simple.kind = "SimpleType";
            simple.children.push_back(wrap("Name", next()));
            while (check_punct(".") && peek().kind == Tok::Ident) {
                next();
                simple.children.push_back(wrap("Name", next()));
            }
            simple.span = merge(simple.children.front().span, simple.children.back().span);
            if (check_punct("<")) {
                AstNode par;
                par.kind = "ParameterizedType";
                par.children.push_back(std::move(simple));
                next();  // '<'
                if (!check_punct(">")) {
                    do {
                        par.children.push_back(parse_type_argument());
                    } while (accept_punct(","));
                }
                expect_punct(">");
                par.span = merge(par.children.front().span, prev().span);
                t = std::move(par);
            } else {
                t = std::move(simple);
            }
        } else {
            fail("expected type, got '" + cur().text + "'");
        }
        while (check_punct("[") && peek().kind == Tok::Punct && peek().text == "]") {
            next();
            next();
            AstNode arr;
            arr.kind = "ArrayType";
            arr.span = merge(t.span, prev().span);
            arr.children.push_back(std::move(t));
            t = std::move(arr);
        }
        return t;
    }

    AstNode parse_type_argument() {
        if (check_punct("?")) {
            AstNode w;
            w.kind = "WildcardType";
            Span s = next().span;
            if (check_kw("extends") || check_kw("super")) {
                next();
                w.children.push_back(parse_type());
                s = merge(s, w.children.back().span);
            }
            w.span = s;
            return w;  // bare '?' has no children and is pruned later
        }
        return parse_type();
    }

    // ---- statements ----
    AstNode parse_block() {
        AstNode b;
        b.kind = "Block";
        Span s = cur().span;
        expect_punct("{");
        while (!check_punct("}")) {
            if (at_end()) fail("unterminated block");
            b.children.push_back(parse_statement());
        }
        b.span = merge(s, next().span);
        return b;
    }

    AstNode parse_statement() {
        if (check_punct("{")) return parse_block();
        if (check_punct(";")) {
            AstNode e;
            e.kind = "EmptyStatement";
            e.span = next().span;
            return e;
        }
        if (check_kw("if")) return parse_if();
        if (check_kw("while")) return parse_while();
        if (check_kw("do")) return parse_do();
        if (check_kw("for")) return parse_for();
        if (check_kw("return")) {
            AstNode r;
            r.kind = "ReturnStatement";
            Span s = next().span;
            if (!check_punct(";")) r.children.push_back(parse_expression());
            r.span = merge(s, cur().span);
            expect_punct(";");
            return r;
        }
        if (check_kw("throw")) {
            AstNode t;
            t.kind = "ThrowStatement";
            Span s = next().span;
            t.children.push_back(parse_expression());
            t.span = merge(s, cur().span);
            expect_punct(";");
            return t;
        }
        if (check_kw("try")) return parse_try();
        if (check_kw("switch")) return parse_switch();
        if (check_kw("break") || check_kw("continue")) {
            AstNode b;
            b.kind = cur().text == "break" ? "BreakStatement" : "ContinueStatement";
            Span s = next().span;
            if (check_ident()) b.children.push_back(wrap("Name", next()));
            b.span = merge(s, cur().span);
            expect_punct(";");
            return b;
        }
        if (check_kw("synchronized")) {
            AstNode sy;
            sy.kind = "SynchronizedStatement";
            Span s = next().span;
            expect_punct("(");
            sy.children.push_back(parse_expression());
            expect_punct(")");
            sy.children.push_back(parse_block());
            sy.span = merge(s, prev().span);
            return sy;
        }
        if (check_kw("assert")) {
            AstNode a;
            a.kind = "AssertStatement";
            Span s = next().span;
            a.children.push_back(parse_expression());
            if (accept_punct(":")) a.children.push_back(parse_expression());
            a.span = merge(s, cur().span);
            expect_punct(";");
            return a;
        }
        // labeled statement
        if (check_ident() && peek().kind == Tok::Punct && peek().text == ":" &&
            !(peek(2).kind == Tok::Punct && peek(2).text == ":")) {
            AstNode l;
            l.kind = "LabeledStatement";
            l.children.push_back(wrap("Name", next()));
            next();  // ':'
            l.children.push_back(parse_statement());
            l.span = merge(l.children.front().span, l.children.back().span);
            return l;
        }
        // local class
        if (check_kw("class")) {
            std::vector<MethodAst> nested;
            parse_type_declaration(nested);
            AstNode d;
            d.kind = "TypeDeclarationStatement";
            d.span = prev().span;
            return d;
        }
        // local variable declaration vs expression statement
        if (auto decl = try_parse_local_declaration()) return std::move(*decl);
        AstNode st;
        st.kind = "ExpressionStatement";
        st.children.push_back(parse_expression());
        st.span = merge(st.children.front().span, cur().span);
        expect_punct(";");
        return st;
    }

    std::optional<AstNode> try_parse_local_declaration() {
        bool has_final = check_kw("final");
        if (!has_final && !check_ident() && !(cur().kind == Tok::Keyword && is_primitive(cur().text)))
            return std::nullopt;
        std::size_t save = idx_;
        auto saved_calls = calls_.size();
        try {
            AstNode st;
            st.kind = "VariableDeclarationStatement";
            if (has_final) next();
            AstNode type = parse_type();
            if (!check_ident()) throw ParseError(0, 0, "");
            Span s = type.span;
            st.children.push_back(std::move(type));
            do {
                AstNode frag;
                frag.kind = "VariableDeclarationFragment";
                Token name = expect_ident();
                frag.children.push_back(wrap("Name", name));
                while (accept_punct("[")) expect_punct("]");
                if (accept_punct("=")) {
                    if (check_punct("{"))
                        frag.children.push_back(parse_array_initializer());
                    else
                        frag.children.push_back(parse_expression());
                }
                frag.span = merge(name.span, prev().span);
                st.children.push_back(std::move(frag));
            } while (accept_punct(","));
            expect_punct(";");
            st.span = merge(s, prev().span);
            return st;
        } catch (const ParseError&) {
            idx_ = save;
            calls_.resize(saved_calls);
            return std::nullopt;
        }
    }

    AstNode parse_if() {
        AstNode n;
        n.kind = "IfStatement";
        Span s = next().span;
        expect_punct("(");
        n.children.push_back(parse_expression());
        expect_punct(")");
        n.children.push_back(parse_statement());
        if (check_kw("else")) {
            next();
            n.children.push_back(parse_statement());
        }
        n.span = merge(s, prev().span);
        return n;
    }

    AstNode parse_while() {
        AstNode n;
        n.kind = "WhileStatement";
        Span s = next().span;
        expect_punct("(");
        n.children.push_back(parse_expression());
        expect_punct(")");
        n.children.push_back(parse_statement());
        n.span = merge(s, prev().span);
        return n;
    }

    AstNode parse_do() {
        AstNode n;
        n.kind = "DoStatement";
        Span s = next().span;
        n.children.push_back(parse_statement());
        expect_kw("while");
        expect_punct("(");
        n.children.push_back(parse_expression());
        expect_punct(")");
        expect_punct(";");
        n.span = merge(s, prev().span);
        return n;
    }

    AstNode parse_for() {
        Span s = next().span;
        expect_punct("(");
        // enhanced for: [final] type ident ':' expr
        {
            std::size_t save = idx_;
            auto saved_calls = calls_.size();
            try {
                AstNode n;
                n.kind = "EnhancedForStatement";
                if (check_kw("final")) next();
                AstNode param;
                param.kind = "SingleVariableDeclaration";
                param.children.push_back(parse_type());
                Token name = expect_ident();
                param.children.push_back(wrap("Name", name));
                param.span = merge(param.children.front().span, name.span);
                expect_punct(":");
                n.children.push_back(std::move(param));
                n.children.push_back(parse_expression());
                expect_punct(")");
                n.children.push_back(parse_statement());
                n.span = merge(s, prev().span);
                return n;
            } catch (const ParseError&) {
                idx_ = save;
                calls_.resize(saved_calls);
            }
        }
        AstNode n;
        n.kind = "ForStatement";
        if (!check_punct(";")) {
            if (auto decl = try_parse_for_init_declaration()) {
                n.children.push_back(std::move(*decl));
            } else {
                n.children.push_back(parse_expression());
                while (accept_punct(",")) n.children.push_back(parse_expression());
                expect_punct(";");
            }
        } else {
            next();
        }
        if (!check_punct(";")) n.children.push_back(parse_expression());
        expect_punct(";");
        if (!check_punct(")")) {
            n.children.push_back(parse_expression());
            while (accept_punct(",")) n.children.push_back(parse_expression());
        }
        expect_punct(")");
        n.children.push_back(parse_statement());
        n.span = merge(s, prev().span);
        return n;
    }

    std::optional<AstNode> try_parse_for_init_declaration() {
        std::size_t save = idx_;
        auto saved_calls = calls_.size();
        try {
            AstNode st;
            st.kind = "VariableDeclarationExpression";
            if (check_kw("final")) next();
            AstNode type = parse_type();
            if (!check_ident()) throw ParseError(0, 0, "");
            st.children.push_back(std::move(type));
            do {
                AstNode frag;
                frag.kind = "VariableDeclarationFragment";
                Token name = expect_ident();
                frag.children.push_back(wrap("Name", name));
                if (accept_punct("=")) {
                    if (check_punct("{"))
                        frag.children.push_back(parse_array_initializer());
                    else
                        frag.children.push_back(parse_expression());
                }
                frag.span = merge(name.span, prev().span);
                st.children.push_back(std::move(frag));
            } while (accept_punct(","));
            expect_punct(";");
            st.span = merge(st.children.front().span, prev().span);
            return st;
        } catch (const ParseError&) {
            idx_ = save;
            calls_.resize(saved_calls);
            return std::nullopt;
        }
    }

    AstNode parse_try() {
        AstNode n;
        n.kind = "TryStatement";
        Span s = next().span;
        if (check_punct("(")) {
            next();
            do {
                AstNode res;
                res.kind = "VariableDeclarationExpression";
                if (check_kw("final")) next();
                res.children.push_back(parse_type());
                res.children.push_back(wrap("Name", expect_ident()));
                expect_punct("=");
                res.children.push_back(parse_expression());
                res.span = merge(res.children.front().span, prev().span);
                n.children.push_back(std::move(res));
            } while (accept_punct(";") && !check_punct(")"));
            expect_punct(")");
        }
        n.children.push_back(parse_block());
        while (check_kw("catch")) {
            AstNode c;
            c.kind = "CatchClause";
            Span cs = next().span;
            expect_punct("(");
            AstNode param;
            param.kind = "SingleVariableDeclaration";
            if (check_kw("final")) next();
            param.children.push_back(parse_type());
            while (accept_punct("|")) param.children.push_back(parse_type());
            param.children.push_back(wrap("Name", expect_ident()));
            param.span = merge(param.children.front().span, prev().span);
            expect_punct(")");
            c.children.push_back(std::move(param));
            c.children.push_back(parse_block());
            c.span = merge(cs, prev().span);
            n.children.push_back(std::move(c));
        }
        if (check_kw("finally")) {
            next();
            n.children.push_back(parse_block());
        }
        n.span = merge(s, prev().span);
        return n;
    }

    AstNode parse_switch() {
        AstNode n;
        n.kind = "SwitchStatement";
        Span s = next().span;
        expect_punct("(");
        n.children.push_back(parse_expression());
        expect_punct(")");
        expect_punct("{");
        while (!check_punct("}")) {
            if (at_end()) fail("unterminated switch");
            AstNode c;
            c.kind = "SwitchCase";
            if (check_kw("case")) {
                Span cs = next().span;
                c.children.push_back(parse_expression());
                c.span = merge(cs, cur().span);
            } else if (check_kw("default")) {
                c.span = next().span;
            } else {
                fail("expected case/default in switch");
            }
            expect_punct(":");
            n.children.push_back(std::move(c));
            while (!check_kw("case") && !check_kw("default") && !check_punct("}"))
                n.children.push_back(parse_statement());
        }
        n.span = merge(s, next().span);
        return n;
    }

    AstNode parse_array_initializer() {
        AstNode n;
        n.kind = "ArrayInitializer";
        Span s = cur().span;
        expect_punct("{");
        while (!check_punct("}")) {
            if (check_punct("{"))
                n.children.push_back(parse_array_initializer());
            else
                n.children.push_back(parse_expression());
            if (!accept_punct(",")) break;
        }
        n.span = merge(s, cur().span);
        expect_punct("}");
        return n;
    }

    // ---- expressions ----
    AstNode parse_expression() { return parse_assignment(); }

    bool at_assign_op() const {
        if (cur().kind != Tok::Punct) return false;
        static const std::unordered_set<std::string> ops = {"=",  "+=", "-=", "*=", "/=", "%=",
                                                            "&=", "|=", "^=", "<<=", ">>=", ">>>="};
        return ops.contains(cur().text);
    }

    AstNode parse_assignment() {
        AstNode lhs = parse_conditional();
        if (at_assign_op()) {
            next();
            AstNode n;
            n.kind = "Assignment";
            AstNode rhs = parse_assignment();
            n.span = merge(lhs.span, rhs.span);
            n.children.push_back(std::move(lhs));
            n.children.push_back(std::move(rhs));
            return n;
        }
        return lhs;
    }

    AstNode parse_conditional() {
        AstNode cond = parse_binary(0);
        if (check_punct("?")) {
            next();
            AstNode n;
            n.kind = "ConditionalExpression";
            AstNode then = parse_expression();
            expect_punct(":");
            AstNode els = parse_conditional();
            n.span = merge(cond.span, els.span);
            n.children.push_back(std::move(cond));
            n.children.push_back(std::move(then));
            n.children.push_back(std::move(els));
            return n;
        }
        return cond;
    }

    // Binary operator tiers, loosest first. '>=' and shifts are reassembled
    // from adjacent '>' tokens so generics lex cleanly.
    int binary_level() const {
        if (cur().kind == Tok::Keyword && cur().text == "instanceof") return 5;
        if (cur().kind != Tok::Punct) return -1;
        const std::string& t = cur().text;
        if (t == "||") return 0;
        if (t == "&&") return 1;
        if (t == "|") return 2;
        if (t == "^") return 3;
        if (t == "&") return 4;
        if (t == "==" || t == "!=") return 5;
        if (t == "<" || t == "<=") return 6;
        if (t == ">") {
            if (adjacent_punct(">")) return 7;  // '>' '>' shift
            return 6;                           // '>' or '> =' relational
        }
        if (t == "<<") return 7;
        if (t == "+" || t == "-") return 8;
        if (t == "*" || t == "/" || t == "%") return 9;
        return -1;
    }

    // Is the token after cur() the given punct, with no gap between them?
    bool adjacent_punct(const std::string& text) const {
        const Token& a = cur();
        const Token& b = peek(1);
        return b.kind == Tok::Punct && b.text == text && a.span.end_line == b.span.start_line &&
               a.span.end_col + 1 == b.span.start_col;
    }

    AstNode parse_binary(int level) {
        if (level > 9) return parse_unary();
        AstNode lhs = parse_binary(level + 1);
        while (true) {
            int l = binary_level();
            if (l != level) break;
            bool is_instanceof = cur().kind == Tok::Keyword;
            if (check_punct(">") && l == 7) {
                next();
                next();  // '>' '>'
                if (check_punct(">") && prev().span.end_col + 1 == cur().span.start_col &&
                    prev().span.end_line == cur().span.start_line)
                    next();  // '>>>'
            } else if (check_punct(">") && adjacent_punct("=")) {
                next();
                next();  // '>' '='
            } else {
                next();
            }
            AstNode n;
            n.kind = is_instanceof ? "InstanceofExpression" : "InfixExpression";
            AstNode rhs = is_instanceof ? parse_type() : parse_binary(level + 1);
            n.span = merge(lhs.span, rhs.span);
            n.children.push_back(std::move(lhs));
            n.children.push_back(std::move(rhs));
            lhs = std::move(n);
        }
        return lhs;
    }

    AstNode parse_unary() {
        if (check_punct("+") || check_punct("-") || check_punct("!") || check_punct("~") ||
            check_punct("++") || check_punct("--")) {
            Span s = next().span;
            AstNode n;
            n.kind = "PrefixExpression";
            n.children.push_back(parse_unary());
            n.span = merge(s, n.children.back().span);
            return n;
        }
        // cast: '(' type ')' unary
        if (check_punct("(")) {
            std::size_t save = idx_;
            auto saved_calls = calls_.size();
            try {
                Span s = next().span;
                AstNode type = parse_type();
                expect_punct(")");
                if (check_ident() || cur().kind == Tok::Number || cur().kind == Tok::String ||
                    cur().kind == Tok::Char || check_punct("(") || check_punct("!") || check_punct("~") ||
                    check_kw("new") || check_kw("this") || check_kw("true") || check_kw("false") ||
                    check_kw("null")) {
                    AstNode n;
                    n.kind = "CastExpression";
                    n.children.push_back(std::move(type));
                    n.children.push_back(parse_unary());
                    n.span = merge(s, n.children.back().span);
                    return n;
                }
                throw ParseError(0, 0, "");
            } catch (const ParseError&) {
                idx_ = save;
                calls_.resize(saved_calls);
            }
        }
        return parse_postfix();
    }

    AstNode parse_postfix() {
        AstNode e = parse_primary();
        while (true) {
            if (check_punct(".")) {
                if (peek().kind == Tok::Ident) {
                    next();
                    Token name = next();
                    if (check_punct("(")) {
                        e = finish_invocation(std::move(e), name);
                    } else {
                        // extend a pure name chain, otherwise a field access
                        if (e.kind == "Name" || e.kind == "QualifiedName") {
                            AstNode q;
                            q.kind = "QualifiedName";
                            if (e.kind == "QualifiedName") {
                                q.children = std::move(e.children);
                            } else {
                                q.children.push_back(std::move(e));
                            }
                            q.children.push_back(wrap("Name", name));
                            q.span = merge(q.children.front().span, name.span);
                            e = std::move(q);
                        } else {
                            AstNode f;
                            f.kind = "FieldAccess";
                            f.span = merge(e.span, name.span);
                            f.children.push_back(std::move(e));
                            f.children.push_back(wrap("Name", name));
                            e = std::move(f);
                        }
                    }
                } else if (peek().kind == Tok::Keyword &&
                           (peek().text == "this" || peek().text == "class")) {
                    next();
                    Token kw = next();
                    AstNode f;
                    f.kind = kw.text == "this" ? "ThisExpression" : "TypeLiteral";
                    f.span = merge(e.span, kw.span);
                    f.children.push_back(std::move(e));
                    e = std::move(f);
                } else if (peek().kind == Tok::Keyword && peek().text == "new") {
                    // qualified class instance creation outer.new Inner(...)
                    next();  // '.'
                    next();  // 'new'
                    e = parse_creator(std::move(e));
                } else {
                    fail("unexpected token after '.'");
                }
            } else if (check_punct("[")) {
                next();
                AstNode a;
                a.kind = "ArrayAccess";
                AstNode idx = parse_expression();
                a.span = merge(e.span, cur().span);
                expect_punct("]");
                a.children.push_back(std::move(e));
                a.children.push_back(std::move(idx));
                e = std::move(a);
            } else if (check_punct("++") || check_punct("--")) {
                Span s = next().span;
                AstNode p;
                p.kind = "PostfixExpression";
                p.span = merge(e.span, s);
                p.children.push_back(std::move(e));
                e = std::move(p);
            } else if (check_punct("::")) {
                next();
                Token name = cur().kind == Tok::Keyword && cur().text == "new" ? next() : expect_ident();
                AstNode r;
                r.kind = "ExpressionMethodReference";
                r.span = merge(e.span, name.span);
                r.children.push_back(std::move(e));
                if (name.text != "new") r.children.push_back(wrap("Name", name));
                e = std::move(r);
            } else {
                break;
            }
        }
        return e;
    }

    std::string name_chain_text(const AstNode& e) {
        if (e.kind == "Name" && e.children.size() == 1) return e.children[0].text;
        if (e.kind == "QualifiedName") {
            std::string out;
            for (const auto& c : e.children) {
                if (!out.empty()) out += ".";
                out += c.children.empty() ? c.text : c.children[0].text;
            }
            return out;
        }
        return "";
    }

    AstNode finish_invocation(AstNode receiver, const Token& name) {
        AstNode call;
        call.kind = "MethodInvocation";
        std::string recv_text = name_chain_text(receiver);
        bool have_receiver = !receiver.kind.empty() || !receiver.children.empty() || !receiver.text.empty();
        Span start = have_receiver ? receiver.span : name.span;
        if (have_receiver) call.children.push_back(std::move(receiver));
        call.children.push_back(wrap("Name", name));
        int arity = parse_arguments(call);
        call.span = merge(start, prev().span);
        calls_.push_back({name.text, arity, recv_text, name.span});
        return call;
    }

    int parse_arguments(AstNode& into) {
        expect_punct("(");
        int arity = 0;
        if (!check_punct(")")) {
            do {
                into.children.push_back(parse_expression());
                ++arity;
            } while (accept_punct(","));
        }
        expect_punct(")");
        return arity;
    }

    bool lambda_ahead() const {
        if (check_ident() && peek().kind == Tok::Punct && peek().text == "->") return true;
        if (!check_punct("(")) return false;
        std::size_t i = idx_ + 1;
        int depth = 1;
        while (i < toks_.size() && depth > 0) {
            const Token& t = toks_[i];
            if (t.kind == Tok::Punct && t.text == "(") ++depth;
            if (t.kind == Tok::Punct && t.text == ")") --depth;
            ++i;
        }
        return i < toks_.size() && toks_[i].kind == Tok::Punct && toks_[i].text == "->";
    }

    AstNode parse_lambda() {
        AstNode n;
        n.kind = "LambdaExpression";
        Span s = cur().span;
        if (check_ident()) {
            n.children.push_back(wrap("Name", next()));
        } else {
            expect_punct("(");
            if (!check_punct(")")) {
                do {
                    // typed or untyped parameter
                    std::size_t save = idx_;
                    try {
                        AstNode p;
                        p.kind = "SingleVariableDeclaration";
                        AstNode type = parse_type();
                        Token name = expect_ident();
                        p.children.push_back(std::move(type));
                        p.children.push_back(wrap("Name", name));
                        p.span = merge(p.children.front().span, name.span);
                        n.children.push_back(std::move(p));
                    } catch (const ParseError&) {
                        idx_ = save;
                        n.children.push_back(wrap("Name", expect_ident()));
                    }
                } while (accept_punct(","));
            }
            expect_punct(")");
        }
        expect_punct("->");
        if (check_punct("{"))
            n.children.push_back(parse_block());
        else
            n.children.push_back(parse_expression());
        n.span = merge(s, prev().span);
        return n;
    }

    AstNode parse_creator(AstNode qualifier) {
        // caller has consumed 'new'
        AstNode type = parse_type();
        if (check_punct("[")) {
            AstNode a;
            a.kind = "ArrayCreation";
            a.children.push_back(std::move(type));
            while (accept_punct("[")) {
                if (!check_punct("]")) a.children.push_back(parse_expression());
                expect_punct("]");
            }
            if (check_punct("{")) a.children.push_back(parse_array_initializer());
            a.span = merge(a.children.front().span, prev().span);
            return a;
        }
        AstNode c;
        c.kind = "ClassInstanceCreation";
        if (!qualifier.kind.empty() || !qualifier.children.empty()) c.children.push_back(std::move(qualifier));
        Span s = type.span;
        c.children.push_back(std::move(type));
        parse_arguments(c);
        if (check_punct("{")) {
            AstNode anon;
            anon.kind = "AnonymousClassDeclaration";
            Span as = cur().span;
            std::vector<MethodAst> members;
            parse_class_body_inner("", members);
            for (auto& m : members) anon.children.push_back(std::move(m.root));
            anon.span = merge(as, prev().span);
            c.children.push_back(std::move(anon));
        }
        c.span = merge(s, prev().span);
        return c;
    }

    AstNode parse_primary() {
        if (lambda_ahead()) return parse_lambda();
        const Token& t = cur();
        switch (t.kind) {
            case Tok::Number:
                return wrap("NumberLiteral", next());
            case Tok::String:
                return wrap("StringLiteral", next());
            case Tok::Char:
                return wrap("CharacterLiteral", next());
            case Tok::Ident: {
                Token name = next();
                if (check_punct("(")) return finish_invocation(AstNode{}, name);
                return wrap("Name", name);
            }
            case Tok::Keyword: {
                if (t.text == "true" || t.text == "false") return wrap("BooleanLiteral", next());
                if (t.text == "null") return wrap("NullLiteral", next());
                if (t.text == "new") {
                    next();
                    return parse_creator(AstNode{});
                }
                if (t.text == "this") {
                    Token kw = next();
                    if (check_punct("(")) {  // this(...) constructor call
                        AstNode c;
                        c.kind = "ConstructorInvocation";
                        parse_arguments(c);
                        c.span = merge(kw.span, prev().span);
                        return c;
                    }
                    AstNode n;
                    n.kind = "ThisExpression";
                    n.span = kw.span;
                    return n;
                }
                if (t.text == "super") {
                    Token kw = next();
                    if (check_punct("(")) {
                        AstNode c;
                        c.kind = "SuperConstructorInvocation";
                        parse_arguments(c);
                        c.span = merge(kw.span, prev().span);
                        return c;
                    }
                    AstNode n;
                    n.kind = "SuperExpression";
                    n.span = kw.span;
                    return n;
                }
                if (is_primitive(t.text) &&
                    (peek().kind == Tok::Punct && (peek().text == "." || peek().text == "["))) {
                    // primitive type literal position: int.class, int[].class
                    return wrap("PrimitiveType", next());
                }
                fail("unexpected keyword '" + t.text + "' in expression");
            }
            case Tok::Punct: {
                if (t.text == "(") {
                    Span s = next().span;
                    AstNode inner = parse_expression();
                    AstNode n;
                    n.kind = "ParenthesizedExpression";
                    n.span = merge(s, cur().span);
                    expect_punct(")");
                    n.children.push_back(std::move(inner));
                    return n;
                }
                fail("unexpected token '" + t.text + "'");
            }
            default:
                fail("unexpected end of input");
        }
    }

    std::vector<Token> toks_;
    std::size_t idx_ = 0;
    const std::string& src_;
    std::string file_;
    std::vector<CallSite> calls_;
};

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

MethodAst parse_java_method(const std::string& source_text, const std::string& file) {
    if (blank(source_text)) throw EmptyInput();
    Lexer lexer(source_text, file);
    Parser parser(lexer.run(), source_text, file);
    return parser.parse_single_method();
}

ParsedFile parse_java_file(const std::string& source_text, const std::string& file) {
    if (blank(source_text)) throw EmptyInput();
    Lexer lexer(source_text, file);
    Parser parser(lexer.run(), source_text, file);
    return parser.parse_unit();
}

namespace {
void collect_terminals_rec(const AstNode& node, std::vector<const AstNode*>& out) {
    if (node.terminal()) {
        out.push_back(&node);
        return;
    }
    for (const auto& c : node.children) collect_terminals_rec(c, out);
}
}  // namespace

std::vector<const AstNode*> collect_terminals(const AstNode& root) {
    std::vector<const AstNode*> out;
    collect_terminals_rec(root, out);
    return out;
}

}  // namespace privloc
