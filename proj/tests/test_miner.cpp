#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "privloc/ast.hpp"
#include "privloc/paths.hpp"
#include "privloc/rng.hpp"

using namespace privloc;

namespace {

// Independent oracle: per terminal, the node sequence from the root; paths
// recomputed from scratch for every pair.
void oracle_terminals(const AstNode& n, std::vector<const AstNode*> trail,
                      std::vector<std::pair<const AstNode*, std::vector<const AstNode*>>>& out) {
    if (n.terminal()) {
        out.emplace_back(&n, trail);
        return;
    }
    trail.push_back(&n);
    for (const auto& c : n.children) oracle_terminals(c, trail, out);
}

std::multiset<std::string> oracle_paths(const MethodAst& m, int max_nts) {
    std::vector<std::pair<const AstNode*, std::vector<const AstNode*>>> terms;
    oracle_terminals(m.root, {}, terms);
    std::multiset<std::string> out;
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (std::size_t j = 0; j < terms.size(); ++j) {
            if (i >= j) continue;
            const auto& ta = terms[i].second;
            const auto& tb = terms[j].second;
            std::size_t lca = 0;
            while (lca < ta.size() && lca < tb.size() && ta[lca] == tb[lca]) ++lca;
            std::vector<std::string> walk;
            for (std::size_t k = ta.size(); k > lca; --k) walk.push_back(ta[k - 1]->kind);
            walk.push_back(ta[lca - 1]->kind);
            for (std::size_t k = lca; k < tb.size(); ++k) walk.push_back(tb[k]->kind);
            if (walk.size() > static_cast<std::size_t>(max_nts)) continue;
            std::string repr = terms[i].first->text + "#";
            for (const auto& w : walk) repr += w + "/";
            repr += "#" + terms[j].first->text;
            out.insert(repr);
        }
    return out;
}

std::multiset<std::string> mined_paths_repr(const MethodAst& m, int max_nts) {
    std::multiset<std::string> out;
    for (const auto& p : extract_ast_paths(m, max_nts)) {
        std::string repr = p.start_terminal + "#";
        for (const auto& w : p.nonterminals) repr += w + "/";
        repr += "#" + p.end_terminal;
        out.insert(repr);
    }
    return out;
}

// Random tree with <= max_nodes nodes respecting the AST invariants. Wrapped
// in a MethodAst shell so it can feed the miner directly.
MethodAst random_ast(Rng& rng, int max_nodes) {
    static const std::vector<std::string> kinds = {"Block", "IfStatement", "MethodInvocation",
                                                   "Name", "Assignment", "InfixExpression"};
    static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "eps", "zeta"};
    int budget = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(max_nodes - 1)));
    int made = 0;
    // grow a random interior skeleton, then hang terminals so no interior is childless
    std::function<AstNode(int)> grow = [&](int depth) {
        AstNode n;
        ++made;
        bool leaf = depth > 5 || made >= budget || (depth > 0 && rng.index(3) == 0);
        if (leaf) {
            n.text = words[rng.index(words.size())];
            n.span = {made, 1, made, 5};
            return n;
        }
        n.kind = kinds[rng.index(kinds.size())];
        std::size_t fanout = 1 + rng.index(3);
        for (std::size_t i = 0; i < fanout && made < budget; ++i) n.children.push_back(grow(depth + 1));
        if (n.children.empty()) {
            AstNode t;
            ++made;
            t.text = words[rng.index(words.size())];
            t.span = {made, 1, made, 5};
            n.children.push_back(std::move(t));
        }
        return n;
    };
    MethodAst m;
    m.root = grow(0);
    if (m.root.terminal()) {  // ensure a proper root
        AstNode root;
        root.kind = "MethodDeclaration";
        root.children.push_back(std::move(m.root));
        m.root = std::move(root);
    }
    m.root.kind = "MethodDeclaration";
    m.name = "f";
    return m;
}

int count_nodes(const AstNode& n) {
    int c = 1;
    for (const auto& ch : n.children) c += count_nodes(ch);
    return c;
}

std::vector<std::string> leaf_texts(const MethodAst& m) {
    std::vector<std::string> out;
    for (const auto* t : collect_terminals(m.root)) out.push_back(t->text);
    return out;
}

std::map<std::string, int> kind_counts(const AstNode& n) {
    std::map<std::string, int> out;
    std::function<void(const AstNode&)> walk = [&](const AstNode& x) {
        if (!x.kind.empty()) out[x.kind]++;
        for (const auto& c : x.children) walk(c);
    };
    walk(n);
    return out;
}

}  // namespace

TEST_CASE("minimal method parses with signature tokens only") {
    MethodAst m = parse_java_method("void f(){}");
    CHECK(m.name == "f");
    CHECK(m.root.kind == "MethodDeclaration");
    auto leaves = leaf_texts(m);
    REQUIRE(leaves.size() == 2);  // 'void' and 'f'
    CHECK(leaves[0] == "void");
    CHECK(leaves[1] == "f");
}

TEST_CASE("blank input raises EmptyInput") {
    CHECK_THROWS_AS(parse_java_method("  \n\t "), EmptyInput);
    CHECK_THROWS_AS(parse_java_method(""), EmptyInput);
}

TEST_CASE("invalid syntax raises ParseError with position") {
    try {
        parse_java_method("void f() { int = 5; }");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.col > 1);
    }
}

TEST_CASE("location snippet contains the getLastKnownLocation terminal") {
    const std::string src =
        "Location getLocation() {\n"
        "    LocationManager lm = (LocationManager) getSystemService(LOCATION_SERVICE);\n"
        "    return lm.getLastKnownLocation(LocationManager.GPS_PROVIDER);\n"
        "}";
    MethodAst m = parse_java_method(src);
    auto leaves = leaf_texts(m);
    CHECK(std::count(leaves.begin(), leaves.end(), "getLastKnownLocation") == 1);
    // span of that terminal points at line 3
    for (const auto* t : collect_terminals(m.root))
        if (t->text == "getLastKnownLocation") CHECK(t->span.start_line == 3);
    // and some mined path touches it
    auto paths = extract_ast_paths(m);
    bool found = false;
    for (const auto& p : paths)
        if (p.start_terminal == "getLastKnownLocation" || p.end_terminal == "getLastKnownLocation")
            found = true;
    CHECK(found);
    // a receiver-to-method-name walk reads Name / MethodInvocation / Name
    bool shape = false;
    for (const auto& p : paths)
        if (p.nonterminals == std::vector<std::string>{"Name", "MethodInvocation", "Name"}) shape = true;
    CHECK(shape);
}

TEST_CASE("two terminals over a three-node spine give one path of length 3") {
    MethodAst m;
    m.name = "f";
    AstNode left, right;
    left.kind = "Name";
    AstNode lt;
    lt.text = "a";
    lt.span = {1, 1, 1, 1};
    left.children.push_back(lt);
    right.kind = "Name";
    AstNode rt;
    rt.text = "b";
    rt.span = {1, 3, 1, 3};
    right.children.push_back(rt);
    m.root.kind = "MethodDeclaration";
    m.root.children.push_back(std::move(left));
    m.root.children.push_back(std::move(right));
    auto paths = extract_ast_paths(m);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].start_terminal == "a");
    CHECK(paths[0].end_terminal == "b");
    CHECK(paths[0].nonterminals == std::vector<std::string>{"Name", "MethodDeclaration", "Name"});
}

TEST_CASE("paths equal brute-force enumeration on random small trees") {
    Rng rng(99);
    for (int it = 0; it < 200; ++it) {
        MethodAst m = random_ast(rng, 30);
        REQUIRE(count_nodes(m.root) <= 31);
        CHECK(mined_paths_repr(m, 8) == oracle_paths(m, 8));
    }
}

TEST_CASE("no mined path exceeds the non-terminal bound and all ends are terminals") {
    const std::string src =
        "int work(int a, int b) {\n"
        "    int total = a + b;\n"
        "    if (total > 10) { total = total - helper(a); }\n"
        "    while (total > 0) { total--; }\n"
        "    return total;\n"
        "}";
    MethodAst m = parse_java_method(src);
    std::set<std::string> terminal_texts;
    for (const auto* t : collect_terminals(m.root)) terminal_texts.insert(t->text);
    for (const auto& p : extract_ast_paths(m)) {
        CHECK(p.nonterminals.size() >= 1);
        CHECK(p.nonterminals.size() <= 8);
        CHECK(terminal_texts.count(p.start_terminal) == 1);
        CHECK(terminal_texts.count(p.end_terminal) == 1);
    }
}

TEST_CASE("re-parsing the same text yields an identical path multiset") {
    const std::string src =
        "void sync(Context ctx) {\n"
        "    Bundle extras = new Bundle();\n"
        "    extras.putString(\"mode\", \"fast\");\n"
        "    manager.requestSync(account, authority, extras);\n"
        "}";
    auto a = mined_paths_repr(parse_java_method(src), 8);
    auto b = mined_paths_repr(parse_java_method(src), 8);
    CHECK(a == b);
}

TEST_CASE("hand-checked leaves and kinds on twenty methods") {
    struct Fixture {
        const char* src;
        std::vector<std::string> leaves;
        std::map<std::string, int> kinds;  // checked as a subset
    };
    // Leaf sequences are the full expected token stream (source order); kind
    // expectations pin the interesting structure.
    const std::vector<Fixture> fixtures = {
        {"void a(){}", {"void", "a"}, {{"MethodDeclaration", 1}}},
        {"int b(){ return 1; }", {"int", "b", "1"}, {{"ReturnStatement", 1}, {"NumberLiteral", 1}}},
        {"int c(int x){ return x; }",
         {"int", "c", "int", "x", "x"},
         {{"SingleVariableDeclaration", 1}}},
        {"void d(){ foo(); }", {"void", "d", "foo"}, {{"MethodInvocation", 1}}},
        {"void e(){ a.b(); }", {"void", "e", "a", "b"}, {{"MethodInvocation", 1}, {"Name", 3}}},
        {"void f(){ int x = 5; }",
         {"void", "f", "int", "x", "5"},
         {{"VariableDeclarationStatement", 1}, {"VariableDeclarationFragment", 1}}},
        {"void g(){ x = y + z; }",
         {"void", "g", "x", "y", "z"},
         {{"Assignment", 1}, {"InfixExpression", 1}}},
        {"void h(){ if (x) { y(); } }",
         {"void", "h", "x", "y"},
         {{"IfStatement", 1}, {"Block", 2}}},
        {"void i(){ if (x) y(); else z(); }",
         {"void", "i", "x", "y", "z"},
         {{"IfStatement", 1}, {"MethodInvocation", 2}}},
        {"void j(){ while (ok) { step(); } }",
         {"void", "j", "ok", "step"},
         {{"WhileStatement", 1}}},
        {"void k(){ for (int i = 0; i < n; i++) use(i); }",
         {"void", "k", "int", "i", "0", "i", "n", "i", "use", "i"},
         {{"ForStatement", 1}, {"PostfixExpression", 1}}},
        {"void l(){ for (String s : names) print(s); }",
         {"void", "l", "String", "s", "names", "print", "s"},
         {{"EnhancedForStatement", 1}}},
        {"void m(){ return; }", {"void", "m"}, {{"MethodDeclaration", 1}}},
        {"String n(){ return \"ok\"; }",
         {"String", "n", "\"ok\""},
         {{"StringLiteral", 1}}},
        {"void o(){ try { risky(); } catch (Exception e) { log(e); } }",
         {"void", "o", "risky", "Exception", "e", "log", "e"},
         {{"TryStatement", 1}, {"CatchClause", 1}}},
        {"void p(){ Object o = new Object(); }",
         {"void", "p", "Object", "o", "Object"},
         {{"ClassInstanceCreation", 1}}},
        {"void q(){ int[] a = new int[4]; a[0] = 2; }",
         {"void", "q", "int", "a", "int", "4", "a", "0", "2"},
         {{"ArrayCreation", 1}, {"ArrayAccess", 1}, {"ArrayType", 1}}},
        {"void r(){ boolean t = x > 1 ? true : false; }",
         {"void", "r", "boolean", "t", "x", "1", "true", "false"},
         {{"ConditionalExpression", 1}, {"BooleanLiteral", 2}}},
        {"void s(){ obj.field.call(a, b); }",
         {"void", "s", "obj", "field", "call", "a", "b"},
         {{"MethodInvocation", 1}, {"QualifiedName", 1}}},
        {"long t(long v){ return (long) (v * 2L); }",
         {"long", "t", "long", "v", "long", "v", "2L"},
         {{"CastExpression", 1}, {"ParenthesizedExpression", 1}}},
    };
    for (const auto& fx : fixtures) {
        CAPTURE(fx.src);
        MethodAst m = parse_java_method(fx.src);
        CHECK(leaf_texts(m) == fx.leaves);
        auto kc = kind_counts(m.root);
        for (const auto& [kind, n] : fx.kinds) {
            CAPTURE(kind);
            CHECK(kc[kind] == n);
        }
    }
}

TEST_CASE("call sites are collected in lexical order with arity and receiver") {
    const std::string src =
        "void run() {\n"
        "    first();\n"
        "    helper.second(a, b);\n"
        "    pkg.cls.third(a, b, c);\n"
        "}";
    MethodAst m = parse_java_method(src);
    REQUIRE(m.calls.size() == 3);
    CHECK(m.calls[0].name == "first");
    CHECK(m.calls[0].arity == 0);
    CHECK(m.calls[0].receiver == "");
    CHECK(m.calls[1].name == "second");
    CHECK(m.calls[1].arity == 2);
    CHECK(m.calls[1].receiver == "helper");
    CHECK(m.calls[2].name == "third");
    CHECK(m.calls[2].arity == 3);
    CHECK(m.calls[2].receiver == "pkg.cls");
}

TEST_CASE("file parsing collects methods, skips fields and nested types work") {
    const std::string src =
        "package com.example.app;\n"
        "import java.util.List;\n"
        "public class Widget {\n"
        "    private int count = 0;\n"
        "    public void refresh() { count++; }\n"
        "    static class Inner {\n"
        "        void tick() { }\n"
        "    }\n"
        "    public int total(List<Integer> xs) {\n"
        "        int sum = 0;\n"
        "        for (Integer x : xs) sum += x;\n"
        "        return sum;\n"
        "    }\n"
        "}\n";
    ParsedFile pf = parse_java_file(src, "Widget.java");
    REQUIRE(pf.methods.size() == 3);
    CHECK(pf.methods[0].name == "refresh");
    CHECK(pf.methods[1].name == "tick");
    CHECK(pf.methods[2].name == "total");
    CHECK(pf.methods[2].start_line == 9);
    CHECK(pf.methods[2].source_text.starts_with("    public int total"));
}

TEST_CASE("spans nest within the method and terminals carry token positions") {
    const std::string src =
        "void probe() {\n"
        "    sensor.read(buffer);\n"
        "}";
    MethodAst m = parse_java_method(src);
    for (const auto* t : collect_terminals(m.root)) {
        CHECK(t->span.start_line >= m.root.span.start_line);
        CHECK(t->span.end_line <= m.root.span.end_line);
    }
    auto paths = extract_ast_paths(m);
    for (const auto& p : paths) {
        CHECK(p.start_span.known());
        CHECK(p.end_span.known());
    }
}

TEST_CASE("path string round-trips including escaped literals") {
    AstPath p;
    p.start_terminal = "\"a,b |c\"";
    p.nonterminals = {"StringLiteral", "MethodInvocation", "Name"};
    p.end_terminal = "target";
    std::string s = path_to_string(p);
    CHECK(s.find(' ') == std::string::npos);
    AstPath q = path_from_string(s, 1);
    CHECK(q == p);
}

TEST_CASE("nine non-terminal path strings are rejected") {
    CHECK_THROWS_AS(path_from_string("a,K1|K2|K3|K4|K5|K6|K7|K8|K9,b", 3), FormatError);
    try {
        path_from_string("a,K1|K2|K3|K4|K5|K6|K7|K8|K9,b", 3);
    } catch (const FormatError& e) {
        CHECK(e.line_no == 3);
    }
}
