#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "privloc/localizer.hpp"
#include "privloc/rng.hpp"

using namespace privloc;

TEST_CASE("top-k picks the heaviest indices in order") {
    std::vector<double> w = {0.1, 0.4, 0.2, 0.3};
    CHECK(top_k_paths(w, 2) == std::vector<int>{1, 3});
}

TEST_CASE("top-k breaks ties by the lower index") {
    std::vector<double> w = {0.25, 0.25, 0.25, 0.25};
    CHECK(top_k_paths(w, 3) == std::vector<int>{0, 1, 2});
}

TEST_CASE("top-k skips zero-weight null rows and tolerates short lists") {
    std::vector<double> w = {0.0, 0.6, 0.0, 0.4};
    CHECK(top_k_paths(w, 20) == std::vector<int>{1, 3});
}

TEST_CASE("top-k equals the full-sort oracle on random vectors") {
    Rng rng(8);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> w(300);
        for (auto& x : w) x = rng.uniform();
        auto got = top_k_paths(w, 20);
        // oracle: full stable sort by (weight desc, index asc), truncate
        std::vector<int> idx(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) idx[i] = static_cast<int>(i);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            if (w[static_cast<std::size_t>(a)] != w[static_cast<std::size_t>(b)])
                return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)];
            return a < b;
        });
        idx.resize(20);
        CHECK(got == idx);
    }
}

namespace {

MethodAst hop_fixture() {
    const std::string src =
        "void track(Context ctx) {\n"
        "    Location loc = manager.getLastKnownLocation(provider);\n"
        "    double lat = loc.getLatitude();\n"
        "    cache.store(lat);\n"
        "    cache.store(lat);\n"
        "}";
    return parse_java_method(src, "Tracker.java");
}

AstPath spanless(const std::string& start, const std::string& end) {
    AstPath p;
    p.start_terminal = start;
    p.nonterminals = {"Name", "MethodInvocation", "Name"};
    p.end_terminal = end;
    return p;
}

}  // namespace

TEST_CASE("unique identifier maps to its line") {
    MethodAst hop = hop_fixture();
    auto out = map_path_to_line(spanless("getLastKnownLocation", "unknownXYZ"), hop);
    REQUIRE(out.mapped.has_value());
    CHECK(out.mapped->line == 2);
    CHECK(out.mapped->statement_text.find("getLastKnownLocation") != std::string::npos);
    CHECK(!out.skip.has_value());
}

TEST_CASE("terminal on two lines with no span is skipped as ambiguous") {
    MethodAst hop = hop_fixture();
    auto out = map_path_to_line(spanless("store", "storeAgain"), hop);
    CHECK(!out.mapped.has_value());
    REQUIRE(out.skip.has_value());
    CHECK(*out.skip == SkipReason::Ambiguous);
}

TEST_CASE("terminals matching nothing are skipped as obfuscated or absent") {
    MethodAst hop = hop_fixture();
    auto out = map_path_to_line(spanless("a7f3", "b9c1"), hop);
    REQUIRE(out.skip.has_value());
    CHECK(*out.skip == SkipReason::ObfuscatedAbsent);
}

TEST_CASE("ambiguous start falls through to a unique end terminal") {
    MethodAst hop = hop_fixture();
    auto out = map_path_to_line(spanless("store", "getLatitude"), hop);
    REQUIRE(out.mapped.has_value());
    CHECK(out.mapped->line == 3);
}

TEST_CASE("known spans map directly even when the text is ambiguous") {
    MethodAst hop = hop_fixture();
    AstPath p = spanless("store", "lat");
    p.start_span = {5, 11, 5, 15};  // second store call
    auto out = map_path_to_line(p, hop);
    REQUIRE(out.mapped.has_value());
    CHECK(out.mapped->line == 5);
    CHECK(out.mapped->statement_text == "cache.store(lat);");
}

TEST_CASE("hop 2 calling hop 1 by name is mappable, linking the hops") {
    const std::string hop2_src =
        "double getDistancetoPlace(Place target) {\n"
        "    Location current = getCurrentLocation();\n"
        "    return current.distanceTo(target.getLocation());\n"
        "}";
    MethodAst hop2 = parse_java_method(hop2_src, "Distance.java");
    auto out = map_path_to_line(spanless("getCurrentLocation", "missing"), hop2);
    REQUIRE(out.mapped.has_value());
    CHECK(out.mapped->line == 2);
}

namespace {

CodeSample mined_sample(int hops) {
    CodeSample s;
    s.id = "fix0";
    s.label = 1;
    std::vector<std::string> bodies = {
        "void first() {\n    Location loc = lm.getLastKnownLocation(gps);\n    handoff(loc);\n}",
        "void handoff(Location loc) {\n    double lat = loc.getLatitude();\n    render(lat);\n}",
        "void render(double lat) {\n    view.show(lat);\n}",
    };
    for (int h = 0; h < hops; ++h) s.hops.push_back(parse_java_method(bodies[static_cast<std::size_t>(h)], "F.java"));
    mine_sample_paths(s);
    return s;
}

Model tiny_model(int hops_unused) {
    (void)hops_unused;
    ModelConfig cfg;
    cfg.num_paths = 12;
    cfg.embed_size = 6;
    cfg.fc_hidden = 8;
    return Model(cfg, 40, 3);
}

Vocab vocab_for(const CodeSample& s) {
    return build_vocab({s}, true, 1);
}

}  // namespace

TEST_CASE("one-hop sample reports entries only for hop 1") {
    CodeSample s = mined_sample(1);
    Model model = tiny_model(1);
    Vocab v = vocab_for(s);
    auto report = localize(s, model, v, {.top_k = 20, .seed = 1});
    REQUIRE(report.hops.size() == 1);
    CHECK(!report.hops[0].empty());
    for (const auto& e : report.hops[0]) {
        CHECK((e.mapped.has_value() ^ e.skip_reason.has_value()));
        if (e.mapped) {
            // mapped terminal text appears verbatim on the mapped line
            bool found = e.mapped->statement_text.find(e.start_terminal) != std::string::npos ||
                         e.mapped->statement_text.find(e.end_terminal) != std::string::npos;
            CHECK(found);
        }
    }
}

TEST_CASE("three-hop report stays sorted, capped and line-deduplicated") {
    CodeSample s = mined_sample(3);
    Model model = tiny_model(3);
    Vocab v = vocab_for(s);
    auto report = localize(s, model, v, {.top_k = 20, .seed = 2});
    REQUIRE(report.hops.size() == 3);
    for (const auto& hop : report.hops) {
        CHECK(hop.size() <= 20);
        for (std::size_t i = 1; i < hop.size(); ++i) {
            bool ordered = hop[i - 1].weight > hop[i].weight ||
                           (hop[i - 1].weight == hop[i].weight && hop[i - 1].path_index < hop[i].path_index);
            CHECK(ordered);
        }
        std::set<std::pair<std::string, int>> lines;
        for (const auto& e : hop)
            if (e.mapped) CHECK(lines.insert({e.mapped->file, e.mapped->line}).second);
    }
}

TEST_CASE("empty report echoes the source unmodified in text format") {
    CodeSample s = mined_sample(1);
    LocalizationReport empty;
    empty.sample_id = s.id;
    empty.hops.push_back({});
    std::string text = render_annotated(empty, s, ReportFormat::Text);
    CHECK(text.find(">>") == std::string::npos);
    CHECK(text.find("getLastKnownLocation") != std::string::npos);
}

TEST_CASE("a single highlight marks exactly its line") {
    CodeSample s = mined_sample(1);
    LocalizationReport rep;
    rep.sample_id = s.id;
    LocEntry e;
    e.path_index = 0;
    e.weight = 0.75;
    e.start_terminal = "getLastKnownLocation";
    e.end_terminal = "loc";
    e.mapped = MappedLine{"F.java", 2, "Location loc = lm.getLastKnownLocation(gps);"};
    rep.hops.push_back({e});
    std::string text = render_annotated(rep, s, ReportFormat::Text);
    int marked = 0;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.starts_with(">> ")) {
            ++marked;
            CHECK(line.find("[w=0.750000]") != std::string::npos);
            CHECK(line.find("getLastKnownLocation") != std::string::npos);
        }
    }
    CHECK(marked == 1);

    std::string html = render_annotated(rep, s, ReportFormat::Html);
    CHECK(html.find("<mark>") != std::string::npos);
    CHECK(std::count(html.begin(), html.end(), '\n') > 3);
}

TEST_CASE("json report round-trips to an equal value") {
    LocalizationReport rep;
    rep.sample_id = "s42";
    LocEntry a;
    a.path_index = 3;
    a.weight = 0.125;
    a.start_terminal = "x";
    a.end_terminal = "y";
    a.mapped = MappedLine{"A.java", 7, "x = y;"};
    LocEntry b;
    b.path_index = 5;
    b.weight = 0.0625;
    b.start_terminal = "p";
    b.end_terminal = "q";
    b.skip_reason = SkipReason::Ambiguous;
    rep.hops.push_back({a, b});
    rep.hops.push_back({});
    auto text = report_to_json(rep);
    auto back = report_from_json(text);
    CHECK(back == rep);
}

TEST_CASE("unknown format name is rejected") {
    CHECK_THROWS_AS(report_format_from_string("pdf"), UnknownFormat);
}
