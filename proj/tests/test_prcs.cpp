#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "privloc/prcs.hpp"

using namespace privloc;
namespace fs = std::filesystem;

namespace {

struct TempProject {
    fs::path dir;
    TempProject() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("privloc_prcs_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(dir);
    }
    ~TempProject() { fs::remove_all(dir); }
    void write(const std::string& name, const std::string& body) {
        std::ofstream os(dir / name);
        os << body;
    }
};

ApiSignatureList location_apis() {
    return ApiSignatureList::from_lines({"android.location.LocationManager.getLastKnownLocation"});
}

}  // namespace

TEST_CASE("api list parses dotted names, comments, and rejects junk") {
    auto apis = ApiSignatureList::from_lines(
        {"# comment", "", "android.location.LocationManager.getLastKnownLocation  # trailing",
         "android.telephony.TelephonyManager.getDeviceId"});
    CHECK(apis.entries.size() == 2);
    CHECK(apis.matches_call("getLastKnownLocation"));
    CHECK(apis.matches_call("getDeviceId"));
    CHECK_FALSE(apis.matches_call("getLocation"));
    CHECK_THROWS_AS(ApiSignatureList::from_lines({"not a name!"}), FormatError);
    CHECK_THROWS_AS(ApiSignatureList::from_lines({"# only comments"}), Error);
}

TEST_CASE("single method calling the api yields one single-hop sample") {
    TempProject proj;
    proj.write("Solo.java",
               "class Solo {\n"
               "    void report() {\n"
               "        Location l = lm.getLastKnownLocation(provider);\n"
               "        android.util.Log.d(TAG, l);\n"
               "    }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].id == "Solo.java#report#0");
    CHECK(samples[0].hops.size() == 1);  // Log.d is external, chain ends
    CHECK(samples[0].call_edges.empty());
}

TEST_CASE("a forced chain produces a three-hop sample with two call edges") {
    TempProject proj;
    // mirrors the worked example: get the location, compute a distance to a
    // place, render the property view
    proj.write("Property.java",
               "class Property {\n"
               "    Location getCurrentLocation() {\n"
               "        Location loc = lm.getLastKnownLocation(gps);\n"
               "        double d = getDistancetoPlace(loc);\n"
               "        return loc;\n"
               "    }\n"
               "    double getDistancetoPlace(Location loc) {\n"
               "        double km = loc.distanceTo(place);\n"
               "        showPropertyDetails(km);\n"
               "        return km;\n"
               "    }\n"
               "    void showPropertyDetails(double km) {\n"
               "        view.render(km);\n"
               "    }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 1);
    const CodeSample& s = samples[0];
    REQUIRE(s.hops.size() == 3);
    CHECK(s.hops[0].name == "getCurrentLocation");
    CHECK(s.hops[1].name == "getDistancetoPlace");
    CHECK(s.hops[2].name == "showPropertyDetails");
    REQUIRE(s.call_edges.size() == 2);
    CHECK(s.call_edges[0].caller_hop == 0);
    CHECK(s.call_edges[0].callee_hop == 1);
    CHECK(s.call_edges[1].caller_hop == 1);
    CHECK(s.call_edges[1].callee_hop == 2);
    CHECK(s.call_edges[0].call_site.known());
}

TEST_CASE("same-name same-arity overloads end the chain") {
    TempProject proj;
    proj.write("Amb.java",
               "class Amb {\n"
               "    void seed() {\n"
               "        Object o = mgr.getLastKnownLocation(p);\n"
               "        step(o);\n"
               "    }\n"
               "    void step(Object o) { finish(o); }\n"
               "    void finish(Object o) { }\n"
               "    void finish(String s) { }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 1);
    // seed -> step, then finish(...) is ambiguous: chain stops at hop 2
    REQUIRE(samples[0].hops.size() == 2);
    CHECK(samples[0].hops[1].name == "step");
}

TEST_CASE("overloads that differ in arity resolve fine") {
    TempProject proj;
    proj.write("Arity.java",
               "class Arity {\n"
               "    void seed() {\n"
               "        Object o = mgr.getLastKnownLocation(p);\n"
               "        use(o);\n"
               "    }\n"
               "    void use(Object o) { }\n"
               "    void use(Object o, int extra) { }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 1);
    REQUIRE(samples[0].hops.size() == 2);
    CHECK(samples[0].hops[1].name == "use");
}

TEST_CASE("recursion is never followed") {
    TempProject proj;
    proj.write("Rec.java",
               "class Rec {\n"
               "    void seed() {\n"
               "        Object o = mgr.getLastKnownLocation(p);\n"
               "        seed();\n"
               "    }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].hops.size() == 1);
}

TEST_CASE("the chain follows the lexically first resolvable call") {
    TempProject proj;
    proj.write("Order.java",
               "class Order {\n"
               "    void seed() {\n"
               "        Object o = mgr.getLastKnownLocation(p);\n"
               "        external.unknownCall(o);\n"
               "        second(o);\n"
               "        third(o);\n"
               "    }\n"
               "    void second(Object o) { }\n"
               "    void third(Object o) { }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 1);
    REQUIRE(samples[0].hops.size() == 2);
    CHECK(samples[0].hops[1].name == "second");  // unknownCall skipped, second wins over third
}

TEST_CASE("one sample per matched api call site") {
    TempProject proj;
    proj.write("Twice.java",
               "class Twice {\n"
               "    void poll() {\n"
               "        Location a = lm.getLastKnownLocation(gps);\n"
               "        Location b = lm.getLastKnownLocation(net);\n"
               "    }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].id == "Twice.java#poll#0");
    CHECK(samples[1].id == "Twice.java#poll#1");
}

TEST_CASE("parse failures are warnings, not fatal; empty projects throw") {
    TempProject proj;
    proj.write("Good.java",
               "class Good { void go() { lm.getLastKnownLocation(p); } }\n");
    proj.write("Broken.java", "class Broken { void oops( { }\n");
    std::vector<std::string> warnings;
    auto samples = find_prcs(proj.dir.string(), location_apis(), &warnings);
    CHECK(samples.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("Broken.java") != std::string::npos);

    TempProject empty;
    CHECK_THROWS_AS(find_prcs(empty.dir.string(), location_apis()), NoSourcesFound);
    CHECK_THROWS_AS(find_prcs("/nonexistent/path", location_apis()), NoSourcesFound);
}

namespace {

// Exhaustive oracle: resolve every (caller, callee) pair by simple name +
// arity over the whole project, then walk greedily like the contract says.
std::vector<std::string> oracle_chain(const std::vector<MethodAst>& methods, const std::string& seed,
                                      int max_hops) {
    std::map<std::string, std::vector<const MethodAst*>> by_name;
    for (const auto& m : methods) by_name[m.name].push_back(&m);
    std::vector<std::string> chain{seed};
    const MethodAst* cur = nullptr;
    for (const auto& m : methods)
        if (m.name == seed) cur = &m;
    while (static_cast<int>(chain.size()) < max_hops && cur != nullptr) {
        const MethodAst* next = nullptr;
        bool stop = false;
        for (const auto& call : cur->calls) {
            std::vector<const MethodAst*> cands;
            for (const auto* m : by_name.count(call.name) ? by_name[call.name] : std::vector<const MethodAst*>{}) {
                int params = 0;
                for (const auto& c : m->root.children)
                    if (c.kind == "SingleVariableDeclaration") ++params;
                if (params == call.arity) cands.push_back(m);
            }
            if (cands.empty()) continue;
            if (cands.size() > 1) {
                stop = true;
                break;
            }
            bool seen = false;
            for (const auto& name : chain)
                if (name == cands[0]->name) seen = true;
            if (seen) continue;
            next = cands[0];
            break;
        }
        if (stop || next == nullptr) break;
        chain.push_back(next->name);
        for (const auto& m : methods)
            if (m.name == next->name) cur = &m;
    }
    return chain;
}

}  // namespace

TEST_CASE("ten-file project chains match the exhaustive resolver oracle") {
    TempProject proj;
    // a -> b -> c plus distractors across ten files
    proj.write("F0.java",
               "class F0 { void a() { lm.getLastKnownLocation(p); b(1); } }\n");
    proj.write("F1.java", "class F1 { void b(int x) { c(x, x); } }\n");
    proj.write("F2.java", "class F2 { void c(int x, int y) { d(); } }\n");
    proj.write("F3.java", "class F3 { void d() { } }\n");
    proj.write("F4.java", "class F4 { void e() { lm.getLastKnownLocation(p); unknown(); } }\n");
    proj.write("F5.java", "class F5 { void f() { b(2); } }\n");
    proj.write("F6.java", "class F6 { void g() { } }\n");
    proj.write("F7.java", "class F7 { void h() { lm.getLastKnownLocation(p); g(); } }\n");
    proj.write("F8.java", "class F8 { void i() { } }\n");
    proj.write("F9.java", "class F9 { void j() { lm.getLastKnownLocation(p); j(); } }\n");

    std::vector<MethodAst> all;
    for (const auto& entry : fs::directory_iterator(proj.dir)) {
        std::ifstream is(entry.path());
        std::stringstream ss;
        ss << is.rdbuf();
        ParsedFile pf = parse_java_file(ss.str(), entry.path().filename().string());
        for (auto& m : pf.methods) all.push_back(std::move(m));
    }

    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 4);  // a, e, h, j call the api
    for (const auto& s : samples) {
        std::vector<std::string> got;
        for (const auto& hop : s.hops) got.push_back(hop.name);
        CHECK(got == oracle_chain(all, s.hops[0].name, 3));
        CHECK(s.hops.size() <= 3);
        // hop 1 really contains a matching call
        bool has_api = false;
        for (const auto& c : s.hops[0].calls)
            if (c.name == "getLastKnownLocation") has_api = true;
        CHECK(has_api);
    }
    // and specifically a -> b -> c capped at three hops
    CHECK(samples[0].hops.size() == 3);
    CHECK(samples[0].hops[2].name == "c");
}

TEST_CASE("mined samples fill hop paths for the dataset layer") {
    TempProject proj;
    proj.write("P.java",
               "class P {\n"
               "    void top() { Location l = lm.getLastKnownLocation(p); pass(l); }\n"
               "    void pass(Location l) { sink.store(l); }\n"
               "}\n");
    auto samples = find_prcs(proj.dir.string(), location_apis());
    REQUIRE(samples.size() == 1);
    mine_sample_paths(samples[0]);
    REQUIRE(samples[0].hop_paths.size() == 2);
    CHECK(!samples[0].hop_paths[0].empty());
    CHECK(!samples[0].hop_paths[1].empty());
    for (const auto& hop : samples[0].hop_paths)
        for (const auto& p : hop) CHECK(p.nonterminals.size() <= 8);
}
