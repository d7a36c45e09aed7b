#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "privloc/dataset.hpp"
#include "privloc/synth.hpp"

using namespace privloc;
namespace fs = std::filesystem;

TEST_CASE("synth samples are balanced three-hop chains with markers placed by label") {
    SynthOptions opt;
    opt.n = 40;
    opt.marker_hop = 2;
    opt.seed = 11;
    auto res = generate_synth_samples(opt);
    REQUIRE(res.samples.size() == 40);
    int positives = 0;
    for (const auto& s : res.samples) {
        REQUIRE(s.hops.size() == 3);
        REQUIRE(s.hop_paths.size() == 3);
        REQUIRE(s.label.has_value());
        positives += *s.label;
        // marker token lives in hop 2 for positives, hop 3 for negatives
        int expected_hop = *s.label == 1 ? 2 : 3;
        for (int h = 0; h < 3; ++h) {
            bool has_marker = false;
            for (const auto& p : s.hop_paths[static_cast<std::size_t>(h)])
                if (p.start_terminal == kMarkerToken || p.end_terminal == kMarkerToken)
                    has_marker = true;
            CHECK(has_marker == (h + 1 == expected_hop));
        }
        CHECK(res.marker_sites.at(s.id).hop == expected_hop);
        // the recorded line contains the marker call in the right hop
        const MethodAst& hop = s.hops[static_cast<std::size_t>(expected_hop - 1)];
        int rel = res.marker_sites.at(s.id).line - hop.start_line;
        std::istringstream is(hop.source_text);
        std::string line;
        for (int i = 0; i <= rel; ++i) std::getline(is, line);
        CHECK(line.find(kMarkerToken) != std::string::npos);
        // and only one line of that hop mentions it
        std::istringstream is2(hop.source_text);
        int mentions = 0;
        while (std::getline(is2, line)) mentions += line.find(kMarkerToken) != std::string::npos;
        CHECK(mentions == 1);
    }
    CHECK(positives == 20);
}

TEST_CASE("synth path counts stay at the desk scale") {
    SynthOptions opt;
    opt.n = 30;
    opt.seed = 3;
    auto res = generate_synth_samples(opt);
    for (const auto& s : res.samples) {
        for (const auto& hop : s.hop_paths) {
            CHECK(hop.size() >= 20);
            CHECK(hop.size() <= 150);
            for (const auto& p : hop) CHECK(p.nonterminals.size() <= 8);
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    SynthOptions opt;
    opt.n = 10;
    opt.seed = 21;
    auto a = generate_synth_samples(opt);
    auto b = generate_synth_samples(opt);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].hop_paths == b.samples[i].hop_paths);
        CHECK(a.file_texts.at(a.samples[i].id) == b.file_texts.at(b.samples[i].id));
    }
    opt.seed = 22;
    auto c = generate_synth_samples(opt);
    CHECK(a.file_texts.at("s00000") != c.file_texts.at("s00000"));
}

TEST_CASE("written dataset round-trips and sources re-parse to the same spans") {
    SynthOptions opt;
    opt.n = 6;
    opt.seed = 5;
    opt.out_dir = (fs::temp_directory_path() / "privloc_synth_test").string();
    fs::remove_all(opt.out_dir);
    auto res = generate_synth(opt);
    auto loaded = load_c2s(res.c2s_path);
    REQUIRE(loaded.size() == 6);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].id == res.samples[i].id);
        CHECK(loaded[i].label == res.samples[i].label);
        CHECK(loaded[i].hop_paths == res.samples[i].hop_paths);
    }
    // the written file parses back with identical method line offsets
    std::ifstream is(fs::path(res.src_dir) / "s00002.java");
    std::stringstream ss;
    ss << is.rdbuf();
    ParsedFile pf = parse_java_file(ss.str(), "s00002.java");
    REQUIRE(pf.methods.size() == 3);
    for (std::size_t h = 0; h < 3; ++h)
        CHECK(pf.methods[h].start_line == res.samples[2].hops[h].start_line);
    fs::remove_all(opt.out_dir);
}

TEST_CASE("marker hop option moves the signal") {
    SynthOptions opt;
    opt.n = 8;
    opt.marker_hop = 1;
    opt.seed = 9;
    auto res = generate_synth_samples(opt);
    for (const auto& s : res.samples)
        CHECK(res.marker_sites.at(s.id).hop == (*s.label == 1 ? 1 : 2));
    opt.marker_hop = 4;
    CHECK_THROWS_AS(generate_synth_samples(opt), Error);
}
