#include "privloc/synth.hpp"

#include <filesystem>
#include <fstream>

#include "privloc/dataset.hpp"
#include "privloc/rng.hpp"

namespace fs = std::filesystem;

namespace privloc {

namespace {

const std::vector<std::string> kReceivers = {"cache",  "session", "relay",  "holder",
                                             "cursor", "buffer",  "router", "ledger"};
const std::vector<std::string> kVerbs = {
    "fetchValue",  "mergeBuffer", "appendRecord", "resetState", "scanInput",  "formatLine",
    "updateCounter", "loadPrefs", "queueTask",    "checkState", "readSlot",   "writeSlot",
    "clampRange",  "hashKey",     "splitName",    "joinParts",  "packExtras", "traceEvent"};
const std::vector<std::string> kVars = {"value",  "token", "count",  "index", "result",
                                        "payload", "extra", "flag",  "total", "offset"};
const std::vector<std::array<std::string, 3>> kHopNames = {
    {"prepareRequest", "transformPayload", "renderSummary"},
    {"openSession", "collectFields", "publishView"},
    {"readSettings", "resolveTarget", "updateScreen"},
    {"beginSync", "foldRecords", "emitReport"},
};

class MethodWriter {
public:
    MethodWriter(Rng& rng, std::string name, std::string next_call)
        : rng_(rng), name_(std::move(name)), next_call_(std::move(next_call)) {}

    // Emits one hop method body. Statement tokens all sit several interior
    // nodes below the method block, so cross-statement walks exceed the
    // 8-non-terminal bound and per-hop path counts stay at the desk scale.
    std::vector<std::string> build(int statements) {
        std::vector<std::string> body;
        for (int i = 0; i < statements; ++i) body.push_back(statement());
        if (!next_call_.empty())
            body.push_back("if (" + cond() + ") { " + next_call_ + "(" + var() + "); }");
        return body;
    }

    // comparison whose tokens are all nested under calls
    std::string cond() {
        return verb() + "(" + var() + ") > " + verb() + "(" + var() + ")";
    }

    std::string var() { return kVars[rng_.index(kVars.size())]; }
    std::string recv() { return kReceivers[rng_.index(kReceivers.size())]; }
    std::string verb() { return kVerbs[rng_.index(kVerbs.size())]; }

    const std::string& name() const { return name_; }

private:
    std::string statement() {
        switch (rng_.index(3)) {
            case 0:
                return "if (" + cond() + ") { " + verb() + "(" + var() + "); }";
            case 1:
                return "while (" + cond() + ") { " + verb() + "(" + var() + "); }";
            default:
                return "if (" + cond() + ") { " + recv() + "." + verb() + "(" + var() + "); }";
        }
    }

    Rng& rng_;
    std::string name_;
    std::string next_call_;
};

}  // namespace

SynthResult generate_synth_samples(const SynthOptions& opt) {
    if (opt.marker_hop < 1 || opt.marker_hop > 3) throw Error("marker hop must be 1..3");
    if (opt.n < 1) throw Error("need at least one sample");
    SynthResult out;
    for (int i = 0; i < opt.n; ++i) {
        Rng rng(Rng::mix(opt.seed, static_cast<std::uint64_t>(i), 0x5f9f));
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "s%05d", i);
        std::string id = idbuf;
        int label = i % 2;
        int decoy_hop = opt.marker_hop == 3 ? 2 : opt.marker_hop + 1;
        int inject_hop = label == 1 ? opt.marker_hop : decoy_hop;

        const auto& names = kHopNames[rng.index(kHopNames.size())];
        std::array<std::vector<std::string>, 3> bodies;
        for (int h = 0; h < 3; ++h) {
            MethodWriter w(rng, names[static_cast<std::size_t>(h)],
                           h < 2 ? names[static_cast<std::size_t>(h + 1)] : "");
            int statements = h == 1 ? 3 : 2 + static_cast<int>(rng.index(2));
            bodies[static_cast<std::size_t>(h)] = w.build(statements);
        }
        // marker statement at a seeded position (never after the chain call)
        {
            MethodWriter w(rng, "", "");
            auto& body = bodies[static_cast<std::size_t>(inject_hop - 1)];
            std::size_t limit = body.size() > 1 ? body.size() - 1 : body.size();
            std::size_t pos = rng.index(limit + 1);
            body.insert(body.begin() + static_cast<long>(pos),
                        "if (" + w.cond() + ") { sink." + kMarkerToken + "(" + w.var() + "); }");
        }

        std::string text = "class Sample_" + std::to_string(i) + " {\n";
        int line = 1;
        MarkerSite site;
        for (int h = 0; h < 3; ++h) {
            Rng frng(Rng::mix(opt.seed, static_cast<std::uint64_t>(i), 0xf1e + static_cast<std::uint64_t>(h)));
            MethodWriter fin(frng, "", "");
            text += "    void " + names[static_cast<std::size_t>(h)] + "(String seed" +
                    std::to_string(h) + ") {\n        try {\n";
            line += 2;
            for (const auto& stmt : bodies[static_cast<std::size_t>(h)]) {
                text += "            " + stmt + "\n";
                line += 1;
                if (h == inject_hop - 1 && stmt.find(kMarkerToken) != std::string::npos) {
                    site.hop = inject_hop;
                    site.line = line;
                }
            }
            text += "        } finally {\n            " + fin.verb() + "(" + fin.var() +
                    ");\n        }\n    }\n";
            line += 4;
        }
        text += "}\n";

        ParsedFile pf = parse_java_file(text, id + ".java");
        if (pf.methods.size() != 3) throw Error("synth generated " + std::to_string(pf.methods.size()) + " methods");
        CodeSample s;
        s.id = id;
        s.label = label;
        s.hops = std::move(pf.methods);
        mine_sample_paths(s);
        for (int h = 0; h < 2; ++h)
            s.call_edges.push_back({h, h + 1, Span{}});
        out.marker_sites[id] = site;
        out.file_texts[id] = std::move(text);
        out.samples.push_back(std::move(s));
    }
    return out;
}

SynthResult generate_synth(const SynthOptions& opt) {
    if (opt.out_dir.empty()) throw Error("synth needs an output directory");
    SynthResult out = generate_synth_samples(opt);
    fs::path dir(opt.out_dir);
    fs::create_directories(dir / "src");
    // written text is byte-identical to what was parsed, so spans and the
    // recorded marker lines stay valid for later localize runs
    for (const auto& s : out.samples) {
        std::ofstream os(dir / "src" / (s.id + ".java"), std::ios::binary);
        os << out.file_texts.at(s.id);
    }
    out.src_dir = (dir / "src").string();
    out.c2s_path = (dir / "samples.c2s").string();
    save_c2s(out.samples, out.c2s_path);
    out.markers_path = (dir / "markers.tsv").string();
    std::ofstream ms(out.markers_path, std::ios::binary);
    ms << "id\thop\tline\ttoken\n";
    for (const auto& [id, site] : out.marker_sites)
        ms << id << '\t' << site.hop << '\t' << site.line << '\t' << kMarkerToken << '\n';
    return out;
}

}  // namespace privloc
