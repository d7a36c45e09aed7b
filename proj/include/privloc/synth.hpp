#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "privloc/prcs.hpp"

namespace privloc {

// Planted-signal dataset generator, the desk-scale stand-in for ADPAc. Each
// sample is one generated .java file with three call-linked hop methods.
// Positives carry the marker call in `marker_hop`; negatives carry the same
// call in a different hop, so pooled representations lose the signal while
// per-hop heads keep it.
struct SynthOptions {
    int n = 1000;
    int marker_hop = 2;  // 1..3
    std::uint64_t seed = 7;
    std::string out_dir;  // receives src/, samples.c2s, markers.tsv
};

constexpr const char* kMarkerToken = "collectDeviceBeacon";

struct MarkerSite {
    int hop = 0;   // 1-based
    int line = 0;  // absolute line in the sample's file
};

struct SynthResult {
    std::vector<CodeSample> samples;                 // mined, with hops and paths
    std::map<std::string, MarkerSite> marker_sites;  // sample id -> injected statement
    std::map<std::string, std::string> file_texts;   // sample id -> full .java text
    std::string c2s_path;
    std::string src_dir;
    std::string markers_path;
};

// In-memory generation; does not touch the filesystem.
SynthResult generate_synth_samples(const SynthOptions& opt);

// Generation plus writing src/<id>.java, samples.c2s and markers.tsv.
SynthResult generate_synth(const SynthOptions& opt);

}  // namespace privloc
