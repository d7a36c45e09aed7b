#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "privloc/paths.hpp"
#include "privloc/prcs.hpp"

namespace privloc {

// Token table with id 0 reserved for PAD/null and id 1 for UNK. Built from
// the training split only; ids >= 2 are assigned by descending count, ties
// broken lexicographically.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr const char* kPadText = "<PAD>";
    static constexpr const char* kUnkText = "<UNK>";

    Vocab();
    static Vocab build(const std::map<std::string, long>& counts, long min_count = 2);

    int id(const std::string& token) const;  // kUnk when absent
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    long count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return tokens_.size(); }

    void save(const std::string& path) const;  // token<TAB>id<TAB>count
    static Vocab load(const std::string& path);

private:
    std::unordered_map<std::string, int> ids_;
    std::vector<std::string> tokens_;
    std::vector<long> counts_;
};

// The fixed 11-slot layout: slot 0 = start terminal, slots 1..8 = non-terminal
// ids right-padded with PAD, slot 9 = end terminal, slot 10 = PAD end marker.
struct TokenizedPath {
    std::array<int, 11> slots{};

    bool operator==(const TokenizedPath&) const = default;
};

constexpr int kPathSlots = 11;

// With tokenize_nonterminals each interior kind gets its own slot; without,
// the whole kind sequence joins with '|' into a single token in slot 1.
TokenizedPath tokenize_path(const AstPath& path, const Vocab& vocab, bool tokenize_nonterminals);

// Token occurrences of a path under the given mode, for vocabulary building.
std::vector<std::string> path_tokens(const AstPath& path, bool tokenize_nonterminals);

// Per-hop model input: num_paths x 11 ids. Rows beyond the sampled paths are
// null (all-zero); src_path carries the sampled row's index into the original
// path list, -1 for null rows.
struct HopMatrix {
    int num_paths = 0;
    std::vector<TokenizedPath> rows;
    std::vector<int> src_path;

    bool row_is_null(std::size_t r) const { return src_path[r] < 0; }
};

// Uniform sample without replacement of min(n, |paths|) rows, seeded; output
// order is the sampled order, null rows fill the rest.
HopMatrix sample_paths(const std::vector<TokenizedPath>& hop_paths, int n, std::uint64_t seed);

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

// Seeded shuffle, then floor(0.8 n) / floor(0.1 n) / remainder.
SplitIndices split_indices(std::size_t n, std::uint64_t seed);

template <typename T>
std::array<std::vector<T>, 3> split_dataset(const std::vector<T>& samples, std::uint64_t seed) {
    if (samples.size() < 10) throw TooFewSamples(samples.size());
    SplitIndices idx = split_indices(samples.size(), seed);
    std::array<std::vector<T>, 3> out;
    for (auto i : idx.train) out[0].push_back(samples[i]);
    for (auto i : idx.val) out[1].push_back(samples[i]);
    for (auto i : idx.test) out[2].push_back(samples[i]);
    return out;
}

// Pre-trained token embeddings; row 0 (PAD) stays exactly zero.
struct EmbeddingTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;

    double* row(std::size_t r) { return weights.data() + r * cols; }
    const double* row(std::size_t r) const { return weights.data() + r * cols; }
};

// Skip-gram with negative sampling (5 negatives, context = all other non-PAD
// tokens in the same path), trained for `epochs` passes over the corpus.
EmbeddingTable pretrain_embeddings(const std::vector<TokenizedPath>& corpus, std::size_t vocab_size,
                                   std::size_t embed_size, int epochs, std::uint64_t seed);

// ---- .c2s container ----
// Line format: id<TAB>label<TAB>hop1<TAB>hop2<TAB>hop3 where a hop is a
// space-separated list of paths `start,nt1|nt2|...,end` and an empty field is
// an absent hop or label.
std::vector<CodeSample> load_c2s(const std::string& path);
void save_c2s(const std::vector<CodeSample>& samples, const std::string& path);

std::vector<CodeSample> parse_c2s(std::istream& in);
void write_c2s(const std::vector<CodeSample>& samples, std::ostream& out);

}  // namespace privloc
