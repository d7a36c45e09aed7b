#include "privloc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "privloc/rng.hpp"

namespace privloc {

Vocab::Vocab() {
    tokens_ = {kPadText, kUnkText};
    counts_ = {0, 0};
    ids_[kPadText] = kPad;
    ids_[kUnkText] = kUnk;
}

Vocab Vocab::build(const std::map<std::string, long>& counts, long min_count) {
    Vocab v;
    std::vector<std::pair<std::string, long>> kept;
    long dropped = 0;
    for (const auto& [tok, n] : counts) {
        if (n >= min_count)
            kept.emplace_back(tok, n);
        else
            dropped += n;
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (auto& [tok, n] : kept) {
        v.ids_[tok] = static_cast<int>(v.tokens_.size());
        v.tokens_.push_back(tok);
        v.counts_.push_back(n);
    }
    v.counts_[kUnk] = dropped;
    return v;
}

int Vocab::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

void Vocab::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot write vocab to " + path);
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        os << tokens_[i] << '\t' << i << '\t' << counts_[i] << '\n';
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open vocab " + path);
    Vocab v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw FormatError(line_no, "vocab line needs token<TAB>id<TAB>count");
        std::string tok = line.substr(0, t1);
        int id = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
        long count = std::stol(line.substr(t2 + 1));
        if (id == kPad || id == kUnk) continue;  // reserved rows pre-seeded
        if (id != static_cast<int>(v.tokens_.size()))
            throw FormatError(line_no, "vocab ids must be dense and ascending");
        v.ids_[tok] = id;
        v.tokens_.push_back(tok);
        v.counts_.push_back(count);
    }
    return v;
}

std::vector<std::string> path_tokens(const AstPath& path, bool tokenize_nonterminals) {
    std::vector<std::string> out;
    out.push_back(path.start_terminal);
    if (tokenize_nonterminals) {
        for (const auto& nt : path.nonterminals) out.push_back(nt);
    } else {
        std::string joined;
        for (std::size_t i = 0; i < path.nonterminals.size(); ++i) {
            if (i) joined += '|';
            joined += path.nonterminals[i];
        }
        out.push_back(joined);
    }
    out.push_back(path.end_terminal);
    return out;
}

TokenizedPath tokenize_path(const AstPath& path, const Vocab& vocab, bool tokenize_nonterminals) {
    if (path.nonterminals.size() > kMaxNonterminals) throw PathTooLong(path.nonterminals.size());
    TokenizedPath t;
    t.slots.fill(Vocab::kPad);
    t.slots[0] = vocab.id(path.start_terminal);
    if (tokenize_nonterminals) {
        for (std::size_t i = 0; i < path.nonterminals.size(); ++i)
            t.slots[1 + i] = vocab.id(path.nonterminals[i]);
    } else {
        std::string joined;
        for (std::size_t i = 0; i < path.nonterminals.size(); ++i) {
            if (i) joined += '|';
            joined += path.nonterminals[i];
        }
        t.slots[1] = vocab.id(joined);
    }
    t.slots[9] = vocab.id(path.end_terminal);
    t.slots[10] = Vocab::kPad;
    return t;
}

HopMatrix sample_paths(const std::vector<TokenizedPath>& hop_paths, int n, std::uint64_t seed) {
    HopMatrix m;
    m.num_paths = n;
    m.rows.assign(static_cast<std::size_t>(n), TokenizedPath{});
    m.src_path.assign(static_cast<std::size_t>(n), -1);
    std::vector<std::size_t> order(hop_paths.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n), hop_paths.size());
    // partial Fisher-Yates: the first `take` entries are the sample, in order
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + rng.index(order.size() - i);
        std::swap(order[i], order[j]);
        m.rows[i] = hop_paths[order[i]];
        m.src_path[i] = static_cast<int>(order[i]);
    }
    return m;
}

SplitIndices split_indices(std::size_t n, std::uint64_t seed) {
    if (n < 10) throw TooFewSamples(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::mix(seed, 0x5f17));
    rng.shuffle(order);
    std::size_t n_train = static_cast<std::size_t>(0.8 * static_cast<double>(n));
    std::size_t n_val = static_cast<std::size_t>(0.1 * static_cast<double>(n));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    return out;
}

EmbeddingTable pretrain_embeddings(const std::vector<TokenizedPath>& corpus, std::size_t vocab_size,
                                   std::size_t embed_size, int epochs, std::uint64_t seed) {
    if (corpus.empty()) throw Error("embedding corpus is empty");
    EmbeddingTable table;
    table.rows = vocab_size;
    table.cols = embed_size;
    table.weights.assign(vocab_size * embed_size, 0.0);
    Rng rng(Rng::mix(seed, 0xe4bed));
    // word2vec-style init; PAD row stays zero
    for (std::size_t r = 1; r < vocab_size; ++r)
        for (std::size_t c = 0; c < embed_size; ++c)
            table.weights[r * embed_size + c] = (rng.uniform() - 0.5) / static_cast<double>(embed_size);
    if (epochs <= 0) return table;

    std::vector<double> out_weights(vocab_size * embed_size, 0.0);

    // unigram^0.75 negative-sampling distribution over corpus token counts
    std::vector<long> counts(vocab_size, 0);
    for (const auto& p : corpus)
        for (int s : p.slots)
            if (s != Vocab::kPad) ++counts[static_cast<std::size_t>(s)];
    std::vector<double> cum;
    std::vector<int> cum_id;
    double total = 0.0;
    for (std::size_t i = 1; i < vocab_size; ++i) {
        if (counts[i] == 0) continue;
        total += std::pow(static_cast<double>(counts[i]), 0.75);
        cum.push_back(total);
        cum_id.push_back(static_cast<int>(i));
    }
    auto draw_negative = [&]() {
        double x = rng.uniform() * total;
        auto it = std::lower_bound(cum.begin(), cum.end(), x);
        return cum_id[static_cast<std::size_t>(it - cum.begin())];
    };

    constexpr int kNegatives = 5;
    const double start_lr = 0.025;
    long steps_total = static_cast<long>(corpus.size()) * epochs;
    long step = 0;
    std::vector<double> grad_center(embed_size);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (const auto& path : corpus) {
            double lr = start_lr * std::max(0.0001, 1.0 - static_cast<double>(step) / static_cast<double>(steps_total));
            ++step;
            std::vector<int> toks;
            for (int s : path.slots)
                if (s != Vocab::kPad) toks.push_back(s);
            if (toks.size() < 2) continue;
            for (std::size_t ci = 0; ci < toks.size(); ++ci) {
                double* center = table.row(static_cast<std::size_t>(toks[ci]));
                for (std::size_t oi = 0; oi < toks.size(); ++oi) {
                    if (oi == ci) continue;
                    std::fill(grad_center.begin(), grad_center.end(), 0.0);
                    for (int k = 0; k <= kNegatives; ++k) {
                        int target;
                        double label;
                        if (k == 0) {
                            target = toks[oi];
                            label = 1.0;
                        } else {
                            target = draw_negative();
                            if (target == toks[oi]) continue;
                            label = 0.0;
                        }
                        double* out_row = out_weights.data() + static_cast<std::size_t>(target) * embed_size;
                        double dot = 0.0;
                        for (std::size_t d = 0; d < embed_size; ++d) dot += center[d] * out_row[d];
                        double g = (label - 1.0 / (1.0 + std::exp(-dot))) * lr;
                        for (std::size_t d = 0; d < embed_size; ++d) {
                            grad_center[d] += g * out_row[d];
                            out_row[d] += g * center[d];
                        }
                    }
                    for (std::size_t d = 0; d < embed_size; ++d) center[d] += grad_center[d];
                }
            }
        }
    }
    return table;
}

// ---- .c2s ----

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto tab = line.find('\t', pos);
        out.push_back(line.substr(pos, tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
    }
    return out;
}

}  // namespace

std::vector<CodeSample> parse_c2s(std::istream& in) {
    std::vector<CodeSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 5)
            throw FormatError(line_no, "expected 5 tab-separated fields, got " +
                                           std::to_string(fields.size()));
        CodeSample s;
        s.id = fields[0];
        if (s.id.empty()) throw FormatError(line_no, "empty sample id");
        if (!fields[1].empty()) {
            if (fields[1] != "0" && fields[1] != "1")
                throw FormatError(line_no, "label must be 0, 1 or empty, got '" + fields[1] + "'");
            s.label = fields[1] == "1" ? 1 : 0;
        }
        bool seen_gap = false;
        for (int h = 0; h < 3; ++h) {
            const std::string& field = fields[static_cast<std::size_t>(2 + h)];
            if (field.empty()) {
                seen_gap = true;
                continue;
            }
            if (seen_gap) throw FormatError(line_no, "hop " + std::to_string(h + 1) + " present after an absent hop");
            std::vector<AstPath> paths;
            std::size_t pos = 0;
            while (pos < field.size()) {
                auto sp = field.find(' ', pos);
                std::string tok = field.substr(pos, sp - pos);
                if (!tok.empty()) paths.push_back(path_from_string(tok, line_no));
                if (sp == std::string::npos) break;
                pos = sp + 1;
            }
            s.hop_paths.push_back(std::move(paths));
        }
        if (s.hop_paths.empty()) throw FormatError(line_no, "sample has no hops");
        out.push_back(std::move(s));
    }
    return out;
}

void write_c2s(const std::vector<CodeSample>& samples, std::ostream& out) {
    for (const auto& s : samples) {
        out << s.id << '\t';
        if (s.label) out << *s.label;
        for (int h = 0; h < 3; ++h) {
            out << '\t';
            if (static_cast<std::size_t>(h) >= s.hop_paths.size()) continue;
            const auto& paths = s.hop_paths[static_cast<std::size_t>(h)];
            for (std::size_t i = 0; i < paths.size(); ++i) {
                if (i) out << ' ';
                out << path_to_string(paths[i]);
            }
        }
        out << '\n';
    }
}

std::vector<CodeSample> load_c2s(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    return parse_c2s(is);
}

void save_c2s(const std::vector<CodeSample>& samples, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    write_c2s(samples, os);
}

}  // namespace privloc
