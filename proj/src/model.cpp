#include "privloc/model.hpp"

#include <cmath>

#include "privloc/rng.hpp"

namespace privloc {

using ad::Tensor;

int ModelConfig::fc_input_size() const {
    if (!use_attention) return embed_size;  // mean-pooled encodings
    switch (head_mode) {
        case HeadMode::StackedWeights:
            return head_count() * num_paths;
        case HeadMode::WeightedContext:
            return head_count() * embed_size;
    }
    throw UnknownMode("?");
}

std::string to_string(Architecture a) {
    return a == Architecture::MultiHead ? "multi_head" : "single_head";
}
std::string to_string(RnnKind k) { return k == RnnKind::Lstm ? "LSTM" : "BiLSTM"; }
std::string to_string(HeadMode m) {
    return m == HeadMode::StackedWeights ? "stacked_weights" : "weighted_context";
}

Architecture architecture_from_string(const std::string& s) {
    if (s == "multi_head") return Architecture::MultiHead;
    if (s == "single_head") return Architecture::SingleHead;
    throw UnknownMode(s);
}
RnnKind rnn_kind_from_string(const std::string& s) {
    if (s == "LSTM") return RnnKind::Lstm;
    if (s == "BiLSTM") return RnnKind::BiLstm;
    throw UnknownMode(s);
}
HeadMode head_mode_from_string(const std::string& s) {
    if (s == "stacked_weights") return HeadMode::StackedWeights;
    if (s == "weighted_context") return HeadMode::WeightedContext;
    throw UnknownMode(s);
}

namespace detail {

RnnOutput run_lstm(const LstmLayer& layer, const std::vector<ad::Tensor>& xs, std::size_t batch,
                   std::size_t hidden) {
    RnnOutput out;
    Tensor h = Tensor::zeros({batch, hidden});
    Tensor c = Tensor::zeros({batch, hidden});
    for (const auto& x : xs) {
        auto [nh, nc] = ad::lstm_cell(x, h, c, layer.w_ih, layer.w_hh, layer.b_ih, layer.b_hh);
        h = nh;
        c = nc;
        out.outputs.push_back(h);
    }
    out.final_state = h;
    return out;
}

BiRnnOutput run_bilstm(const LstmLayer& fwd, const LstmLayer& bwd, const std::vector<ad::Tensor>& xs,
                       std::size_t batch, std::size_t hidden) {
    std::vector<Tensor> reversed(xs.rbegin(), xs.rend());
    RnnOutput fo = run_lstm(fwd, xs, batch, hidden);
    RnnOutput bo = run_lstm(bwd, reversed, batch, hidden);
    BiRnnOutput out;
    out.fwd_outputs = std::move(fo.outputs);
    out.bwd_outputs.resize(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) out.bwd_outputs[t] = bo.outputs[xs.size() - 1 - t];
    out.fwd_final = fo.final_state;
    out.bwd_final = bo.final_state;
    return out;
}

}  // namespace detail

namespace {

Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> data(n);
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::leaf(std::move(shape), std::move(data), true);
}

}  // namespace

Model::Model(ModelConfig cfg, std::size_t vocab_size, std::uint64_t seed, const EmbeddingTable* pretrained)
    : cfg_(cfg) {
    Rng rng(Rng::mix(seed, 0x90de1));
    const auto d = static_cast<std::size_t>(cfg_.embed_size);

    Tensor embed;
    if (pretrained != nullptr) {
        if (pretrained->rows != vocab_size || pretrained->cols != d)
            throw ModelShapeMismatch("pretrained embedding is " + std::to_string(pretrained->rows) + "x" +
                                     std::to_string(pretrained->cols) + ", model needs " +
                                     std::to_string(vocab_size) + "x" + std::to_string(d));
        embed = Tensor::leaf({vocab_size, d}, pretrained->weights, true);
    } else {
        embed = init_uniform({vocab_size, d}, d, rng);
        for (std::size_t c = 0; c < d; ++c) embed.data()[c] = 0.0;  // PAD row
    }
    params_.emplace("embed", embed);

    for (int head = 1; head <= cfg_.head_count(); ++head) {
        std::string prefix = "head" + std::to_string(head) + ".";
        for (int layer = 1; layer <= 2; ++layer) {
            std::size_t in = d;
            if (layer == 2 && cfg_.rnn_kind == RnnKind::BiLstm) in = 2 * d;
            std::string lp = prefix + "rnn.layer" + std::to_string(layer) + ".";
            auto make_dir = [&](const std::string& dir) {
                std::string base = dir.empty() ? lp : lp + dir + ".";
                params_.emplace(base + "w_ih", init_uniform({in, 4 * d}, in, rng));
                params_.emplace(base + "w_hh", init_uniform({d, 4 * d}, d, rng));
                params_.emplace(base + "b_ih", init_uniform({4 * d}, in, rng));
                params_.emplace(base + "b_hh", init_uniform({4 * d}, d, rng));
            };
            if (cfg_.rnn_kind == RnnKind::Lstm) {
                make_dir("");
            } else {
                make_dir("fwd");
                make_dir("bwd");
            }
        }
        if (cfg_.rnn_kind == RnnKind::BiLstm)
            params_.emplace(prefix + "rnn.layer2.proj", init_uniform({2 * d, d}, 2 * d, rng));
        if (cfg_.use_attention) {
            params_.emplace(prefix + "attn.W", init_uniform({d, d}, d, rng));
            params_.emplace(prefix + "attn.v", init_uniform({d}, d, rng));
        }
    }

    const auto fc_in = static_cast<std::size_t>(cfg_.fc_input_size());
    const auto hidden = static_cast<std::size_t>(cfg_.fc_hidden);
    params_.emplace("fc.1.w", init_uniform({fc_in, hidden}, fc_in, rng));
    params_.emplace("fc.1.b", init_uniform({hidden}, fc_in, rng));
    params_.emplace("fc.2.w", init_uniform({hidden, 1}, hidden, rng));
    params_.emplace("fc.2.b", init_uniform({1}, hidden, rng));
}

Model::Model(ModelConfig cfg, std::map<std::string, ad::Tensor> params)
    : cfg_(cfg), params_(std::move(params)) {
    if (!params_.count("embed") || !params_.count("fc.1.w"))
        throw ModelShapeMismatch("checkpoint lacks required parameters (embed, fc.1.w)");
    if (params_.at("fc.1.w").shape()[0] != static_cast<std::size_t>(cfg_.fc_input_size()))
        throw ModelShapeMismatch("fc.1.w expects input " +
                                 std::to_string(params_.at("fc.1.w").shape()[0]) + " but config needs " +
                                 std::to_string(cfg_.fc_input_size()));
}

std::vector<Tensor> Model::param_list() {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (auto& [name, t] : params_) out.push_back(t);
    return out;
}

std::map<std::string, Tensor> Model::snapshot() const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, t] : params_) out.emplace(name, Tensor::leaf(t.shape(), t.data(), true));
    return out;
}

void Model::restore(const std::map<std::string, Tensor>& snap) {
    for (auto& [name, t] : params_) t.data() = snap.at(name).data();
}

const Tensor& Model::p(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ModelShapeMismatch("missing parameter " + name);
    return it->second;
}

Model::HeadResult Model::encode_hop(int head_index, const HopMatrix& hop) const {
    if (hop.rows.size() != static_cast<std::size_t>(hop.num_paths))
        throw ShapeMismatch("encode_hop: matrix rows " + std::to_string(hop.rows.size()) +
                                " vs num_paths " + std::to_string(hop.num_paths));
    HeadResult res;
    for (std::size_t r = 0; r < hop.rows.size(); ++r)
        if (!hop.row_is_null(r)) res.real_rows.push_back(static_cast<int>(r));
    if (res.real_rows.empty()) return res;

    const std::size_t R = res.real_rows.size();
    const auto d = static_cast<std::size_t>(cfg_.embed_size);
    const Tensor& embed = p("embed");
    std::string prefix = "head" + std::to_string(head_index) + ".";

    // Null rows are skipped outright: their encodings are zero by definition
    // and masked softmax gives them exactly zero weight either way.
    std::vector<Tensor> xs(kPathSlots);
    for (int t = 0; t < kPathSlots; ++t) {
        std::vector<int> ids(R);
        for (std::size_t r = 0; r < R; ++r)
            ids[r] = hop.rows[static_cast<std::size_t>(res.real_rows[r])].slots[static_cast<std::size_t>(t)];
        xs[static_cast<std::size_t>(t)] = ad::embedding_lookup(embed, ids);
    }

    Tensor enc;
    if (cfg_.rnn_kind == RnnKind::Lstm) {
        detail::LstmLayer l1{p(prefix + "rnn.layer1.w_ih"), p(prefix + "rnn.layer1.w_hh"),
                             p(prefix + "rnn.layer1.b_ih"), p(prefix + "rnn.layer1.b_hh")};
        detail::LstmLayer l2{p(prefix + "rnn.layer2.w_ih"), p(prefix + "rnn.layer2.w_hh"),
                             p(prefix + "rnn.layer2.b_ih"), p(prefix + "rnn.layer2.b_hh")};
        auto o1 = detail::run_lstm(l1, xs, R, d);
        auto o2 = detail::run_lstm(l2, o1.outputs, R, d);
        enc = o2.final_state;
    } else {
        auto layer = [&](int idx, const std::vector<Tensor>& inputs) {
            std::string lp = prefix + "rnn.layer" + std::to_string(idx) + ".";
            detail::LstmLayer fwd{p(lp + "fwd.w_ih"), p(lp + "fwd.w_hh"), p(lp + "fwd.b_ih"),
                                  p(lp + "fwd.b_hh")};
            detail::LstmLayer bwd{p(lp + "bwd.w_ih"), p(lp + "bwd.w_hh"), p(lp + "bwd.b_ih"),
                                  p(lp + "bwd.b_hh")};
            auto bi = detail::run_bilstm(fwd, bwd, inputs, R, d);
            std::vector<Tensor> outs(inputs.size());
            for (std::size_t t = 0; t < inputs.size(); ++t)
                outs[t] = ad::hstack(bi.fwd_outputs[t], bi.bwd_outputs[t]);
            return std::pair{outs, ad::hstack(bi.fwd_final, bi.bwd_final)};
        };
        auto [o1, f1] = layer(1, xs);
        auto [o2, f2] = layer(2, o1);
        enc = ad::matmul(f2, p(prefix + "rnn.layer2.proj"));
    }
    res.encodings = enc;

    if (cfg_.use_attention) {
        Tensor scores = ad::matvec(ad::tanh_t(ad::matmul(enc, p(prefix + "attn.W"))), p(prefix + "attn.v"));
        res.weights = ad::softmax(scores);
    }
    return res;
}

EncodedHop Model::export_hop(const HeadResult& r, int num_paths) const {
    EncodedHop out;
    out.attention_weights.assign(static_cast<std::size_t>(num_paths), 0.0);
    out.path_encodings.assign(static_cast<std::size_t>(num_paths),
                              std::vector<double>(static_cast<std::size_t>(cfg_.embed_size), 0.0));
    if (r.real_rows.empty()) {
        // all-null hop: uniform fallback
        for (auto& w : out.attention_weights) w = 1.0 / static_cast<double>(num_paths);
        return out;
    }
    const auto d = static_cast<std::size_t>(cfg_.embed_size);
    for (std::size_t i = 0; i < r.real_rows.size(); ++i) {
        auto row = static_cast<std::size_t>(r.real_rows[i]);
        if (r.weights.defined()) out.attention_weights[row] = r.weights.data()[i];
        for (std::size_t c = 0; c < d; ++c)
            out.path_encodings[row][c] = r.encodings.data()[i * d + c];
    }
    if (!r.weights.defined()) {
        // attention disabled: report the mean-pool weighting actually used
        for (int row : r.real_rows)
            out.attention_weights[static_cast<std::size_t>(row)] =
                1.0 / static_cast<double>(r.real_rows.size());
    }
    return out;
}

Tensor Model::fc_head(const Tensor& input) const {
    Tensor x = ad::reshape(input, {1, input.size()});
    Tensor h = ad::tanh_t(ad::add_rowvec(ad::matmul(x, p("fc.1.w")), p("fc.1.b")));
    Tensor o = ad::add_rowvec(ad::matmul(h, p("fc.2.w")), p("fc.2.b"));
    return ad::sigmoid(ad::reshape(o, {1}));
}

ForwardResult Model::forward_multi_head(const std::array<HopMatrix, 3>& sample) const {
    if (cfg_.architecture != Architecture::MultiHead)
        throw ModelShapeMismatch("forward_multi_head on a single-head model");
    ForwardResult out;
    std::vector<Tensor> fc_parts;
    for (int h = 0; h < 3; ++h) {
        const HopMatrix& hop = sample[static_cast<std::size_t>(h)];
        if (hop.num_paths != cfg_.num_paths)
            throw ShapeMismatch("hop " + std::to_string(h + 1) + " has num_paths " +
                                    std::to_string(hop.num_paths) + ", model expects " +
                                    std::to_string(cfg_.num_paths));
        HeadResult r = encode_hop(h + 1, hop);
        const auto n = static_cast<std::size_t>(cfg_.num_paths);
        if (cfg_.head_mode == HeadMode::StackedWeights) {
            if (r.real_rows.empty()) {
                fc_parts.push_back(Tensor::leaf({n}, std::vector<double>(n, 1.0 / static_cast<double>(n))));
            } else {
                fc_parts.push_back(ad::scatter_to(n, r.real_rows, r.weights));
            }
        } else {
            if (r.real_rows.empty()) {
                fc_parts.push_back(Tensor::zeros({static_cast<std::size_t>(cfg_.embed_size)}));
            } else {
                Tensor ctx = ad::matmul(ad::reshape(r.weights, {1, r.real_rows.size()}), r.encodings);
                fc_parts.push_back(ad::reshape(ctx, {static_cast<std::size_t>(cfg_.embed_size)}));
            }
        }
        out.hops.push_back(export_hop(r, cfg_.num_paths));
    }
    out.prob = fc_head(ad::concat(fc_parts));
    return out;
}

ForwardResult Model::forward_single_head(const HopMatrix& pooled) const {
    if (cfg_.architecture != Architecture::SingleHead)
        throw ModelShapeMismatch("forward_single_head on a multi-head model");
    if (pooled.num_paths != cfg_.num_paths)
        throw ShapeMismatch("pooled input has num_paths " + std::to_string(pooled.num_paths) +
                                ", model expects " + std::to_string(cfg_.num_paths));
    HeadResult r = encode_hop(1, pooled);
    ForwardResult out;
    Tensor fc_in;
    const auto n = static_cast<std::size_t>(cfg_.num_paths);
    const auto d = static_cast<std::size_t>(cfg_.embed_size);
    if (!cfg_.use_attention) {
        fc_in = r.real_rows.empty() ? Tensor::zeros({d}) : ad::mean_rows(r.encodings);
    } else if (cfg_.head_mode == HeadMode::StackedWeights) {
        fc_in = r.real_rows.empty()
                    ? Tensor::leaf({n}, std::vector<double>(n, 1.0 / static_cast<double>(n)))
                    : ad::scatter_to(n, r.real_rows, r.weights);
    } else {
        fc_in = r.real_rows.empty()
                    ? Tensor::zeros({d})
                    : ad::reshape(ad::matmul(ad::reshape(r.weights, {1, r.real_rows.size()}), r.encodings),
                                  {d});
    }
    out.hops.push_back(export_hop(r, cfg_.num_paths));
    out.prob = fc_head(fc_in);
    return out;
}

}  // namespace privloc
