#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "privloc/dataset.hpp"
#include "privloc/tensor.hpp"

namespace privloc {

enum class Architecture { SingleHead, MultiHead };
enum class RnnKind { Lstm, BiLstm };

// What feeds the fully-connected head. StackedWeights stacks the per-hop
// attention weight vectors into a 3 x num_paths matrix; WeightedContext sums
// attention-weighted path encodings into one context vector per hop.
enum class HeadMode { StackedWeights, WeightedContext };

struct ModelConfig {
    Architecture architecture = Architecture::MultiHead;
    bool tokenize_nonterminals = true;
    bool use_attention = true;
    RnnKind rnn_kind = RnnKind::Lstm;
    int num_paths = 100;  // per hop (multi-head) or pooled total (single-head)
    HeadMode head_mode = HeadMode::StackedWeights;
    int fc_hidden = 128;
    int embed_size = 128;

    int head_count() const { return architecture == Architecture::MultiHead ? 3 : 1; }
    int fc_input_size() const;
};

std::string to_string(Architecture a);
std::string to_string(RnnKind k);
std::string to_string(HeadMode m);
Architecture architecture_from_string(const std::string& s);
RnnKind rnn_kind_from_string(const std::string& s);
HeadMode head_mode_from_string(const std::string& s);

// Weights and encodings of one hop after its encoder head ran. Attention
// weights cover all num_paths rows; null rows hold exact zeros, and a hop
// with no real paths falls back to uniform 1/num_paths.
struct EncodedHop {
    std::vector<double> attention_weights;
    std::vector<std::vector<double>> path_encodings;  // num_paths x embed_size, zero rows for nulls
};

struct ForwardResult {
    ad::Tensor prob;                      // scalar in (0,1)
    std::vector<EncodedHop> hops;         // one per head
};

namespace detail {

struct LstmLayer {
    ad::Tensor w_ih, w_hh, b_ih, b_hh;
};

struct RnnOutput {
    std::vector<ad::Tensor> outputs;  // per timestep, R x H
    ad::Tensor final_state;           // R x H
};

RnnOutput run_lstm(const LstmLayer& layer, const std::vector<ad::Tensor>& xs, std::size_t batch,
                   std::size_t hidden);

// Both directions of one Bi-LSTM layer, outputs re-ordered to source order.
struct BiRnnOutput {
    std::vector<ad::Tensor> fwd_outputs;
    std::vector<ad::Tensor> bwd_outputs;  // bwd state at source position t
    ad::Tensor fwd_final;
    ad::Tensor bwd_final;
};

BiRnnOutput run_bilstm(const LstmLayer& fwd, const LstmLayer& bwd, const std::vector<ad::Tensor>& xs,
                       std::size_t batch, std::size_t hidden);

}  // namespace detail

class Model {
public:
    Model(ModelConfig cfg, std::size_t vocab_size, std::uint64_t seed,
          const EmbeddingTable* pretrained = nullptr);
    Model(ModelConfig cfg, std::map<std::string, ad::Tensor> params);

    const ModelConfig& config() const { return cfg_; }
    std::size_t vocab_size() const { return params_.at("embed").shape()[0]; }
    std::map<std::string, ad::Tensor>& params() { return params_; }
    const std::map<std::string, ad::Tensor>& params() const { return params_; }
    std::vector<ad::Tensor> param_list();  // map order, stable

    // Deep copy of current parameter values.
    std::map<std::string, ad::Tensor> snapshot() const;
    void restore(const std::map<std::string, ad::Tensor>& snap);

    ForwardResult forward_multi_head(const std::array<HopMatrix, 3>& sample) const;
    ForwardResult forward_single_head(const HopMatrix& pooled) const;

private:
    struct HeadResult {
        ad::Tensor encodings;       // R x d, undefined when no real rows
        ad::Tensor weights;         // R softmax weights, undefined when unused
        std::vector<int> real_rows;
    };

    HeadResult encode_hop(int head_index, const HopMatrix& hop) const;
    ad::Tensor fc_head(const ad::Tensor& input) const;
    EncodedHop export_hop(const HeadResult& r, int num_paths) const;
    const ad::Tensor& p(const std::string& name) const;

    ModelConfig cfg_;
    std::map<std::string, ad::Tensor> params_;
};

}  // namespace privloc
