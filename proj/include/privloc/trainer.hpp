#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "privloc/model.hpp"
#include "privloc/prcs.hpp"

namespace privloc {

struct TrainConfig {
    int batch_size = 8;
    double lr = 1e-5;
    int epochs = 50;
    std::uint64_t seed = 0;
    int pretrain_epochs = 2;
    long vocab_min_count = 2;
    ModelConfig model;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // confusion matrix, actual x predicted, positive class = 1
    long tn = 0, fp = 0, fn = 0, tp = 0;

    long total() const { return tn + fp + fn + tp; }
    static Metrics from_confusion(long tn, long fp, long fn, long tp);
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

// One materialized training example: hop matrices for the multi-head
// architecture or a pooled matrix for single-head ones.
struct ModelInput {
    std::string id;
    int label = 0;
    std::array<HopMatrix, 3> hops;
    HopMatrix pooled;
};

struct TrainResult {
    std::map<std::string, ad::Tensor> best_params;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    Vocab vocab;
    EmbeddingTable embeddings;
};

Vocab build_vocab(const std::vector<CodeSample>& train, bool tokenize_nonterminals, long min_count = 2);

// Per-hop (multi-head) and pooled (single-head) input matrices for one
// sample; the sampling stream is keyed on (seed, sample id, hop) so the same
// sample always materializes identically.
std::array<HopMatrix, 3> sample_hop_matrices(const CodeSample& s, const Vocab& vocab,
                                             const ModelConfig& cfg, std::uint64_t seed);
HopMatrix sample_pooled_matrix(const CodeSample& s, const Vocab& vocab, const ModelConfig& cfg,
                               std::uint64_t seed);

// Tokenizes and samples each labeled example into the model's input layout.
// Unlabeled samples are rejected.
std::vector<ModelInput> materialize_inputs(const std::vector<CodeSample>& samples, const Vocab& vocab,
                                           const ModelConfig& cfg, std::uint64_t seed);

ad::Tensor forward_prob(const Model& model, const ModelInput& input);

// Batch-8 Adam/BCE training with per-epoch validation; parameters from the
// epoch with the best validation accuracy (ties keep the earlier epoch) win.
TrainResult train(const std::vector<CodeSample>& train_split, const std::vector<CodeSample>& val_split,
                  const TrainConfig& cfg);

Metrics evaluate(const Model& model, const std::vector<ModelInput>& inputs);

extern const std::vector<std::string> kExperimentNames;

// Table row -> model configuration: baseline, L_100, L_200, L_300, Bi_100,
// Bi_200, Bi_300 or multi_head.
ModelConfig experiment_config(const std::string& name);

struct ExperimentResult {
    Metrics test;
    TrainResult training;
    ModelConfig model_config;
};

// Splits 80:10:10 with the config seed, trains the named configuration and
// evaluates the held-out test split.
ExperimentResult run_experiment(const std::string& name, const std::vector<CodeSample>& samples,
                                TrainConfig base);

}  // namespace privloc
