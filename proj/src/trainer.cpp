#include "privloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "privloc/rng.hpp"

namespace privloc {

Metrics Metrics::from_confusion(long tn, long fp, long fn, long tp) {
    Metrics m;
    m.tn = tn;
    m.fp = fp;
    m.fn = fn;
    m.tp = tp;
    long total = m.total();
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Vocab build_vocab(const std::vector<CodeSample>& train, bool tokenize_nonterminals, long min_count) {
    std::map<std::string, long> counts;
    for (const auto& s : train)
        for (const auto& hop : s.hop_paths)
            for (const auto& p : hop)
                for (const auto& tok : path_tokens(p, tokenize_nonterminals)) ++counts[tok];
    return Vocab::build(counts, min_count);
}

std::array<HopMatrix, 3> sample_hop_matrices(const CodeSample& s, const Vocab& vocab,
                                             const ModelConfig& cfg, std::uint64_t seed) {
    std::array<HopMatrix, 3> out;
    std::uint64_t id_hash = fnv1a(s.id);
    for (int h = 0; h < 3; ++h) {
        std::vector<TokenizedPath> toks;
        if (static_cast<std::size_t>(h) < s.hop_paths.size())
            for (const auto& p : s.hop_paths[static_cast<std::size_t>(h)])
                toks.push_back(tokenize_path(p, vocab, cfg.tokenize_nonterminals));
        out[static_cast<std::size_t>(h)] =
            sample_paths(toks, cfg.num_paths, Rng::mix(seed, id_hash, static_cast<std::uint64_t>(h)));
    }
    return out;
}

HopMatrix sample_pooled_matrix(const CodeSample& s, const Vocab& vocab, const ModelConfig& cfg,
                               std::uint64_t seed) {
    std::vector<TokenizedPath> pooled;
    for (const auto& hop : s.hop_paths)
        for (const auto& p : hop) pooled.push_back(tokenize_path(p, vocab, cfg.tokenize_nonterminals));
    return sample_paths(pooled, cfg.num_paths, Rng::mix(seed, fnv1a(s.id), 0xb001ed));
}

std::vector<ModelInput> materialize_inputs(const std::vector<CodeSample>& samples, const Vocab& vocab,
                                           const ModelConfig& cfg, std::uint64_t seed) {
    std::vector<ModelInput> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.label) throw Error("sample " + s.id + " has no label; cannot train/evaluate on it");
        ModelInput in;
        in.id = s.id;
        in.label = *s.label;
        if (cfg.architecture == Architecture::MultiHead)
            in.hops = sample_hop_matrices(s, vocab, cfg, seed);
        else
            in.pooled = sample_pooled_matrix(s, vocab, cfg, seed);
        out.push_back(std::move(in));
    }
    return out;
}

ad::Tensor forward_prob(const Model& model, const ModelInput& input) {
    if (model.config().architecture == Architecture::MultiHead)
        return model.forward_multi_head(input.hops).prob;
    return model.forward_single_head(input.pooled).prob;
}

Metrics evaluate(const Model& model, const std::vector<ModelInput>& inputs) {
    ad::NoGradGuard ng;
    long tn = 0, fp = 0, fn = 0, tp = 0;
    for (const auto& in : inputs) {
        double p = forward_prob(model, in).item();
        int pred = p >= 0.5 ? 1 : 0;
        if (in.label == 1)
            (pred == 1 ? tp : fn)++;
        else
            (pred == 1 ? fp : tn)++;
    }
    return Metrics::from_confusion(tn, fp, fn, tp);
}

TrainResult train(const std::vector<CodeSample>& train_split, const std::vector<CodeSample>& val_split,
                  const TrainConfig& cfg) {
    if (train_split.empty()) throw EmptySplit("train");
    if (val_split.empty()) throw EmptySplit("val");

    TrainResult result;
    result.vocab = build_vocab(train_split, cfg.model.tokenize_nonterminals, cfg.vocab_min_count);

    std::vector<TokenizedPath> corpus;
    for (const auto& s : train_split)
        for (const auto& hop : s.hop_paths)
            for (const auto& p : hop)
                corpus.push_back(tokenize_path(p, result.vocab, cfg.model.tokenize_nonterminals));
    result.embeddings = pretrain_embeddings(corpus, result.vocab.size(),
                                            static_cast<std::size_t>(cfg.model.embed_size),
                                            cfg.pretrain_epochs, cfg.seed);

    Model model(cfg.model, result.vocab.size(), cfg.seed, &result.embeddings);
    auto train_inputs = materialize_inputs(train_split, result.vocab, cfg.model, cfg.seed);
    auto val_inputs = materialize_inputs(val_split, result.vocab, cfg.model, cfg.seed);

    auto params = model.param_list();
    auto& embed = model.params().at("embed");
    const auto embed_cols = embed.shape()[1];
    ad::AdamState adam;

    double best_val = -1.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(train_inputs.size());
        std::iota(order.begin(), order.end(), 0);
        Rng erng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(epoch), 0xe60c));
        erng.shuffle(order);

        double loss_sum = 0.0;
        long correct = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const ModelInput& in = train_inputs[order[k]];
                ad::Tensor prob = forward_prob(model, in);
                ad::Tensor loss = ad::bce_loss(prob, static_cast<double>(in.label));
                loss_sum += loss.item();
                if ((prob.item() >= 0.5 ? 1 : 0) == in.label) ++correct;
                ad::backward(loss, inv);
            }
            // PAD embedding row never learns
            for (std::size_t c = 0; c < embed_cols; ++c) embed.grad()[c] = 0.0;
            ad::adam_step(params, adam, cfg.lr);
            for (std::size_t c = 0; c < embed_cols; ++c) embed.data()[c] = 0.0;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train_inputs.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(train_inputs.size());
        stats.val_acc = evaluate(model, val_inputs).accuracy;
        result.history.push_back(stats);

        if (stats.val_acc > best_val) {
            best_val = stats.val_acc;
            result.best_epoch = epoch;
            result.best_params = model.snapshot();
        }
    }
    if (result.best_params.empty()) result.best_params = model.snapshot();
    return result;
}

const std::vector<std::string> kExperimentNames = {"baseline", "L_100", "L_200", "L_300",
                                                   "Bi_100", "Bi_200", "Bi_300", "multi_head"};

ModelConfig experiment_config(const std::string& name) {
    ModelConfig cfg;
    cfg.architecture = Architecture::SingleHead;
    if (name == "baseline") {
        cfg.tokenize_nonterminals = false;
        cfg.use_attention = false;
        cfg.rnn_kind = RnnKind::Lstm;
        cfg.num_paths = 100;
    } else if (name == "L_100" || name == "L_200" || name == "L_300") {
        cfg.rnn_kind = RnnKind::Lstm;
        cfg.num_paths = std::stoi(name.substr(2));
    } else if (name == "Bi_100" || name == "Bi_200" || name == "Bi_300") {
        cfg.rnn_kind = RnnKind::BiLstm;
        cfg.num_paths = std::stoi(name.substr(3));
    } else if (name == "multi_head") {
        cfg.architecture = Architecture::MultiHead;
        cfg.rnn_kind = RnnKind::Lstm;
        cfg.num_paths = 100;  // per hop
    } else {
        throw UnknownExperiment(name);
    }
    return cfg;
}

ExperimentResult run_experiment(const std::string& name, const std::vector<CodeSample>& samples,
                                TrainConfig base) {
    ModelConfig mc = experiment_config(name);
    mc.head_mode = base.model.head_mode;
    mc.fc_hidden = base.model.fc_hidden;
    mc.embed_size = base.model.embed_size;
    base.model = mc;

    auto splits = split_dataset(samples, base.seed);
    ExperimentResult out;
    out.model_config = mc;
    out.training = train(splits[0], splits[1], base);
    Model best(mc, out.training.best_params);
    auto test_inputs = materialize_inputs(splits[2], out.training.vocab, mc, base.seed);
    out.test = evaluate(best, test_inputs);
    return out;
}

}  // namespace privloc
