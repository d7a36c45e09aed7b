#include "privloc/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "privloc/agreement.hpp"
#include "privloc/dataset.hpp"
#include "privloc/gradcheck_suite.hpp"
#include "privloc/localizer.hpp"
#include "privloc/prcs.hpp"
#include "privloc/synth.hpp"
#include "privloc/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace privloc {

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("PRIVLOC_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

json model_config_json(const ModelConfig& m) {
    return {{"architecture", to_string(m.architecture)},
            {"tokenize_nonterminals", m.tokenize_nonterminals},
            {"use_attention", m.use_attention},
            {"rnn_kind", to_string(m.rnn_kind)},
            {"num_paths", m.num_paths},
            {"head_mode", to_string(m.head_mode)},
            {"fc_hidden", m.fc_hidden},
            {"embed_size", m.embed_size}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig m;
    m.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    m.tokenize_nonterminals = j.at("tokenize_nonterminals").get<bool>();
    m.use_attention = j.at("use_attention").get<bool>();
    m.rnn_kind = rnn_kind_from_string(j.at("rnn_kind").get<std::string>());
    m.num_paths = j.at("num_paths").get<int>();
    m.head_mode = head_mode_from_string(j.at("head_mode").get<std::string>());
    m.fc_hidden = j.at("fc_hidden").get<int>();
    m.embed_size = j.at("embed_size").get<int>();
    return m;
}

// Every artifact gets a manifest at <out>.manifest.json.
void write_manifest(const std::string& out_path, const std::string& command, std::uint64_t seed,
                    const json& config, const json& inputs, Clock::time_point started) {
    json j;
    j["command"] = command;
    j["version"] = kToolVersion;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = inputs;
    j["output"] = out_path;
    j["duration_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
    std::ofstream os(out_path + ".manifest.json");
    os << j.dump(2) << "\n";
}

json metrics_json(const Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"confusion", {{"tn", m.tn}, {"fp", m.fp}, {"fn", m.fn}, {"tp", m.tp}}}};
}

json history_json(const std::vector<EpochStats>& history) {
    json arr = json::array();
    for (const auto& e : history)
        arr.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"train_acc", e.train_acc},
                       {"val_acc", e.val_acc}});
    return arr;
}

struct TrainArgs {
    std::string data, experiment = "multi_head", out = "model.bin", metrics = "metrics.json";
    std::uint64_t seed = default_seed();
    int epochs = 50;
    double lr = 1e-5;
    int batch = 8;
    int embed = 128;
    int fc_hidden = 128;
    int pretrain_epochs = 2;
    long min_count = 2;
    std::string head_mode = "stacked_weights";
};

int cmd_train(const TrainArgs& a) {
    auto started = Clock::now();
    auto samples = load_c2s(a.data);
    TrainConfig cfg;
    cfg.seed = a.seed;
    cfg.epochs = a.epochs;
    cfg.lr = a.lr;
    cfg.batch_size = a.batch;
    cfg.pretrain_epochs = a.pretrain_epochs;
    cfg.vocab_min_count = a.min_count;
    cfg.model.embed_size = a.embed;
    cfg.model.fc_hidden = a.fc_hidden;
    cfg.model.head_mode = head_mode_from_string(a.head_mode);
    auto res = run_experiment(a.experiment, samples, cfg);

    ad::save_checkpoint(a.out, res.training.best_params);
    res.training.vocab.save(a.out + ".vocab");

    json cfg_json = {{"experiment", a.experiment},
                     {"epochs", a.epochs},
                     {"lr", a.lr},
                     {"batch_size", a.batch},
                     {"pretrain_epochs", a.pretrain_epochs},
                     {"vocab_min_count", a.min_count},
                     {"model", model_config_json(res.model_config)}};
    write_manifest(a.out, "train", a.seed, cfg_json, {{"data", a.data}}, started);

    json mj;
    mj["experiment"] = a.experiment;
    mj["seed"] = a.seed;
    mj["test"] = metrics_json(res.test);
    mj["best_epoch"] = res.training.best_epoch;
    mj["history"] = history_json(res.training.history);
    std::ofstream ms(a.metrics);
    if (!ms) throw Error("cannot write " + a.metrics);
    ms << mj.dump(2) << "\n";
    ms.close();
    write_manifest(a.metrics, "train", a.seed, cfg_json, {{"data", a.data}}, started);

    std::cout << "test accuracy " << res.test.accuracy << " (f1 " << res.test.f1 << ", best epoch "
              << res.training.best_epoch << ")\n";
    return 0;
}

// Model + vocab + config as written by cmd_train.
struct LoadedModel {
    ModelConfig config;
    Vocab vocab;
    std::map<std::string, ad::Tensor> params;
    std::uint64_t seed = 0;
};

LoadedModel load_model_bundle(const std::string& model_path) {
    LoadedModel out;
    std::ifstream mf(model_path + ".manifest.json");
    if (!mf) throw Error("missing manifest " + model_path + ".manifest.json (written by privloc train)");
    json manifest = json::parse(mf);
    out.config = model_config_from_json(manifest.at("config").at("model"));
    out.seed = manifest.at("seed").get<std::uint64_t>();
    out.vocab = Vocab::load(model_path + ".vocab");
    out.params = ad::load_checkpoint(model_path);
    return out;
}

int cmd_eval(const std::string& model_path, const std::string& data, const std::string& split,
             std::uint64_t seed, const std::string& metrics_out) {
    auto started = Clock::now();
    LoadedModel bundle = load_model_bundle(model_path);
    Model model(bundle.config, std::move(bundle.params));
    auto samples = load_c2s(data);

    std::vector<CodeSample> chosen;
    if (split == "all") {
        chosen = samples;
    } else {
        auto splits = split_dataset(samples, seed);
        if (split == "train")
            chosen = splits[0];
        else if (split == "val")
            chosen = splits[1];
        else if (split == "test")
            chosen = splits[2];
        else
            throw Error("unknown split '" + split + "' (train|val|test|all)");
    }
    auto inputs = materialize_inputs(chosen, bundle.vocab, bundle.config, bundle.seed);
    Metrics m = evaluate(model, inputs);
    json mj;
    mj["split"] = split;
    mj["metrics"] = metrics_json(m);
    if (metrics_out.empty()) {
        std::cout << mj.dump(2) << "\n";
    } else {
        std::ofstream os(metrics_out);
        os << mj.dump(2) << "\n";
        write_manifest(metrics_out, "eval", seed,
                       {{"model", model_path}, {"split", split}}, {{"data", data}}, started);
    }
    std::cout << "accuracy " << m.accuracy << " f1 " << m.f1 << " over " << m.total() << " samples\n";
    return 0;
}

// Rebuild method sources for a sample: per-sample file `<src>/<id>.java`
// (synth layout) or a re-mine of the project when an API list is given.
void attach_sources(std::vector<CodeSample>& samples, const std::string& src_dir,
                    const std::string& apis_path) {
    std::map<std::string, CodeSample> mined;
    if (!apis_path.empty()) {
        auto apis = ApiSignatureList::from_file(apis_path);
        for (auto& s : find_prcs(src_dir, apis)) mined.emplace(s.id, std::move(s));
    }
    for (auto& s : samples) {
        fs::path per_sample = fs::path(src_dir) / (s.id + ".java");
        if (fs::exists(per_sample)) {
            std::ifstream is(per_sample);
            std::stringstream ss;
            ss << is.rdbuf();
            ParsedFile pf = parse_java_file(ss.str(), per_sample.filename().string());
            s.hops.assign(pf.methods.begin(),
                          pf.methods.begin() +
                              static_cast<long>(std::min(pf.methods.size(), s.hop_count())));
        } else if (auto it = mined.find(s.id); it != mined.end()) {
            s.hops = it->second.hops;
        }
    }
}

int cmd_localize(const std::string& model_path, const std::string& sample_path,
                 const std::string& src_dir, const std::string& apis_path, const std::string& id,
                 const std::string& format, int top_k, const std::string& out) {
    auto started = Clock::now();
    LoadedModel bundle = load_model_bundle(model_path);
    Model model(bundle.config, std::move(bundle.params));
    auto samples = load_c2s(sample_path);
    if (!id.empty()) {
        std::erase_if(samples, [&](const CodeSample& s) { return s.id != id; });
        if (samples.empty()) throw Error("sample '" + id + "' not found in " + sample_path);
    }
    if (!src_dir.empty()) attach_sources(samples, src_dir, apis_path);

    ReportFormat fmt = report_format_from_string(format);
    LocalizeOptions opt;
    opt.top_k = top_k;
    opt.seed = bundle.seed;

    std::ostringstream body;
    json jarr = json::array();
    for (const auto& s : samples) {
        LocalizationReport rep = localize(s, model, bundle.vocab, opt);
        if (fmt == ReportFormat::Json)
            jarr.push_back(json::parse(report_to_json(rep)));
        else
            body << render_annotated(rep, s, fmt);
    }
    std::string text = fmt == ReportFormat::Json ? jarr.dump(2) + "\n" : body.str();
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        std::ofstream os(out, std::ios::binary);
        os << text;
        write_manifest(out, "localize", bundle.seed,
                       {{"model", model_path}, {"format", format}, {"top_k", top_k}},
                       {{"sample", sample_path}, {"src", src_dir}}, started);
    }
    return 0;
}

int cmd_mine(const std::string& project, const std::string& apis_path, const std::string& out,
             int max_nonterminals, bool from_stdin) {
    auto started = Clock::now();
    if (from_stdin) {
        std::stringstream ss;
        ss << std::cin.rdbuf();
        MethodAst m = parse_java_method(ss.str(), "<stdin>");
        for (const auto& p : extract_ast_paths(m, max_nonterminals))
            std::cout << path_to_string(p) << "\n";
        return 0;
    }
    auto apis = ApiSignatureList::from_file(apis_path);
    std::vector<std::string> warnings;
    auto samples = find_prcs(project, apis, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: skipped " << w << "\n";
    for (auto& s : samples) mine_sample_paths(s, max_nonterminals);
    save_c2s(samples, out);
    write_manifest(out, "mine", 0,
                   {{"max_nonterminals", max_nonterminals}},
                   {{"project", project}, {"apis", apis_path}}, started);
    std::cout << "mined " << samples.size() << " samples from " << project << "\n";
    return 0;
}

int cmd_dataset(const std::string& data, bool stats, const std::string& split_out,
                std::uint64_t seed, const std::string& vocab_out, bool tokenize_nts, long min_count) {
    auto started = Clock::now();
    auto samples = load_c2s(data);
    if (stats) {
        std::size_t hops = 0, paths = 0, labeled = 0;
        for (const auto& s : samples) {
            hops += s.hop_paths.size();
            labeled += s.label.has_value();
            for (const auto& h : s.hop_paths) paths += h.size();
        }
        std::cout << "samples " << samples.size() << ", labeled " << labeled << ", hops " << hops
                  << ", paths " << paths << "\n";
    }
    if (!vocab_out.empty()) {
        Vocab v = build_vocab(samples, tokenize_nts, min_count);
        v.save(vocab_out);
        write_manifest(vocab_out, "dataset", seed,
                       {{"tokenize_nonterminals", tokenize_nts}, {"min_count", min_count}},
                       {{"data", data}}, started);
        std::cout << "vocab " << v.size() << " tokens -> " << vocab_out << "\n";
    }
    if (!split_out.empty()) {
        auto splits = split_dataset(samples, seed);
        fs::create_directories(split_out);
        const char* names[3] = {"train", "val", "test"};
        for (int i = 0; i < 3; ++i) {
            std::string path = (fs::path(split_out) / (std::string(names[i]) + ".c2s")).string();
            save_c2s(splits[static_cast<std::size_t>(i)], path);
            write_manifest(path, "dataset", seed, {{"split", names[i]}}, {{"data", data}}, started);
        }
        std::cout << "split " << splits[0].size() << "/" << splits[1].size() << "/" << splits[2].size()
                  << " -> " << split_out << "\n";
    }
    return 0;
}

int cmd_agree(const std::string& ratings, const std::string& stats) {
    auto m = RatingMatrix::from_csv_file(ratings);
    json out;
    if (stats == "all" || stats == "kappa") out["fleiss_kappa"] = fleiss_kappa(m);
    if (stats == "all" || stats == "alpha") out["krippendorff_alpha"] = krippendorff_alpha(m);
    if (stats == "all" || stats == "cases") {
        auto c = agreement_cases(m);
        out["best_case_pct"] = c.best_case;
        out["majority_case_pct"] = c.majority_case;
    }
    if (out.empty()) throw Error("unknown stats selection '" + stats + "' (all|kappa|alpha|cases)");
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_gradcheck(int seeds) {
    bool ok = true;
    for (const auto& r : op_gradient_checks(seeds)) {
        std::cout << (r.ok() ? "ok   " : "FAIL ") << r.name << "  max_rel_err " << r.max_rel_error
                  << " (< " << r.threshold << ")\n";
        ok = ok && r.ok();
    }
    auto full = full_graph_gradient_check(seeds);
    std::cout << (full.ok() ? "ok   " : "FAIL ") << full.name << "  max_rel_err "
              << full.max_rel_error << " (< " << full.threshold << ")\n";
    ok = ok && full.ok();
    if (!ok) throw Error("gradient check failed");
    return 0;
}

int cmd_synth(int n, int marker_hop, std::uint64_t seed, const std::string& out_dir) {
    auto started = Clock::now();
    SynthOptions opt;
    opt.n = n;
    opt.marker_hop = marker_hop;
    opt.seed = seed;
    opt.out_dir = out_dir;
    auto res = generate_synth(opt);
    write_manifest(res.c2s_path, "synth", seed, {{"n", n}, {"marker_hop", marker_hop}}, json::object(),
                   started);
    std::cout << "wrote " << res.samples.size() << " samples to " << res.c2s_path << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"privloc: mine AST paths, classify privacy behaviors, localize them in source"};
    app.set_version_flag("--version", kToolVersion);
    app.set_config("--config");
    app.require_subcommand(1);

    // mine
    auto* mine = app.add_subcommand("mine", "extract PRCS samples from Java sources");
    std::string mine_project, mine_apis, mine_out = "samples.c2s";
    int mine_max_nts = kMaxNonterminals;
    bool mine_stdin = false;
    mine->add_option("--project", mine_project, "project directory with .java files");
    mine->add_option("--apis", mine_apis, "permission-requiring API list (one dotted name per line)");
    mine->add_option("--out", mine_out, "output .c2s file");
    mine->add_option("--max-nonterminals", mine_max_nts, "AST path length bound")->check(CLI::Range(1, 8));
    mine->add_flag("--stdin", mine_stdin, "read one method from stdin and print its paths");

    // dataset
    auto* dataset = app.add_subcommand("dataset", "inspect, split or build vocabularies from .c2s data");
    std::string ds_data, ds_split_out, ds_vocab_out;
    bool ds_stats = false, ds_tok = true;
    long ds_min_count = 2;
    std::uint64_t ds_seed = default_seed();
    dataset->add_option("--data", ds_data, ".c2s input")->required();
    dataset->add_flag("--stats", ds_stats, "print sample/path counts");
    dataset->add_option("--split-out", ds_split_out, "write train/val/test .c2s files here");
    dataset->add_option("--vocab-out", ds_vocab_out, "write a vocabulary file");
    dataset->add_option("--tokenize-nonterminals", ds_tok, "vocabulary tokenization mode");
    dataset->add_option("--min-count", ds_min_count, "vocabulary frequency cutoff");
    dataset->add_option("--seed", ds_seed, "split shuffle seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train one of the experiment configurations");
    TrainArgs ta;
    train_cmd->add_option("--data", ta.data, ".c2s input")->required();
    train_cmd->add_option("--experiment", ta.experiment,
                          "baseline|L_100|L_200|L_300|Bi_100|Bi_200|Bi_300|multi_head");
    train_cmd->add_option("--seed", ta.seed, "seed for split/init/sampling");
    train_cmd->add_option("--out", ta.out, "model checkpoint path");
    train_cmd->add_option("--metrics", ta.metrics, "metrics.json path");
    train_cmd->add_option("--epochs", ta.epochs, "training epochs");
    train_cmd->add_option("--lr", ta.lr, "Adam learning rate");
    train_cmd->add_option("--batch", ta.batch, "batch size");
    train_cmd->add_option("--embed", ta.embed, "embedding size");
    train_cmd->add_option("--fc-hidden", ta.fc_hidden, "fully-connected hidden width");
    train_cmd->add_option("--pretrain-epochs", ta.pretrain_epochs, "skip-gram pretraining epochs");
    train_cmd->add_option("--min-count", ta.min_count, "vocabulary frequency cutoff");
    train_cmd->add_option("--head-mode", ta.head_mode, "stacked_weights|weighted_context");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model on a .c2s file");
    std::string ev_model, ev_data, ev_split = "all", ev_metrics;
    std::uint64_t ev_seed = default_seed();
    eval_cmd->add_option("--model", ev_model, "model checkpoint")->required();
    eval_cmd->add_option("--data", ev_data, ".c2s input")->required();
    eval_cmd->add_option("--split", ev_split, "train|val|test|all");
    eval_cmd->add_option("--seed", ev_seed, "split seed (must match training)");
    eval_cmd->add_option("--metrics", ev_metrics, "write metrics json here");

    // localize
    auto* loc = app.add_subcommand("localize", "map high-attention paths to source lines");
    std::string lo_model, lo_sample, lo_src, lo_apis, lo_id, lo_format = "text", lo_out;
    int lo_topk = 20;
    loc->add_option("--model", lo_model, "model checkpoint")->required();
    loc->add_option("--sample", lo_sample, ".c2s with the samples to localize")->required();
    loc->add_option("--src", lo_src, "source directory (per-sample <id>.java or a project)");
    loc->add_option("--apis", lo_apis, "API list for re-mining project sources");
    loc->add_option("--id", lo_id, "localize only this sample id");
    loc->add_option("--format", lo_format, "text|html|json");
    loc->add_option("--top-k", lo_topk, "paths per hop");
    loc->add_option("--out", lo_out, "output file ('-' = stdout)");

    // agree
    auto* agree = app.add_subcommand("agree", "inter-rater agreement statistics");
    std::string ag_ratings, ag_stats = "all";
    agree->add_option("--ratings", ag_ratings, "csv with header item,rater,label")->required();
    agree->add_option("--stats", ag_stats, "all|kappa|alpha|cases");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every op and the full model");
    int gc_seeds = 20;
    gc->add_option("--seeds", gc_seeds, "random draws per op");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a planted-signal dataset with sources");
    int sy_n = 1000, sy_hop = 2;
    std::uint64_t sy_seed = default_seed();
    std::string sy_out;
    synth->add_option("--n", sy_n, "sample count");
    synth->add_option("--marker-hop", sy_hop, "hop carrying the marker in positives")->check(CLI::Range(1, 3));
    synth->add_option("--seed", sy_seed, "generator seed");
    synth->add_option("--out", sy_out, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (mine->parsed()) {
            if (!mine_stdin && (mine_project.empty() || mine_apis.empty()))
                throw CLI::RequiredError("--project and --apis (or --stdin)");
            return cmd_mine(mine_project, mine_apis, mine_out, mine_max_nts, mine_stdin);
        }
        if (dataset->parsed())
            return cmd_dataset(ds_data, ds_stats, ds_split_out, ds_seed, ds_vocab_out, ds_tok,
                               ds_min_count);
        if (train_cmd->parsed()) return cmd_train(ta);
        if (eval_cmd->parsed()) return cmd_eval(ev_model, ev_data, ev_split, ev_seed, ev_metrics);
        if (loc->parsed())
            return cmd_localize(lo_model, lo_sample, lo_src, lo_apis, lo_id, lo_format, lo_topk, lo_out);
        if (agree->parsed()) return cmd_agree(ag_ratings, ag_stats);
        if (gc->parsed()) return cmd_gradcheck(gc_seeds);
        if (synth->parsed()) return cmd_synth(sy_n, sy_hop, sy_seed, sy_out);
        return 1;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace privloc
