#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "privloc/model.hpp"
#include "privloc/rng.hpp"

using namespace privloc;

namespace {

// small config for fast graphs
ModelConfig tiny_multi() {
    ModelConfig cfg;
    cfg.architecture = Architecture::MultiHead;
    cfg.num_paths = 4;
    cfg.embed_size = 5;
    cfg.fc_hidden = 6;
    return cfg;
}

HopMatrix random_hop(Rng& rng, int num_paths, int real, int vocab) {
    HopMatrix m;
    m.num_paths = num_paths;
    m.rows.assign(static_cast<std::size_t>(num_paths), TokenizedPath{});
    m.src_path.assign(static_cast<std::size_t>(num_paths), -1);
    for (int r = 0; r < real; ++r) {
        TokenizedPath p{};
        p.slots[0] = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(vocab - 2)));
        std::size_t k = 1 + rng.index(4);
        for (std::size_t i = 0; i < k; ++i)
            p.slots[1 + i] = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(vocab - 2)));
        p.slots[9] = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(vocab - 2)));
        m.rows[static_cast<std::size_t>(r)] = p;
        m.src_path[static_cast<std::size_t>(r)] = r;
    }
    return m;
}

}  // namespace

TEST_CASE("single real path takes all the attention weight") {
    Rng rng(3);
    Model model(tiny_multi(), 12, 5);
    std::array<HopMatrix, 3> sample{random_hop(rng, 4, 1, 12), random_hop(rng, 4, 2, 12),
                                    random_hop(rng, 4, 3, 12)};
    auto fr = model.forward_multi_head(sample);
    CHECK(fr.hops[0].attention_weights[0] == doctest::Approx(1.0).epsilon(1e-9));
    for (int r = 1; r < 4; ++r) CHECK(fr.hops[0].attention_weights[static_cast<std::size_t>(r)] == 0.0);
}

TEST_CASE("all-null hop falls back to uniform weights") {
    Rng rng(4);
    Model model(tiny_multi(), 12, 5);
    std::array<HopMatrix, 3> sample{random_hop(rng, 4, 2, 12), random_hop(rng, 4, 0, 12),
                                    random_hop(rng, 4, 2, 12)};
    auto fr = model.forward_multi_head(sample);
    for (double w : fr.hops[1].attention_weights) CHECK(w == doctest::Approx(0.25));
    CHECK(fr.prob.item() > 0.0);
    CHECK(fr.prob.item() < 1.0);
}

TEST_CASE("attention weights sum to one and match an independent recomputation") {
    Rng rng(5);
    ModelConfig cfg = tiny_multi();
    Model model(cfg, 20, 6);
    std::array<HopMatrix, 3> sample{random_hop(rng, 4, 3, 20), random_hop(rng, 4, 4, 20),
                                    random_hop(rng, 4, 2, 20)};
    auto fr = model.forward_multi_head(sample);
    const auto d = static_cast<std::size_t>(cfg.embed_size);
    for (int h = 0; h < 3; ++h) {
        const auto& hop = fr.hops[static_cast<std::size_t>(h)];
        double sum = 0.0;
        for (double w : hop.attention_weights) sum += w;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

        // straight-line recomputation of v . tanh(W enc) and softmax
        const auto& W = model.params().at("head" + std::to_string(h + 1) + ".attn.W");
        const auto& v = model.params().at("head" + std::to_string(h + 1) + ".attn.v");
        std::vector<double> scores;
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < hop.path_encodings.size(); ++r) {
            bool real = false;
            for (double x : hop.path_encodings[r])
                if (x != 0.0) real = true;
            if (!real) continue;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < d; ++i)
                    acc += hop.path_encodings[r][i] * W.data()[i * d + j];
                s += v.data()[j] * std::tanh(acc);
            }
            scores.push_back(s);
            rows.push_back(r);
        }
        double mx = *std::max_element(scores.begin(), scores.end());
        double z = 0.0;
        for (double s : scores) z += std::exp(s - mx);
        for (std::size_t i = 0; i < scores.size(); ++i)
            CHECK(hop.attention_weights[rows[i]] == doctest::Approx(std::exp(scores[i] - mx) / z).epsilon(1e-9));
    }
}

TEST_CASE("zero fully-connected parameters give probability one half") {
    Rng rng(6);
    Model model(tiny_multi(), 12, 7);
    for (auto name : {"fc.1.w", "fc.1.b", "fc.2.w", "fc.2.b"}) {
        auto& t = model.params().at(name);
        std::fill(t.data().begin(), t.data().end(), 0.0);
    }
    std::array<HopMatrix, 3> sample{random_hop(rng, 4, 2, 12), random_hop(rng, 4, 3, 12),
                                    random_hop(rng, 4, 1, 12)};
    CHECK(model.forward_multi_head(sample).prob.item() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("permuting hop rows permutes the weights with them") {
    Rng rng(7);
    Model model(tiny_multi(), 16, 8);
    std::array<HopMatrix, 3> sample{random_hop(rng, 4, 4, 16), random_hop(rng, 4, 3, 16),
                                    random_hop(rng, 4, 2, 16)};
    auto before = model.forward_multi_head(sample);
    // rotate hop 1 rows
    std::rotate(sample[0].rows.begin(), sample[0].rows.begin() + 1, sample[0].rows.end());
    std::rotate(sample[0].src_path.begin(), sample[0].src_path.begin() + 1, sample[0].src_path.end());
    auto after = model.forward_multi_head(sample);
    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    CHECK(sorted(before.hops[0].attention_weights) == sorted(after.hops[0].attention_weights));
    // and specifically each weight followed its row
    for (std::size_t r = 0; r < 4; ++r)
        CHECK(before.hops[0].attention_weights[(r + 1) % 4] ==
              doctest::Approx(after.hops[0].attention_weights[r]).epsilon(1e-12));
}

TEST_CASE("single-head stacked-weights config reproduces the Exp 1 fc shape") {
    ModelConfig cfg;
    cfg.architecture = Architecture::SingleHead;
    cfg.num_paths = 100;
    cfg.embed_size = 8;
    cfg.fc_hidden = 16;
    Model model(cfg, 30, 9);
    CHECK(model.params().at("fc.1.w").shape()[0] == 100);  // fc input length = num_paths
    CHECK(model.params().count("head1.attn.W") == 1);
    CHECK(model.params().count("head2.attn.W") == 0);
}

TEST_CASE("bi-lstm single head accepts a 300-row pooled matrix") {
    Rng rng(10);
    ModelConfig cfg;
    cfg.architecture = Architecture::SingleHead;
    cfg.rnn_kind = RnnKind::BiLstm;
    cfg.num_paths = 300;
    cfg.embed_size = 4;
    cfg.fc_hidden = 4;
    Model model(cfg, 12, 10);
    HopMatrix pooled = random_hop(rng, 300, 25, 12);
    auto fr = model.forward_single_head(pooled);
    CHECK(fr.prob.item() > 0.0);
    CHECK(fr.prob.item() < 1.0);
    CHECK(model.params().count("head1.rnn.layer2.proj") == 1);
    CHECK(model.params().at("head1.rnn.layer2.fwd.w_ih").shape()[0] == 8);  // 2d input to layer 2
}

TEST_CASE("baseline mean-pool feeds a single encoding when all encodings are equal") {
    Rng rng(11);
    ModelConfig cfg;
    cfg.architecture = Architecture::SingleHead;
    cfg.use_attention = false;
    cfg.num_paths = 6;
    cfg.embed_size = 5;
    cfg.fc_hidden = 4;
    Model model(cfg, 12, 12);
    // identical rows -> identical encodings -> mean equals any single one
    HopMatrix one = random_hop(rng, 6, 1, 12);
    HopMatrix many;
    many.num_paths = 6;
    many.rows.assign(6, one.rows[0]);
    many.src_path = {0, 1, 2, 3, 4, 5};
    CHECK(model.forward_single_head(many).prob.item() ==
          doctest::Approx(model.forward_single_head(one).prob.item()).epsilon(1e-12));
}

TEST_CASE("bi-lstm direction wiring: palindromic input with shared weights") {
    // With the two directions sharing weights and a palindromic input, the
    // backward encoding sequence must be the forward sequence reversed, and
    // the two final states must coincide. A wiring slip (missing re-reversal)
    // breaks the first check.
    Rng rng(13);
    const std::size_t d = 3;
    std::vector<double> wih(d * 4 * d), whh(d * 4 * d), b(4 * d);
    for (auto& v : wih) v = rng.uniform(-0.5, 0.5);
    for (auto& v : whh) v = rng.uniform(-0.5, 0.5);
    for (auto& v : b) v = rng.uniform(-0.5, 0.5);
    detail::LstmLayer shared{ad::Tensor::leaf({d, 4 * d}, wih), ad::Tensor::leaf({d, 4 * d}, whh),
                             ad::Tensor::leaf({4 * d}, b), ad::Tensor::leaf({4 * d}, b)};
    std::vector<ad::Tensor> xs;
    const int T = 7;
    std::vector<std::vector<double>> steps;
    for (int t = 0; t < T; ++t) {
        int mirror = std::min(t, T - 1 - t);
        std::vector<double> x = {0.1 * mirror, -0.2 * mirror, 0.05 + 0.3 * mirror};
        steps.push_back(x);
    }
    for (auto& x : steps) xs.push_back(ad::Tensor::leaf({1, d}, x));

    auto bi = detail::run_bilstm(shared, shared, xs, 1, d);
    for (int t = 0; t < T; ++t) {
        const auto& fwd = bi.fwd_outputs[static_cast<std::size_t>(T - 1 - t)].data();
        const auto& bwd = bi.bwd_outputs[static_cast<std::size_t>(t)].data();
        for (std::size_t i = 0; i < d; ++i) CHECK(bwd[i] == doctest::Approx(fwd[i]).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < d; ++i)
        CHECK(bi.fwd_final.data()[i] == doctest::Approx(bi.bwd_final.data()[i]).epsilon(1e-12));
}

TEST_CASE("full multi-head forward with bce passes the gradient check") {
    Rng rng(14);
    ModelConfig cfg;
    cfg.num_paths = 2;
    cfg.embed_size = 3;
    cfg.fc_hidden = 4;
    for (int seed = 0; seed < 3; ++seed) {
        Model model(cfg, 8, static_cast<std::uint64_t>(20 + seed));
        std::array<HopMatrix, 3> sample{random_hop(rng, 2, 2, 8), random_hop(rng, 2, 1, 8),
                                        random_hop(rng, 2, 2, 8)};
        auto build = [&] { return ad::bce_loss(model.forward_multi_head(sample).prob, 1.0); };
        CHECK(ad::grad_check(build, model.param_list(), 1e-4) < 1e-3);
    }
}

TEST_CASE("weighted-context mode also passes the gradient check") {
    Rng rng(15);
    ModelConfig cfg;
    cfg.num_paths = 2;
    cfg.embed_size = 3;
    cfg.fc_hidden = 4;
    cfg.head_mode = HeadMode::WeightedContext;
    Model model(cfg, 8, 31);
    std::array<HopMatrix, 3> sample{random_hop(rng, 2, 2, 8), random_hop(rng, 2, 2, 8),
                                    random_hop(rng, 2, 1, 8)};
    auto build = [&] { return ad::bce_loss(model.forward_multi_head(sample).prob, 0.0); };
    CHECK(ad::grad_check(build, model.param_list(), 1e-4) < 1e-3);
}

TEST_CASE("checkpoint save/load preserves forward outputs exactly") {
    Rng rng(16);
    ModelConfig cfg = tiny_multi();
    Model model(cfg, 12, 17);
    std::array<HopMatrix, 3> sample{random_hop(rng, 4, 3, 12), random_hop(rng, 4, 2, 12),
                                    random_hop(rng, 4, 4, 12)};
    double before = model.forward_multi_head(sample).prob.item();
    const std::string path = "/tmp/privloc_model_test.bin";
    ad::save_checkpoint(path, model.params());
    Model loaded(cfg, ad::load_checkpoint(path));
    CHECK(loaded.forward_multi_head(sample).prob.item() == before);
    std::remove(path.c_str());
}
