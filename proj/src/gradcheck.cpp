#include "privloc/gradcheck_suite.hpp"

#include <algorithm>

#include "privloc/model.hpp"
#include "privloc/rng.hpp"
#include "privloc/tensor.hpp"

namespace privloc {

namespace {

using ad::Tensor;

Tensor rand_leaf(std::vector<std::size_t> shape, Rng& rng) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> data(n);
    for (auto& v : data) v = rng.uniform(-0.8, 0.8);
    return Tensor::leaf(std::move(shape), std::move(data), true);
}

// reduce any tensor to a scalar through a fixed projection
Tensor project(const Tensor& t, const Tensor& probe) {
    return ad::matvec(ad::reshape(t, {1, t.size()}), probe);
}

}  // namespace

std::vector<GradCheckResult> op_gradient_checks(int seeds) {
    std::vector<GradCheckResult> out;
    auto record = [&](const std::string& name, double err) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const GradCheckResult& r) { return r.name == name; });
        if (it == out.end())
            out.push_back({name, err, 1e-4});
        else
            it->max_rel_error = std::max(it->max_rel_error, err);
    };

    for (int seed = 0; seed < seeds; ++seed) {
        Rng rng(Rng::mix(0xc0de, static_cast<std::uint64_t>(seed)));
        {
            Tensor a = rand_leaf({2, 3}, rng), b = rand_leaf({2, 3}, rng), pr = rand_leaf({6}, rng);
            record("add", ad::grad_check([&] { return project(ad::add(a, b), pr); }, {a, b}));
            record("mul", ad::grad_check([&] { return project(ad::mul(a, b), pr); }, {a, b}));
            record("scale", ad::grad_check([&] { return project(ad::scale(a, -1.6), pr); }, {a}));
        }
        {
            Tensor m = rand_leaf({3, 4}, rng), v = rand_leaf({4}, rng), pr = rand_leaf({12}, rng);
            record("add_rowvec", ad::grad_check([&] { return project(ad::add_rowvec(m, v), pr); }, {m, v}));
            Tensor pv = rand_leaf({3}, rng);
            record("matvec", ad::grad_check([&] { return project(ad::matvec(m, v), pv); }, {m, v}));
        }
        {
            Tensor a = rand_leaf({2, 3}, rng), b = rand_leaf({3, 4}, rng), pr = rand_leaf({8}, rng);
            record("matmul", ad::grad_check([&] { return project(ad::matmul(a, b), pr); }, {a, b}));
        }
        {
            Tensor a = rand_leaf({3}, rng), b = rand_leaf({2}, rng), pr = rand_leaf({5}, rng);
            record("concat", ad::grad_check([&] { return project(ad::concat({a, b}), pr); }, {a, b}));
            Tensor sc = rand_leaf({7}, rng);
            record("scatter_to",
                   ad::grad_check([&] { return project(ad::scatter_to(7, {5, 2, 0}, a), sc); }, {a}));
            Tensor psm = rand_leaf({3}, rng);
            record("softmax", ad::grad_check([&] { return project(ad::softmax(a), psm); }, {a}));
        }
        {
            Tensor a = rand_leaf({2, 2}, rng), b = rand_leaf({2, 3}, rng), pr = rand_leaf({10}, rng);
            record("hstack", ad::grad_check([&] { return project(ad::hstack(a, b), pr); }, {a, b}));
            Tensor ps = rand_leaf({4}, rng);
            record("slice_cols",
                   ad::grad_check([&] { return project(ad::slice_cols(b, 1, 3), ps); }, {b}));
            Tensor pm = rand_leaf({3}, rng);
            record("mean_rows", ad::grad_check([&] { return project(ad::mean_rows(b), pm); }, {b}));
            Tensor pq = rand_leaf({6}, rng);
            record("reshape", ad::grad_check([&] { return project(ad::reshape(b, {3, 2}), pq); }, {b}));
        }
        {
            Tensor a = rand_leaf({2, 3}, rng), pr = rand_leaf({6}, rng);
            record("sigmoid", ad::grad_check([&] { return project(ad::sigmoid(a), pr); }, {a}));
            record("tanh", ad::grad_check([&] { return project(ad::tanh_t(a), pr); }, {a}));
        }
        {
            Tensor p = Tensor::leaf({1}, {0.2 + 0.6 * rng.uniform()}, true);
            record("bce_loss", ad::grad_check([&] { return ad::bce_loss(p, 1.0); }, {p}));
            record("bce_loss", ad::grad_check([&] { return ad::bce_loss(p, 0.0); }, {p}));
        }
        {
            Tensor table = rand_leaf({5, 3}, rng), pr = rand_leaf({9}, rng);
            record("embedding_lookup", ad::grad_check(
                                           [&] { return project(ad::embedding_lookup(table, {4, 0, 2}), pr); },
                                           {table}));
        }
        {
            Tensor x = rand_leaf({2, 3}, rng), h = rand_leaf({2, 2}, rng), c = rand_leaf({2, 2}, rng);
            Tensor w_ih = rand_leaf({3, 8}, rng), w_hh = rand_leaf({2, 8}, rng);
            Tensor b_ih = rand_leaf({8}, rng), b_hh = rand_leaf({8}, rng), pr = rand_leaf({8}, rng);
            record("lstm_cell", ad::grad_check(
                                    [&] {
                                        auto [hn, cn] = ad::lstm_cell(x, h, c, w_ih, w_hh, b_ih, b_hh);
                                        return project(ad::hstack(hn, cn), pr);
                                    },
                                    {x, h, c, w_ih, w_hh, b_ih, b_hh}));
        }
    }
    return out;
}

GradCheckResult full_graph_gradient_check(int seeds) {
    GradCheckResult res{"multi_head_forward_bce", 0.0, 1e-3};
    ModelConfig cfg;
    cfg.num_paths = 2;
    cfg.embed_size = 3;
    cfg.fc_hidden = 4;
    for (int seed = 0; seed < seeds; ++seed) {
        Rng rng(Rng::mix(0xf011, static_cast<std::uint64_t>(seed)));
        Model model(cfg, 8, static_cast<std::uint64_t>(100 + seed));
        std::array<HopMatrix, 3> sample;
        for (int h = 0; h < 3; ++h) {
            HopMatrix& m = sample[static_cast<std::size_t>(h)];
            m.num_paths = 2;
            m.rows.assign(2, TokenizedPath{});
            m.src_path = {-1, -1};
            int real = 1 + static_cast<int>(rng.index(2));
            for (int r = 0; r < real; ++r) {
                TokenizedPath p{};
                p.slots[0] = 2 + static_cast<int>(rng.index(6));
                p.slots[1] = 2 + static_cast<int>(rng.index(6));
                p.slots[2] = 2 + static_cast<int>(rng.index(6));
                p.slots[9] = 2 + static_cast<int>(rng.index(6));
                m.rows[static_cast<std::size_t>(r)] = p;
                m.src_path[static_cast<std::size_t>(r)] = r;
            }
        }
        double target = seed % 2 == 0 ? 1.0 : 0.0;
        auto build = [&] { return ad::bce_loss(model.forward_multi_head(sample).prob, target); };
        res.max_rel_error =
            std::max(res.max_rel_error, ad::grad_check(build, model.param_list(), 1e-4));
    }
    return res;
}

}  // namespace privloc
