#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "privloc/errors.hpp"

namespace privloc::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the reverse-mode tape. `value` is row-major f64; `grad` has
// the same layout and is allocated lazily. `backward_fn` reads this node's
// grad and accumulates (+=) into the parents' grads.
struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_fn;

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

// Value-semantics handle over a graph node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor leaf(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad = false);
    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }
    double item() const;
    double at(std::size_t i) const { return node_->value[i]; }
    NodePtr node() const { return node_; }

private:
    NodePtr node_;
};

// While alive, new ops record no parents and no backward closures. Used for
// evaluation passes and the numeric side of gradient checking.
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

// ---- ops (forward + backward) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& m, const Tensor& v);  // (R x C) + (C,) per row
Tensor scale(const Tensor& a, double c);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matvec(const Tensor& m, const Tensor& v);
Tensor concat(const std::vector<Tensor>& parts);              // 1-D
Tensor hstack(const Tensor& a, const Tensor& b);              // (R x C1),(R x C2) -> (R x C1+C2)
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const Tensor& w_ih, const Tensor& w_hh,
                                    const Tensor& b_ih, const Tensor& b_hh);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor softmax(const Tensor& a);  // 1-D
Tensor bce_loss(const Tensor& p, double target);
Tensor mean_rows(const Tensor& m);  // (R x C) -> (C,)
Tensor scatter_to(std::size_t n, const std::vector<int>& indices, const Tensor& v);

void backward(const Tensor& out, double seed = 1.0);

// ---- optimizer ----
struct AdamState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long t = 0;
};

// Bias-corrected Adam over the parameter list; zeroes grads afterwards.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr);

// ---- verification ----
// Central finite differences over every coordinate of `inputs`. `build` must
// reconstruct the graph from the inputs' current values and return a scalar.
double grad_check(const std::function<Tensor()>& build, const std::vector<Tensor>& inputs,
                  double eps = 1e-5);

// ---- checkpoint io (PRIVLOC1) ----
void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& params);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

std::string shape_str(const std::vector<std::size_t>& s);

}  // namespace privloc::ad
