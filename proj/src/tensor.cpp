#include "privloc/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace privloc::ad {

static_assert(std::endian::native == std::endian::little, "checkpoint io assumes a little-endian host");

namespace {

thread_local bool g_grad_enabled = true;

std::size_t numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

NodePtr make_node(std::vector<std::size_t> shape, std::vector<double> value) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    return n;
}

bool track(std::initializer_list<const Tensor*> inputs) {
    if (!g_grad_enabled) return false;
    for (const Tensor* t : inputs)
        if (t->node()->requires_grad) return true;
    return false;
}

void attach(const NodePtr& out, std::initializer_list<const Tensor*> inputs,
            std::function<void(Node&)> fn) {
    out->requires_grad = true;
    out->parents.reserve(inputs.size());
    for (const Tensor* t : inputs) out->parents.push_back(t->node());
    out->backward_fn = std::move(fn);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeMismatch(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                            shape_str(b.shape()) + " differ");
}

}  // namespace

std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::leaf(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad) {
    if (numel(shape) != data.size())
        throw ShapeMismatch("leaf: shape " + shape_str(shape) + " does not hold " +
                            std::to_string(data.size()) + " values");
    auto n = make_node(std::move(shape), std::move(data));
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::vector<double> data(numel(shape), 0.0);
    return leaf(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return leaf({1}, {v}, requires_grad);
}

double Tensor::item() const {
    if (node_->value.size() != 1) throw ShapeMismatch("item: tensor has " + shape_str(node_->shape));
    return node_->value[0];
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto n = make_node(a.shape(), std::move(out));
    if (track({&a, &b}))
        attach(n, {&a, &b}, [](Node& self) {
            for (int p = 0; p < 2; ++p) {
                Node& par = *self.parents[p];
                if (!par.requires_grad) continue;
                par.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) par.grad[i] += self.grad[i];
            }
        });
    return Tensor(n);
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    if (m.shape().size() != 2 || v.shape().size() != 1 || m.shape()[1] != v.shape()[0])
        throw ShapeMismatch("add_rowvec: shapes " + shape_str(m.shape()) + " and " + shape_str(v.shape()));
    std::size_t rows = m.shape()[0], cols = m.shape()[1];
    std::vector<double> out(m.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = m.data()[r * cols + c] + v.data()[c];
    auto n = make_node(m.shape(), std::move(out));
    if (track({&m, &v}))
        attach(n, {&m, &v}, [rows, cols](Node& self) {
            Node& pm = *self.parents[0];
            Node& pv = *self.parents[1];
            if (pm.requires_grad) {
                pm.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pm.grad[i] += self.grad[i];
            }
            if (pv.requires_grad) {
                pv.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) pv.grad[c] += self.grad[r * cols + c];
            }
        });
    return Tensor(n);
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
    auto n = make_node(a.shape(), std::move(out));
    if (track({&a}))
        attach(n, {&a}, [c](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += c * self.grad[i];
        });
    return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto n = make_node(a.shape(), std::move(out));
    if (track({&a, &b}))
        attach(n, {&a, &b}, [](Node& self) {
            Node& pa = *self.parents[0];
            Node& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += pb.value[i] * self.grad[i];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += pa.value[i] * self.grad[i];
            }
        });
    return Tensor(n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeMismatch("matmul: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    std::vector<double> out(n * m, 0.0);
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            double av = A[i * k + p];
            if (av == 0.0) continue;
            const double* brow = B + p * m;
            double* orow = out.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    auto node = make_node({n, m}, std::move(out));
    if (track({&a, &b}))
        attach(node, {&a, &b}, [n, k, m](Node& self) {
            Node& pa = *self.parents[0];
            Node& pb = *self.parents[1];
            const double* G = self.grad.data();
            if (pa.requires_grad) {
                pa.ensure_grad();
                const double* B = pb.value.data();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) {
                        double g = G[i * m + j];
                        if (g == 0.0) continue;
                        double* arow = pa.grad.data() + i * k;
                        for (std::size_t p = 0; p < k; ++p) arow[p] += g * B[p * m + j];
                    }
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                const double* A = pa.value.data();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double av = A[i * k + p];
                        if (av == 0.0) continue;
                        const double* grow = G + i * m;
                        double* brow = pb.grad.data() + p * m;
                        for (std::size_t j = 0; j < m; ++j) brow[j] += av * grow[j];
                    }
            }
        });
    return Tensor(node);
}

Tensor matvec(const Tensor& m, const Tensor& v) {
    if (m.shape().size() != 2 || v.shape().size() != 1 || m.shape()[1] != v.shape()[0])
        throw ShapeMismatch("matvec: shapes " + shape_str(m.shape()) + " and " + shape_str(v.shape()));
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    std::vector<double> out(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = m.data().data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * v.data()[c];
        out[r] = acc;
    }
    auto node = make_node({rows}, std::move(out));
    if (track({&m, &v}))
        attach(node, {&m, &v}, [rows, cols](Node& self) {
            Node& pm = *self.parents[0];
            Node& pv = *self.parents[1];
            if (pm.requires_grad) {
                pm.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    double g = self.grad[r];
                    if (g == 0.0) continue;
                    double* row = pm.grad.data() + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) row[c] += g * pv.value[c];
                }
            }
            if (pv.requires_grad) {
                pv.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    double g = self.grad[r];
                    if (g == 0.0) continue;
                    const double* row = pm.value.data() + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) pv.grad[c] += g * row[c];
                }
            }
        });
    return Tensor(node);
}

Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat: no parts");
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.shape().size() != 1) throw ShapeMismatch("concat: expects 1-D parts, got " + shape_str(p.shape()));
        total += p.size();
    }
    std::vector<double> out;
    out.reserve(total);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    auto node = make_node({total}, std::move(out));
    bool needs = false;
    if (g_grad_enabled)
        for (const auto& p : parts)
            if (p.requires_grad()) needs = true;
    if (needs) {
        node->requires_grad = true;
        for (const auto& p : parts) node->parents.push_back(p.node());
        node->backward_fn = [](Node& self) {
            std::size_t off = 0;
            for (auto& par : self.parents) {
                if (par->requires_grad) {
                    par->ensure_grad();
                    for (std::size_t i = 0; i < par->value.size(); ++i) par->grad[i] += self.grad[off + i];
                }
                off += par->value.size();
            }
        };
    }
    return Tensor(node);
}

Tensor hstack(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[0] != b.shape()[0])
        throw ShapeMismatch("hstack: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t rows = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
    std::vector<double> out(rows * (ca + cb));
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().data() + r * ca, ca, out.data() + r * (ca + cb));
        std::copy_n(b.data().data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
    }
    auto node = make_node({rows, ca + cb}, std::move(out));
    if (track({&a, &b}))
        attach(node, {&a, &b}, [rows, ca, cb](Node& self) {
            Node& pa = *self.parents[0];
            Node& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < ca; ++c) pa.grad[r * ca + c] += self.grad[r * (ca + cb) + c];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cb; ++c)
                        pb.grad[r * cb + c] += self.grad[r * (ca + cb) + ca + c];
            }
        });
    return Tensor(node);
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
    if (a.shape().size() != 2 || c1 > a.shape()[1] || c0 >= c1)
        throw ShapeMismatch("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) + ") of " +
                            shape_str(a.shape()));
    const std::size_t rows = a.shape()[0], cols = a.shape()[1], w = c1 - c0;
    std::vector<double> out(rows * w);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(a.data().data() + r * cols + c0, w, out.data() + r * w);
    auto node = make_node({rows, w}, std::move(out));
    if (track({&a}))
        attach(node, {&a}, [rows, cols, c0, w](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < w; ++c) p.grad[r * cols + c0 + c] += self.grad[r * w + c];
        });
    return Tensor(node);
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    if (numel(shape) != a.size())
        throw ShapeMismatch("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape));
    auto node = make_node(std::move(shape), a.data());
    if (track({&a}))
        attach(node, {&a}, [](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
        });
    return Tensor(node);
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
    if (table.shape().size() != 2) throw ShapeMismatch("embedding_lookup: table " + shape_str(table.shape()));
    const std::size_t vocab = table.shape()[0], dim = table.shape()[1];
    std::vector<double> out(ids.size() * dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        int id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab)
            throw ShapeMismatch("embedding_lookup: id " + std::to_string(id) + " outside table " +
                                shape_str(table.shape()));
        std::copy_n(table.data().data() + static_cast<std::size_t>(id) * dim, dim, out.data() + i * dim);
    }
    auto node = make_node({ids.size(), dim}, std::move(out));
    if (track({&table}))
        attach(node, {&table}, [ids, dim](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t i = 0; i < ids.size(); ++i) {
                double* row = p.grad.data() + static_cast<std::size_t>(ids[i]) * dim;
                const double* g = self.grad.data() + i * dim;
                for (std::size_t d = 0; d < dim; ++d) row[d] += g[d];
            }
        });
    return Tensor(node);
}

// Fused LSTM cell. Gate layout along the 4H axis is [i f g o]. The node's
// value is (B x 2H) holding [h' | c']; callers receive the two column slices.
std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const Tensor& w_ih, const Tensor& w_hh,
                                    const Tensor& b_ih, const Tensor& b_hh) {
    if (x.shape().size() != 2 || h.shape().size() != 2 || c.shape().size() != 2)
        throw ShapeMismatch("lstm_cell: x " + shape_str(x.shape()) + ", h " + shape_str(h.shape()) +
                            ", c " + shape_str(c.shape()));
    const std::size_t B = x.shape()[0], I = x.shape()[1], H = h.shape()[1];
    if (h.shape()[0] != B || c.shape()[0] != B || c.shape()[1] != H)
        throw ShapeMismatch("lstm_cell: state shapes " + shape_str(h.shape()) + " / " + shape_str(c.shape()));
    if (w_ih.shape() != std::vector<std::size_t>{I, 4 * H} || w_hh.shape() != std::vector<std::size_t>{H, 4 * H} ||
        b_ih.shape() != std::vector<std::size_t>{4 * H} || b_hh.shape() != std::vector<std::size_t>{4 * H})
        throw ShapeMismatch("lstm_cell: weight shapes " + shape_str(w_ih.shape()) + " / " +
                            shape_str(w_hh.shape()) + " for input " + shape_str(x.shape()));

    // z = x*w_ih + h*w_hh + b_ih + b_hh, then gate nonlinearities
    std::vector<double> z(B * 4 * H);
    for (std::size_t r = 0; r < B; ++r) {
        double* zr = z.data() + r * 4 * H;
        for (std::size_t j = 0; j < 4 * H; ++j) zr[j] = b_ih.data()[j] + b_hh.data()[j];
        const double* xr = x.data().data() + r * I;
        for (std::size_t p = 0; p < I; ++p) {
            double xv = xr[p];
            if (xv == 0.0) continue;
            const double* wrow = w_ih.data().data() + p * 4 * H;
            for (std::size_t j = 0; j < 4 * H; ++j) zr[j] += xv * wrow[j];
        }
        const double* hr = h.data().data() + r * H;
        for (std::size_t p = 0; p < H; ++p) {
            double hv = hr[p];
            if (hv == 0.0) continue;
            const double* wrow = w_hh.data().data() + p * 4 * H;
            for (std::size_t j = 0; j < 4 * H; ++j) zr[j] += hv * wrow[j];
        }
    }
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<double> gates(B * 4 * H);  // activated [i f g o]
    std::vector<double> out(B * 2 * H);    // [h' | c']
    std::vector<double> tanh_cn(B * H);
    for (std::size_t r = 0; r < B; ++r) {
        const double* zr = z.data() + r * 4 * H;
        double* gr = gates.data() + r * 4 * H;
        for (std::size_t k = 0; k < H; ++k) {
            double gi = sig(zr[k]);
            double gf = sig(zr[H + k]);
            double gg = std::tanh(zr[2 * H + k]);
            double go = sig(zr[3 * H + k]);
            gr[k] = gi;
            gr[H + k] = gf;
            gr[2 * H + k] = gg;
            gr[3 * H + k] = go;
            double cn = gf * c.data()[r * H + k] + gi * gg;
            double tc = std::tanh(cn);
            tanh_cn[r * H + k] = tc;
            out[r * 2 * H + k] = go * tc;
            out[r * 2 * H + H + k] = cn;
        }
    }
    auto node = make_node({B, 2 * H}, std::move(out));
    if (track({&x, &h, &c, &w_ih, &w_hh, &b_ih, &b_hh})) {
        node->requires_grad = true;
        node->parents = {x.node(), h.node(), c.node(), w_ih.node(), w_hh.node(), b_ih.node(), b_hh.node()};
        node->backward_fn = [B, I, H, gates = std::move(gates), tanh_cn = std::move(tanh_cn)](Node& self) {
            Node& px = *self.parents[0];
            Node& ph = *self.parents[1];
            Node& pc = *self.parents[2];
            Node& pwih = *self.parents[3];
            Node& pwhh = *self.parents[4];
            Node& pbih = *self.parents[5];
            Node& pbhh = *self.parents[6];
            std::vector<double> dz(B * 4 * H, 0.0);
            for (std::size_t r = 0; r < B; ++r) {
                const double* gr = gates.data() + r * 4 * H;
                for (std::size_t k = 0; k < H; ++k) {
                    double dh = self.grad[r * 2 * H + k];
                    double dc_ext = self.grad[r * 2 * H + H + k];
                    double gi = gr[k], gf = gr[H + k], gg = gr[2 * H + k], go = gr[3 * H + k];
                    double tc = tanh_cn[r * H + k];
                    double dgo = dh * tc;
                    double dc_total = dc_ext + dh * go * (1.0 - tc * tc);
                    double dgf = dc_total * pc.value[r * H + k];
                    double dgi = dc_total * gg;
                    double dgg = dc_total * gi;
                    if (pc.requires_grad) {
                        pc.ensure_grad();
                        pc.grad[r * H + k] += dc_total * gf;
                    }
                    dz[r * 4 * H + k] = dgi * gi * (1.0 - gi);
                    dz[r * 4 * H + H + k] = dgf * gf * (1.0 - gf);
                    dz[r * 4 * H + 2 * H + k] = dgg * (1.0 - gg * gg);
                    dz[r * 4 * H + 3 * H + k] = dgo * go * (1.0 - go);
                }
            }
            if (px.requires_grad) {
                px.ensure_grad();
                for (std::size_t r = 0; r < B; ++r)
                    for (std::size_t p = 0; p < I; ++p) {
                        const double* wrow = pwih.value.data() + p * 4 * H;
                        const double* dzr = dz.data() + r * 4 * H;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < 4 * H; ++j) acc += dzr[j] * wrow[j];
                        px.grad[r * I + p] += acc;
                    }
            }
            if (ph.requires_grad) {
                ph.ensure_grad();
                for (std::size_t r = 0; r < B; ++r)
                    for (std::size_t p = 0; p < H; ++p) {
                        const double* wrow = pwhh.value.data() + p * 4 * H;
                        const double* dzr = dz.data() + r * 4 * H;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < 4 * H; ++j) acc += dzr[j] * wrow[j];
                        ph.grad[r * H + p] += acc;
                    }
            }
            if (pwih.requires_grad) {
                pwih.ensure_grad();
                for (std::size_t r = 0; r < B; ++r) {
                    const double* xr = px.value.data() + r * I;
                    const double* dzr = dz.data() + r * 4 * H;
                    for (std::size_t p = 0; p < I; ++p) {
                        double xv = xr[p];
                        if (xv == 0.0) continue;
                        double* wrow = pwih.grad.data() + p * 4 * H;
                        for (std::size_t j = 0; j < 4 * H; ++j) wrow[j] += xv * dzr[j];
                    }
                }
            }
            if (pwhh.requires_grad) {
                pwhh.ensure_grad();
                for (std::size_t r = 0; r < B; ++r) {
                    const double* hr = ph.value.data() + r * H;
                    const double* dzr = dz.data() + r * 4 * H;
                    for (std::size_t p = 0; p < H; ++p) {
                        double hv = hr[p];
                        if (hv == 0.0) continue;
                        double* wrow = pwhh.grad.data() + p * 4 * H;
                        for (std::size_t j = 0; j < 4 * H; ++j) wrow[j] += hv * dzr[j];
                    }
                }
            }
            if (pbih.requires_grad || pbhh.requires_grad) {
                if (pbih.requires_grad) pbih.ensure_grad();
                if (pbhh.requires_grad) pbhh.ensure_grad();
                for (std::size_t r = 0; r < B; ++r)
                    for (std::size_t j = 0; j < 4 * H; ++j) {
                        double g = dz[r * 4 * H + j];
                        if (pbih.requires_grad) pbih.grad[j] += g;
                        if (pbhh.requires_grad) pbhh.grad[j] += g;
                    }
            }
        };
    }
    Tensor both(node);
    return {slice_cols(both, 0, H), slice_cols(both, H, 2 * H)};
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.data()[i]));
    auto node = make_node(a.shape(), std::move(out));
    if (track({&a}))
        attach(node, {&a}, [](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                double y = self.value[i];
                p.grad[i] += self.grad[i] * y * (1.0 - y);
            }
        });
    return Tensor(node);
}

Tensor tanh_t(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.data()[i]);
    auto node = make_node(a.shape(), std::move(out));
    if (track({&a}))
        attach(node, {&a}, [](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                double y = self.value[i];
                p.grad[i] += self.grad[i] * (1.0 - y * y);
            }
        });
    return Tensor(node);
}

Tensor softmax(const Tensor& a) {
    if (a.shape().size() != 1) throw ShapeMismatch("softmax: expects 1-D, got " + shape_str(a.shape()));
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : a.data()) mx = std::max(mx, v);
    std::vector<double> out(a.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(a.data()[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    auto node = make_node(a.shape(), std::move(out));
    if (track({&a}))
        attach(node, {&a}, [](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            double dot = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * self.value[i];
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                p.grad[i] += self.value[i] * (self.grad[i] - dot);
        });
    return Tensor(node);
}

Tensor bce_loss(const Tensor& p, double target) {
    if (p.size() != 1) throw ShapeMismatch("bce_loss: expects scalar p, got " + shape_str(p.shape()));
    constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
    double raw = p.data()[0];
    double ph = std::clamp(raw, lo, hi);
    bool clipped = raw < lo || raw > hi;
    double loss = -(target * std::log(ph) + (1.0 - target) * std::log(1.0 - ph));
    auto node = make_node({1}, {loss});
    if (track({&p}))
        attach(node, {&p}, [target, ph, clipped](Node& self) {
            Node& par = *self.parents[0];
            if (!par.requires_grad || clipped) return;
            par.ensure_grad();
            par.grad[0] += self.grad[0] * (ph - target) / (ph * (1.0 - ph));
        });
    return Tensor(node);
}

Tensor mean_rows(const Tensor& m) {
    if (m.shape().size() != 2) throw ShapeMismatch("mean_rows: expects 2-D, got " + shape_str(m.shape()));
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    std::vector<double> out(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c] += m.data()[r * cols + c];
    for (auto& v : out) v /= static_cast<double>(rows);
    auto node = make_node({cols}, std::move(out));
    if (track({&m}))
        attach(node, {&m}, [rows, cols](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    p.grad[r * cols + c] += self.grad[c] / static_cast<double>(rows);
        });
    return Tensor(node);
}

Tensor scatter_to(std::size_t n, const std::vector<int>& indices, const Tensor& v) {
    if (v.shape().size() != 1 || v.size() != indices.size())
        throw ShapeMismatch("scatter_to: " + std::to_string(indices.size()) + " indices vs " +
                            shape_str(v.shape()));
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        int idx = indices[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= n)
            throw ShapeMismatch("scatter_to: index " + std::to_string(idx) + " outside length " +
                                std::to_string(n));
        out[static_cast<std::size_t>(idx)] = v.data()[i];
    }
    auto node = make_node({n}, std::move(out));
    if (track({&v}))
        attach(node, {&v}, [indices](Node& self) {
            Node& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            for (std::size_t i = 0; i < indices.size(); ++i)
                p.grad[i] += self.grad[static_cast<std::size_t>(indices[i])];
        });
    return Tensor(node);
}

void backward(const Tensor& out, double seed) {
    Node* root = out.node().get();
    // iterative post-order topological sort
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, child] = stack.back();
        if (child < node->parents.size()) {
            Node* next = node->parents[child++].get();
            if (next->requires_grad && visited.insert(next).second) stack.emplace_back(next, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    for (std::size_t i = 0; i < root->grad.size(); ++i) root->grad[i] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
    if (state.m.size() != params.size()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].size(), 0.0);
            state.v[i].assign(params[i].size(), 0.0);
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].data();
        auto& g = params[i].grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.size() != p.size())
            throw ShapeMismatch("adam_step: state size " + std::to_string(m.size()) + " vs param " +
                                std::to_string(p.size()));
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = AdamState::kBeta1 * m[j] + (1.0 - AdamState::kBeta1) * g[j];
            v[j] = AdamState::kBeta2 * v[j] + (1.0 - AdamState::kBeta2) * g[j] * g[j];
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + AdamState::kEps);
        }
        params[i].zero_grad();
    }
}

double grad_check(const std::function<Tensor()>& build, const std::vector<Tensor>& inputs, double eps) {
    for (const auto& in : inputs)
        const_cast<Tensor&>(in).zero_grad();
    Tensor out = build();
    if (out.size() != 1) throw NonScalarOutput();
    backward(out);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (const auto& in : inputs) analytic.push_back(const_cast<Tensor&>(in).grad());

    double max_rel = 0.0;
    NoGradGuard ng;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto& data = const_cast<Tensor&>(inputs[i]).data();
        for (std::size_t j = 0; j < data.size(); ++j) {
            double saved = data[j];
            data[j] = saved + eps;
            double fp = build().item();
            data[j] = saved - eps;
            double fm = build().item();
            data[j] = saved;
            double numeric = (fp - fm) / (2.0 * eps);
            double a = analytic[i][j];
            double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

namespace {

constexpr char kMagic[8] = {'P', 'R', 'I', 'V', 'L', 'O', 'C', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    for (const auto& [name, t] : params) {
        write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape().size()));
        for (auto d : t.shape()) write_raw<std::uint64_t>(os, static_cast<std::uint64_t>(d));
        os.write(reinterpret_cast<const char*>(t.data().data()),
                 static_cast<std::streamsize>(t.data().size() * sizeof(double)));
    }
    if (!os) throw Error("checkpoint: write to " + path + " failed");
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("checkpoint: " + path + " is not a PRIVLOC1 file");
    std::map<std::string, Tensor> params;
    while (true) {
        std::uint32_t name_len;
        is.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        if (is.eof()) break;
        if (!is) throw Error("checkpoint: truncated file");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        auto rank = read_raw<std::uint32_t>(is);
        std::vector<std::size_t> shape(rank);
        std::size_t count = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(read_raw<std::uint64_t>(is));
            count *= d;
        }
        std::vector<double> data(count);
        is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(double)));
        if (!is) throw Error("checkpoint: truncated tensor data for " + name);
        params.emplace(std::move(name), Tensor::leaf(std::move(shape), std::move(data), true));
    }
    return params;
}

}  // namespace privloc::ad
