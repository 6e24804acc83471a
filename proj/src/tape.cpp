#include "oceanfc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "oceanfc/error.hpp"

namespace oceanfc::ad {

namespace {

constexpr double kGeluC = 0.044715;
const double kGeluK = std::sqrt(2.0 / std::numbers::pi);

void check(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace

double gelu_tanh(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluK * (x + kGeluC * x * x * x)));
}

double gelu_tanh_grad(double x) {
    const double t = std::tanh(kGeluK * (x + kGeluC * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluK * (1.0 + 3.0 * kGeluC * x * x);
}

NodeId Tape::push(Tensor value, std::function<void(Tape&, NodeId)> back) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor& Tape::grad(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.v.empty()) n.grad = Tensor(n.value.rows, n.value.cols);
    return n.grad;
}

NodeId Tape::constant(Tensor t) { return push(std::move(t), nullptr); }

NodeId Tape::parameter(std::span<const double> flat, std::size_t offset, int rows, int cols) {
    const std::size_t n = std::size_t(rows) * cols;
    check(offset + n <= flat.size(), "parameter view exceeds the flat vector");
    Tensor t(rows, cols, std::vector<double>(flat.begin() + offset, flat.begin() + offset + n));
    NodeId id = push(std::move(t), nullptr);
    nodes_[id].is_param = true;
    nodes_[id].param_offset = offset;
    return id;
}

NodeId Tape::matmul(NodeId a, NodeId w) {
    const Tensor& A = value(a);
    const Tensor& W = value(w);
    check(A.cols == W.rows, "matmul inner dimensions differ");
    Tensor Y(A.rows, W.cols);
    const int n = A.rows, k = A.cols, m = W.cols;
    for (int i = 0; i < n; ++i) {
        double* y = &Y.v[std::size_t(i) * m];
        const double* arow = &A.v[std::size_t(i) * k];
        for (int p = 0; p < k; ++p) {
            const double ap = arow[p];
            if (ap == 0.0) continue;
            const double* wrow = &W.v[std::size_t(p) * m];
            for (int j = 0; j < m; ++j) y[j] += ap * wrow[j];
        }
    }
    return push(std::move(Y), [a, w](Tape& t, NodeId self) {
        const Tensor& dY = t.nodes_[self].grad;
        const Tensor& A = t.value(a);
        const Tensor& W = t.value(w);
        const int n = A.rows, k = A.cols, m = W.cols;
        if (t.nodes_[a].back || t.nodes_[a].is_param) {
            Tensor& dA = t.grad(a);
            for (int i = 0; i < n; ++i) {
                const double* dy = &dY.v[std::size_t(i) * m];
                double* da = &dA.v[std::size_t(i) * k];
                for (int p = 0; p < k; ++p) {
                    const double* wrow = &W.v[std::size_t(p) * m];
                    double s = 0.0;
                    for (int j = 0; j < m; ++j) s += dy[j] * wrow[j];
                    da[p] += s;
                }
            }
        }
        if (t.nodes_[w].back || t.nodes_[w].is_param) {
            Tensor& dW = t.grad(w);
            for (int i = 0; i < n; ++i) {
                const double* dy = &dY.v[std::size_t(i) * m];
                const double* arow = &A.v[std::size_t(i) * k];
                for (int p = 0; p < k; ++p) {
                    const double ap = arow[p];
                    if (ap == 0.0) continue;
                    double* dw = &dW.v[std::size_t(p) * m];
                    for (int j = 0; j < m; ++j) dw[j] += ap * dy[j];
                }
            }
        }
    });
}

NodeId Tape::add_row(NodeId a, NodeId bias) {
    const Tensor& A = value(a);
    const Tensor& B = value(bias);
    check(B.rows == 1 && B.cols == A.cols, "bias shape differs from row width");
    Tensor Y = A;
    for (int i = 0; i < Y.rows; ++i)
        for (int j = 0; j < Y.cols; ++j) Y(i, j) += B.v[j];
    return push(std::move(Y), [a, bias](Tape& t, NodeId self) {
        const Tensor& dY = t.nodes_[self].grad;
        if (t.nodes_[a].back || t.nodes_[a].is_param) {
            Tensor& dA = t.grad(a);
            for (std::size_t n = 0; n < dY.v.size(); ++n) dA.v[n] += dY.v[n];
        }
        Tensor& dB = t.grad(bias);
        for (int i = 0; i < dY.rows; ++i)
            for (int j = 0; j < dY.cols; ++j) dB.v[j] += dY(i, j);
    });
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    check(A.rows == B.rows && A.cols == B.cols, "add shapes differ");
    Tensor Y = A;
    for (std::size_t n = 0; n < Y.v.size(); ++n) Y.v[n] += B.v[n];
    return push(std::move(Y), [a, b](Tape& t, NodeId self) {
        const Tensor& dY = t.nodes_[self].grad;
        for (NodeId in : {a, b}) {
            if (!(t.nodes_[in].back || t.nodes_[in].is_param)) continue;
            Tensor& d = t.grad(in);
            for (std::size_t n = 0; n < dY.v.size(); ++n) d.v[n] += dY.v[n];
        }
    });
}

NodeId Tape::mul_const(NodeId a, std::vector<double> factors) {
    const Tensor& A = value(a);
    check(factors.size() == A.v.size(), "factor count differs from tensor size");
    Tensor Y = A;
    for (std::size_t n = 0; n < Y.v.size(); ++n) Y.v[n] *= factors[n];
    return push(std::move(Y), [a, f = std::move(factors)](Tape& t, NodeId self) {
        const Tensor& dY = t.nodes_[self].grad;
        Tensor& dA = t.grad(a);
        for (std::size_t n = 0; n < dY.v.size(); ++n) dA.v[n] += dY.v[n] * f[n];
    });
}

NodeId Tape::layer_norm(NodeId a, NodeId gamma, NodeId beta, double eps) {
    const Tensor& A = value(a);
    const Tensor& G = value(gamma);
    const Tensor& B = value(beta);
    check(G.size() == std::size_t(A.cols) && B.size() == std::size_t(A.cols), "layer norm affine width differs");
    const int n = A.rows, c = A.cols;
    Tensor Y(n, c);
    auto xhat = std::make_shared<Tensor>(n, c);
    auto rstd = std::make_shared<std::vector<double>>(n);
    for (int i = 0; i < n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += A(i, j);
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            const double d = A(i, j) - mean;
            var += d * d;
        }
        var /= c;
        const double r = 1.0 / std::sqrt(var + eps);
        (*rstd)[i] = r;
        for (int j = 0; j < c; ++j) {
            const double xh = (A(i, j) - mean) * r;
            (*xhat)(i, j) = xh;
            Y(i, j) = G.v[j] * xh + B.v[j];
        }
    }
    return push(std::move(Y), [a, gamma, beta, xhat, rstd](Tape& t, NodeId self) {
        const Tensor& dY = t.nodes_[self].grad;
        const Tensor& G = t.value(gamma);
        const int n = dY.rows, c = dY.cols;
        Tensor& dG = t.grad(gamma);
        Tensor& dB = t.grad(beta);
        const bool need_a = t.nodes_[a].back || t.nodes_[a].is_param;
        std::vector<double> dxh(c);
        for (int i = 0; i < n; ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < c; ++j) {
                const double g = dY(i, j);
                dG.v[j] += g * (*xhat)(i, j);
                dB.v[j] += g;
                dxh[j] = g * G.v[j];
                m1 += dxh[j];
                m2 += dxh[j] * (*xhat)(i, j);
            }
            if (!need_a) continue;
            m1 /= c;
            m2 /= c;
            Tensor& dA = t.grad(a);
            const double r = (*rstd)[i];
            for (int j = 0; j < c; ++j) dA(i, j) += r * (dxh[j] - m1 - (*xhat)(i, j) * m2);
        }
    });
}

NodeId Tape::gelu(NodeId a) {
    const Tensor& A = value(a);
    Tensor Y(A.rows, A.cols);
    for (std::size_t n = 0; n < Y.v.size(); ++n) Y.v[n] = gelu_tanh(A.v[n]);
    return push(std::move(Y), [a](Tape& t, NodeId self) {
        const Tensor& dY = t.nodes_[self].grad;
        const Tensor& A = t.value(a);
        Tensor& dA = t.grad(a);
        for (std::size_t n = 0; n < dY.v.size(); ++n) dA.v[n] += dY.v[n] * gelu_tanh_grad(A.v[n]);
    });
}

NodeId Tape::gather(NodeId a, int rows, int cols, std::shared_ptr<const std::vector<int>> index) {
    const Tensor& A = value(a);
    check(index->size() == std::size_t(rows) * cols, "gather index length differs from output shape");
    Tensor Y(rows, cols);
    const int limit = static_cast<int>(A.v.size());
    for (std::size_t n = 0; n < index->size(); ++n) {
        const int src = (*index)[n];
        check(src < limit, "gather index out of range");
        if (src >= 0) Y.v[n] = A.v[src];
    }
    return push(std::move(Y), [a, index](Tape& t, NodeId self) {
        if (!(t.nodes_[a].back || t.nodes_[a].is_param)) return;
        const Tensor& dY = t.nodes_[self].grad;
        Tensor& dA = t.grad(a);
        for (std::size_t n = 0; n < index->size(); ++n) {
            const int src = (*index)[n];
            if (src >= 0) dA.v[src] += dY.v[n];
        }
    });
}

NodeId Tape::window_attention(NodeId qkv, std::shared_ptr<const WindowPlan> plan, int heads) {
    const Tensor& X = value(qkv);
    check(X.cols % 3 == 0, "qkv width must be a multiple of 3");
    const int C = X.cols / 3;
    check(heads > 0 && C % heads == 0, "channels must divide evenly across heads");
    check(X.rows == plan->tokens, "qkv rows differ from the window plan's token count");
    const int dh = C / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const double neg_inf = -std::numeric_limits<double>::infinity();

    Tensor Y(X.rows, C);
    // probs[w * heads + h] holds the L x L softmax for window w, head h.
    auto probs = std::make_shared<std::vector<std::vector<double>>>(plan->windows.size() * heads);
    for (std::size_t w = 0; w < plan->windows.size(); ++w) {
        const auto& mem = plan->windows[w];
        const auto& lab = plan->labels[w];
        const int L = static_cast<int>(mem.size());
        for (int h = 0; h < heads; ++h) {
            auto& P = (*probs)[w * heads + h];
            P.assign(std::size_t(L) * L, 0.0);
            const int qo = h * dh, ko = C + h * dh, vo = 2 * C + h * dh;
            for (int r = 0; r < L; ++r) {
                const double* q = &X.v[std::size_t(mem[r]) * X.cols + qo];
                double mx = neg_inf;
                for (int c = 0; c < L; ++c) {
                    double s;
                    if (lab[r] != lab[c]) {
                        s = neg_inf;
                    } else {
                        const double* k = &X.v[std::size_t(mem[c]) * X.cols + ko];
                        s = 0.0;
                        for (int d = 0; d < dh; ++d) s += q[d] * k[d];
                        s *= scale;
                    }
                    P[std::size_t(r) * L + c] = s;
                    mx = std::max(mx, s);
                }
                double z = 0.0;
                for (int c = 0; c < L; ++c) {
                    double& p = P[std::size_t(r) * L + c];
                    p = std::exp(p - mx);
                    z += p;
                }
                for (int c = 0; c < L; ++c) P[std::size_t(r) * L + c] /= z;
                double* y = &Y.v[std::size_t(mem[r]) * C + h * dh];
                for (int c = 0; c < L; ++c) {
                    const double p = P[std::size_t(r) * L + c];
                    if (p == 0.0) continue;
                    const double* v = &X.v[std::size_t(mem[c]) * X.cols + vo];
                    for (int d = 0; d < dh; ++d) y[d] += p * v[d];
                }
            }
        }
    }

    return push(std::move(Y), [qkv, plan, heads, probs, C, dh, scale](Tape& t, NodeId self) {
        const Tensor& dY = t.nodes_[self].grad;
        const Tensor& X = t.value(qkv);
        Tensor& dX = t.grad(qkv);
        std::vector<double> dP, dS;
        for (std::size_t w = 0; w < plan->windows.size(); ++w) {
            const auto& mem = plan->windows[w];
            const int L = static_cast<int>(mem.size());
            dP.assign(std::size_t(L) * L, 0.0);
            dS.assign(std::size_t(L) * L, 0.0);
            for (int h = 0; h < heads; ++h) {
                const auto& P = (*probs)[w * heads + h];
                const int qo = h * dh, ko = C + h * dh, vo = 2 * C + h * dh;
                for (int r = 0; r < L; ++r) {
                    const double* dy = &dY.v[std::size_t(mem[r]) * C + h * dh];
                    double rowdot = 0.0;
                    for (int c = 0; c < L; ++c) {
                        const double p = P[std::size_t(r) * L + c];
                        const double* v = &X.v[std::size_t(mem[c]) * X.cols + vo];
                        double s = 0.0;
                        for (int d = 0; d < dh; ++d) s += dy[d] * v[d];
                        dP[std::size_t(r) * L + c] = s;
                        rowdot += p * s;
                        if (p != 0.0) {
                            double* dv = &dX.v[std::size_t(mem[c]) * X.cols + vo];
                            for (int d = 0; d < dh; ++d) dv[d] += p * dy[d];
                        }
                    }
                    for (int c = 0; c < L; ++c) {
                        const double p = P[std::size_t(r) * L + c];
                        dS[std::size_t(r) * L + c] = p * (dP[std::size_t(r) * L + c] - rowdot) * scale;
                    }
                }
                for (int r = 0; r < L; ++r) {
                    const double* q = &X.v[std::size_t(mem[r]) * X.cols + qo];
                    double* dq = &dX.v[std::size_t(mem[r]) * X.cols + qo];
                    for (int c = 0; c < L; ++c) {
                        const double g = dS[std::size_t(r) * L + c];
                        if (g == 0.0) continue;
                        const double* k = &X.v[std::size_t(mem[c]) * X.cols + ko];
                        double* dk = &dX.v[std::size_t(mem[c]) * X.cols + ko];
                        for (int d = 0; d < dh; ++d) {
                            dq[d] += g * k[d];
                            dk[d] += g * q[d];
                        }
                    }
                }
            }
        }
    });
}

NodeId Tape::weighted_sse(NodeId a, std::shared_ptr<const std::vector<double>> target,
                          std::shared_ptr<const std::vector<double>> weight) {
    const Tensor& A = value(a);
    check(target->size() == A.v.size() && weight->size() == A.v.size(), "loss operand sizes differ");
    double s = 0.0;
    for (std::size_t n = 0; n < A.v.size(); ++n) {
        const double w = (*weight)[n];
        if (w == 0.0) continue;
        const double e = A.v[n] - (*target)[n];
        s += w * e * e;
    }
    return push(Tensor(1, 1, {s}), [a, target, weight](Tape& t, NodeId self) {
        const double g = t.nodes_[self].grad.v[0];
        const Tensor& A = t.value(a);
        Tensor& dA = t.grad(a);
        for (std::size_t n = 0; n < A.v.size(); ++n) {
            const double w = (*weight)[n];
            if (w == 0.0) continue;
            dA.v[n] += g * 2.0 * w * (A.v[n] - (*target)[n]);
        }
    });
}

void Tape::backward(NodeId root, std::span<double> param_grad) {
    for (auto& n : nodes_) n.grad = Tensor();
    Tensor& seed = grad(root);
    std::fill(seed.v.begin(), seed.v.end(), 1.0);
    for (NodeId id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.grad.v.empty()) continue;
        if (n.back) n.back(*this, id);
        if (n.is_param) {
            check(n.param_offset + n.grad.v.size() <= param_grad.size(), "gradient buffer too small");
            for (std::size_t k = 0; k < n.grad.v.size(); ++k) param_grad[n.param_offset + k] += n.grad.v[k];
        }
    }
}

bool Tape::all_finite() const {
    for (const auto& n : nodes_)
        for (double x : n.value.v)
            if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace oceanfc::ad
