#include "crosslinear/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <sstream>

namespace crosslinear {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

std::size_t product(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, bool requires_grad)
    : storage_(std::make_shared<Storage>()), shape_(std::move(shape)) {
    storage_->data.assign(product(shape_), 0.0);
    storage_->requires_grad = requires_grad;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                    bool requires_grad) {
    if (values.size() != product(shape)) {
        throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(shape));
    }
    Tensor t;
    t.storage_ = std::make_shared<Storage>();
    t.storage_->data = std::move(values);
    t.storage_->requires_grad = requires_grad;
    t.shape_ = std::move(shape);
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = value;
    return t;
}

std::size_t Tensor::size() const { return storage_ ? storage_->data.size() : 0; }

std::span<double> Tensor::data() { return storage_->data; }
std::span<const double> Tensor::data() const { return storage_->data; }

void Tensor::ensure_grad() const {
    if (storage_->grad.size() != storage_->data.size()) {
        storage_->grad.assign(storage_->data.size(), 0.0);
    }
}

std::span<double> Tensor::grad() {
    ensure_grad();
    return storage_->grad;
}

bool Tensor::has_grad() const { return storage_ && !storage_->grad.empty(); }

void Tensor::zero_grad() {
    if (storage_) storage_->grad.assign(storage_->data.size(), 0.0);
}

bool Tensor::requires_grad() const { return storage_ && storage_->requires_grad; }
void Tensor::set_requires_grad(bool v) { storage_->requires_grad = v; }

double& Tensor::operator()(std::size_t i) { return storage_->data[i]; }
double Tensor::operator()(std::size_t i) const { return storage_->data[i]; }
double& Tensor::operator()(std::size_t i, std::size_t j) {
    return storage_->data[i * shape_[1] + j];
}
double Tensor::operator()(std::size_t i, std::size_t j) const {
    return storage_->data[i * shape_[1] + j];
}
double& Tensor::operator()(std::size_t i, std::size_t j, std::size_t k) {
    return storage_->data[(i * shape_[1] + j) * shape_[2] + k];
}
double Tensor::operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return storage_->data[(i * shape_[1] + j) * shape_[2] + k];
}

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) const {
    if (product(new_shape) != size()) {
        throw ShapeError("reshape: cannot view " + shape_str(shape_) + " as " +
                         shape_str(new_shape));
    }
    Tensor t;
    t.storage_ = storage_;
    t.shape_ = std::move(new_shape);
    return t;
}

ParamView Tensor::param_view(std::string name) {
    ensure_grad();
    return ParamView{std::move(name), storage_->data.data(), storage_->grad.data(),
                     storage_->data.size()};
}

Scalar::Scalar(double value, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    impl_->value = value;
    impl_->requires_grad = requires_grad;
}

ParamView Scalar::param_view(std::string name) {
    return ParamView{std::move(name), &impl_->value, &impl_->grad, 1};
}

void Graph::backward(Scalar& loss) {
    loss.grad_ref() = 1.0;
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out(a.shape());
    auto oa = a.data(), ob = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = oa[i] + ob[i];
    g.record([a = a, b = b, out = out]() mutable {
        auto go = out.grad();
        auto ga = a.grad(), gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga[i] += go[i];
            gb[i] += go[i];
        }
    });
    return out;
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor out(a.shape());
    auto oa = a.data(), ob = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = oa[i] - ob[i];
    g.record([a = a, b = b, out = out]() mutable {
        auto go = out.grad();
        auto ga = a.grad(), gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga[i] += go[i];
            gb[i] -= go[i];
        }
    });
    return out;
}

Tensor hadamard(Graph& g, const Tensor& a, const Tensor& b) {
    check_same_shape("hadamard", a, b);
    Tensor out(a.shape());
    auto oa = a.data(), ob = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = oa[i] * ob[i];
    g.record([a = a, b = b, out = out]() mutable {
        auto go = out.grad();
        auto da = a.data(), db = b.data();
        auto ga = a.grad(), gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga[i] += go[i] * db[i];
            gb[i] += go[i] * da[i];
        }
    });
    return out;
}

Tensor scale(Graph& g, double c, const Tensor& a) {
    Tensor out(a.shape());
    auto oa = a.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = c * oa[i];
    g.record([a = a, out = out, c]() mutable {
        auto go = out.grad();
        auto ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += c * go[i];
    });
    return out;
}

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + std::to_string(a.rank()) +
                         "-d/" + std::to_string(b.rank()) + "-d, inner dims " +
                         std::to_string(a.rank() == 2 ? a.dim(1) : 0) + " vs " +
                         std::to_string(b.rank() == 2 ? b.dim(0) : 0));
    }
    const auto m = static_cast<Eigen::Index>(a.dim(0));
    const auto k = static_cast<Eigen::Index>(a.dim(1));
    const auto n = static_cast<Eigen::Index>(b.dim(1));
    Tensor out({a.dim(0), b.dim(1)});
    CMapMat A(a.data().data(), m, k);
    CMapMat B(b.data().data(), k, n);
    MapMat(out.data().data(), m, n).noalias() = A * B;
    g.record([a = a, b = b, out = out, m, k, n]() mutable {
        CMapMat A(a.data().data(), m, k);
        CMapMat B(b.data().data(), k, n);
        CMapMat dC(out.grad().data(), m, n);
        MapMat(a.grad().data(), m, k).noalias() += dC * B.transpose();
        MapMat(b.grad().data(), k, n).noalias() += A.transpose() * dC;
    });
    return out;
}

Tensor add_bias_rows(Graph& g, const Tensor& m, const Tensor& bias) {
    if (m.rank() != 2 || bias.size() != m.dim(1)) {
        throw ShapeError("add_bias_rows: bias of " + std::to_string(bias.size()) +
                         " entries vs " + std::to_string(m.rank() == 2 ? m.dim(1) : 0) +
                         " columns");
    }
    const std::size_t r = m.dim(0), c = m.dim(1);
    Tensor out({r, c});
    auto md = m.data();
    auto bd = bias.data();
    auto od = out.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) od[i * c + j] = md[i * c + j] + bd[j];
    g.record([m = m, bias = bias, out = out, r, c]() mutable {
        auto go = out.grad();
        auto gm = m.grad(), gb = bias.grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                gm[i * c + j] += go[i * c + j];
                gb[j] += go[i * c + j];
            }
    });
    return out;
}

Tensor conv1d(Graph& g, const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t pad) {
    if (input.rank() != 2 || kernel.rank() != 3) {
        throw ShapeError("conv1d: input must be C_in x L and kernel C_out x C_in x K");
    }
    const std::size_t c_in = input.dim(0), len = input.dim(1);
    const std::size_t c_out = kernel.dim(0), k_cin = kernel.dim(1), kw = kernel.dim(2);
    if (k_cin != c_in) {
        throw ShapeError("conv1d: kernel expects " + std::to_string(k_cin) +
                         " input channels, input has " + std::to_string(c_in));
    }
    if (bias.size() != c_out) {
        throw ShapeError("conv1d: bias of " + std::to_string(bias.size()) +
                         " entries for " + std::to_string(c_out) + " output channels");
    }
    if (kw > len + 2 * pad) {
        throw ShapeError("conv1d: kernel width " + std::to_string(kw) +
                         " exceeds padded length " + std::to_string(len + 2 * pad));
    }
    const std::size_t l_out = len + 2 * pad - kw + 1;
    Tensor out({c_out, l_out});
    auto in = input.data();
    auto kd = kernel.data();
    auto bd = bias.data();
    auto od = out.data();
    for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t t = 0; t < l_out; ++t) {
            double acc = bd[o];
            for (std::size_t c = 0; c < c_in; ++c) {
                for (std::size_t j = 0; j < kw; ++j) {
                    // position in the unpadded input
                    const std::ptrdiff_t src =
                        static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(pad);
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                    acc += kd[(o * c_in + c) * kw + j] * in[c * len + src];
                }
            }
            od[o * l_out + t] = acc;
        }
    }
    g.record([input = input, kernel = kernel, bias = bias, out = out, pad, c_in, len,
              c_out, kw, l_out]() mutable {
        auto go = out.grad();
        auto in = input.data();
        auto kd = kernel.data();
        auto gi = input.grad();
        auto gk = kernel.grad();
        auto gb = bias.grad();
        for (std::size_t o = 0; o < c_out; ++o) {
            for (std::size_t t = 0; t < l_out; ++t) {
                const double d = go[o * l_out + t];
                gb[o] += d;
                for (std::size_t c = 0; c < c_in; ++c) {
                    for (std::size_t j = 0; j < kw; ++j) {
                        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) -
                                                   static_cast<std::ptrdiff_t>(pad);
                        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                        gk[(o * c_in + c) * kw + j] += d * in[c * len + src];
                        gi[c * len + src] += d * kd[(o * c_in + c) * kw + j];
                    }
                }
            }
        }
    });
    return out;
}

Tensor blend(Graph& g, const Scalar& alpha, const Tensor& x, const Tensor& y) {
    check_same_shape("blend", x, y);
    const double a = alpha.value();
    Tensor out(x.shape());
    auto xd = x.data(), yd = y.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = a * xd[i] + (1.0 - a) * yd[i];
    g.record([alpha = alpha, x = x, y = y, out = out, a]() mutable {
        auto go = out.grad();
        auto xd = x.data(), yd = y.data();
        auto gx = x.grad(), gy = y.grad();
        double ga = 0.0;
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga += (xd[i] - yd[i]) * go[i];
            gx[i] += a * go[i];
            gy[i] += (1.0 - a) * go[i];
        }
        alpha.grad_ref() += ga;
    });
    return out;
}

Tensor concat_cols(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
        throw ShapeError("concat_cols: row counts differ");
    }
    const std::size_t r = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    Tensor out({r, ca + cb});
    auto ad = a.data(), bd = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < ca; ++j) od[i * (ca + cb) + j] = ad[i * ca + j];
        for (std::size_t j = 0; j < cb; ++j) od[i * (ca + cb) + ca + j] = bd[i * cb + j];
    }
    g.record([a = a, b = b, out = out, r, ca, cb]() mutable {
        auto go = out.grad();
        auto ga = a.grad(), gb = b.grad();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += go[i * (ca + cb) + j];
            for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += go[i * (ca + cb) + ca + j];
        }
    });
    return out;
}

Tensor stack_rows(Graph& g, const std::vector<Tensor>& rows) {
    if (rows.empty()) throw ContractError("stack_rows: empty row list");
    const std::size_t c = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != c) throw ShapeError("stack_rows: row lengths differ");
    }
    Tensor out({rows.size(), c});
    auto od = out.data();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto rd = rows[i].data();
        for (std::size_t j = 0; j < c; ++j) od[i * c + j] = rd[j];
    }
    g.record([rows = rows, out = out, c]() mutable {
        auto go = out.grad();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto gr = rows[i].grad();
            for (std::size_t j = 0; j < c; ++j) gr[j] += go[i * c + j];
        }
    });
    return out;
}

Tensor take_row(Graph& g, const Tensor& m, std::size_t i) {
    if (m.rank() != 2 || i >= m.dim(0)) {
        throw ShapeError("take_row: row " + std::to_string(i) + " of " +
                         std::to_string(m.rank() == 2 ? m.dim(0) : 0) + " rows");
    }
    const std::size_t c = m.dim(1);
    Tensor out({1, c});
    auto md = m.data();
    auto od = out.data();
    for (std::size_t j = 0; j < c; ++j) od[j] = md[i * c + j];
    g.record([m = m, out = out, i, c]() mutable {
        auto go = out.grad();
        auto gm = m.grad();
        for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += go[j];
    });
    return out;
}

Scalar mse(Graph& g, const Tensor& pred, const Tensor& target) {
    check_same_shape("mse", pred, target);
    const std::size_t n = pred.size();
    auto pd = pred.data(), td = target.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pd[i] - td[i];
        acc += d * d;
    }
    Scalar out(acc / static_cast<double>(n));
    g.record([pred = pred, target = target, out = out, n]() mutable {
        const double go = out.grad_value();
        auto pd = pred.data(), td = target.data();
        auto gp = pred.grad();
        for (std::size_t i = 0; i < n; ++i) {
            gp[i] += go * 2.0 * (pd[i] - td[i]) / static_cast<double>(n);
        }
    });
    return out;
}

double finite_diff_check(const std::function<double()>& forward,
                         std::span<const ParamView> params, double eps) {
    double max_err = 0.0;
    for (const auto& pv : params) {
        for (std::size_t i = 0; i < pv.count; ++i) {
            const double saved = pv.value[i];
            pv.value[i] = saved + eps;
            const double fp = forward();
            pv.value[i] = saved - eps;
            const double fm = forward();
            pv.value[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                throw NumericError("finite_diff_check: non-finite objective at " + pv.name);
            }
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = pv.grad[i];
            const double diff = std::abs(analytic - numeric);
            const double denom = std::max(std::abs(analytic), std::abs(numeric));
            const double err = denom < 1e-8 ? diff : diff / denom;
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

} // namespace crosslinear
