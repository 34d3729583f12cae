#pragma once

// Dense double-precision tensors with reverse-mode automatic differentiation.
// Tensors are value types over a shared node; the recorded graph is the set of
// nodes reachable from a loss, replayed in reverse creation order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ald {

using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

inline size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (int d : s) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension in shape " + shape_str(s));
        n *= static_cast<size_t>(d);
    }
    return n;
}

namespace detail {

inline std::uint64_t next_node_id() {
    static std::atomic<std::uint64_t> counter{0};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

// per-thread: graphs never span threads
inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

} // namespace detail

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // sized lazily on first accumulation
    bool requires_grad = false;
    bool backward_done = false;
    std::uint64_t id = 0;
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

// Disables graph recording for the current thread while alive.
struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(detail::grad_mode()) { detail::grad_mode() = false; }
    ~NoGradGuard() { detail::grad_mode() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

class Tensor {
public:
    std::shared_ptr<TensorNode> node;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node(std::move(n)) {}

    static Tensor zeros(const Shape& shape, bool requires_grad = false) {
        auto n = std::make_shared<TensorNode>();
        n->shape = shape;
        n->data.assign(shape_numel(shape), 0.0);
        n->requires_grad = requires_grad;
        n->id = detail::next_node_id();
        return Tensor(std::move(n));
    }

    static Tensor from_data(const Shape& shape, std::vector<double> values, bool requires_grad = false) {
        if (shape_numel(shape) != values.size())
            throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                        std::to_string(values.size()) + " values");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("tensor: non-finite value in input data");
        auto n = std::make_shared<TensorNode>();
        n->shape = shape;
        n->data = std::move(values);
        n->requires_grad = requires_grad;
        n->id = detail::next_node_id();
        return Tensor(std::move(n));
    }

    static Tensor scalar(double v) { return from_data({1, 1}, {v}); }

    bool defined() const { return node != nullptr; }
    const Shape& shape() const { return node->shape; }
    size_t numel() const { return node->data.size(); }
    int rows() const { return node->shape.size() == 2 ? node->shape[0] : 1; }
    int cols() const { return node->shape.size() == 2 ? node->shape[1] : static_cast<int>(numel()); }
    bool requires_grad() const { return node->requires_grad; }

    std::vector<double>& data() { return node->data; }
    const std::vector<double>& data() const { return node->data; }

    double at(int r, int c) const { return node->data[static_cast<size_t>(r) * cols() + c]; }
    double& at(int r, int c) { return node->data[static_cast<size_t>(r) * cols() + c]; }

    double item() const {
        if (numel() != 1) throw std::runtime_error("item: tensor has " + std::to_string(numel()) + " elements");
        return node->data[0];
    }

    bool is_scalar() const { return numel() == 1; }

    const std::vector<double>& grad() const {
        if (node->grad.size() != node->data.size())
            throw std::runtime_error("grad: no gradient accumulated; call backward() first");
        return node->grad;
    }

    void zero_grad() {
        node->grad.assign(node->data.size(), 0.0);
        node->backward_done = false;
    }

    // Reverse pass from a scalar loss. Nodes run in reverse creation order,
    // which is a valid reverse topological order of the recorded graph.
    void backward() const {
        if (!is_scalar()) throw std::runtime_error("backward: loss must be scalar, got " + shape_str(shape()));
        if (node->backward_done) throw std::runtime_error("backward: already run on this graph; reset gradients first");

        // iterative DFS collecting reachable nodes; dedupe by pointer
        std::vector<std::shared_ptr<TensorNode>> order;
        std::vector<const TensorNode*> seen;
        auto mark = [&seen](const TensorNode* p) {
            auto it = std::lower_bound(seen.begin(), seen.end(), p);
            if (it != seen.end() && *it == p) return false;
            seen.insert(it, p);
            return true;
        };
        std::vector<std::shared_ptr<TensorNode>> work{node};
        mark(node.get());
        while (!work.empty()) {
            auto cur = work.back();
            work.pop_back();
            order.push_back(cur);
            for (auto& p : cur->parents)
                if (mark(p.get())) work.push_back(p);
        }
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a->id > b->id; });

        node->ensure_grad();
        node->grad[0] += 1.0;
        for (auto& n : order)
            if (n->backward_fn) n->backward_fn(*n);
        node->backward_done = true;
    }
};

// --- seeded RNG helpers; all stochastic behaviour in the library flows
// --- through these so runs are reproducible for a fixed seed.

using Rng = std::mt19937_64;

inline double rand_uniform(Rng& rng, double lo, double hi) {
    // 53-bit mantissa draw, no library distribution objects involved
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

inline int rand_int(Rng& rng, int n) {
    // rejection sampling for an unbiased draw in [0, n)
    if (n <= 0) throw std::invalid_argument("rand_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % un;
    std::uint64_t r;
    do { r = rng(); } while (r >= limit);
    return static_cast<int>(r % un);
}

template <typename T>
inline void shuffle_inplace(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<size_t>(rand_int(rng, static_cast<int>(i)))]);
}

inline Tensor glorot_uniform(const Shape& shape, Rng& rng, int fan_in, int fan_out, bool requires_grad = true) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> vals(shape_numel(shape));
    for (double& v : vals) v = rand_uniform(rng, -bound, bound);
    return Tensor::from_data(shape, std::move(vals), requires_grad);
}

} // namespace ald
