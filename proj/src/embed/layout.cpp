#include "ethomap/embed/layout.hpp"

#include "ethomap/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace ethomap::embed {

Coordinates random_init(std::size_t n, std::size_t dims, std::uint64_t seed) {
    Coordinates coords(n, dims);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-10.0, 10.0);
    for (double& v : coords.values) {
        v = uniform(rng);
    }
    return coords;
}

std::size_t connected_components(const FuzzyGraph& graph) {
    std::vector<std::size_t> parent(graph.n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = graph.n;
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
            const std::size_t a = find(i);
            const std::size_t b = find(graph.columns[e]);
            if (a != b) {
                parent[std::max(a, b)] = std::min(a, b);
                --components;
            }
        }
    }
    return components;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void normalize(std::vector<double>& v) {
    const double norm = std::sqrt(dot(v, v));
    if (norm > 0.0) {
        for (double& x : v) {
            x /= norm;
        }
    }
}

void remove_component(std::vector<double>& v, const std::vector<double>& basis) {
    const double c = dot(v, basis);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] -= c * basis[i];
    }
}

} // namespace

namespace {

// Leading non-trivial eigenvectors of a connected graph's normalized Laplacian,
// one column per output dimension, unscaled.
Coordinates spectral_vectors(const FuzzyGraph& graph, std::size_t dims, std::mt19937_64& rng) {
    const std::size_t n = graph.n;
    std::vector<double> inv_sqrt_degree(n);
    std::vector<double> trivial(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
            d += graph.weights[e];
        }
        inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
        trivial[i] = std::sqrt(d);
    }
    normalize(trivial);

    // (I + D^-1/2 W D^-1/2) / 2 has spectrum in [0, 1]; its top eigenvector is sqrt(degree)
    // and the next ones are the smallest non-trivial eigenvectors of the normalized Laplacian.
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
                const std::size_t j = graph.columns[e];
                s += graph.weights[e] * inv_sqrt_degree[j] * x[j];
            }
            y[i] = 0.5 * (x[i] + inv_sqrt_degree[i] * s);
        }
    };

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> basis(dims, std::vector<double>(n));
    for (auto& v : basis) {
        for (double& x : v) {
            x = normal(rng);
        }
    }
    auto orthonormalize = [&](std::vector<double>& v, std::size_t upto) {
        remove_component(v, trivial);
        for (std::size_t k = 0; k < upto; ++k) {
            remove_component(v, basis[k]);
        }
        normalize(v);
    };
    for (std::size_t k = 0; k < dims; ++k) {
        orthonormalize(basis[k], k);
    }

    std::vector<double> next(n);
    for (int it = 0; it < 1000; ++it) {
        double change = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            apply(basis[k], next);
            orthonormalize(next, k);
            change = std::max(change, 1.0 - std::abs(dot(next, basis[k])));
            basis[k].swap(next);
        }
        if (change < 1e-7) {
            break;
        }
    }

    Coordinates coords(n, dims);
    for (std::size_t k = 0; k < dims; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            coords.at(i, k) = basis[k][i];
        }
    }
    return coords;
}

// Rescales in place so the largest absolute coordinate equals `target`.
bool scale_to(Coordinates& coords, double target) {
    double max_abs = 0.0;
    for (double v : coords.values) {
        max_abs = std::max(max_abs, std::abs(v));
    }
    if (!(max_abs > 0.0) || !std::isfinite(max_abs)) {
        return false;
    }
    for (double& v : coords.values) {
        v *= target / max_abs;
    }
    return true;
}

std::vector<std::size_t> component_labels(const FuzzyGraph& graph, std::size_t& count) {
    std::vector<std::size_t> label(graph.n, graph.n);
    count = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < graph.n; ++s) {
        if (label[s] != graph.n) {
            continue;
        }
        label[s] = count;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
                if (label[graph.columns[e]] == graph.n) {
                    label[graph.columns[e]] = count;
                    stack.push_back(graph.columns[e]);
                }
            }
        }
        ++count;
    }
    return label;
}

} // namespace

Coordinates spectral_init(const FuzzyGraph& graph, std::size_t dims, std::uint64_t seed) {
    const std::size_t n = graph.n;
    std::mt19937_64 rng(seed);
    std::size_t count = 0;
    const auto label = component_labels(graph, count);

    Coordinates coords(n, dims);
    if (count == 1) {
        if (n <= dims + 1) {
            return random_init(n, dims, seed);
        }
        coords = spectral_vectors(graph, dims, rng);
    } else {
        // Each component is laid out on its own and placed in its own cell of a grid,
        // so separate pieces of the data start apart instead of interleaved.
        const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
        std::vector<std::vector<std::size_t>> members(count);
        for (std::size_t i = 0; i < n; ++i) {
            members[label[i]].push_back(i);
        }
        for (std::size_t c = 0; c < count; ++c) {
            const auto& ids = members[c];
            std::vector<std::size_t> local(n, 0);
            for (std::size_t m = 0; m < ids.size(); ++m) {
                local[ids[m]] = m;
            }
            Coordinates part;
            bool ok = false;
            if (ids.size() > dims + 1) {
                FuzzyGraph sub;
                sub.n = ids.size();
                sub.offsets.push_back(0);
                for (std::size_t i : ids) {
                    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
                        sub.columns.push_back(static_cast<std::uint32_t>(local[graph.columns[e]]));
                        sub.weights.push_back(graph.weights[e]);
                    }
                    sub.offsets.push_back(sub.columns.size());
                }
                part = spectral_vectors(sub, dims, rng);
                ok = scale_to(part, 0.4);
            }
            if (!ok) {
                part = Coordinates(ids.size(), dims);
                std::uniform_real_distribution<double> uniform(-0.4, 0.4);
                for (double& v : part.values) {
                    v = uniform(rng);
                }
            }
            const double cx = static_cast<double>(c % side);
            const double cy = static_cast<double>(c / side);
            for (std::size_t m = 0; m < ids.size(); ++m) {
                for (std::size_t d = 0; d < dims; ++d) {
                    const double offset = d == 0 ? cx : (d == 1 ? cy : 0.0);
                    coords.at(ids[m], d) = part.at(m, d) + offset;
                }
            }
        }
        // Center the grid before the final rescale.
        for (std::size_t d = 0; d < std::min<std::size_t>(dims, 2); ++d) {
            const double shift = 0.5 * static_cast<double>(side - 1);
            for (std::size_t i = 0; i < n; ++i) {
                coords.at(i, d) -= shift;
            }
        }
    }
    if (!scale_to(coords, 10.0)) {
        return random_init(n, dims, seed);
    }
    std::normal_distribution<double> jitter(0.0, 1e-4);
    for (double& v : coords.values) {
        v += jitter(rng);
    }
    return coords;
}

EdgeList edges_of(const FuzzyGraph& graph) {
    EdgeList edges;
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
            edges.head.push_back(static_cast<std::uint32_t>(i));
            edges.tail.push_back(graph.columns[e]);
            edges.weight.push_back(graph.weights[e]);
        }
    }
    return edges;
}

namespace {

inline double clip(double v) {
    return std::clamp(v, -kGradientClip, kGradientClip);
}

template <bool Shared>
inline double load(double& ref) {
    if constexpr (Shared) {
        return std::atomic_ref<double>(ref).load(std::memory_order_relaxed);
    } else {
        return ref;
    }
}

template <bool Shared>
inline void store(double& ref, double value) {
    if constexpr (Shared) {
        std::atomic_ref<double>(ref).store(value, std::memory_order_relaxed);
    } else {
        ref = value;
    }
}

struct Schedule {
    std::vector<std::size_t> edge;  // sampled edges only
    std::vector<double> epochs_per_sample;
    std::vector<double> next_sample;
    std::vector<double> epochs_per_negative;
    std::vector<double> next_negative;
};

Schedule make_schedule(const EdgeList& edges, std::size_t epochs, double negative_rate) {
    Schedule s;
    double max_w = 0.0;
    for (double w : edges.weight) {
        max_w = std::max(max_w, w);
    }
    for (std::size_t e = 0; e < edges.weight.size(); ++e) {
        const double w = edges.weight[e];
        if (!(w > 0.0) || w < max_w / static_cast<double>(epochs)) {
            continue;
        }
        const double eps = max_w / w;
        s.edge.push_back(e);
        s.epochs_per_sample.push_back(eps);
        s.next_sample.push_back(eps);
        s.epochs_per_negative.push_back(eps / negative_rate);
        s.next_negative.push_back(eps / negative_rate);
    }
    return s;
}

struct Worker {
    const EdgeList& edges;
    Schedule& schedule;
    double* head;
    double* tail;
    std::size_t dims;
    std::size_t tail_rows;
    bool move_other;
    double a;
    double b;
    double gamma;
};

template <bool Shared>
void run_epoch(Worker& w, std::size_t begin, std::size_t end, double n, double alpha, std::mt19937_64& rng) {
    const std::size_t dims = w.dims;
    double current[8];
    double other[8];
    for (std::size_t s = begin; s < end; ++s) {
        if (w.schedule.next_sample[s] > n) {
            continue;
        }
        const std::size_t e = w.schedule.edge[s];
        double* cur = w.head + static_cast<std::size_t>(w.edges.head[e]) * dims;
        double* oth = w.tail + static_cast<std::size_t>(w.edges.tail[e]) * dims;

        double d2 = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
            current[d] = load<Shared>(cur[d]);
            other[d] = load<Shared>(oth[d]);
            const double diff = current[d] - other[d];
            d2 += diff * diff;
        }
        double coeff = 0.0;
        if (d2 > 0.0) {
            const double pb = std::pow(d2, w.b);
            coeff = -2.0 * w.a * w.b * (pb / d2) / (w.a * pb + 1.0);
        }
        for (std::size_t d = 0; d < dims; ++d) {
            const double g = clip(coeff * (current[d] - other[d]));
            current[d] += g * alpha;
            store<Shared>(cur[d], current[d]);
            if (w.move_other) {
                store<Shared>(oth[d], load<Shared>(oth[d]) - g * alpha);
            }
        }
        w.schedule.next_sample[s] += w.schedule.epochs_per_sample[s];

        const auto negatives = static_cast<long long>((n - w.schedule.next_negative[s]) /
                                                      w.schedule.epochs_per_negative[s]);
        for (long long p = 0; p < negatives; ++p) {
            const std::size_t k = static_cast<std::size_t>(rng() % w.tail_rows);
            if (w.move_other && k == w.edges.head[e]) {
                continue;
            }
            const double* neg = w.tail + k * dims;
            d2 = 0.0;
            for (std::size_t d = 0; d < dims; ++d) {
                other[d] = load<Shared>(const_cast<double&>(neg[d]));
                const double diff = current[d] - other[d];
                d2 += diff * diff;
            }
            if (!(d2 > 0.0)) {
                continue;
            }
            const double pb = std::pow(d2, w.b);
            const double rep = 2.0 * w.gamma * w.b / ((0.001 + d2) * (w.a * pb + 1.0));
            for (std::size_t d = 0; d < dims; ++d) {
                current[d] += clip(rep * (current[d] - other[d])) * alpha;
                store<Shared>(cur[d], current[d]);
            }
        }
        w.schedule.next_negative[s] += static_cast<double>(negatives) * w.schedule.epochs_per_negative[s];
    }
}

} // namespace

void optimize_edges(const EdgeList& edges, Coordinates& head_coords, const Coordinates* tail,
                    const LayoutOptions& options) {
    if (options.dims == 0 || options.dims > 8) {
        throw ValidationError("embedding dimensions must lie in [1, 8]");
    }
    if (head_coords.dims != options.dims || (tail && tail->dims != options.dims)) {
        throw ValidationError("coordinate dimensionality does not match the layout options");
    }
    if (options.epochs == 0 || edges.weight.empty()) {
        return;
    }
    if (!(options.negative_rate > 0.0) || !(options.learning_rate > 0.0)) {
        throw ValidationError("negative_rate and learning_rate must be positive");
    }
    Schedule schedule = make_schedule(edges, options.epochs, options.negative_rate);
    const bool move_other = tail == nullptr;
    Worker worker{edges,
                  schedule,
                  head_coords.values.data(),
                  move_other ? head_coords.values.data() : const_cast<double*>(tail->values.data()),
                  options.dims,
                  move_other ? head_coords.rows : tail->rows,
                  move_other,
                  options.curve.a,
                  options.curve.b,
                  options.repulsion};
    if (worker.tail_rows == 0) {
        return;
    }

    const std::size_t count = schedule.edge.size();
    const unsigned threads = std::max(1u, options.threads);
    if (threads == 1) {
        std::mt19937_64 rng(options.seed);
        double alpha = options.learning_rate;
        for (std::size_t n = 0; n < options.epochs; ++n) {
            run_epoch<false>(worker, 0, count, static_cast<double>(n), alpha, rng);
            alpha = options.learning_rate * (1.0 - static_cast<double>(n) / static_cast<double>(options.epochs));
        }
    } else {
        std::vector<std::mt19937_64> rngs;
        for (unsigned t = 0; t < threads; ++t) {
            rngs.emplace_back(options.seed + 0x9E3779B97F4A7C15ULL * (t + 1));
        }
        double alpha = options.learning_rate;
        const std::size_t chunk = (count + threads - 1) / threads;
        for (std::size_t n = 0; n < options.epochs; ++n) {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t) {
                const std::size_t begin = std::min(count, t * chunk);
                const std::size_t end = std::min(count, begin + chunk);
                pool.emplace_back([&, t, begin, end] {
                    run_epoch<true>(worker, begin, end, static_cast<double>(n), alpha, rngs[t]);
                });
            }
            pool.clear();
            alpha = options.learning_rate * (1.0 - static_cast<double>(n) / static_cast<double>(options.epochs));
        }
    }
    for (double v : head_coords.values) {
        if (!std::isfinite(v)) {
            throw Error("layout produced non-finite coordinates");
        }
    }
}

void optimize_layout(const FuzzyGraph& graph, const LayoutOptions& options, Coordinates& coords) {
    if (coords.rows != graph.n) {
        throw ValidationError("coordinate count does not match graph size");
    }
    optimize_edges(edges_of(graph), coords, nullptr, options);
}

Coordinates layout_sgd(const FuzzyGraph& graph, const LayoutOptions& options) {
    Coordinates coords = options.init == InitMethod::Spectral ? spectral_init(graph, options.dims, options.seed)
                                                              : random_init(graph.n, options.dims, options.seed);
    optimize_layout(graph, options, coords);
    return coords;
}

std::string to_string(InitMethod init) {
    return init == InitMethod::Spectral ? "spectral" : "random";
}

InitMethod init_from_string(const std::string& name) {
    if (name == "spectral") {
        return InitMethod::Spectral;
    }
    if (name == "random") {
        return InitMethod::Random;
    }
    throw ValidationError("unknown init method: " + name);
}

} // namespace ethomap::embed
