#pragma once

#include "ethomap/embed/coordinates.hpp"
#include "ethomap/embed/curve.hpp"
#include "ethomap/embed/fuzzy.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ethomap::embed {

enum class InitMethod { Spectral, Random };

struct LayoutOptions {
    std::size_t dims = 2;
    std::size_t epochs = 500;
    CurveParams curve;
    std::uint64_t seed = 7;
    InitMethod init = InitMethod::Spectral;
    double negative_rate = 5.0;
    double learning_rate = 1.0;
    double repulsion = 1.0;
    // More than one thread races on coordinates and is not reproducible.
    unsigned threads = 1;
};

inline constexpr double kGradientClip = 4.0;

/// Uniform in [-10, 10]^dims.
Coordinates random_init(std::size_t n, std::size_t dims, std::uint64_t seed);

/// Leading non-trivial eigenvectors of the normalized graph Laplacian via power
/// iteration with deflation, scaled to [-10, 10]. A disconnected graph gets one
/// spectral layout per component, each placed in its own grid cell.
Coordinates spectral_init(const FuzzyGraph& graph, std::size_t dims, std::uint64_t seed);

std::size_t connected_components(const FuzzyGraph& graph);

/// Stochastic layout: sampled attraction along edges, negative-sampled repulsion,
/// learning rate decaying linearly to 0.
Coordinates layout_sgd(const FuzzyGraph& graph, const LayoutOptions& options);

/// Same optimizer starting from given coordinates.
void optimize_layout(const FuzzyGraph& graph, const LayoutOptions& options, Coordinates& coords);

/// Directed edge list; head points move, tail points are sampled against.
struct EdgeList {
    std::vector<std::uint32_t> head;
    std::vector<std::uint32_t> tail;
    std::vector<double> weight;
};

/// Both directions of every stored edge, in CSR order.
EdgeList edges_of(const FuzzyGraph& graph);

/// Core optimizer. With `tail` null the tails are `head_coords` themselves and both
/// ends of an edge move; otherwise tail coordinates stay fixed and negatives are
/// drawn from them. Edges lighter than max_weight / epochs are never sampled.
void optimize_edges(const EdgeList& edges, Coordinates& head_coords, const Coordinates* tail,
                    const LayoutOptions& options);

std::string to_string(InitMethod init);
InitMethod init_from_string(const std::string& name);

} // namespace ethomap::embed
