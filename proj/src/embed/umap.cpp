#include "ethomap/embed/umap.hpp"

#include "ethomap/embed/fuzzy.hpp"
#include "ethomap/embed/knn.hpp"
#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace ethomap::embed {

void UmapParams::validate() const {
    if (n_neighbors < 1) {
        throw ValidationError("neighbors must be at least 1");
    }
    if (!(min_dist >= 0.0) || !(spread > 0.0) || !(min_dist < 10.0 * spread)) {
        throw ValidationError("min_dist must lie in [0, 10 * spread)");
    }
    if (epochs < 1) {
        throw ValidationError("epochs must be at least 1");
    }
    if (!(negative_rate > 0.0) || !(learning_rate > 0.0)) {
        throw ValidationError("negative rate and learning rate must be positive");
    }
    if (dims < 1 || dims > 8) {
        throw ValidationError("embedding dimensions must lie in [1, 8]");
    }
}

namespace {

LayoutOptions layout_options(const UmapParams& params, CurveParams curve) {
    LayoutOptions options;
    options.dims = params.dims;
    options.epochs = params.epochs;
    options.curve = curve;
    options.seed = params.seed;
    options.init = params.init;
    options.negative_rate = params.negative_rate;
    options.learning_rate = params.learning_rate;
    options.threads = params.threads;
    return options;
}

} // namespace

EmbeddingModel umap_fit(const windows::DataMatrix& data, const UmapParams& params) {
    params.validate();
    if (params.n_neighbors >= data.rows) {
        throw ValidationError("neighbors (" + std::to_string(params.n_neighbors) +
                              ") must be smaller than the number of windows (" + std::to_string(data.rows) + ")");
    }
    const NeighborGraph knn = knn_exact(data, params.n_neighbors, params.knn_threads);
    const FuzzyGraph fuzzy = calibrate_fuzzy(knn);

    EmbeddingModel model;
    model.params = params;
    model.curve = fit_ab(params.min_dist, params.spread).params;
    model.coords = layout_sgd(fuzzy, layout_options(params, model.curve));
    model.training = std::make_shared<const windows::DataMatrix>(data);
    return model;
}

EmbeddingModel umap_fit(const windows::WindowDataset& dataset, const UmapParams& params) {
    EmbeddingModel model = umap_fit(dataset.matrix, params);
    model.provenance = dataset.index;
    return model;
}

Coordinates umap_transform(const EmbeddingModel& model, const windows::DataMatrix& data, std::size_t epochs) {
    if (!model.training) {
        throw Error("model has no training data attached; transform is unavailable");
    }
    const auto& training = *model.training;
    if (data.cols != training.cols) {
        throw ValidationError("new points have " + std::to_string(data.cols) + " dimensions, training data has " +
                              std::to_string(training.cols));
    }
    const std::size_t dims = model.coords.dims;
    Coordinates placed(data.rows, dims);
    if (data.rows == 0) {
        return placed;
    }
    const std::size_t k = std::min(model.params.n_neighbors, training.rows);
    const NeighborGraph knn = knn_query(training, data, k, model.params.knn_threads);

    EdgeList edges;
    for (std::size_t i = 0; i < data.rows; ++i) {
        const auto ids = knn.neighbors(i);
        const auto dists = knn.dists(i);
        const LocalScale scale = calibrate_row(dists);
        double total = 0.0;
        std::vector<double> weights(k);
        for (std::size_t j = 0; j < k; ++j) {
            weights[j] = membership(dists[j], scale);
            total += weights[j];
            edges.head.push_back(static_cast<std::uint32_t>(i));
            edges.tail.push_back(ids[j]);
            edges.weight.push_back(weights[j]);
        }
        // A point present in the training set sits on its duplicates.
        const bool duplicate = dists[0] == 0.0;
        if (duplicate) {
            std::fill(weights.begin(), weights.end(), 0.0);
            total = 0.0;
            for (std::size_t j = 0; j < k && dists[j] == 0.0; ++j) {
                weights[j] = 1.0;
                total += 1.0;
            }
        }
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t d = 0; d < dims; ++d) {
                placed.at(i, d) += weights[j] / total * model.coords.at(ids[j], d);
            }
        }
    }

    if (epochs > 0) {
        LayoutOptions options = layout_options(model.params, model.curve);
        options.epochs = epochs;
        options.learning_rate = model.params.learning_rate / 4.0;
        options.threads = 1;
        optimize_edges(edges, placed, &model.coords, options);
    }
    return placed;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    nlohmann::ordered_json meta;
    meta["n"] = model.coords.rows;
    meta["dims"] = model.coords.dims;
    meta["a"] = model.curve.a;
    meta["b"] = model.curve.b;
    meta["n_neighbors"] = model.params.n_neighbors;
    meta["min_dist"] = model.params.min_dist;
    meta["spread"] = model.params.spread;
    meta["epochs"] = model.params.epochs;
    meta["seed"] = model.params.seed;
    meta["negative_rate"] = model.params.negative_rate;
    meta["learning_rate"] = model.params.learning_rate;
    meta["init"] = to_string(model.params.init);
    meta["training"] = model.training_path;
    util::write_file_atomic(directory / "embedding.json", meta.dump(2) + "\n");

    std::vector<float> values(model.coords.values.begin(), model.coords.values.end());
    util::write_f32(directory / "embedding.f32", values);
    util::write_file_atomic(directory / "windows.index.csv", windows::index_to_csv(model.provenance));
}

EmbeddingModel load_model(const std::filesystem::path& directory) {
    EmbeddingModel model;
    const auto meta_path = directory / "embedding.json";
    try {
        const auto meta = nlohmann::json::parse(util::read_file(meta_path));
        const std::size_t n = meta.at("n").get<std::size_t>();
        const std::size_t dims = meta.at("dims").get<std::size_t>();
        model.curve = {meta.at("a").get<double>(), meta.at("b").get<double>()};
        model.params.n_neighbors = meta.at("n_neighbors").get<std::size_t>();
        model.params.min_dist = meta.at("min_dist").get<double>();
        model.params.spread = meta.value("spread", 1.0);
        model.params.epochs = meta.at("epochs").get<std::size_t>();
        model.params.seed = meta.at("seed").get<std::uint64_t>();
        model.params.negative_rate = meta.value("negative_rate", 5.0);
        model.params.learning_rate = meta.value("learning_rate", 1.0);
        model.params.init = init_from_string(meta.value("init", std::string("spectral")));
        model.params.dims = dims;
        model.training_path = meta.value("training", std::string());

        const auto values = util::read_f32(directory / "embedding.f32");
        if (values.size() != n * dims) {
            throw Error((directory / "embedding.f32").string() + ": expected " + std::to_string(n * dims) +
                        " values, found " + std::to_string(values.size()));
        }
        model.coords = Coordinates(n, dims);
        std::copy(values.begin(), values.end(), model.coords.values.begin());
    } catch (const nlohmann::json::exception& e) {
        throw Error(meta_path.string() + ": " + e.what());
    }
    model.provenance = windows::index_from_csv(util::read_file(directory / "windows.index.csv"));
    if (model.provenance.size() != model.coords.rows) {
        throw Error((directory / "windows.index.csv").string() + ": row count does not match the embedding");
    }
    if (!model.training_path.empty()) {
        std::filesystem::path training = model.training_path;
        if (training.is_relative()) {
            training = directory / training;
        }
        if (std::filesystem::exists(training / "windows.meta.json")) {
            auto dataset = windows::load_dataset(training);
            if (dataset.size() == model.coords.rows) {
                model.training = std::make_shared<const windows::DataMatrix>(std::move(dataset.matrix));
            }
        }
    }
    return model;
}

} // namespace ethomap::embed
