#include "ethomap/embed/pca.hpp"

#include "ethomap/error.hpp"
#include "ethomap/util.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <string>

namespace ethomap::embed {

PcaModel pca_fit(const windows::DataMatrix& data, std::size_t dims) {
    if (data.rows < 2) {
        throw ValidationError("PCA needs at least 2 rows");
    }
    if (dims < 1 || dims > data.cols) {
        throw ValidationError("PCA dims " + std::to_string(dims) + " exceeds input dimension " +
                              std::to_string(data.cols));
    }
    const auto n = static_cast<Eigen::Index>(data.rows);
    const auto p = static_cast<Eigen::Index>(data.cols);
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            x(i, j) = data.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw Error("covariance eigendecomposition failed");
    }

    PcaModel model;
    model.input_dims = data.cols;
    model.mean.assign(mean.data(), mean.data() + p);
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    for (Eigen::Index j = 0; j < p; ++j) {
        model.total_variance += std::max(0.0, values(j));
    }
    for (std::size_t c = 0; c < dims; ++c) {
        const Eigen::Index col = p - 1 - static_cast<Eigen::Index>(c);
        Eigen::VectorXd v = solver.eigenvectors().col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        model.components.emplace_back(v.data(), v.data() + p);
        const double variance = std::max(0.0, values(col));
        model.explained_variance.push_back(variance);
        model.explained_variance_ratio.push_back(model.total_variance > 0.0 ? variance / model.total_variance : 0.0);
    }
    return model;
}

Coordinates pca_transform(const PcaModel& model, const windows::DataMatrix& data) {
    if (data.cols != model.input_dims) {
        throw ValidationError("input has " + std::to_string(data.cols) + " dimensions, PCA model expects " +
                              std::to_string(model.input_dims));
    }
    Coordinates coords(data.rows, model.components.size());
    for (std::size_t i = 0; i < data.rows; ++i) {
        const auto row = data.row(i);
        for (std::size_t c = 0; c < model.components.size(); ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < data.cols; ++j) {
                s += (static_cast<double>(row[j]) - model.mean[j]) * model.components[c][j];
            }
            coords.at(i, c) = s;
        }
    }
    return coords;
}

void save_pca(const PcaModel& model, const Coordinates& coords, const std::vector<windows::WindowRef>& index,
              const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    nlohmann::ordered_json meta;
    meta["n"] = coords.rows;
    meta["dims"] = coords.dims;
    meta["explained_variance"] = model.explained_variance;
    meta["explained_variance_ratio"] = model.explained_variance_ratio;
    meta["total_variance"] = model.total_variance;
    meta["mean"] = model.mean;
    meta["components"] = model.components;
    util::write_file_atomic(directory / "pca.json", meta.dump(2) + "\n");
    util::write_f32(directory / "pca.f32", std::vector<float>(coords.values.begin(), coords.values.end()));
    util::write_file_atomic(directory / "windows.index.csv", windows::index_to_csv(index));
}

} // namespace ethomap::embed
