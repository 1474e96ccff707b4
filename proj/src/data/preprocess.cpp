#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "vrem/data.hpp"
#include "vrem/errors.hpp"

namespace vrem {

std::pair<RawDataset, std::vector<std::size_t>> remove_constant_features(const RawDataset& data) {
  std::vector<std::size_t> kept;
  for (Eigen::Index j = 0; j < data.values.cols(); ++j) {
    const auto col = data.values.col(j);
    if (col.size() > 0 && (col.array() != col(0)).any()) kept.push_back(static_cast<std::size_t>(j));
  }
  if (kept.empty()) throw ArgumentError("degenerate dataset: every column is constant");
  RawDataset out;
  out.values.resize(data.values.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j)
    out.values.col(static_cast<Eigen::Index>(j)) =
        data.values.col(static_cast<Eigen::Index>(kept[j]));
  out.labels = data.labels;
  out.provenance = data.provenance + " | constant columns removed (" +
                   std::to_string(data.cols() - kept.size()) + ")";
  return {std::move(out), std::move(kept)};
}

PcaTransform pca_fit(const RawDataset& data, std::size_t d_pc) {
  const std::size_t d = data.cols();
  if (data.rows() == 0) throw ArgumentError("empty dataset");
  if (d_pc < 1 || d_pc > d)
    throw ArgumentError("d_pc = " + std::to_string(d_pc) + " must lie in [1, " +
                        std::to_string(d) + "]");
  PcaTransform t;
  t.mean = data.values.colwise().mean().transpose();
  const RowMatrix centered = data.values.rowwise() - t.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(data.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()));
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  // eigenvalues come back ascending
  const auto k = static_cast<Eigen::Index>(d_pc);
  const auto dd = static_cast<Eigen::Index>(d);
  t.components.resize(dd, k);
  t.explained.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    t.components.col(j) = eig.eigenvectors().col(dd - 1 - j);
    t.explained[j] = eig.eigenvalues()[dd - 1 - j];
  }
  return t;
}

RawDataset pca_apply(const PcaTransform& t, const RawDataset& data) {
  if (data.cols() != static_cast<std::size_t>(t.mean.size()))
    throw ArgumentError("dataset width does not match the PCA transform");
  RawDataset out;
  out.values = (data.values.rowwise() - t.mean.transpose()) * t.components;
  out.labels = data.labels;
  out.provenance = data.provenance + " | pca " + std::to_string(t.components.cols());
  return out;
}

}  // namespace vrem
