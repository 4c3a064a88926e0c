#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tempfit {

/// N samples of raw (flattened) features with integer class labels in [0, C).
/// C is taken to be max(label) + 1.
struct LabeledFeatureSet {
    Eigen::MatrixXd features;  // N x D
    std::vector<int> labels;   // N

    long size() const { return features.rows(); }
    int class_count() const;
};

enum class LaplacianKind { unnormalized, symmetric_normalized };

LaplacianKind parse_laplacian(std::string_view name);
std::string_view to_string(LaplacianKind k);

struct CsgConfig {
    int k = 3;
    int samples_per_class = 100;
    std::uint64_t seed = 0;
    LaplacianKind laplacian = LaplacianKind::unnormalized;
    unsigned threads = 0;

    void validate() const;
};

/// Row-stochastic C x C class-overlap estimate.
using SimilarityMatrix = Eigen::MatrixXd;

/// S(i, j): over (up to samples_per_class) points of class i, the mean
/// fraction of their k Euclidean nearest neighbours (self excluded, ties
/// broken by sample index) that carry label j. Rows are renormalized to sum
/// to one. When a class has no more points than samples_per_class all of them
/// are used and the seed plays no role.
///
/// Throws InputError when C < 2, a label is negative, shapes disagree, a
/// feature is non-finite, or some class has fewer than k + 1 samples.
SimilarityMatrix class_similarity(const LabeledFeatureSet& data, const CsgConfig& cfg);

/// Symmetric class adjacency: W(i, j) = 1 - BrayCurtis(S_i, S_j), zero diagonal.
Eigen::MatrixXd similarity_adjacency(const SimilarityMatrix& sim);

/// L = D - W, or I - D^-1/2 W D^-1/2. Isolated vertices (zero degree) get an
/// all-zero row and column in the normalized form.
Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency, LaplacianKind kind);

/// Ascending eigenvalues of a symmetric matrix. Throws NumericError if the
/// solver fails or an eigenpair residual exceeds 1e-10 (relative to the
/// matrix norm).
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

/// Sum of the positive first differences of the running maximum of the
/// ascending spectrum.
double spectral_gradient_sum(const Eigen::VectorXd& ascending_eigenvalues);

struct CsgResult {
    double csg = 0.0;
    SimilarityMatrix similarity;
    Eigen::VectorXd eigenvalues;
};

/// Scores an already-estimated similarity matrix. Permuting the classes of
/// `sim` leaves the score and spectrum bit-identical.
CsgResult csg_from_similarity(const SimilarityMatrix& sim, const CsgConfig& cfg);

inline double csg_score(const SimilarityMatrix& sim, const CsgConfig& cfg) {
    return csg_from_similarity(sim, cfg).csg;
}

/// class_similarity followed by csg_score.
CsgResult compute_csg(const LabeledFeatureSet& data, const CsgConfig& cfg);

}  // namespace tempfit
