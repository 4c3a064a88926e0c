#include "tempfit/csg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "tempfit/errors.hpp"
#include "tempfit/parallel.hpp"

namespace tempfit {

namespace {

constexpr std::uint64_t kClassSampleStream = 0x63736773;  // "csgs"
constexpr double kResidualTolerance = 1e-10;

// Orders classes by (diagonal, sorted off-diagonal row, sorted off-diagonal
// column).
Eigen::MatrixXd canonical_class_order(const SimilarityMatrix& sim) {
    const long c = sim.rows();
    std::vector<std::vector<double>> keys(static_cast<std::size_t>(c));
    for (long i = 0; i < c; ++i) {
        std::vector<double> row, col;
        for (long j = 0; j < c; ++j) {
            if (j == i) continue;
            row.push_back(sim(i, j));
            col.push_back(sim(j, i));
        }
        std::sort(row.begin(), row.end());
        std::sort(col.begin(), col.end());
        auto& k = keys[static_cast<std::size_t>(i)];
        k.push_back(sim(i, i));
        k.insert(k.end(), row.begin(), row.end());
        k.insert(k.end(), col.begin(), col.end());
    }
    std::vector<long> order(static_cast<std::size_t>(c));
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
        return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
    });
    Eigen::MatrixXd out(c, c);
    for (long i = 0; i < c; ++i) {
        for (long j = 0; j < c; ++j) {
            out(i, j) = sim(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

void validate_data(const LabeledFeatureSet& data, int k) {
    if (static_cast<long>(data.labels.size()) != data.features.rows()) {
        throw InputError("feature matrix has " + std::to_string(data.features.rows()) +
                         " rows but " + std::to_string(data.labels.size()) +
                         " labels were given");
    }
    if (data.features.cols() < 1) throw InputError("feature vectors must be non-empty");
    if (!data.features.allFinite()) throw InputError("features must be finite");
    for (int y : data.labels) {
        if (y < 0) throw InputError("class labels must be non-negative");
    }
    const int classes = data.class_count();
    if (classes < 2) throw InputError("at least two classes are required");
    std::vector<long> counts(static_cast<std::size_t>(classes), 0);
    for (int y : data.labels) ++counts[static_cast<std::size_t>(y)];
    for (int c = 0; c < classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] < k + 1) {
            throw InputError("class " + std::to_string(c) + " has " +
                             std::to_string(counts[static_cast<std::size_t>(c)]) +
                             " samples; at least k + 1 = " + std::to_string(k + 1) +
                             " are required");
        }
    }
}

}  // namespace

int LabeledFeatureSet::class_count() const {
    if (labels.empty()) return 0;
    return *std::max_element(labels.begin(), labels.end()) + 1;
}

LaplacianKind parse_laplacian(std::string_view name) {
    if (name == "unnormalized") return LaplacianKind::unnormalized;
    if (name == "symmetric" || name == "symmetric-normalized" ||
        name == "symmetric_normalized") {
        return LaplacianKind::symmetric_normalized;
    }
    throw InputError("unknown laplacian '" + std::string(name) +
                     "' (expected unnormalized or symmetric-normalized)");
}

std::string_view to_string(LaplacianKind k) {
    return k == LaplacianKind::unnormalized ? "unnormalized" : "symmetric-normalized";
}

void CsgConfig::validate() const {
    if (k < 1) throw InputError("k must be >= 1");
    if (samples_per_class < 1) throw InputError("samples_per_class must be >= 1");
}

SimilarityMatrix class_similarity(const LabeledFeatureSet& data, const CsgConfig& cfg) {
    cfg.validate();
    validate_data(data, cfg.k);
    const int classes = data.class_count();
    const long n = data.size();

    std::vector<std::vector<long>> members(static_cast<std::size_t>(classes));
    for (long i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);
    }

    SimilarityMatrix sim = SimilarityMatrix::Zero(classes, classes);
    parallel_for(static_cast<std::size_t>(classes), cfg.threads, [&](std::size_t c) {
        std::vector<long> picked = members[c];
        const auto budget = static_cast<std::size_t>(cfg.samples_per_class);
        if (picked.size() > budget) {
            // Partial Fisher-Yates: the first `budget` slots become the sample.
            auto rng = shard_rng(cfg.seed, kClassSampleStream, c);
            for (std::size_t i = 0; i < budget; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, picked.size() - 1);
                std::swap(picked[i], picked[pick(rng)]);
            }
            picked.resize(budget);
            std::sort(picked.begin(), picked.end());
        }

        std::vector<std::pair<double, long>> dist;
        dist.reserve(static_cast<std::size_t>(n));
        Eigen::VectorXd votes = Eigen::VectorXd::Zero(classes);
        for (long query : picked) {
            dist.clear();
            for (long j = 0; j < n; ++j) {
                if (j == query) continue;
                dist.emplace_back((data.features.row(j) - data.features.row(query)).squaredNorm(), j);
            }
            const auto kth = dist.begin() + cfg.k;
            std::nth_element(dist.begin(), kth - 1, dist.end());
            // nth_element leaves ties at the boundary in arbitrary order; the
            // neighbour set is fixed by a full (distance, index) ordering.
            const double cutoff = (kth - 1)->first;
            std::vector<std::pair<double, long>> near;
            for (const auto& d : dist) {
                if (d.first <= cutoff) near.push_back(d);
            }
            std::sort(near.begin(), near.end());
            for (int t = 0; t < cfg.k; ++t) {
                const long nb = near[static_cast<std::size_t>(t)].second;
                votes[data.labels[static_cast<std::size_t>(nb)]] += 1.0;
            }
        }
        const double total = votes.sum();
        sim.row(static_cast<long>(c)) = (votes / total).transpose();
    });
    return sim;
}

Eigen::MatrixXd similarity_adjacency(const SimilarityMatrix& sim) {
    const long c = sim.rows();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(c, c);
    for (long i = 0; i < c; ++i) {
        for (long j = 0; j < c; ++j) {
            if (i == j) continue;
            const double num = (sim.row(i) - sim.row(j)).cwiseAbs().sum();
            const double den = (sim.row(i) + sim.row(j)).cwiseAbs().sum();
            const double bray_curtis = den > 0.0 ? num / den : 0.0;
            w(i, j) = 1.0 - bray_curtis;
        }
    }
    return w;
}

Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency, LaplacianKind kind) {
    const Eigen::VectorXd degree = adjacency.rowwise().sum();
    if (kind == LaplacianKind::unnormalized) {
        Eigen::MatrixXd l = -adjacency;
        l.diagonal() += degree;
        return l;
    }
    const long c = adjacency.rows();
    Eigen::VectorXd inv_sqrt(c);
    for (long i = 0; i < c; ++i) {
        inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
    }
    Eigen::MatrixXd l = -(inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal());
    for (long i = 0; i < c; ++i) l(i, i) += degree[i] > 0.0 ? 1.0 : 0.0;
    return l;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const double norm = m.norm();
    if (eig.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "symmetric eigen-solver did not converge (n = " << m.rows()
            << ", frobenius norm = " << norm << ")";
        throw NumericError(msg.str());
    }
    const Eigen::MatrixXd residual =
        m * eig.eigenvectors() - eig.eigenvectors() * eig.eigenvalues().asDiagonal();
    const double worst = residual.colwise().norm().maxCoeff();
    if (worst > kResidualTolerance * std::max(1.0, norm)) {
        const double lo = eig.eigenvalues().cwiseAbs().minCoeff();
        const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
        std::ostringstream msg;
        msg << "eigenpair residual " << worst << " exceeds tolerance (n = " << m.rows()
            << ", |lambda| range [" << lo << ", " << hi << "], condition "
            << (lo > 0.0 ? hi / lo : INFINITY) << ")";
        throw NumericError(msg.str());
    }
    return eig.eigenvalues();
}

double spectral_gradient_sum(const Eigen::VectorXd& ascending_eigenvalues) {
    double total = 0.0;
    if (ascending_eigenvalues.size() == 0) return total;
    double running = ascending_eigenvalues[0];
    for (long i = 1; i < ascending_eigenvalues.size(); ++i) {
        const double next = std::max(running, ascending_eigenvalues[i]);
        total += std::max(0.0, next - running);
        running = next;
    }
    return total;
}

CsgResult csg_from_similarity(const SimilarityMatrix& sim, const CsgConfig& cfg) {
    if (sim.rows() != sim.cols() || sim.rows() < 1) {
        throw InputError("similarity matrix must be square and non-empty");
    }
    if (!sim.allFinite()) throw InputError("similarity matrix must be finite");
    const Eigen::MatrixXd laplacian =
        graph_laplacian(similarity_adjacency(canonical_class_order(sim)), cfg.laplacian);
    CsgResult out;
    out.similarity = sim;
    out.eigenvalues = symmetric_eigenvalues(laplacian);
    out.csg = spectral_gradient_sum(out.eigenvalues);
    return out;
}

CsgResult compute_csg(const LabeledFeatureSet& data, const CsgConfig& cfg) {
    return csg_from_similarity(class_similarity(data, cfg), cfg);
}

}  // namespace tempfit
