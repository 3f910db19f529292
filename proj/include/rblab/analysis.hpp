#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rblab/booldata.hpp"
#include "rblab/linalg.hpp"
#include "rblab/nn.hpp"
#include "rblab/store.hpp"
#include "rblab/trainer.hpp"

namespace rblab {

// ---------------------------------------------------------------------------
// Linear probes and variance explained
// ---------------------------------------------------------------------------

/// Least-squares map from a design (feature values or pattern one-hots) to
/// representations. Both sides are centered by their validation means, so
/// prediction is (design - design_mean) W + intercept.
struct ProbeFit {
    std::string feature;
    Matrix coefficients;  // design width x units
    Vector intercept;     // validation representation mean
    Vector design_mean;
    std::string fit_split = "validation";

    Matrix predict(const Matrix& design) const;
};

ProbeFit fit_probe(const Matrix& design_val, const Matrix& reps_val, std::string feature = {});

struct VarianceExplainedResult {
    double r2_raw = 0.0;
    double r2_final_normalized = 0.0;
    double explained_variance = 0.0;  // total - residual, per stimulus
    double total_variance = 0.0;      // mean squared norm of centered test reps
    std::uint64_t step = 0;
    std::string feature;
    std::string layer;
};

/// Probe fit on the validation snapshot, scored on the test snapshot. With
/// `final_total_variance` the explained variance is divided by it instead of the
/// snapshot's own total.
VarianceExplainedResult variance_explained(const RepresentationSnapshot& reps_val, const RepresentationSnapshot& reps_test,
                                           const Matrix& design_val, const Matrix& design_test,
                                           std::optional<double> final_total_variance = std::nullopt,
                                           std::string feature = {});

/// Same with the one-hot pattern design of `spec`'s relevant inputs.
VarianceExplainedResult variance_explained_patterns(const FeatureSpec& spec, const RepresentationSnapshot& reps_val,
                                                    const RepresentationSnapshot& reps_test, const Matrix& inputs_val,
                                                    const Matrix& inputs_test,
                                                    std::optional<double> final_total_variance = std::nullopt);

/// Mean squared norm of test reps centered by the validation mean.
double total_variance(const RepresentationSnapshot& reps_val, const RepresentationSnapshot& reps_test);

struct PerUnitResult {
    std::vector<std::optional<double>> r2;  // nullopt for units with zero test variance
    std::vector<double> total_variance;
    double aggregate = 0.0;                 // variance-weighted mean of r2
};

PerUnitResult per_unit_variance(const RepresentationSnapshot& reps_val, const RepresentationSnapshot& reps_test,
                                const Matrix& design_val, const Matrix& design_test);

/// Column `f` of a label matrix as an n x 1 design.
Matrix feature_column(const Matrix& labels, std::size_t f);

struct TrajectoryPoint {
    std::uint64_t step = 0;
    std::size_t feature = 0;
    double r2_raw = 0.0;
    double r2_final_normalized = 0.0;
    double pattern_r2_raw = 0.0;  // NaN when the feature's arity is too large
};

/// R² of every feature at every captured step (penultimate layer), normalized
/// by the final step's total variance.
std::vector<TrajectoryPoint> variance_trajectory(const RunRecord& record, const BoolDataset& data,
                                                 bool with_patterns = false);

// ---------------------------------------------------------------------------
// Sparsity
// ---------------------------------------------------------------------------

struct Standardized {
    Matrix reps;
    std::vector<std::size_t> kept_units;  // units with nonzero variance
};

/// Z-scores `reps` with the moments of `reference`; zero-variance units are dropped.
Standardized standardize(const Matrix& reference, const Matrix& reps);

/// (ln n - H(softmax |w|)) / ln n.
double sparsity_from_weights(std::span<const double> weights);

struct LogisticFit {
    Vector weights;
    double intercept = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
};

/// Ridge-penalized logistic regression (penalty on weights only), solved by
/// damped Newton iterations to gradient norm below `tolerance`.
LogisticFit fit_logistic(const Matrix& x, std::span<const double> labels, double ridge = 1e-4, double tolerance = 1e-6,
                         int max_iterations = 200);

/// Sparsity of the logistic decoder of `labels` from standardized `reps`.
double sparsity_score(const Matrix& standardized_reps, std::span<const double> labels);

// ---------------------------------------------------------------------------
// Interventions
// ---------------------------------------------------------------------------

/// Hidden-layer index encoded in a snapshot layer name ("hidden3" -> 3).
std::size_t layer_index(const std::string& layer);

enum class PcaMode { KeepTop, DropTop };
std::string to_string(PcaMode mode);

/// Per-feature accuracy after projecting the snapshot onto (KEEP_TOP) or off
/// (DROP_TOP) its top-k principal components and resuming the forward pass.
std::vector<double> pca_readout(const MlpF& model, const RepresentationSnapshot& snapshot, const Matrix& labels,
                                std::size_t k, PcaMode mode);

struct SteeringVector {
    Vector direction;
    double magnitude = 0.0;
};

/// Difference between predicted representations at feature 1 and 0.
SteeringVector steering_vector(const ProbeFit& probe);

/// Activations shifted by -alpha d where the model labels `feature` 1, +alpha d elsewhere.
Matrix steer(const MlpF& model, std::size_t layer, const Matrix& activations, const Vector& direction, double alpha,
             std::size_t feature);

struct InterventionResult {
    double alpha = 0.0;
    double magnitude = 0.0;           // alpha * |d|
    std::vector<double> flip_fraction;  // per output feature
};

InterventionResult intervene(const MlpF& model, const RepresentationSnapshot& snapshot, const Vector& direction,
                             double alpha, std::size_t feature);

// ---------------------------------------------------------------------------
// Representational similarity
// ---------------------------------------------------------------------------

enum class RdmMetric { Euclidean, Cosine };
enum class Correlation { Pearson, Spearman };
std::string to_string(RdmMetric metric);
std::string to_string(Correlation corr);

struct Rdm {
    Matrix distances;
    RdmMetric metric = RdmMetric::Euclidean;
    std::vector<std::uint64_t> stimulus_ids;
};

Rdm rdm(const RepresentationSnapshot& snapshot, RdmMetric metric);
double rsa_compare(const Rdm& a, const Rdm& b, Correlation corr);

// ---------------------------------------------------------------------------
// Downstream classifiers
// ---------------------------------------------------------------------------

enum class DownstreamClassifier { Linear, Mlp1Hidden };
std::string to_string(DownstreamClassifier kind);

struct DownstreamOptions {
    std::size_t steps = 1000;
    double learning_rate = 1e-3;
    std::size_t hidden_width = 64;
    std::uint64_t seed = 0;
};

/// Trains the classifier on (joint_reps, joint_target) and returns the fraction of
/// conflict stimuli on which its prediction equals `conflict_easy`.
double downstream_bias(const Matrix& joint_reps, std::span<const double> joint_target, const Matrix& conflict_reps,
                       std::span<const double> conflict_easy, DownstreamClassifier kind,
                       const DownstreamOptions& options = {});

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

/// Accuracy of a thresholded least-squares readout of `labels` column `f`, fit on
/// validation and scored on test.
double linear_probe_accuracy(const Matrix& reps_val, const Matrix& labels_val, const Matrix& reps_test,
                             const Matrix& labels_test, std::size_t f);

/// CSV with stimulus_id, pc1, pc2 and one column per feature label.
std::string pca_projection_csv(const RepresentationSnapshot& snapshot, const Matrix& labels,
                               const std::vector<std::string>& feature_names);

struct ReportRow {
    std::string run;
    std::uint64_t step = 0;
    std::string layer;
    std::string feature;
    std::string analysis;
    double value = 0.0;
};

std::string report_csv(const std::vector<ReportRow>& rows);

}  // namespace rblab
