#pragma once

#include "hypergen/hypergraph.hpp"

namespace hypergen {

/// sqrt(mean_i (mean_i^gen - mean_i^ref)^2).
double rmse_means(const Hypergraph& gen, const Hypergraph& ref);
double rmse_means(const CooccurrenceStats& gen, const CooccurrenceStats& ref);

/// RMSE over the upper triangle (diagonal included) of the two co-occurrence
/// covariance matrices.
double rmse_covs(const Hypergraph& gen, const Hypergraph& ref);
double rmse_covs(const CooccurrenceStats& gen, const CooccurrenceStats& ref);

/// Fraction of generated hyperlinks whose node set equals some training
/// hyperlink. 0 when `gen` is empty.
double duplicate_rate(const Hypergraph& gen, const Hypergraph& train);

}  // namespace hypergen
