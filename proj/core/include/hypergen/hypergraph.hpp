#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace hypergen {

using NodeId = std::uint32_t;

/// Node ids of one hyperlink, strictly increasing.
using Hyperlink = std::vector<NodeId>;

/// A node count plus an ordered multiset of hyperlinks over [0, n).
///
/// Every hyperlink is kept sorted and duplicate-free; empty hyperlinks and
/// repeated hyperlinks are both allowed. The class validates on
/// construction and on `add`, so a `Hypergraph` value always satisfies its
/// invariants.
class Hypergraph {
public:
    Hypergraph() = default;
    explicit Hypergraph(std::size_t n) : n_(n) {}
    Hypergraph(std::size_t n, std::vector<Hyperlink> links);

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t num_links() const noexcept { return links_.size(); }
    const std::vector<Hyperlink>& links() const noexcept { return links_; }
    const Hyperlink& link(std::size_t j) const { return links_.at(j); }

    /// Appends a hyperlink. Ids must already be sorted, distinct and < n.
    void add(Hyperlink link);
    void reserve(std::size_t m) { links_.reserve(m); }

    /// Σ_j |e_j|.
    std::size_t total_order() const noexcept;

    /// Dense m×n 0/1 incidence matrix (row j = indicator of e_j).
    Eigen::MatrixXd incidence() const;

    friend bool operator==(const Hypergraph&, const Hypergraph&) = default;

private:
    std::size_t n_ = 0;
    std::vector<Hyperlink> links_;
};

/// Sorts and deduplicates ids in place.
void normalize(Hyperlink& link);

enum class FileFormat { lines, jsonl };

FileFormat parse_format(const std::string& name);

Hypergraph load_hypergraph(const std::filesystem::path& path, FileFormat format = FileFormat::lines);
void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path,
                     FileFormat format = FileFormat::lines);

/// Node co-occurrence moments of the binary inclusion indicators, with 1/m
/// normalization.
struct CooccurrenceStats {
    Eigen::VectorXd mean;  // length n
    Eigen::MatrixXd cov;   // n×n, symmetric
};

CooccurrenceStats cooccurrence_stats(const Hypergraph& h);

struct DegreeSummary {
    std::vector<std::size_t> node_degree;             // per node id
    std::map<std::size_t, std::size_t> degree_hist;   // degree -> #nodes
    std::map<std::size_t, std::size_t> order_hist;    // order  -> #links
};

DegreeSummary degree_summary(const Hypergraph& h);

}  // namespace hypergen
