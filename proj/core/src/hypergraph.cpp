#include "hypergen/hypergraph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "hypergen/error.hpp"

namespace hypergen {

namespace {

void check_link(const Hyperlink& link, std::size_t n) {
    for (std::size_t k = 0; k < link.size(); ++k) {
        if (link[k] >= n) {
            throw ValidationError("node id " + std::to_string(link[k]) + " out of range for n=" +
                                  std::to_string(n));
        }
        if (k > 0 && link[k - 1] >= link[k]) {
            throw ValidationError("hyperlink ids must be strictly increasing");
        }
    }
}

// Parses one signed decimal integer token; negative values are a validation
// error, anything unparseable a format error.
NodeId parse_id(std::string_view tok, std::size_t line_no) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw FormatError("invalid node id '" + std::string(tok) + "'", line_no);
    }
    if (v < 0) {
        throw ValidationError("negative node id " + std::to_string(v) + " on line " +
                              std::to_string(line_no));
    }
    if (v > static_cast<long long>(std::numeric_limits<NodeId>::max() - 1)) {
        throw FormatError("node id too large", line_no);
    }
    return static_cast<NodeId>(v);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
    }
    return lines;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Hypergraph assemble(std::optional<std::size_t> header_n, std::vector<Hyperlink> links) {
    std::size_t inferred = 0;
    for (const auto& l : links) {
        if (!l.empty()) inferred = std::max<std::size_t>(inferred, std::size_t{l.back()} + 1);
    }
    if (header_n && *header_n < inferred) {
        throw ValidationError("header n=" + std::to_string(*header_n) +
                              " is smaller than 1 + max node id (" + std::to_string(inferred) + ")");
    }
    return Hypergraph(header_n.value_or(inferred), std::move(links));
}

Hypergraph parse_lines(const std::string& text) {
    std::optional<std::size_t> header_n;
    std::vector<Hyperlink> links;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        const std::size_t line_no = i + 1;
        if (i == 0 && line.starts_with("#")) {
            auto pos = line.find("n=");
            if (pos == std::string::npos) throw FormatError("malformed header", line_no);
            std::string_view num(line.data() + pos + 2, line.size() - pos - 2);
            while (!num.empty() && num.back() == ' ') num.remove_suffix(1);
            std::size_t v = 0;
            auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
            if (ec != std::errc{} || ptr != num.data() + num.size()) {
                throw FormatError("malformed header", line_no);
            }
            header_n = v;
            continue;
        }
        Hyperlink link;
        std::size_t p = 0;
        while (p < line.size()) {
            while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
            if (p >= line.size()) break;
            std::size_t q = p;
            while (q < line.size() && line[q] != ' ' && line[q] != '\t') ++q;
            link.push_back(parse_id(std::string_view(line).substr(p, q - p), line_no));
            p = q;
        }
        normalize(link);
        links.push_back(std::move(link));
    }
    return assemble(header_n, std::move(links));
}

Hypergraph parse_jsonl(const std::string& text) {
    std::optional<std::size_t> header_n;
    std::vector<Hyperlink> links;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        if (!obj.is_object()) throw FormatError("expected a JSON object", line_no);
        if (!obj.contains("nodes")) {
            if (obj.contains("n") && links.empty() && !header_n) {
                if (!obj["n"].is_number_integer() || obj["n"].get<long long>() < 0) {
                    throw FormatError("header field 'n' must be a non-negative integer", line_no);
                }
                header_n = obj["n"].get<std::size_t>();
                continue;
            }
            throw FormatError("missing field 'nodes'", line_no);
        }
        const auto& nodes = obj["nodes"];
        if (!nodes.is_array()) throw FormatError("'nodes' must be an array", line_no);
        Hyperlink link;
        for (const auto& v : nodes) {
            if (!v.is_number_integer()) throw FormatError("node ids must be integers", line_no);
            auto id = v.get<long long>();
            if (id < 0) {
                throw ValidationError("negative node id " + std::to_string(id) + " on line " +
                                      std::to_string(line_no));
            }
            link.push_back(static_cast<NodeId>(id));
        }
        normalize(link);
        links.push_back(std::move(link));
    }
    return assemble(header_n, std::move(links));
}

}  // namespace

Hypergraph::Hypergraph(std::size_t n, std::vector<Hyperlink> links) : n_(n), links_(std::move(links)) {
    for (const auto& l : links_) check_link(l, n_);
}

void Hypergraph::add(Hyperlink link) {
    check_link(link, n_);
    links_.push_back(std::move(link));
}

std::size_t Hypergraph::total_order() const noexcept {
    std::size_t s = 0;
    for (const auto& l : links_) s += l.size();
    return s;
}

Eigen::MatrixXd Hypergraph::incidence() const {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(links_.size()),
                                              static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < links_.size(); ++j) {
        for (NodeId i : links_[j]) b(static_cast<Eigen::Index>(j), i) = 1.0;
    }
    return b;
}

void normalize(Hyperlink& link) {
    std::sort(link.begin(), link.end());
    link.erase(std::unique(link.begin(), link.end()), link.end());
}

FileFormat parse_format(const std::string& name) {
    if (name == "lines") return FileFormat::lines;
    if (name == "jsonl") return FileFormat::jsonl;
    throw ConfigError("unknown hypergraph format '" + name + "' (expected lines or jsonl)");
}

Hypergraph load_hypergraph(const std::filesystem::path& path, FileFormat format) {
    const std::string text = read_file(path);
    return format == FileFormat::lines ? parse_lines(text) : parse_jsonl(text);
}

void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path, FileFormat format) {
    std::string out;
    if (format == FileFormat::lines) {
        out += "# n=" + std::to_string(h.num_nodes()) + "\n";
        for (const auto& l : h.links()) {
            for (std::size_t k = 0; k < l.size(); ++k) {
                if (k) out += ' ';
                out += std::to_string(l[k]);
            }
            out += '\n';
        }
    } else {
        out += nlohmann::json{{"n", h.num_nodes()}}.dump() + "\n";
        for (const auto& l : h.links()) out += nlohmann::json{{"nodes", l}}.dump() + "\n";
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

CooccurrenceStats cooccurrence_stats(const Hypergraph& h) {
    const auto m = h.num_links();
    if (m == 0) throw EmptyInputError("cooccurrence_stats needs at least one hyperlink");
    const auto n = static_cast<Eigen::Index>(h.num_nodes());

    // Pair counts are integers, so accumulating them in double is exact and
    // the result does not depend on summation order.
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(n);
    for (const auto& l : h.links()) {
        for (std::size_t a = 0; a < l.size(); ++a) {
            freq(l[a]) += 1.0;
            for (std::size_t b = a; b < l.size(); ++b) counts(l[a], l[b]) += 1.0;
        }
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    CooccurrenceStats s;
    s.mean = freq * inv_m;
    s.cov.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = i; k < n; ++k) {
            const double c = counts(i, k) * inv_m - s.mean(i) * s.mean(k);
            s.cov(i, k) = c;
            s.cov(k, i) = c;
        }
    }
    return s;
}

DegreeSummary degree_summary(const Hypergraph& h) {
    DegreeSummary d;
    d.node_degree.assign(h.num_nodes(), 0);
    for (const auto& l : h.links()) {
        ++d.order_hist[l.size()];
        for (NodeId i : l) ++d.node_degree[i];
    }
    for (auto deg : d.node_degree) ++d.degree_hist[deg];
    return d;
}

}  // namespace hypergen
