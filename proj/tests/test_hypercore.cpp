#include <doctest.h>

#include <fstream>
#include <sstream>

#include "hypergen/error.hpp"
#include "hypergen/hypergraph.hpp"
#include "support.hpp"

using namespace hypergen;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Four links of orders 3, 4, 4, 3 on nine nodes; one node sits in three of them.
Hypergraph figure_one() {
    return Hypergraph(9, {{0, 1, 2}, {2, 3, 4, 5}, {3, 5, 6, 7}, {3, 7, 8}});
}

}  // namespace

TEST_SUITE("hypercore") {

TEST_CASE("lines format parses links in file order") {
    testing::TempDir dir("hc");
    write_file(dir / "a.txt", "0 1 2\n1 3\n");
    const Hypergraph h = load_hypergraph(dir / "a.txt");
    CHECK(h.num_nodes() == 4);
    REQUIRE(h.num_links() == 2);
    CHECK(h.link(0) == Hyperlink{0, 1, 2});
    CHECK(h.link(1) == Hyperlink{1, 3});
}

TEST_CASE("empty file gives the empty hypergraph") {
    testing::TempDir dir("hc");
    write_file(dir / "e.txt", "");
    const Hypergraph h = load_hypergraph(dir / "e.txt");
    CHECK(h.num_nodes() == 0);
    CHECK(h.num_links() == 0);
}

TEST_CASE("duplicate ids collapse and links are sorted") {
    testing::TempDir dir("hc");
    write_file(dir / "d.txt", "2 2 0\n");
    const Hypergraph h = load_hypergraph(dir / "d.txt");
    REQUIRE(h.num_links() == 1);
    CHECK(h.link(0) == Hyperlink{0, 2});
    CHECK(h.num_nodes() == 3);
}

TEST_CASE("header fixes n and ids are not remapped") {
    testing::TempDir dir("hc");
    write_file(dir / "h.txt", "# n=10\n5\n");
    CHECK(load_hypergraph(dir / "h.txt").num_nodes() == 10);
    write_file(dir / "nh.txt", "5\n");
    CHECK(load_hypergraph(dir / "nh.txt").num_nodes() == 6);
    write_file(dir / "small.txt", "# n=2\n5\n");
    CHECK_THROWS_AS(load_hypergraph(dir / "small.txt"), ValidationError);
}

TEST_CASE("parse failures carry the line number") {
    testing::TempDir dir("hc");
    write_file(dir / "bad.txt", "0 1\n2 x\n");
    try {
        load_hypergraph(dir / "bad.txt");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.line() == 2);
    }
    write_file(dir / "neg.txt", "0 -3\n");
    CHECK_THROWS_AS(load_hypergraph(dir / "neg.txt"), ValidationError);
    CHECK_THROWS_AS(load_hypergraph(dir / "missing.txt"), IoError);
}

TEST_CASE("save writes the fixed serialization") {
    testing::TempDir dir("hc");
    save_hypergraph(Hypergraph(4, {{0, 1, 2}}), dir / "s.txt");
    CHECK(read_file(dir / "s.txt") == "# n=4\n0 1 2\n");
}

TEST_CASE("empty hyperlinks survive a round trip") {
    testing::TempDir dir("hc");
    const Hypergraph h(3, {{}, {1}, {}});
    save_hypergraph(h, dir / "e.txt");
    CHECK(load_hypergraph(dir / "e.txt") == h);
    const Hypergraph lone(0, {{}});
    save_hypergraph(lone, dir / "lone.txt");
    CHECK(load_hypergraph(dir / "lone.txt") == lone);
}

TEST_CASE("jsonl format reads header and nodes") {
    testing::TempDir dir("hc");
    write_file(dir / "a.jsonl", "{\"n\": 7}\n{\"nodes\": [3, 1, 1]}\n{\"nodes\": []}\n");
    const Hypergraph h = load_hypergraph(dir / "a.jsonl", FileFormat::jsonl);
    CHECK(h.num_nodes() == 7);
    REQUIRE(h.num_links() == 2);
    CHECK(h.link(0) == Hyperlink{1, 3});
    CHECK(h.link(1).empty());
    write_file(dir / "b.jsonl", "{\"nodes\": [0]}\n{\"nodes\": 4}\n");
    CHECK_THROWS_AS(load_hypergraph(dir / "b.jsonl", FileFormat::jsonl), FormatError);
}

TEST_CASE("round trip over random hypergraphs in both formats") {
    testing::TempDir dir("hc");
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const std::size_t n = 1 + seed % 13, m = seed % 9;
        const Hypergraph h = testing::random_hypergraph(m, n, 0.1 + 0.03 * static_cast<double>(seed), seed);
        save_hypergraph(h, dir / "r.txt");
        CHECK(load_hypergraph(dir / "r.txt") == h);
        save_hypergraph(h, dir / "r.jsonl", FileFormat::jsonl);
        CHECK(load_hypergraph(dir / "r.jsonl", FileFormat::jsonl) == h);
    }
}

TEST_CASE("invariants are enforced on construction") {
    CHECK_THROWS_AS(Hypergraph(3, {{0, 3}}), ValidationError);
    CHECK_THROWS_AS(Hypergraph(3, {{2, 1}}), ValidationError);
    CHECK_THROWS_AS(Hypergraph(3, {{1, 1}}), ValidationError);
    Hypergraph h(3);
    h.add({0, 2});
    h.add({0, 2});  // multiplicity allowed
    CHECK(h.num_links() == 2);
}

TEST_CASE("cooccurrence stats on small cases") {
    {
        const auto s = cooccurrence_stats(Hypergraph(2, {{0}, {0}}));
        CHECK(s.mean(0) == 1.0);
        CHECK(s.mean(1) == 0.0);
        CHECK(s.cov.cwiseAbs().maxCoeff() == 0.0);
    }
    {
        const auto s = cooccurrence_stats(Hypergraph(2, {{0}, {1}}));
        CHECK(s.mean(0) == 0.5);
        CHECK(s.cov(0, 0) == doctest::Approx(0.25));
        CHECK(s.cov(0, 1) == doctest::Approx(-0.25));
        CHECK(s.cov(1, 0) == doctest::Approx(-0.25));
        CHECK(s.cov(1, 1) == doctest::Approx(0.25));
    }
    {
        const auto s = cooccurrence_stats(Hypergraph(2, {{0, 1}, {}}));
        CHECK(s.mean(1) == 0.5);
        CHECK(s.cov(0, 1) == doctest::Approx(0.25));
    }
    CHECK_THROWS_AS(cooccurrence_stats(Hypergraph(3)), EmptyInputError);
}

TEST_CASE("cooccurrence stats match brute force") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t m = 1 + seed % 20, n = 1 + (seed * 7) % 20;
        const Hypergraph h = testing::random_hypergraph(m, n, 0.35, 100 + seed);
        const auto s = cooccurrence_stats(h);
        // independent evaluation straight from the definition
        std::vector<std::vector<int>> b(m, std::vector<int>(n, 0));
        for (std::size_t j = 0; j < m; ++j)
            for (NodeId i : h.link(j)) b[j][i] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            double mi = 0;
            for (std::size_t j = 0; j < m; ++j) mi += b[j][i];
            mi /= static_cast<double>(m);
            CHECK(std::abs(s.mean(static_cast<Eigen::Index>(i)) - mi) < 1e-12);
            CHECK(std::abs(s.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) - mi * (1 - mi)) < 1e-12);
            for (std::size_t k = 0; k < n; ++k) {
                double mk = 0, c = 0;
                for (std::size_t j = 0; j < m; ++j) mk += b[j][k];
                mk /= static_cast<double>(m);
                for (std::size_t j = 0; j < m; ++j) c += (b[j][i] - mi) * (b[j][k] - mk);
                c /= static_cast<double>(m);
                CHECK(std::abs(s.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - c) < 1e-12);
            }
        }
        // mean order consistency
        CHECK(std::abs(s.mean.sum() - static_cast<double>(h.total_order()) / static_cast<double>(m)) < 1e-12);
    }
}

TEST_CASE("degree summary of the four-link example") {
    const auto d = degree_summary(figure_one());
    CHECK(d.order_hist == std::map<std::size_t, std::size_t>{{3, 2}, {4, 2}});
    CHECK(d.node_degree.at(3) == 3);
    CHECK(d.degree_hist.at(3) == 1);

    const auto e = degree_summary(Hypergraph());
    CHECK(e.order_hist.empty());
    CHECK(e.degree_hist.empty());

    CHECK(degree_summary(Hypergraph(1, {{0}, {0}, {0}})).node_degree.at(0) == 3);
}

TEST_CASE("incidence rows are indicator vectors") {
    const Hypergraph h = figure_one();
    const Eigen::MatrixXd b = h.incidence();
    CHECK(b.rows() == 4);
    CHECK(b.cols() == 9);
    CHECK(b.sum() == static_cast<double>(h.total_order()));
    CHECK(b(1, 4) == 1.0);
    CHECK(b(0, 4) == 0.0);
}

}  // TEST_SUITE
