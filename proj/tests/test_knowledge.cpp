#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "bfreg/knowledge.hpp"
#include "doctest.h"

using namespace bfreg;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("bfreg_kb_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

/// Three-level toy: g1,g2 genes with edge g1->g2; both map to p1; p1 in P1.
fs::path write_toy_kb(const std::string& tag) {
  fs::path dir = make_temp_dir(tag);
  write_file(dir / "grn.tsv", "g1\tg2\n");
  write_file(dir / "map.tsv", "g1\tp1\ng2\tp1\n");
  write_file(dir / "members.tsv", "p1\tP1\n");
  write_file(dir / "kb.manifest",
             "levels = Gene, Protein, Pathway\n"
             "edges.Gene = grn.tsv\n"
             "mapping.Gene.Protein = map.tsv\n"
             "pathway_members = members.tsv\n");
  return dir / "kb.manifest";
}

}  // namespace

TEST_CASE("toy knowledge base transcribes the input files") {
  KnowledgeBase kb = load_knowledge(write_toy_kb("toy").string());
  REQUIRE(kb.level_count() == 3);
  CHECK(kb.level(0).nodes == std::vector<std::string>{"g1", "g2"});
  // edge g1 -> g2 lands in row of the target: adjacency(1, 0) = 1
  CHECK(kb.level(0).adjacency(1, 0) == 1.0);
  CHECK(kb.level(0).adjacency(0, 1) == 0.0);
  // M1 routes both genes into p1
  CHECK(kb.mapping(0) == Matrix(1, 2, {1, 1}));
  // R: p1 belongs to P1
  CHECK(kb.incidence() == Matrix(1, 1, {1}));
  // default mapping into the pathway level mirrors the incidence
  CHECK(kb.mapping(1) == Matrix(1, 1, {1}));
}

TEST_CASE("empty edge file gives an all-zero adjacency") {
  fs::path dir = make_temp_dir("empty");
  write_file(dir / "nodes.txt", "g1\ng2\ng3\n");
  write_file(dir / "grn.tsv", "# nothing here\n");
  write_file(dir / "kb.manifest",
             "levels = Gene\n"
             "nodes.Gene = nodes.txt\n"
             "edges.Gene = grn.tsv\n");
  KnowledgeBase kb = load_knowledge((dir / "kb.manifest").string());
  CHECK(kb.level(0).count() == 3);
  for (double v : kb.level(0).adjacency.values()) CHECK(v == 0.0);
}

TEST_CASE("unknown node in an edge names the file, line and symbol") {
  fs::path dir = make_temp_dir("unknown");
  write_file(dir / "nodes.txt", "g1\ng2\n");
  write_file(dir / "grn.tsv", "g1\tg2\ng1\tg9\n");
  write_file(dir / "kb.manifest",
             "levels = Gene\n"
             "nodes.Gene = nodes.txt\n"
             "edges.Gene = grn.tsv\n");
  try {
    load_knowledge((dir / "kb.manifest").string());
    FAIL("expected an error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unresolved node 'g9'") != std::string::npos);
    CHECK(msg.find("grn.tsv:2") != std::string::npos);
  }
}

TEST_CASE("duplicate edges are deduplicated") {
  fs::path dir = make_temp_dir("dup");
  write_file(dir / "grn.tsv", "g1\tg2\ng1\tg2\n");
  write_file(dir / "kb.manifest",
             "levels = Gene\nedges.Gene = grn.tsv\n");
  KnowledgeBase kb = load_knowledge((dir / "kb.manifest").string());
  CHECK(kb.level(0).adjacency(1, 0) == 1.0);
  CHECK(kb.edges(0).size() == 1);
}

TEST_CASE("save then load is a fixed point") {
  KnowledgeBase kb = load_knowledge(write_toy_kb("roundtrip").string());
  fs::path dir = make_temp_dir("roundtrip_out");
  save_knowledge(kb, dir.string());
  KnowledgeBase kb2 = load_knowledge((dir / "knowledge.manifest").string());
  CHECK(kb.fingerprint() == kb2.fingerprint());
  // and a second round trip stays identical
  fs::path dir2 = make_temp_dir("roundtrip_out2");
  save_knowledge(kb2, dir2.string());
  KnowledgeBase kb3 = load_knowledge((dir2 / "knowledge.manifest").string());
  CHECK(kb2.fingerprint() == kb3.fingerprint());
}

TEST_CASE("restrict_to_genes slices and closes reachability") {
  // g1->g2->g3; g1,g2 -> p1; g3 -> p2; p2 interacts with p1
  fs::path dir = make_temp_dir("restrict");
  write_file(dir / "grn.tsv", "g1\tg2\ng2\tg3\n");
  write_file(dir / "ppi.tsv", "p2\tp1\n");
  write_file(dir / "map.tsv", "g1\tp1\ng2\tp1\ng3\tp2\n");
  write_file(dir / "kb.manifest",
             "levels = Gene, Protein\n"
             "edges.Gene = grn.tsv\n"
             "edges.Protein = ppi.tsv\n"
             "mapping.Gene.Protein = map.tsv\n");
  KnowledgeBase kb = load_knowledge((dir / "kb.manifest").string());
  REQUIRE(kb.level(1).count() == 2);

  SUBCASE("keeping a subset drops unreachable proteins and their edges") {
    KnowledgeBase r = restrict_to_genes(kb, {"g1", "g2"});
    CHECK(r.level(0).nodes == std::vector<std::string>{"g1", "g2"});
    CHECK(r.level(0).adjacency(1, 0) == 1.0);
    // p2 was mapped only from dropped g3: removed, with its PPI edges
    CHECK(r.level(1).nodes == std::vector<std::string>{"p1"});
    CHECK(r.level(1).adjacency.size() == 1);
    CHECK(r.level(1).adjacency(0, 0) == 0.0);
  }

  SUBCASE("full measured set is the identity") {
    KnowledgeBase r = restrict_to_genes(kb, {"g1", "g2", "g3"});
    CHECK(r.fingerprint() == kb.fingerprint());
  }

  SUBCASE("restriction is idempotent") {
    KnowledgeBase r1 = restrict_to_genes(kb, {"g1", "g2"});
    KnowledgeBase r2 = restrict_to_genes(r1, {"g1", "g2"});
    CHECK(r1.fingerprint() == r2.fingerprint());
  }

  SUBCASE("empty intersection is an error") {
    CHECK_THROWS_AS(restrict_to_genes(kb, {"gX"}), std::invalid_argument);
  }
}

TEST_CASE("remove_node_edges zeroes exactly one row and column") {
  fs::path dir = make_temp_dir("remove");
  write_file(dir / "grn.tsv", "g1\tg2\ng2\tg1\n");
  write_file(dir / "kb.manifest", "levels = Gene\nedges.Gene = grn.tsv\n");
  KnowledgeBase kb = load_knowledge((dir / "kb.manifest").string());

  SUBCASE("two-node mutual edges vanish entirely") {
    KnowledgeBase r = remove_node_edges(kb, "Gene", "g1");
    for (double v : r.level(0).adjacency.values()) CHECK(v == 0.0);
    CHECK(r.level(0).count() == kb.level(0).count());
  }

  SUBCASE("already isolated node changes nothing") {
    fs::path d2 = make_temp_dir("remove_iso");
    write_file(d2 / "nodes.txt", "g1\ng2\ng3\n");
    write_file(d2 / "grn.tsv", "g1\tg2\n");
    write_file(d2 / "kb.manifest",
               "levels = Gene\nnodes.Gene = nodes.txt\nedges.Gene = "
               "grn.tsv\n");
    KnowledgeBase kb2 = load_knowledge((d2 / "kb.manifest").string());
    KnowledgeBase r = remove_node_edges(kb2, "Gene", "g3");
    CHECK(r.fingerprint() == kb2.fingerprint());
  }

  SUBCASE("path g1->g2->g3: removing g2 leaves g1 and g3 untouched") {
    fs::path d3 = make_temp_dir("remove_path");
    write_file(d3 / "grn.tsv", "g1\tg2\ng2\tg3\n");
    write_file(d3 / "kb.manifest", "levels = Gene\nedges.Gene = grn.tsv\n");
    KnowledgeBase kb3 = load_knowledge((d3 / "kb.manifest").string());
    KnowledgeBase r = remove_node_edges(kb3, "Gene", "g2");
    for (double v : r.level(0).adjacency.values()) CHECK(v == 0.0);
    // shapes unchanged
    CHECK(r.level(0).adjacency.rows() == 3);
  }

  SUBCASE("unknown node is an error") {
    CHECK_THROWS_AS(remove_node_edges(kb, "Gene", "g9"),
                    std::invalid_argument);
  }
}

TEST_CASE("empty hyperedge is a load-time error") {
  fs::path dir = make_temp_dir("emptyhyper");
  write_file(dir / "nodes_pw.txt", "P1\nP2\n");
  write_file(dir / "map.tsv", "g1\tp1\n");
  write_file(dir / "members.tsv", "p1\tP1\n");
  write_file(dir / "kb.manifest",
             "levels = Gene, Protein, Pathway\n"
             "mapping.Gene.Protein = map.tsv\n"
             "nodes.Pathway = nodes_pw.txt\n"
             "pathway_members = members.tsv\n");
  CHECK_THROWS_WITH_AS(load_knowledge((dir / "kb.manifest").string()),
                       doctest::Contains("no members"),
                       std::invalid_argument);
}

TEST_CASE("unknown manifest key is rejected") {
  fs::path dir = make_temp_dir("badkey");
  write_file(dir / "kb.manifest", "levels = Gene\nedgez.Gene = x.tsv\n");
  CHECK_THROWS(load_knowledge((dir / "kb.manifest").string()));
}
