#include <random>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"

namespace fist {
namespace {

using testing::id;
using testing::seed_corpus;

std::vector<EntityId> ids(std::initializer_list<std::string_view> list) {
    std::vector<EntityId> out;
    for (auto s : list) out.push_back(id(s));
    return out;
}

TEST(QueryTest, GetEntityByName) {
    EXPECT_EQ(record_name(get_entity(seed_corpus(), id("T0017.001"))), "Exploiting Greed");
    EXPECT_EQ(record_name(get_entity(seed_corpus(), id("P0002"))), "Promotion");
    EXPECT_TRUE(std::holds_alternative<DetectionPattern>(get_entity(seed_corpus(), id("D0004.008"))));
}

TEST(QueryTest, GetEntityNotFound) {
    try {
        get_entity(seed_corpus(), id("T9999"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotFound);
        EXPECT_EQ(e.subject(), "T9999");
    }
    EXPECT_THROW(get_entity(seed_corpus(), id("M0001")), Error);
}

TEST(QueryTest, TechniquesByPhase) {
    EXPECT_EQ(techniques_by_phase(seed_corpus(), id("P0001")), ids({"T0003", "T0009.002", "T0010.001", "T0012"}));
    EXPECT_EQ(techniques_by_phase(seed_corpus(), id("P0003")), ids({"T0021.001", "T0033", "T0034.002"}));
    EXPECT_THROW(techniques_by_phase(seed_corpus(), id("P0009")), Error);
}

TEST(QueryTest, PhaseWithoutTechniques) {
    CorpusDocument doc = seed_corpus().to_document();
    doc.phases.push_back(Phase{id("P0005"), "Aftermath", "", 5});
    Corpus c = Corpus::from_document(doc);
    EXPECT_TRUE(techniques_by_phase(c, id("P0005")).empty());
}

TEST(QueryTest, DetectionsForTechnique) {
    EXPECT_EQ(detections_for_technique(seed_corpus(), id("T0047.003")), IdSet{id("D0004.007")});
    EXPECT_EQ(detections_for_technique(seed_corpus(), id("T0056")), IdSet{id("D0004.008")});
    EXPECT_THROW(detections_for_technique(seed_corpus(), id("T0001")), Error);

    CorpusDocument doc = seed_corpus().to_document();
    doc.techniques.push_back(TechniqueEntry{id("T0060"), "Bare", "", {}, {id("P0001")}, {}, {}, {}});
    EXPECT_TRUE(detections_for_technique(Corpus::from_document(doc), id("T0060")).empty());
}

TEST(MatrixTest, SeedColumnsInPhaseOrder) {
    Matrix m = build_matrix(seed_corpus());
    ASSERT_EQ(m.columns.size(), 4u);
    EXPECT_EQ(m.columns[0].name, "Preparation");
    EXPECT_EQ(m.columns[1].name, "Promotion");
    EXPECT_EQ(m.columns[2].name, "Engagement");
    EXPECT_EQ(m.columns[3].name, "Concealment");
    EXPECT_TRUE(m.orphan_tactics.empty());
    ASSERT_EQ(m.columns[0].cells.size(), 1u);
    EXPECT_EQ(m.columns[0].cells[0].tactic_id, id("TA0001"));
}

TEST(MatrixTest, CellMembershipTotal) {
    Matrix m = build_matrix(seed_corpus());
    std::size_t total = 0;
    for (const auto& col : m.columns) {
        for (const auto& cell : col.cells) total += cell.technique_ids.size();
    }
    std::size_t expected = 0;
    for (const auto& [tid, t] : seed_corpus().techniques()) expected += t.phase_ids.size();
    EXPECT_EQ(expected, 13u);
    EXPECT_EQ(total, expected);
}

TEST(MatrixTest, EmptyCorpus) {
    CorpusDocument doc;
    EXPECT_TRUE(build_matrix(Corpus::from_document(doc)).columns.empty());
}

TEST(MatrixTest, UnassignedAndOrphans) {
    CorpusDocument doc = seed_corpus().to_document();
    doc.tactics.push_back(Tactic{id("TA0005"), "Unused", "", id("P0002"), true});
    doc.techniques.push_back(TechniqueEntry{id("T0060"), "Loose", "", {}, {id("P0001")}, {}, {}, {}});
    Matrix m = build_matrix(Corpus::from_document(doc));
    EXPECT_EQ(m.orphan_tactics, ids({"TA0005"}));
    ASSERT_EQ(m.columns[0].cells.size(), 2u);
    EXPECT_FALSE(m.columns[0].cells[1].tactic_id.has_value());
    EXPECT_EQ(m.columns[0].cells[1].technique_ids, ids({"T0060"}));
}

TEST(MatrixTest, JsonShape) {
    Json j = to_json(seed_corpus(), build_matrix(seed_corpus()));
    ASSERT_EQ(j["columns"].size(), 4u);
    EXPECT_EQ(j["columns"][3]["name"], "Concealment");
    EXPECT_EQ(j["columns"][1]["cells"][0]["techniques"][2]["name"], "Impersonating Celebrities");
}

TEST(QueryProperty, PhaseMembershipMatchesLinksAndMatrixInvariants) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Corpus c = Corpus::from_document(testing::gen::random_document(rng));
        Matrix m = build_matrix(c);
        ASSERT_EQ(m, build_matrix(c));
        ASSERT_EQ(m.columns.size(), c.phases().size());
        for (std::size_t i = 1; i < m.columns.size(); ++i) ASSERT_LT(m.columns[i - 1].order, m.columns[i].order);
        for (const auto& col : m.columns) {
            auto listed = techniques_by_phase(c, col.phase_id);
            IdSet in_cells;
            for (const auto& cell : col.cells) {
                IdSet unique(cell.technique_ids.begin(), cell.technique_ids.end());
                ASSERT_EQ(unique.size(), cell.technique_ids.size()) << "duplicate within a cell";
                in_cells.insert(unique.begin(), unique.end());
            }
            ASSERT_EQ(in_cells, IdSet(listed.begin(), listed.end()));
            for (const auto& [tid, t] : c.techniques()) {
                bool listed_here = std::find(listed.begin(), listed.end(), tid) != listed.end();
                ASSERT_EQ(listed_here, t.phase_ids.contains(col.phase_id));
            }
        }
    }
}

} // namespace
} // namespace fist
