#include <random>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"

namespace fist {
namespace {

using testing::case_incident;
using testing::id;
using testing::seed_corpus;

std::size_t count_type(const Json& bundle, std::string_view type) {
    std::size_t n = 0;
    for (const auto& o : bundle["objects"]) n += o["type"] == type;
    return n;
}

TEST(UuidTest, NameBasedVector) {
    constexpr std::array<std::uint8_t, 16> dns = {0x6b, 0xa7, 0xb8, 0x10, 0x9d, 0xad, 0x11, 0xd1,
                                                  0x80, 0xb4, 0x00, 0xc0, 0x4f, 0xd4, 0x30, 0xc8};
    EXPECT_EQ(digest::uuid_v5(dns, "python.org"), "886313e1-3b8a-5372-9b90-0c9aee199e5d");
}

TEST(StixTest, SeedAttackPatterns) {
    Json bundle = export_stix_bundle(seed_corpus());
    EXPECT_EQ(bundle["type"], "bundle");
    EXPECT_EQ(count_type(bundle, "attack-pattern"), 13u);
    EXPECT_EQ(count_type(bundle, "x-fist-detection"), 11u);
    EXPECT_EQ(count_type(bundle, "relationship"), 13u);
    EXPECT_EQ(count_type(bundle, "report"), 0u);
    for (const auto& o : bundle["objects"]) {
        EXPECT_EQ(o["spec_version"], "2.1");
        if (o["type"] != "attack-pattern") continue;
        ASSERT_EQ(o["kill_chain_phases"].size(), 1u);
        EXPECT_EQ(o["kill_chain_phases"][0]["kill_chain_name"], "fist");
    }
    EXPECT_TRUE(dangling_bundle_refs(bundle).empty());
}

TEST(StixTest, PhaseNamesAreKillChainPhases) {
    Json bundle = export_stix_bundle(seed_corpus());
    for (const auto& o : bundle["objects"]) {
        if (o["type"] == "attack-pattern" && o["external_references"][0]["external_id"] == "T0056") {
            EXPECT_EQ(o["kill_chain_phases"][0]["phase_name"], "concealment");
            return;
        }
    }
    FAIL() << "T0056 not exported";
}

TEST(StixTest, EmptyCorpusHasOnlyIdentity) {
    Json bundle = export_stix_bundle(Corpus::from_document(CorpusDocument{}));
    ASSERT_EQ(bundle["objects"].size(), 1u);
    EXPECT_EQ(bundle["objects"][0]["type"], "identity");
}

TEST(StixTest, IncidentReport) {
    IncidentFlow flow = case_incident();
    Json bundle = export_stix_bundle(seed_corpus(), {flow});
    ASSERT_EQ(count_type(bundle, "report"), 1u);
    const Json& report = bundle["objects"].back();
    EXPECT_EQ(report["type"], "report");
    EXPECT_EQ(report["object_refs"].size(), 13u);
    EXPECT_EQ(report["created"], "2025-01-01T00:00:00.000Z");
    EXPECT_TRUE(dangling_bundle_refs(bundle).empty());
}

TEST(StixTest, ReportDeduplicatesRepeatedTechniques) {
    IncidentFlow flow = case_incident();
    flow.observations.push_back(flow.observations.front());
    Json bundle = export_stix_bundle(seed_corpus(), {flow});
    EXPECT_EQ(bundle["objects"].back()["object_refs"].size(), 13u);
}

TEST(StixTest, ByteDeterministic) {
    IncidentFlow flow = case_incident();
    IncidentFlow other = flow;
    other.incident_id = "another";
    EXPECT_EQ(export_stix_bundle(seed_corpus(), {flow, other}).dump(),
              export_stix_bundle(seed_corpus(), {other, flow}).dump());
    Corpus reloaded = load_corpus(save_corpus(seed_corpus()));
    EXPECT_EQ(export_stix_bundle(reloaded, {flow}).dump(), export_stix_bundle(seed_corpus(), {flow}).dump());
}

TEST(StixTest, IdsDependOnCorpusContent) {
    CorpusDocument doc = seed_corpus().to_document();
    doc.manifest.corpus_version = "0.2.0";
    Json a = export_stix_bundle(seed_corpus());
    Json b = export_stix_bundle(Corpus::from_document(doc));
    EXPECT_NE(a["objects"][1]["id"], b["objects"][1]["id"]);
}

TEST(StixTest, MitigationsAndToolsAreLinked) {
    Corpus c = Corpus::from_document(testing::gen::scale_document(testing::kFullScale));
    Json bundle = export_stix_bundle(c);
    EXPECT_EQ(count_type(bundle, "attack-pattern"), 93u);
    EXPECT_EQ(count_type(bundle, "course-of-action"), 12u);
    EXPECT_EQ(count_type(bundle, "tool"), 12u);
    std::size_t mitigates = 0, uses = 0;
    for (const auto& o : bundle["objects"]) {
        if (o["type"] != "relationship") continue;
        mitigates += o["relationship_type"] == "mitigates";
        uses += o["relationship_type"] == "uses";
    }
    EXPECT_EQ(mitigates, 12u);
    EXPECT_EQ(uses, 12u);
    EXPECT_TRUE(dangling_bundle_refs(bundle).empty());
}

TEST(StixTest, ClosureCheckDetectsDanglingRefs) {
    Json bundle = export_stix_bundle(seed_corpus(), {case_incident()});
    bundle["objects"].erase(1);
    EXPECT_FALSE(dangling_bundle_refs(bundle).empty());
}

TEST(LayerTest, CaseStudyAllHit) {
    LayerDocument layer = export_layer(seed_corpus(), case_incident());
    ASSERT_EQ(layer.entries.size(), 13u);
    for (const auto& e : layer.entries) EXPECT_EQ(e.score, 100);
    EXPECT_EQ(layer.incident_id, "case-investment-fraud");
    EXPECT_EQ(layer.corpus_version, seed_corpus().manifest().corpus_version);
}

TEST(LayerTest, EmptyFlow) {
    IncidentFlow flow{"e", "", "", "2025-01-01T00:00:00Z", {}};
    EXPECT_TRUE(export_layer(seed_corpus(), flow).entries.empty());
}

TEST(LayerTest, SingleUnhitObservation) {
    IncidentFlow flow{"e", "", "", "2025-01-01T00:00:00Z", {}};
    flow.observations.push_back(TechniqueObservation{id("T0033"), id("P0003"), "first", {}, 1, std::nullopt});
    flow.observations.push_back(TechniqueObservation{id("T0033"), id("P0003"), "second", {}, 2, std::nullopt});
    LayerDocument layer = export_layer(seed_corpus(), flow);
    ASSERT_EQ(layer.entries.size(), 1u);
    EXPECT_EQ(layer.entries[0].score, 40);
    EXPECT_EQ(layer.entries[0].comment, "first");
    Json j = to_json(layer);
    EXPECT_EQ(j["entries"][0]["technique_id"], "T0033");
}

TEST(LayerTest, SetClampsAndReplaces) {
    LayerDocument layer;
    layer.set(id("T0002"), 250, "");
    layer.set(id("T0001"), -5, "");
    layer.set(id("T0002"), 70, "again");
    ASSERT_EQ(layer.entries.size(), 2u);
    EXPECT_EQ(layer.entries[0], (LayerEntry{id("T0001"), 0, ""}));
    EXPECT_EQ(layer.entries[1], (LayerEntry{id("T0002"), 70, "again"}));
}

TEST(LayerProperty, ScoresBoundedUniqueAndDeterministic) {
    std::mt19937_64 rng(17);
    std::vector<EntityId> techniques;
    for (const auto& [tid, t] : seed_corpus().techniques()) techniques.push_back(tid);
    for (int trial = 0; trial < 1000; ++trial) {
        IncidentFlow flow{"p", "", "", "2025-01-01T00:00:00Z", {}};
        for (std::size_t n = rng() % 30; n > 0; --n) {
            const TechniqueEntry& t = *seed_corpus().find_technique(testing::gen::pick(rng, techniques));
            IdSet hits;
            if (rng() % 2) hits.insert(*t.detection_ids.begin());
            flow.observations.push_back(
                TechniqueObservation{t.id, *t.phase_ids.begin(), testing::gen::random_text(rng), hits, 0, {}});
        }
        LayerDocument layer = export_layer(seed_corpus(), flow);
        for (std::size_t i = 0; i < layer.entries.size(); ++i) {
            ASSERT_GE(layer.entries[i].score, 0);
            ASSERT_LE(layer.entries[i].score, 100);
            if (i) {
                ASSERT_LT(layer.entries[i - 1].technique_id, layer.entries[i].technique_id);
            }
        }
        ASSERT_EQ(to_json(layer).dump(), to_json(export_layer(seed_corpus(), flow)).dump());

        LayerDocument arbitrary;
        long long s = static_cast<long long>(rng()) % 100000 - 50000;
        arbitrary.set(id("T0001"), s, "");
        ASSERT_EQ(arbitrary.entries[0].score, std::clamp<long long>(s, 0, 100));
    }
}

TEST(CrossmapTest, ResolvesReverseLookup) {
    CrossMap map = load_crossmap(seed_corpus(), read_text_file(testing::test_data_dir() / "crossmap.csv"));
    EXPECT_EQ(map.rows().size(), 5u);
    EXPECT_EQ(resolve_external(seed_corpus(), map, "T1593"), std::vector<EntityId>{id("T0003")});
    EXPECT_EQ(resolve_external(seed_corpus(), map, "T0097, persona"), std::vector<EntityId>{id("T0033")});
    EXPECT_TRUE(resolve_external(seed_corpus(), map, "T9999").empty());
}

TEST(CrossmapTest, DanglingIdIsIntegrityError) {
    try {
        load_crossmap(seed_corpus(), read_text_file(testing::test_data_dir() / "crossmap_dangling.csv"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IntegrityError);
        EXPECT_EQ(e.subject(), "T0099");
    }
}

TEST(CrossmapTest, SchemaErrors) {
    auto code = [](std::string_view text) {
        try {
            load_crossmap(seed_corpus(), text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code(""), ErrorCode::SchemaError);
    EXPECT_EQ(code("id,framework\nT0003,ATTACK"), ErrorCode::SchemaError);
    EXPECT_EQ(code("fist_id,framework,external_id,relation\nT0003,CAPEC,X,Related\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("fist_id,framework,external_id,relation\nT0003,ATTACK,,Related\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("fist_id,framework,external_id,relation\nT0003,ATTACK,X,Same\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("fist_id,framework,external_id,relation\nT0003,ATTACK,\"X,Related\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("fist_id,framework,external_id,relation\nT3,ATTACK,X,Related\n"), ErrorCode::MalformedId);
    EXPECT_EQ(code("fist_id,framework,external_id,relation\r\nT0003,ATTACK,X,Related\r\n"), ErrorCode::IoError);
}

TEST(CrossmapTest, CsvSplitting) {
    EXPECT_EQ(*detail::split_csv_line("a,\"b,c\",\"d\"\"e\""), (std::vector<std::string>{"a", "b,c", "d\"e"}));
    EXPECT_EQ(*detail::split_csv_line(",,"), (std::vector<std::string>{"", "", ""}));
    EXPECT_FALSE(detail::split_csv_line("a\"b\"").has_value());
}

} // namespace
} // namespace fist
