#ifndef FIST_TESTS_FIXTURES_HPP
#define FIST_TESTS_FIXTURES_HPP

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "fist/fist.hpp"

namespace fist::testing {

inline std::filesystem::path data_dir() { return FIST_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return FIST_TEST_DATA_DIR; }

inline std::filesystem::path seed_path() { return data_dir() / "seed_corpus.json"; }
inline std::filesystem::path case_incident_path() { return data_dir() / "case_study_incident.json"; }

inline const Corpus& seed_corpus() {
    static const Corpus corpus = load_corpus_file(seed_path());
    return corpus;
}

inline IncidentFlow case_incident() { return parse_incident_document(read_text_file(case_incident_path())); }

inline EntityId id(std::string_view s) { return parse_entity_id(s); }

/// Hand-counted from the case-study incident: 13 observations, one phase
/// each; 13 detection hits in which D0002.001 and D0003.001 each appear
/// twice, leaving 11 distinct detection patterns.
inline constexpr std::size_t kSeedPhases = 4;
inline constexpr std::size_t kSeedTechniques = 13;
inline constexpr std::size_t kSeedDetections = 11;

/// Full framework scale: phases, tactics, techniques, detections, mitigations, tools.
inline constexpr ScaleCounts kFullScale{4, 9, 93, 58, 12, 12};

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fist-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

namespace gen {

inline EntityId make(EntityKind kind, int family, int sub = 0) {
    return EntityId::make(kind, static_cast<std::uint16_t>(family),
                          sub ? std::optional<std::uint16_t>(static_cast<std::uint16_t>(sub)) : std::nullopt);
}

/// Id for the i-th entity of a family/sub kind: every third entry opens a new family.
inline EntityId nth_sub_capable(EntityKind kind, std::uint32_t i) {
    int family = static_cast<int>(i / 3) + 1;
    int sub = static_cast<int>(i % 3);
    return make(kind, family, sub);
}

/**
 * Builds a clean document holding exactly `counts` entities. Sub-entries
 * always follow their parent family, so no parent is ever missing.
 */
inline CorpusDocument scale_document(const ScaleCounts& counts, const std::string& version = "1.0.0") {
    CorpusDocument doc;
    doc.manifest.corpus_version = version;
    doc.manifest.declared = counts;
    for (std::uint32_t i = 0; i < counts.phases; ++i) {
        doc.phases.push_back(Phase{make(EntityKind::Phase, static_cast<int>(i) + 1), "Phase " + std::to_string(i + 1),
                                   "", static_cast<int>(i) + 1});
    }
    for (std::uint32_t i = 0; i < counts.tactics; ++i) {
        doc.tactics.push_back(Tactic{make(EntityKind::Tactic, static_cast<int>(i) + 1),
                                     "Tactic " + std::to_string(i + 1), "",
                                     doc.phases.at(i % counts.phases).id, false});
    }
    for (std::uint32_t i = 0; i < counts.detections; ++i) {
        EntityId d = nth_sub_capable(EntityKind::Detection, i);
        doc.detections.push_back(DetectionPattern{d, "Detection " + d.str(), "",
                                                  static_cast<SignalClass>(d.family() % 4)});
    }
    for (std::uint32_t i = 0; i < counts.techniques; ++i) {
        EntityId t = nth_sub_capable(EntityKind::Technique, i);
        TechniqueEntry e{t, "Technique " + t.str(), "", {}, {}, {}, {}, {}};
        const Phase& phase = doc.phases.at(t.family() % counts.phases);
        e.phase_ids.insert(phase.id);
        for (const auto& tactic : doc.tactics) {
            if (tactic.phase_id == phase.id) {
                e.tactic_ids.insert(tactic.id);
                break;
            }
        }
        if (counts.detections) e.detection_ids.insert(doc.detections.at(i % counts.detections).id);
        doc.techniques.push_back(std::move(e));
    }
    for (std::uint32_t i = 0; i < counts.mitigations; ++i) {
        Mitigation m{make(EntityKind::Mitigation, static_cast<int>(i) + 1), "Mitigation " + std::to_string(i + 1), "",
                     {}};
        if (counts.techniques) m.technique_ids.insert(doc.techniques.at(i % counts.techniques).id);
        doc.mitigations.push_back(std::move(m));
    }
    for (std::uint32_t i = 0; i < counts.tools; ++i) {
        ToolEntry s{make(EntityKind::Tool, static_cast<int>(i) + 1), "Tool " + std::to_string(i + 1), "", {}};
        if (counts.techniques) s.technique_ids.insert(doc.techniques.at(i % counts.techniques).id);
        doc.tools.push_back(std::move(s));
    }
    return doc;
}

inline std::string random_text(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces = {
        "fake", "investment", " ", "\"quoted\"", "line\nbreak", "tab\t", "back\\slash",
        "caf\xc3\xa9", "\xe8\xa9\x90\xe9\xaa\x97", "200% yearly", "|pipe|", "", "{json}"};
    std::uniform_int_distribution<std::size_t> n(0, 5), pick(0, pieces.size() - 1);
    std::string out;
    for (std::size_t i = n(rng); i > 0; --i) out += pieces[pick(rng)];
    return out;
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

/**
 * Random clean document with at most `max_entities` entities, arbitrary
 * text fields and random (but resolvable) cross-links.
 */
inline CorpusDocument random_document(std::mt19937_64& rng, std::size_t max_entities = 50) {
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<std::size_t> total_dist(0, max_entities);
    std::size_t budget = total_dist(rng);

    CorpusDocument doc;
    doc.manifest.corpus_version = std::to_string(rng() % 5) + "." + std::to_string(rng() % 20) + ".0";
    doc.manifest.external_parents = coin(rng) == 1;

    auto take = [&](std::size_t upto) {
        std::size_t n = std::min(budget, std::uniform_int_distribution<std::size_t>(0, upto)(rng));
        budget -= n;
        return n;
    };
    std::size_t n_phases = take(6);
    std::size_t n_tactics = n_phases ? take(8) : 0;
    std::size_t n_detections = take(12);
    std::size_t n_techniques = n_phases ? take(20) : 0;
    std::size_t n_mitigations = n_techniques ? take(6) : 0;
    std::size_t n_tools = n_techniques ? take(6) : 0;

    std::vector<int> orders(n_phases);
    for (std::size_t i = 0; i < n_phases; ++i) orders[i] = static_cast<int>(i) + 1;
    std::shuffle(orders.begin(), orders.end(), rng);

    std::set<EntityId> used;
    auto fresh = [&](EntityKind kind, bool allow_sub) {
        for (;;) {
            int family = std::uniform_int_distribution<int>(0, 60)(rng);
            int sub = allow_sub && coin(rng) ? std::uniform_int_distribution<int>(1, 999)(rng) : 0;
            EntityId id = make(kind, family, sub);
            if (used.insert(id).second) return id;
        }
    };

    for (std::size_t i = 0; i < n_phases; ++i) {
        doc.phases.push_back(Phase{fresh(EntityKind::Phase, false), random_text(rng), random_text(rng), orders[i]});
    }
    for (std::size_t i = 0; i < n_tactics; ++i) {
        doc.tactics.push_back(Tactic{fresh(EntityKind::Tactic, false), random_text(rng), random_text(rng),
                                     pick(rng, doc.phases).id, coin(rng) == 1});
    }

    // With in-document parents, a sub-entry also adds its parent family.
    auto add_with_parent = [&](EntityKind kind, std::size_t n, auto&& emit) {
        std::size_t made = 0;
        while (made < n) {
            EntityId id = fresh(kind, true);
            if (auto parent = id.parent(); parent && !doc.manifest.external_parents) {
                if (made + 2 > n) {
                    used.erase(id);
                    id = fresh(kind, false);
                } else if (used.insert(*parent).second) {
                    emit(*parent);
                    ++made;
                }
            }
            emit(id);
            ++made;
        }
    };

    add_with_parent(EntityKind::Detection, n_detections, [&](const EntityId& id) {
        doc.detections.push_back(DetectionPattern{id, random_text(rng), random_text(rng),
                                                  static_cast<SignalClass>(rng() % 4)});
    });

    add_with_parent(EntityKind::Technique, n_techniques, [&](const EntityId& id) {
        TechniqueEntry t{id, random_text(rng), random_text(rng), {}, {}, {}, {}, {}};
        t.phase_ids.insert(pick(rng, doc.phases).id);
        if (coin(rng)) t.phase_ids.insert(pick(rng, doc.phases).id);
        for (const auto& tactic : doc.tactics) {
            if (t.phase_ids.contains(tactic.phase_id) && coin(rng)) t.tactic_ids.insert(tactic.id);
        }
        for (const auto& d : doc.detections) {
            if (rng() % 5 == 0) t.detection_ids.insert(d.id);
        }
        doc.techniques.push_back(std::move(t));
    });

    for (std::size_t i = 0; i < n_mitigations; ++i) {
        Mitigation m{fresh(EntityKind::Mitigation, false), random_text(rng), random_text(rng), {}};
        m.technique_ids.insert(pick(rng, doc.techniques).id);
        doc.mitigations.push_back(std::move(m));
    }
    for (std::size_t i = 0; i < n_tools; ++i) {
        ToolEntry s{fresh(EntityKind::Tool, false), random_text(rng), random_text(rng), {}};
        s.technique_ids.insert(pick(rng, doc.techniques).id);
        doc.tools.push_back(std::move(s));
    }
    for (auto& m : doc.mitigations) {
        for (auto& t : doc.techniques) {
            if (m.technique_ids.contains(t.id) && coin(rng)) t.mitigation_ids.insert(m.id);
        }
    }
    for (auto& s : doc.tools) {
        for (auto& t : doc.techniques) {
            if (s.technique_ids.contains(t.id) && coin(rng)) t.tool_ids.insert(s.id);
        }
    }
    doc.manifest.declared = doc.actual_counts();
    std::shuffle(doc.techniques.begin(), doc.techniques.end(), rng);
    std::shuffle(doc.detections.begin(), doc.detections.end(), rng);
    return doc;
}

} // namespace gen

} // namespace fist::testing

#endif
