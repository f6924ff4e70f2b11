#ifndef FIST_MODEL_HPP
#define FIST_MODEL_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fist/entity_id.hpp"

namespace fist {

using IdSet = std::set<EntityId>;

struct Phase {
    EntityId id;
    std::string name;
    std::string description;
    int order = 0;  // 1-based position in the kill chain

    friend bool operator==(const Phase&, const Phase&) = default;
};

struct Tactic {
    EntityId id;
    std::string name;
    std::string description;
    EntityId phase_id;
    bool provisional = false;  // placeholder until an upstream tactic catalog exists

    friend bool operator==(const Tactic&, const Tactic&) = default;
};

/// One technique or sub-technique with its links into the rest of the catalog.
struct TechniqueEntry {
    EntityId id;
    std::string name;
    std::string description;
    IdSet tactic_ids;
    IdSet phase_ids;
    IdSet detection_ids;
    IdSet mitigation_ids;
    IdSet tool_ids;

    std::optional<EntityId> parent() const { return id.parent(); }

    friend bool operator==(const TechniqueEntry&, const TechniqueEntry&) = default;
};

enum class SignalClass { ContentAnalysis, AccountBehavior, Infrastructure, FinancialFlow };

inline std::string_view to_string(SignalClass c) {
    switch (c) {
        case SignalClass::ContentAnalysis: return "ContentAnalysis";
        case SignalClass::AccountBehavior: return "AccountBehavior";
        case SignalClass::Infrastructure: return "Infrastructure";
        case SignalClass::FinancialFlow: return "FinancialFlow";
    }
    return "";
}

inline std::optional<SignalClass> signal_class_from_string(std::string_view s) {
    if (s == "ContentAnalysis") return SignalClass::ContentAnalysis;
    if (s == "AccountBehavior") return SignalClass::AccountBehavior;
    if (s == "Infrastructure") return SignalClass::Infrastructure;
    if (s == "FinancialFlow") return SignalClass::FinancialFlow;
    return std::nullopt;
}

struct DetectionPattern {
    EntityId id;
    std::string name;
    std::string description;
    SignalClass signal_class = SignalClass::ContentAnalysis;

    std::optional<EntityId> parent() const { return id.parent(); }

    friend bool operator==(const DetectionPattern&, const DetectionPattern&) = default;
};

struct Mitigation {
    EntityId id;
    std::string name;
    std::string description;
    IdSet technique_ids;

    friend bool operator==(const Mitigation&, const Mitigation&) = default;
};

struct ToolEntry {
    EntityId id;
    std::string name;
    std::string description;
    IdSet technique_ids;

    friend bool operator==(const ToolEntry&, const ToolEntry&) = default;
};

/// Entity counts per class. Technique and detection counts include sub-entries.
struct ScaleCounts {
    std::uint32_t phases = 0;
    std::uint32_t tactics = 0;
    std::uint32_t techniques = 0;
    std::uint32_t detections = 0;
    std::uint32_t mitigations = 0;
    std::uint32_t tools = 0;

    friend bool operator==(const ScaleCounts&, const ScaleCounts&) = default;
};

struct Manifest {
    std::string corpus_version = "0.0.0";
    ScaleCounts declared;
    // Set on partial extracts of a larger catalog: sub-entries may name a
    // parent family that is not part of this document.
    bool external_parents = false;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/**
 * A corpus as read from a document, before any integrity checks. Entities are
 * kept in document order and may contain duplicates or dangling links; the
 * validator reports those, and Corpus is only ever built from a clean one.
 */
struct CorpusDocument {
    Manifest manifest;
    std::vector<Phase> phases;
    std::vector<Tactic> tactics;
    std::vector<TechniqueEntry> techniques;
    std::vector<DetectionPattern> detections;
    std::vector<Mitigation> mitigations;
    std::vector<ToolEntry> tools;

    ScaleCounts actual_counts() const {
        return ScaleCounts{
            static_cast<std::uint32_t>(phases.size()),
            static_cast<std::uint32_t>(tactics.size()),
            static_cast<std::uint32_t>(techniques.size()),
            static_cast<std::uint32_t>(detections.size()),
            static_cast<std::uint32_t>(mitigations.size()),
            static_cast<std::uint32_t>(tools.size()),
        };
    }
};

} // namespace fist

#endif
