#ifndef FIST_INCIDENT_HPP
#define FIST_INCIDENT_HPP

#include <algorithm>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "fist/corpus.hpp"

namespace fist {

/// One observed use of a technique within an incident.
struct TechniqueObservation {
    EntityId technique_id;
    EntityId phase_id;
    std::string observed_behavior;
    IdSet detection_hits;
    int sequence = 0;
    std::optional<std::string> observed_at;  // UTC timestamp, informational only

    friend bool operator==(const TechniqueObservation&, const TechniqueObservation&) = default;
};

/// Ordered technique observations for a single fraud case. Techniques may repeat.
struct IncidentFlow {
    std::string incident_id;
    std::string title;
    std::string summary;
    std::string created_at;
    std::vector<TechniqueObservation> observations;

    friend bool operator==(const IncidentFlow&, const IncidentFlow&) = default;
};

/// Incident ids double as file names, so they are restricted to a safe alphabet.
inline bool is_valid_incident_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    auto ok = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '-' || c == '_' || c == '.';
    };
    if (!std::all_of(id.begin(), id.end(), ok)) return false;
    return id.front() != '.' && id.front() != '-';
}

inline bool is_utc_timestamp(const std::string& s) {
    static const std::regex kTimestamp(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d{1,9})?Z$)");
    return std::regex_match(s, kTimestamp);
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const TechniqueObservation& o) {
    Json hits = Json::array();
    for (const auto& d : o.detection_hits) hits.push_back(d.str());
    Json out{{"sequence", o.sequence},
             {"technique_id", o.technique_id.str()},
             {"phase_id", o.phase_id.str()},
             {"observed_behavior", o.observed_behavior},
             {"detection_hits", hits}};
    if (o.observed_at) out["observed_at"] = *o.observed_at;
    return out;
}

inline Json to_json(const IncidentFlow& f) {
    Json observations = Json::array();
    for (const auto& o : f.observations) observations.push_back(to_json(o));
    return Json{{"incident_id", f.incident_id},
                {"title", f.title},
                {"summary", f.summary},
                {"created_at", f.created_at},
                {"observations", observations}};
}

/// `position` (1-based) fills in a missing sequence number.
inline TechniqueObservation parse_observation(const Json& j, const std::string& path, int position) {
    detail::Reader r(j, path);
    r.allow_only({"sequence", "technique_id", "phase_id", "observed_behavior", "detection_hits",
                  "observed_at"});
    TechniqueObservation o{r.id("technique_id", EntityKind::Technique),
                           r.id("phase_id", EntityKind::Phase),
                           r.str("observed_behavior", false),
                           r.ids("detection_hits", EntityKind::Detection),
                           position,
                           std::nullopt};
    if (r.get("sequence")) o.sequence = static_cast<int>(r.integer("sequence", 1, 1000000));
    if (r.get("observed_at")) {
        std::string ts = r.str("observed_at");
        if (!is_utc_timestamp(ts)) detail::schema_error(r.path("observed_at"), "expected a UTC timestamp");
        o.observed_at = std::move(ts);
    }
    return o;
}

inline IncidentFlow incident_from_json(const Json& j) {
    detail::Reader r(j, "$");
    r.allow_only({"incident_id", "title", "summary", "created_at", "observations"});
    IncidentFlow f;
    f.incident_id = r.str("incident_id");
    if (!is_valid_incident_id(f.incident_id)) {
        detail::schema_error("$.incident_id", "incident ids use [A-Za-z0-9._-] and start alphanumerically");
    }
    f.title = r.str("title", false);
    f.summary = r.str("summary", false);
    f.created_at = r.str("created_at");
    if (!is_utc_timestamp(f.created_at)) detail::schema_error("$.created_at", "expected a UTC timestamp");
    if (const Json* obs = r.get("observations")) {
        if (!obs->is_array()) detail::schema_error("$.observations", "expected an array");
        int position = 1;
        for (const auto& item : *obs) {
            f.observations.push_back(
                parse_observation(item, "$.observations[" + std::to_string(position - 1) + "]", position));
            ++position;
        }
    }
    return f;
}

inline IncidentFlow parse_incident_document(std::string_view text) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) detail::schema_error("$", "document is not valid JSON");
    return incident_from_json(j);
}

// ---------------------------------------------------------------------------
// Annotation

/// Throws UnknownTechnique, PhaseMismatch or UnknownDetection for the first offending observation.
inline void check_observation(const Corpus& corpus, const TechniqueObservation& o) {
    const TechniqueEntry* t = corpus.find_technique(o.technique_id);
    if (!t) {
        throw Error(ErrorCode::UnknownTechnique, o.technique_id.str(),
                    "technique " + o.technique_id.str() + " is not in the corpus");
    }
    if (!t->phase_ids.contains(o.phase_id)) {
        throw Error(ErrorCode::PhaseMismatch, o.technique_id.str(),
                    "technique " + o.technique_id.str() + " is not mapped to phase " + o.phase_id.str());
    }
    for (const auto& hit : o.detection_hits) {
        if (!corpus.find_detection(hit)) {
            throw Error(ErrorCode::UnknownDetection, hit.str(),
                        "detection " + hit.str() + " is not in the corpus");
        }
    }
}

/**
 * Checks every observation against the corpus and renumbers `sequence` to
 * 1..N, keeping the existing sequence order (ties keep list order).
 */
inline IncidentFlow annotate_incident(const Corpus& corpus, IncidentFlow flow) {
    if (!is_valid_incident_id(flow.incident_id)) {
        throw Error(ErrorCode::SchemaError, flow.incident_id, "invalid incident id");
    }
    for (const auto& o : flow.observations) check_observation(corpus, o);
    std::stable_sort(flow.observations.begin(), flow.observations.end(),
                     [](const auto& a, const auto& b) { return a.sequence < b.sequence; });
    int seq = 1;
    for (auto& o : flow.observations) o.sequence = seq++;
    return flow;
}

/// A recorded hit that the corpus does not map to the observed technique.
struct UnmappedHit {
    int sequence;
    EntityId technique_id;
    EntityId detection_id;

    friend bool operator==(const UnmappedHit&, const UnmappedHit&) = default;
};

inline std::vector<UnmappedHit> unmapped_hits(const Corpus& corpus, const IncidentFlow& flow) {
    std::vector<UnmappedHit> out;
    for (const auto& o : flow.observations) {
        const TechniqueEntry* t = corpus.find_technique(o.technique_id);
        for (const auto& hit : o.detection_hits) {
            if (!t || !t->detection_ids.contains(hit)) out.push_back({o.sequence, o.technique_id, hit});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Coverage

/// Exact ratio; an empty denominator reads as 0.
struct Ratio {
    std::size_t numerator = 0;
    std::size_t denominator = 0;

    double value() const {
        return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
    }
    friend bool operator==(const Ratio&, const Ratio&) = default;
};

enum class GapReason { NoMappedDetection, NoHitRecorded };

inline std::string_view to_string(GapReason r) {
    return r == GapReason::NoMappedDetection ? "NoMappedDetection" : "NoHitRecorded";
}

struct GapEntry {
    EntityId technique_id;
    GapReason reason;

    friend bool operator==(const GapEntry&, const GapEntry&) = default;
};

struct CoverageReport {
    Ratio phase_coverage;
    IdSet phases_hit;
    Ratio detection_opportunity;
    Ratio detection_realized;
    std::vector<GapEntry> gaps;  // sorted by technique, then reason

    friend bool operator==(const CoverageReport&, const CoverageReport&) = default;
};

/**
 * Set-ratio metrics over the distinct techniques of a flow:
 *
 *   phase_coverage        = |phases observed| / |corpus phases|
 *   detection_opportunity = |techniques with a corpus-mapped detection| / |techniques|
 *   detection_realized    = |techniques with at least one recorded hit| / |techniques|
 *
 * A technique counts as hit if any of its observations records a hit, mapped
 * or not. Results do not depend on observation order.
 */
inline CoverageReport compute_coverage(const Corpus& corpus, const IncidentFlow& flow) {
    CoverageReport r;
    IdSet techniques;
    IdSet hit;
    for (const auto& o : flow.observations) {
        r.phases_hit.insert(o.phase_id);
        techniques.insert(o.technique_id);
        if (!o.detection_hits.empty()) hit.insert(o.technique_id);
    }
    r.phase_coverage = {r.phases_hit.size(), corpus.phases().size()};
    r.detection_opportunity.denominator = techniques.size();
    r.detection_realized = {hit.size(), techniques.size()};
    for (const auto& id : techniques) {
        const TechniqueEntry* t = corpus.find_technique(id);
        if (t && !t->detection_ids.empty()) {
            ++r.detection_opportunity.numerator;
        } else {
            r.gaps.push_back({id, GapReason::NoMappedDetection});
        }
        if (!hit.contains(id)) r.gaps.push_back({id, GapReason::NoHitRecorded});
    }
    return r;
}

inline Json to_json(const CoverageReport& r) {
    Json phases = Json::array();
    for (const auto& p : r.phases_hit) phases.push_back(p.str());
    Json gaps = Json::array();
    for (const auto& g : r.gaps) {
        gaps.push_back({{"technique_id", g.technique_id.str()}, {"reason", std::string(to_string(g.reason))}});
    }
    auto ratio = [](const Ratio& x) {
        return Json{{"numerator", x.numerator}, {"denominator", x.denominator}};
    };
    return Json{{"phase_coverage", r.phase_coverage.value()},
                {"phases_hit", phases},
                {"detection_opportunity", r.detection_opportunity.value()},
                {"detection_realized", r.detection_realized.value()},
                {"ratios",
                 {{"phase_coverage", ratio(r.phase_coverage)},
                  {"detection_opportunity", ratio(r.detection_opportunity)},
                  {"detection_realized", ratio(r.detection_realized)}}},
                {"gaps", gaps}};
}

} // namespace fist

#endif
