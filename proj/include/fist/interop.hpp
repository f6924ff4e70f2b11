#ifndef FIST_INTEROP_HPP
#define FIST_INTEROP_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fist/digest.hpp"
#include "fist/incident.hpp"

namespace fist {

// ---------------------------------------------------------------------------
// STIX-style bundle

struct StixExportOptions {
    // created/modified stamp for catalog objects; fixed so exports stay diffable
    std::string timestamp = "1970-01-01T00:00:00.000Z";
};

namespace detail {

inline constexpr std::array<std::uint8_t, 16> kStixNamespace = {
    0x26, 0xe4, 0xea, 0x13, 0xa9, 0xa5, 0x56, 0xab, 0x91, 0xfc, 0xf7, 0x08, 0xca, 0x0c, 0x21, 0xca};

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// STIX timestamps carry at least millisecond precision.
inline std::string stix_timestamp(const std::string& ts) {
    if (ts.size() == 20 && ts.back() == 'Z') return ts.substr(0, 19) + ".000Z";
    return ts;
}

class BundleBuilder {
public:
    BundleBuilder(const Corpus& corpus, const StixExportOptions& options)
        : corpus_(corpus), options_(options) {
        identity_ = object_id("identity", "identity");
    }

    std::string object_id(std::string_view type, std::string_view key) const {
        std::string name = corpus_.source_digest();
        name += '|';
        name += type;
        name += '|';
        name += key;
        return std::string(type) + "--" + digest::uuid_v5(kStixNamespace, name);
    }

    std::string ref(const EntityId& id) const {
        switch (id.kind()) {
            case EntityKind::Technique: return object_id("attack-pattern", id.str());
            case EntityKind::Detection: return object_id("x-fist-detection", id.str());
            case EntityKind::Mitigation: return object_id("course-of-action", id.str());
            case EntityKind::Tool: return object_id("tool", id.str());
            default: return object_id("x-fist-entity", id.str());
        }
    }

    Json common(std::string_view type, std::string id) const {
        return Json{{"type", type},
                    {"spec_version", "2.1"},
                    {"id", std::move(id)},
                    {"created_by_ref", identity_},
                    {"created", options_.timestamp},
                    {"modified", options_.timestamp}};
    }

    static Json external_ref(const EntityId& id) {
        return Json::array({Json{{"source_name", "fist"}, {"external_id", id.str()}}});
    }

    Json relationship(std::string_view rel, const EntityId& source, const EntityId& target) const {
        std::string key = source.str() + "|" + std::string(rel) + "|" + target.str();
        Json o = common("relationship", object_id("relationship", key));
        o["relationship_type"] = rel;
        o["source_ref"] = ref(source);
        o["target_ref"] = ref(target);
        return o;
    }

    Json build(const std::vector<IncidentFlow>& flows) const {
        Json objects = Json::array();
        Json relationships = Json::array();

        objects.push_back(Json{{"type", "identity"},
                               {"spec_version", "2.1"},
                               {"id", identity_},
                               {"created", options_.timestamp},
                               {"modified", options_.timestamp},
                               {"name", "FIST knowledge base " + corpus_.manifest().corpus_version},
                               {"identity_class", "organization"}});

        for (const auto& [id, t] : corpus_.techniques()) {
            Json o = common("attack-pattern", ref(id));
            o["name"] = t.name;
            o["description"] = t.description;
            Json phases = Json::array();
            for (const auto& pid : t.phase_ids) {
                phases.push_back({{"kill_chain_name", "fist"},
                                  {"phase_name", lowercase(corpus_.phases().at(pid).name)}});
            }
            o["kill_chain_phases"] = phases;
            o["external_references"] = external_ref(id);
            o["x_fist_is_subtechnique"] = id.is_sub();
            objects.push_back(std::move(o));
            for (const auto& d : t.detection_ids) relationships.push_back(relationship("detects", d, id));
            for (const auto& s : t.tool_ids) relationships.push_back(relationship("uses", id, s));
        }
        for (const auto& [id, d] : corpus_.detections()) {
            Json o = common("x-fist-detection", ref(id));
            o["name"] = d.name;
            o["description"] = d.description;
            o["x_fist_signal_class"] = to_string(d.signal_class);
            o["external_references"] = external_ref(id);
            objects.push_back(std::move(o));
        }
        for (const auto& [id, m] : corpus_.mitigations()) {
            Json o = common("course-of-action", ref(id));
            o["name"] = m.name;
            o["description"] = m.description;
            o["external_references"] = external_ref(id);
            objects.push_back(std::move(o));
            for (const auto& t : m.technique_ids) relationships.push_back(relationship("mitigates", id, t));
        }
        for (const auto& [id, s] : corpus_.tools()) {
            Json o = common("tool", ref(id));
            o["name"] = s.name;
            o["description"] = s.description;
            o["external_references"] = external_ref(id);
            objects.push_back(std::move(o));
            for (const auto& t : s.technique_ids) {
                if (!corpus_.techniques().at(t).tool_ids.contains(id)) {
                    relationships.push_back(relationship("uses", t, id));
                }
            }
        }

        std::sort(relationships.begin(), relationships.end(),
                  [](const Json& a, const Json& b) { return a["id"] < b["id"]; });
        for (auto& r : relationships) objects.push_back(std::move(r));

        std::vector<const IncidentFlow*> sorted;
        for (const auto& f : flows) sorted.push_back(&f);
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto* a, const auto* b) { return a->incident_id < b->incident_id; });
        for (const IncidentFlow* f : sorted) objects.push_back(report(*f));

        std::string bundle_key = "bundle";
        for (const IncidentFlow* f : sorted) bundle_key += "|" + f->incident_id;
        return Json{{"type", "bundle"}, {"id", object_id("bundle", bundle_key)}, {"objects", objects}};
    }

    Json report(const IncidentFlow& flow) const {
        IdSet techniques;
        for (const auto& o : flow.observations) {
            if (corpus_.find_technique(o.technique_id)) techniques.insert(o.technique_id);
        }
        Json refs = Json::array();
        for (const auto& t : techniques) refs.push_back(ref(t));
        std::string stamp = stix_timestamp(flow.created_at);
        Json o{{"type", "report"},
               {"spec_version", "2.1"},
               {"id", object_id("report", "incident:" + flow.incident_id)},
               {"created_by_ref", identity_},
               {"created", stamp},
               {"modified", stamp},
               {"name", flow.title.empty() ? flow.incident_id : flow.title},
               {"description", flow.summary},
               {"report_types", Json::array({"threat-report"})},
               {"published", stamp},
               {"object_refs", refs},
               {"external_references",
                Json::array({Json{{"source_name", "fist-incident"}, {"external_id", flow.incident_id}}})}};
        return o;
    }

private:
    const Corpus& corpus_;
    const StixExportOptions& options_;
    std::string identity_;
};

inline void collect_refs(const Json& j, const std::string& key, std::vector<std::string>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) collect_refs(v, k, out);
    } else if (j.is_array()) {
        for (const auto& v : j) collect_refs(v, key, out);
    } else if (j.is_string() && (key.ends_with("_ref") || key.ends_with("_refs"))) {
        out.push_back(j.get<std::string>());
    }
}

} // namespace detail

/**
 * Exports the corpus, and optionally incidents, as a STIX 2.1-shaped bundle.
 *
 * Techniques become attack-patterns with a "fist" kill-chain entry per phase,
 * detections become x-fist-detection objects linked by "detects",
 * mitigations become course-of-action objects linked by "mitigates", tools
 * become tool objects linked by "uses", and each incident becomes a report
 * referencing the attack-patterns it observed. Object ids are name-based
 * UUIDs over (corpus digest, entity id), so equal inputs give equal bytes.
 */
inline Json export_stix_bundle(const Corpus& corpus, const std::vector<IncidentFlow>& flows = {},
                               const StixExportOptions& options = {}) {
    return detail::BundleBuilder(corpus, options).build(flows);
}

/// References (`*_ref`, `*_refs`) that do not name an object in the bundle.
inline std::vector<std::string> dangling_bundle_refs(const Json& bundle) {
    std::set<std::string> defined;
    for (const auto& o : bundle.at("objects")) defined.insert(o.at("id").get<std::string>());
    std::vector<std::string> refs;
    detail::collect_refs(bundle.at("objects"), "", refs);
    std::vector<std::string> out;
    for (auto& r : refs) {
        if (!defined.contains(r)) out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Navigator layer

inline constexpr int kLayerScoreHit = 100;
inline constexpr int kLayerScoreUnhit = 40;

struct LayerEntry {
    EntityId technique_id;
    int score;
    std::string comment;

    friend bool operator==(const LayerEntry&, const LayerEntry&) = default;
};

inline int clamp_score(long long score) { return static_cast<int>(std::clamp<long long>(score, 0, 100)); }

/// Technique annotations for display; one entry per technique, sorted by id.
struct LayerDocument {
    std::string name;
    std::string corpus_version;
    std::string incident_id;
    std::vector<LayerEntry> entries;

    /// Inserts or replaces the entry for a technique; the score is clamped to [0, 100].
    void set(const EntityId& technique_id, long long score, std::string comment) {
        LayerEntry e{technique_id, clamp_score(score), std::move(comment)};
        auto it = std::lower_bound(entries.begin(), entries.end(), technique_id,
                                   [](const LayerEntry& x, const EntityId& id) { return x.technique_id < id; });
        if (it != entries.end() && it->technique_id == technique_id) {
            *it = std::move(e);
        } else {
            entries.insert(it, std::move(e));
        }
    }

    friend bool operator==(const LayerDocument&, const LayerDocument&) = default;
};

/// Score 100 for techniques with any recorded hit, 40 otherwise; comment is the first observed behavior.
inline LayerDocument export_layer(const Corpus& corpus, const IncidentFlow& flow) {
    LayerDocument layer{"FIST incident " + flow.incident_id, corpus.manifest().corpus_version,
                        flow.incident_id, {}};
    std::map<EntityId, std::pair<bool, std::string>> seen;
    for (const auto& o : flow.observations) {
        auto [it, inserted] = seen.try_emplace(o.technique_id, false, o.observed_behavior);
        it->second.first = it->second.first || !o.detection_hits.empty();
    }
    for (auto& [id, state] : seen) {
        layer.set(id, state.first ? kLayerScoreHit : kLayerScoreUnhit, std::move(state.second));
    }
    return layer;
}

inline Json to_json(const LayerDocument& layer) {
    Json entries = Json::array();
    for (const auto& e : layer.entries) {
        entries.push_back({{"technique_id", e.technique_id.str()}, {"score", e.score}, {"comment", e.comment}});
    }
    return Json{{"name", layer.name},
                {"corpus_version", layer.corpus_version},
                {"incident_id", layer.incident_id},
                {"entries", entries}};
}

// ---------------------------------------------------------------------------
// Cross-framework mapping

enum class Framework { ATTACK, DISARM };
enum class MappingRelation { Equivalent, Broader, Narrower, Related };

inline std::string_view to_string(Framework f) { return f == Framework::ATTACK ? "ATTACK" : "DISARM"; }

inline std::string_view to_string(MappingRelation r) {
    switch (r) {
        case MappingRelation::Equivalent: return "Equivalent";
        case MappingRelation::Broader: return "Broader";
        case MappingRelation::Narrower: return "Narrower";
        case MappingRelation::Related: return "Related";
    }
    return "";
}

struct CrossMapping {
    EntityId fist_id;
    Framework framework;
    std::string external_id;
    MappingRelation relation;

    friend bool operator==(const CrossMapping&, const CrossMapping&) = default;
};

/// Validated crossmap rows with a reverse index on external id.
class CrossMap {
public:
    explicit CrossMap(std::vector<CrossMapping> rows) : rows_(std::move(rows)) {
        for (const auto& r : rows_) by_external_[r.external_id].insert(r.fist_id);
    }

    const std::vector<CrossMapping>& rows() const noexcept { return rows_; }

    std::vector<EntityId> resolve(std::string_view external_id) const {
        auto it = by_external_.find(std::string(external_id));
        if (it == by_external_.end()) return {};
        return {it->second.begin(), it->second.end()};
    }

private:
    std::vector<CrossMapping> rows_;
    std::map<std::string, IdSet> by_external_;
};

inline constexpr std::string_view kCrossmapHeader = "fist_id,framework,external_id,relation";

namespace detail {

/// Splits one CSV record; supports RFC 4180 double-quoted fields.
inline std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            if (!fields.back().empty() || was_quoted) return std::nullopt;
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
            was_quoted = false;
        } else {
            if (was_quoted) return std::nullopt;
            fields.back() += c;
        }
    }
    if (quoted) return std::nullopt;
    return fields;
}

} // namespace detail

/**
 * Parses crossmap CSV (header `fist_id,framework,external_id,relation`) and
 * checks every fist_id against the corpus. Throws SchemaError on malformed
 * rows and IntegrityError on ids the corpus does not define.
 */
inline CrossMap load_crossmap(const Corpus& corpus, std::string_view text) {
    std::vector<CrossMapping> rows;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::string where = "crossmap line " + std::to_string(line_no);
        if (!header_seen) {
            if (line != kCrossmapHeader) {
                throw Error(ErrorCode::SchemaError, where,
                            where + ": expected header '" + std::string(kCrossmapHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        auto fields = detail::split_csv_line(line);
        if (!fields || fields->size() != 4) {
            throw Error(ErrorCode::SchemaError, where, where + ": expected 4 fields");
        }
        EntityId id = parse_entity_id((*fields)[0]);
        Framework framework;
        if ((*fields)[1] == "ATTACK") {
            framework = Framework::ATTACK;
        } else if ((*fields)[1] == "DISARM") {
            framework = Framework::DISARM;
        } else {
            throw Error(ErrorCode::SchemaError, where, where + ": framework must be ATTACK or DISARM");
        }
        if ((*fields)[2].empty()) throw Error(ErrorCode::SchemaError, where, where + ": empty external_id");
        std::optional<MappingRelation> relation;
        for (auto r : {MappingRelation::Equivalent, MappingRelation::Broader, MappingRelation::Narrower,
                       MappingRelation::Related}) {
            if ((*fields)[3] == to_string(r)) relation = r;
        }
        if (!relation) throw Error(ErrorCode::SchemaError, where, where + ": unknown relation");
        if (!corpus.contains(id)) {
            throw Error(ErrorCode::IntegrityError, id.str(),
                        where + ": " + id.str() + " is not defined in the corpus");
        }
        rows.push_back(CrossMapping{id, framework, (*fields)[2], *relation});
    }
    if (!header_seen) throw Error(ErrorCode::SchemaError, "crossmap", "crossmap is missing its header");
    return CrossMap(std::move(rows));
}

/// FIST ids mapped to an external id, sorted; empty when the id is unknown.
inline std::vector<EntityId> resolve_external(const Corpus& corpus, const CrossMap& crossmap,
                                              std::string_view external_id) {
    std::vector<EntityId> out;
    for (const auto& id : crossmap.resolve(external_id)) {
        if (corpus.contains(id)) out.push_back(id);
    }
    return out;
}

} // namespace fist

#endif
