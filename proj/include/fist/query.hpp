#ifndef FIST_QUERY_HPP
#define FIST_QUERY_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fist/corpus.hpp"

namespace fist {

using EntityRecord = std::variant<Phase, Tactic, TechniqueEntry, DetectionPattern, Mitigation, ToolEntry>;

namespace detail {

[[noreturn]] inline void not_found(const EntityId& id) {
    throw Error(ErrorCode::NotFound, id.str(), id.str() + " not found");
}

template <typename Map>
EntityRecord lookup(const Map& m, const EntityId& id) {
    auto it = m.find(id);
    if (it == m.end()) not_found(id);
    return it->second;
}

} // namespace detail

/// Throws Error(NotFound) for ids absent from the corpus.
inline EntityRecord get_entity(const Corpus& corpus, const EntityId& id) {
    switch (id.kind()) {
        case EntityKind::Phase: return detail::lookup(corpus.phases(), id);
        case EntityKind::Tactic: return detail::lookup(corpus.tactics(), id);
        case EntityKind::Technique: return detail::lookup(corpus.techniques(), id);
        case EntityKind::Detection: return detail::lookup(corpus.detections(), id);
        case EntityKind::Mitigation: return detail::lookup(corpus.mitigations(), id);
        case EntityKind::Tool: return detail::lookup(corpus.tools(), id);
    }
    detail::not_found(id);
}

inline const EntityId& record_id(const EntityRecord& r) {
    return std::visit([](const auto& e) -> const EntityId& { return e.id; }, r);
}

inline const std::string& record_name(const EntityRecord& r) {
    return std::visit([](const auto& e) -> const std::string& { return e.name; }, r);
}

/// Entity JSON prefixed with its "kind".
inline Json to_json(const EntityRecord& r) {
    Json out{{"kind", std::string(kind_name(record_id(r).kind()))}};
    Json body = std::visit([](const auto& e) { return fist::to_json(e); }, r);
    for (auto& [key, value] : body.items()) out[key] = value;
    return out;
}

/// Techniques linked to the phase, sorted by id.
inline std::vector<EntityId> techniques_by_phase(const Corpus& corpus, const EntityId& phase_id) {
    if (!corpus.find_phase(phase_id)) detail::not_found(phase_id);
    std::vector<EntityId> out;
    for (const auto& [id, t] : corpus.techniques()) {
        if (t.phase_ids.contains(phase_id)) out.push_back(id);
    }
    return out;
}

inline IdSet detections_for_technique(const Corpus& corpus, const EntityId& technique_id) {
    const TechniqueEntry* t = corpus.find_technique(technique_id);
    if (!t) detail::not_found(technique_id);
    return t->detection_ids;
}

struct MatrixCell {
    std::optional<EntityId> tactic_id;  // nullopt collects techniques with no tactic in this phase
    std::vector<EntityId> technique_ids;

    friend bool operator==(const MatrixCell&, const MatrixCell&) = default;
};

struct MatrixColumn {
    EntityId phase_id;
    std::string name;
    int order;
    std::vector<MatrixCell> cells;

    friend bool operator==(const MatrixColumn&, const MatrixColumn&) = default;
};

/// Phase columns in kill-chain order, each split into per-tactic cells.
struct Matrix {
    std::vector<MatrixColumn> columns;
    std::vector<EntityId> orphan_tactics;

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline Matrix build_matrix(const Corpus& corpus) {
    Matrix m;
    IdSet used_tactics;
    for (const Phase* phase : corpus.phases_in_order()) {
        MatrixColumn col{phase->id, phase->name, phase->order, {}};
        std::map<EntityId, std::vector<EntityId>> by_tactic;
        std::vector<EntityId> unassigned;
        for (const auto& [tid, t] : corpus.techniques()) {
            if (!t.phase_ids.contains(phase->id)) continue;
            bool placed = false;
            for (const auto& tactic_id : t.tactic_ids) {
                if (corpus.tactics().at(tactic_id).phase_id == phase->id) {
                    by_tactic[tactic_id].push_back(tid);
                    used_tactics.insert(tactic_id);
                    placed = true;
                }
            }
            if (!placed) unassigned.push_back(tid);
        }
        for (auto& [tactic_id, ids] : by_tactic) col.cells.push_back(MatrixCell{tactic_id, std::move(ids)});
        if (!unassigned.empty()) col.cells.push_back(MatrixCell{std::nullopt, std::move(unassigned)});
        m.columns.push_back(std::move(col));
    }
    for (const auto& [id, tactic] : corpus.tactics()) {
        if (!used_tactics.contains(id)) m.orphan_tactics.push_back(id);
    }
    return m;
}

inline Json to_json(const Corpus& corpus, const Matrix& m) {
    Json columns = Json::array();
    for (const auto& col : m.columns) {
        Json cells = Json::array();
        for (const auto& cell : col.cells) {
            Json techniques = Json::array();
            for (const auto& id : cell.technique_ids) {
                techniques.push_back({{"id", id.str()}, {"name", corpus.techniques().at(id).name}});
            }
            cells.push_back({
                {"tactic_id", cell.tactic_id ? Json(cell.tactic_id->str()) : Json(nullptr)},
                {"tactic_name",
                 cell.tactic_id ? Json(corpus.tactics().at(*cell.tactic_id).name) : Json(nullptr)},
                {"techniques", techniques},
            });
        }
        columns.push_back({{"phase_id", col.phase_id.str()},
                           {"name", col.name},
                           {"order", col.order},
                           {"cells", cells}});
    }
    Json orphans = Json::array();
    for (const auto& id : m.orphan_tactics) orphans.push_back(id.str());
    return Json{{"corpus_version", corpus.manifest().corpus_version},
                {"columns", columns},
                {"orphan_tactics", orphans}};
}

} // namespace fist

#endif
