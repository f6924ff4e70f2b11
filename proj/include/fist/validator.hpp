#ifndef FIST_VALIDATOR_HPP
#define FIST_VALIDATOR_HPP

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fist/model.hpp"

namespace fist {

enum class ViolationCode {
    DuplicateId,
    DanglingReference,
    MissingParent,
    PhaseOrder,
    NoPhase,
    TacticPhaseConflict,
};

inline std::string_view to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::DuplicateId: return "DuplicateId";
        case ViolationCode::DanglingReference: return "DanglingReference";
        case ViolationCode::MissingParent: return "MissingParent";
        case ViolationCode::PhaseOrder: return "PhaseOrder";
        case ViolationCode::NoPhase: return "NoPhase";
        case ViolationCode::TacticPhaseConflict: return "TacticPhaseConflict";
    }
    return "";
}

/// A single integrity problem. `subject` always names an entity defined in the document.
struct Violation {
    ViolationCode code;
    EntityId subject;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
    friend bool operator<(const Violation& a, const Violation& b) {
        return std::tie(a.subject, a.code, a.detail) < std::tie(b.subject, b.code, b.detail);
    }
};

struct CountMismatch {
    std::string entity_class;
    std::uint32_t declared;
    std::uint32_t actual;

    friend bool operator==(const CountMismatch&, const CountMismatch&) = default;
};

inline nlohmann::ordered_json to_json(const Violation& v) {
    return nlohmann::ordered_json{
        {"code", std::string(to_string(v.code))},
        {"subject", v.subject.str()},
        {"detail", v.detail},
    };
}

inline nlohmann::ordered_json to_json(const CountMismatch& m) {
    return nlohmann::ordered_json{
        {"entity_class", m.entity_class},
        {"declared", m.declared},
        {"actual", m.actual},
    };
}

namespace detail {

class IntegrityChecker {
public:
    explicit IntegrityChecker(const CorpusDocument& doc) : doc_(doc) {
        index(doc.phases);
        index(doc.tactics);
        index(doc.techniques);
        index(doc.detections);
        index(doc.mitigations);
        index(doc.tools);
    }

    std::vector<Violation> run() {
        for (const auto& [id, n] : occurrences_) {
            if (n > 1) {
                add(ViolationCode::DuplicateId, id,
                    "defined " + std::to_string(n) + " times");
            }
        }
        check_phase_order();
        for (const auto& t : doc_.tactics) require(t.id, t.phase_id);
        for (const auto& t : doc_.techniques) check_technique(t);
        for (const auto& d : doc_.detections) check_parent(d.id);
        for (const auto& m : doc_.mitigations) {
            for (const auto& ref : m.technique_ids) require(m.id, ref);
        }
        for (const auto& s : doc_.tools) {
            for (const auto& ref : s.technique_ids) require(s.id, ref);
        }
        std::sort(out_.begin(), out_.end());
        out_.erase(std::unique(out_.begin(), out_.end()), out_.end());
        return std::move(out_);
    }

private:
    template <typename Entity>
    void index(const std::vector<Entity>& entities) {
        for (const auto& e : entities) ++occurrences_[e.id];
    }

    bool defined(const EntityId& id) const { return occurrences_.contains(id); }

    void add(ViolationCode code, const EntityId& subject, std::string detail) {
        out_.push_back(Violation{code, subject, std::move(detail)});
    }

    void require(const EntityId& subject, const EntityId& ref) {
        if (!defined(ref)) {
            add(ViolationCode::DanglingReference, subject,
                subject.str() + " references missing " + std::string(kind_name(ref.kind())) + " " +
                    ref.str());
        }
    }

    void check_parent(const EntityId& id) {
        if (doc_.manifest.external_parents) return;
        if (auto parent = id.parent(); parent && !defined(*parent)) {
            add(ViolationCode::MissingParent, id, "parent " + parent->str() + " is not defined");
        }
    }

    void check_phase_order() {
        const auto n = static_cast<int>(doc_.phases.size());
        std::map<int, std::vector<EntityId>> by_order;
        for (const auto& p : doc_.phases) by_order[p.order].push_back(p.id);
        for (const auto& [order, ids] : by_order) {
            for (const auto& id : ids) {
                if (order < 1 || order > n) {
                    add(ViolationCode::PhaseOrder, id,
                        "order " + std::to_string(order) + " outside 1.." + std::to_string(n));
                } else if (ids.size() > 1) {
                    add(ViolationCode::PhaseOrder, id,
                        "order " + std::to_string(order) + " shared by " +
                            std::to_string(ids.size()) + " phases");
                }
            }
        }
    }

    void check_technique(const TechniqueEntry& t) {
        check_parent(t.id);
        if (t.phase_ids.empty()) add(ViolationCode::NoPhase, t.id, "no phase linked");
        for (const auto& ref : t.phase_ids) require(t.id, ref);
        for (const auto& ref : t.detection_ids) require(t.id, ref);
        for (const auto& ref : t.mitigation_ids) require(t.id, ref);
        for (const auto& ref : t.tool_ids) require(t.id, ref);
        for (const auto& ref : t.tactic_ids) {
            require(t.id, ref);
            for (const auto& tactic : doc_.tactics) {
                if (tactic.id == ref && !t.phase_ids.contains(tactic.phase_id)) {
                    add(ViolationCode::TacticPhaseConflict, t.id,
                        "tactic " + ref.str() + " belongs to " + tactic.phase_id.str() +
                            ", which is not among the technique's phases");
                }
            }
        }
    }

    const CorpusDocument& doc_;
    std::map<EntityId, int> occurrences_;
    std::vector<Violation> out_;
};

} // namespace detail

/**
 * Checks every structural invariant of a corpus document and returns all
 * violations, sorted by subject. An empty result means the document can be
 * turned into a Corpus.
 */
inline std::vector<Violation> validate_integrity(const CorpusDocument& doc) {
    return detail::IntegrityChecker(doc).run();
}

/// Compares declared scale against actual content, one entry per differing class.
inline std::vector<CountMismatch> validate_manifest(const CorpusDocument& doc) {
    const ScaleCounts& d = doc.manifest.declared;
    const ScaleCounts a = doc.actual_counts();
    std::vector<CountMismatch> out;
    auto check = [&out](const char* name, std::uint32_t declared, std::uint32_t actual) {
        if (declared != actual) out.push_back(CountMismatch{name, declared, actual});
    };
    check("phases", d.phases, a.phases);
    check("tactics", d.tactics, a.tactics);
    check("techniques", d.techniques, a.techniques);
    check("detections", d.detections, a.detections);
    check("mitigations", d.mitigations, a.mitigations);
    check("tools", d.tools, a.tools);
    return out;
}

} // namespace fist

#endif
