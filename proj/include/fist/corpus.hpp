#ifndef FIST_CORPUS_HPP
#define FIST_CORPUS_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fist/digest.hpp"
#include "fist/error.hpp"
#include "fist/model.hpp"
#include "fist/validator.hpp"

namespace fist {

using Json = nlohmann::ordered_json;

/**
 * Immutable, fully linked knowledge base.
 *
 * A Corpus can only be obtained from a document that passes
 * validate_integrity(), so every cross-reference resolves. Entities are keyed
 * by their own id and iterate in EntityId order.
 */
class Corpus {
public:
    /// Builds a corpus from a clean document. Throws Error(IntegrityError) otherwise.
    static Corpus from_document(const CorpusDocument& doc);

    const Manifest& manifest() const noexcept { return manifest_; }
    const std::map<EntityId, Phase>& phases() const noexcept { return phases_; }
    const std::map<EntityId, Tactic>& tactics() const noexcept { return tactics_; }
    const std::map<EntityId, TechniqueEntry>& techniques() const noexcept { return techniques_; }
    const std::map<EntityId, DetectionPattern>& detections() const noexcept { return detections_; }
    const std::map<EntityId, Mitigation>& mitigations() const noexcept { return mitigations_; }
    const std::map<EntityId, ToolEntry>& tools() const noexcept { return tools_; }

    /// SHA-256 (hex) of the canonical serialization.
    const std::string& source_digest() const noexcept { return digest_; }

    /// Phases sorted by kill-chain order.
    std::vector<const Phase*> phases_in_order() const {
        std::vector<const Phase*> out;
        for (const auto& [id, p] : phases_) out.push_back(&p);
        std::sort(out.begin(), out.end(),
                  [](const Phase* a, const Phase* b) { return a->order < b->order; });
        return out;
    }

    const TechniqueEntry* find_technique(const EntityId& id) const { return find_in(techniques_, id); }
    const Phase* find_phase(const EntityId& id) const { return find_in(phases_, id); }
    const DetectionPattern* find_detection(const EntityId& id) const { return find_in(detections_, id); }

    bool contains(const EntityId& id) const {
        switch (id.kind()) {
            case EntityKind::Phase: return phases_.contains(id);
            case EntityKind::Tactic: return tactics_.contains(id);
            case EntityKind::Technique: return techniques_.contains(id);
            case EntityKind::Detection: return detections_.contains(id);
            case EntityKind::Mitigation: return mitigations_.contains(id);
            case EntityKind::Tool: return tools_.contains(id);
        }
        return false;
    }

    /// Entities in EntityId order; the exact inverse of from_document on clean input.
    CorpusDocument to_document() const {
        CorpusDocument doc;
        doc.manifest = manifest_;
        for (const auto& [id, e] : phases_) doc.phases.push_back(e);
        for (const auto& [id, e] : tactics_) doc.tactics.push_back(e);
        for (const auto& [id, e] : techniques_) doc.techniques.push_back(e);
        for (const auto& [id, e] : detections_) doc.detections.push_back(e);
        for (const auto& [id, e] : mitigations_) doc.mitigations.push_back(e);
        for (const auto& [id, e] : tools_) doc.tools.push_back(e);
        return doc;
    }

    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.manifest_ == b.manifest_ && a.phases_ == b.phases_ && a.tactics_ == b.tactics_ &&
               a.techniques_ == b.techniques_ && a.detections_ == b.detections_ &&
               a.mitigations_ == b.mitigations_ && a.tools_ == b.tools_;
    }

private:
    Corpus() = default;

    template <typename Map>
    static const typename Map::mapped_type* find_in(const Map& m, const EntityId& id) {
        auto it = m.find(id);
        return it == m.end() ? nullptr : &it->second;
    }

    Manifest manifest_;
    std::map<EntityId, Phase> phases_;
    std::map<EntityId, Tactic> tactics_;
    std::map<EntityId, TechniqueEntry> techniques_;
    std::map<EntityId, DetectionPattern> detections_;
    std::map<EntityId, Mitigation> mitigations_;
    std::map<EntityId, ToolEntry> tools_;
    std::string digest_;
};

inline std::vector<Violation> validate_integrity(const Corpus& corpus) {
    return validate_integrity(corpus.to_document());
}

inline std::vector<CountMismatch> validate_manifest(const Corpus& corpus) {
    return validate_manifest(corpus.to_document());
}

// ---------------------------------------------------------------------------
// Document reading

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::SchemaError, path, "schema error at " + path + ": " + what);
}

class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) schema_error(path_, "expected an object");
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& [key, value] : j_.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                schema_error(path_ + "." + key, "unknown field");
            }
        }
    }

    const Json* get(const char* key) const {
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    std::string str(const char* key, bool required = true) const {
        const Json* v = get(key);
        if (!v) {
            if (required) schema_error(path(key), "missing required field");
            return {};
        }
        if (!v->is_string()) schema_error(path(key), "expected a string");
        return v->get<std::string>();
    }

    bool boolean(const char* key) const {
        const Json* v = get(key);
        if (!v) return false;
        if (!v->is_boolean()) schema_error(path(key), "expected a boolean");
        return v->get<bool>();
    }

    std::int64_t integer(const char* key, std::int64_t lo, std::int64_t hi) const {
        const Json* v = get(key);
        if (!v) schema_error(path(key), "missing required field");
        if (!v->is_number_integer()) schema_error(path(key), "expected an integer");
        auto n = v->get<std::int64_t>();
        if (n < lo || n > hi) schema_error(path(key), "integer out of range");
        return n;
    }

    EntityId id(const char* key, EntityKind kind) const {
        return parse_entity_id(str(key), kind);
    }

    IdSet ids(const char* key, EntityKind kind, bool required = false) const {
        IdSet out;
        const Json* v = get(key);
        if (!v) {
            if (required) schema_error(path(key), "missing required field");
            return out;
        }
        if (!v->is_array()) schema_error(path(key), "expected an array of ids");
        for (const auto& item : *v) {
            if (!item.is_string()) schema_error(path(key), "expected an array of ids");
            out.insert(parse_entity_id(item.get<std::string>(), kind));
        }
        return out;
    }

    /// Optional "parent" field must agree with the id's own family.
    void check_parent(const EntityId& self) const {
        const Json* v = get("parent");
        if (!v) return;
        auto expected = self.parent();
        if (v->is_null() && !expected) return;
        if (!v->is_string() || !expected || v->get<std::string>() != expected->str()) {
            schema_error(path("parent"), "parent must be the bare family of " + self.str());
        }
    }

private:
    const Json& j_;
    std::string path_;
};

template <typename Fn>
void for_each_in_section(const Json& root, const char* section, Fn&& fn) {
    auto it = root.find(section);
    if (it == root.end()) schema_error(section, "missing required section");
    if (!it->is_array()) schema_error(section, "expected an array");
    std::size_t i = 0;
    for (const auto& item : *it) {
        fn(Reader(item, std::string(section) + "[" + std::to_string(i) + "]"));
        ++i;
    }
}

inline bool is_semver(const std::string& s) {
    static const std::regex kSemver(
        R"(^(0|[1-9]\d*)\.(0|[1-9]\d*)\.(0|[1-9]\d*)(-[0-9A-Za-z.-]+)?(\+[0-9A-Za-z.-]+)?$)");
    return std::regex_match(s, kSemver);
}

inline Manifest read_manifest(const Json& root) {
    auto it = root.find("manifest");
    if (it == root.end()) schema_error("manifest", "missing required section");
    Reader r(*it, "manifest");
    r.allow_only({"corpus_version", "counts", "external_parents"});
    Manifest m;
    m.corpus_version = r.str("corpus_version");
    if (!is_semver(m.corpus_version)) {
        schema_error(r.path("corpus_version"), "expected a semantic version");
    }
    m.external_parents = r.boolean("external_parents");
    const Json* counts = r.get("counts");
    if (!counts) schema_error(r.path("counts"), "missing required field");
    Reader c(*counts, r.path("counts"));
    c.allow_only({"phases", "tactics", "techniques", "detections", "mitigations", "tools"});
    constexpr std::int64_t kMax = 0xFFFFFFFF;
    m.declared.phases = static_cast<std::uint32_t>(c.integer("phases", 0, kMax));
    m.declared.tactics = static_cast<std::uint32_t>(c.integer("tactics", 0, kMax));
    m.declared.techniques = static_cast<std::uint32_t>(c.integer("techniques", 0, kMax));
    m.declared.detections = static_cast<std::uint32_t>(c.integer("detections", 0, kMax));
    m.declared.mitigations = static_cast<std::uint32_t>(c.integer("mitigations", 0, kMax));
    m.declared.tools = static_cast<std::uint32_t>(c.integer("tools", 0, kMax));
    return m;
}

} // namespace detail

/**
 * Reads a corpus document without checking integrity. Throws
 * Error(SchemaError) on shape problems and Error(MalformedId) on bad ids.
 */
inline CorpusDocument parse_corpus_document(std::string_view text) {
    using detail::Reader;
    Json root = Json::parse(text, nullptr, false);
    if (root.is_discarded()) detail::schema_error("$", "document is not valid JSON");
    if (!root.is_object()) detail::schema_error("$", "expected a top-level object");
    for (const auto& [key, value] : root.items()) {
        static constexpr std::string_view kSections[] = {
            "manifest", "phases", "tactics", "techniques", "detections", "mitigations", "tools"};
        if (std::find(std::begin(kSections), std::end(kSections), key) == std::end(kSections)) {
            detail::schema_error(key, "unknown top-level section");
        }
    }

    CorpusDocument doc;
    doc.manifest = detail::read_manifest(root);

    detail::for_each_in_section(root, "phases", [&](const Reader& r) {
        r.allow_only({"id", "name", "description", "order"});
        doc.phases.push_back(Phase{r.id("id", EntityKind::Phase), r.str("name"),
                                   r.str("description", false),
                                   static_cast<int>(r.integer("order", -1000000, 1000000))});
    });
    detail::for_each_in_section(root, "tactics", [&](const Reader& r) {
        r.allow_only({"id", "name", "description", "phase_id", "provisional"});
        doc.tactics.push_back(Tactic{r.id("id", EntityKind::Tactic), r.str("name"),
                                     r.str("description", false),
                                     r.id("phase_id", EntityKind::Phase), r.boolean("provisional")});
    });
    detail::for_each_in_section(root, "techniques", [&](const Reader& r) {
        r.allow_only({"id", "name", "description", "parent", "phase_ids", "tactic_ids",
                      "detection_ids", "mitigation_ids", "tool_ids"});
        TechniqueEntry t{r.id("id", EntityKind::Technique),
                         r.str("name"),
                         r.str("description", false),
                         r.ids("tactic_ids", EntityKind::Tactic),
                         r.ids("phase_ids", EntityKind::Phase, true),
                         r.ids("detection_ids", EntityKind::Detection),
                         r.ids("mitigation_ids", EntityKind::Mitigation),
                         r.ids("tool_ids", EntityKind::Tool)};
        r.check_parent(t.id);
        doc.techniques.push_back(std::move(t));
    });
    detail::for_each_in_section(root, "detections", [&](const Reader& r) {
        r.allow_only({"id", "name", "description", "parent", "signal_class"});
        EntityId id = r.id("id", EntityKind::Detection);
        r.check_parent(id);
        auto signal = signal_class_from_string(r.str("signal_class"));
        if (!signal) detail::schema_error(r.path("signal_class"), "unknown signal class");
        doc.detections.push_back(
            DetectionPattern{id, r.str("name"), r.str("description", false), *signal});
    });
    detail::for_each_in_section(root, "mitigations", [&](const Reader& r) {
        r.allow_only({"id", "name", "description", "technique_ids"});
        doc.mitigations.push_back(Mitigation{r.id("id", EntityKind::Mitigation), r.str("name"),
                                             r.str("description", false),
                                             r.ids("technique_ids", EntityKind::Technique)});
    });
    detail::for_each_in_section(root, "tools", [&](const Reader& r) {
        r.allow_only({"id", "name", "description", "technique_ids"});
        doc.tools.push_back(ToolEntry{r.id("id", EntityKind::Tool), r.str("name"),
                                      r.str("description", false),
                                      r.ids("technique_ids", EntityKind::Technique)});
    });
    return doc;
}

// ---------------------------------------------------------------------------
// Canonical serialization

namespace detail {

inline Json id_array(const IdSet& ids) {
    Json out = Json::array();
    for (const auto& id : ids) out.push_back(id.str());
    return out;
}

inline Json parent_field(const EntityId& id) {
    auto p = id.parent();
    return p ? Json(p->str()) : Json(nullptr);
}

} // namespace detail

inline Json to_json(const Manifest& m) {
    return Json{
        {"corpus_version", m.corpus_version},
        {"external_parents", m.external_parents},
        {"counts",
         {{"phases", m.declared.phases},
          {"tactics", m.declared.tactics},
          {"techniques", m.declared.techniques},
          {"detections", m.declared.detections},
          {"mitigations", m.declared.mitigations},
          {"tools", m.declared.tools}}},
    };
}

inline Json to_json(const Phase& p) {
    return Json{{"id", p.id.str()}, {"name", p.name}, {"description", p.description}, {"order", p.order}};
}

inline Json to_json(const Tactic& t) {
    return Json{{"id", t.id.str()},
                {"name", t.name},
                {"description", t.description},
                {"phase_id", t.phase_id.str()},
                {"provisional", t.provisional}};
}

inline Json to_json(const TechniqueEntry& t) {
    return Json{{"id", t.id.str()},
                {"name", t.name},
                {"description", t.description},
                {"parent", detail::parent_field(t.id)},
                {"phase_ids", detail::id_array(t.phase_ids)},
                {"tactic_ids", detail::id_array(t.tactic_ids)},
                {"detection_ids", detail::id_array(t.detection_ids)},
                {"mitigation_ids", detail::id_array(t.mitigation_ids)},
                {"tool_ids", detail::id_array(t.tool_ids)}};
}

inline Json to_json(const DetectionPattern& d) {
    return Json{{"id", d.id.str()},
                {"name", d.name},
                {"description", d.description},
                {"parent", detail::parent_field(d.id)},
                {"signal_class", std::string(to_string(d.signal_class))}};
}

inline Json to_json(const Mitigation& m) {
    return Json{{"id", m.id.str()},
                {"name", m.name},
                {"description", m.description},
                {"technique_ids", detail::id_array(m.technique_ids)}};
}

inline Json to_json(const ToolEntry& s) {
    return Json{{"id", s.id.str()},
                {"name", s.name},
                {"description", s.description},
                {"technique_ids", detail::id_array(s.technique_ids)}};
}

namespace detail {

template <typename Map>
Json section(const Map& entities) {
    Json out = Json::array();
    for (const auto& [id, e] : entities) out.push_back(fist::to_json(e));
    return out;
}

inline std::string canonical_text(const Manifest& manifest, const Json& phases, const Json& tactics,
                                  const Json& techniques, const Json& detections,
                                  const Json& mitigations, const Json& tools) {
    Json root{{"manifest", to_json(manifest)}, {"phases", phases},           {"tactics", tactics},
              {"techniques", techniques},     {"detections", detections},   {"mitigations", mitigations},
              {"tools", tools}};
    return root.dump(2) + "\n";
}

} // namespace detail

/**
 * Canonical serialization: entities sorted by id, fixed field order, two-space
 * indentation and a trailing newline. Byte-deterministic for equal corpora.
 */
inline std::string save_corpus(const Corpus& c) {
    return detail::canonical_text(c.manifest(), detail::section(c.phases()),
                                  detail::section(c.tactics()), detail::section(c.techniques()),
                                  detail::section(c.detections()), detail::section(c.mitigations()),
                                  detail::section(c.tools()));
}

inline Corpus Corpus::from_document(const CorpusDocument& doc) {
    auto violations = validate_integrity(doc);
    if (!violations.empty()) {
        const Violation& first = violations.front();
        std::string msg = std::to_string(violations.size()) + " integrity violation(s); first: " +
                          std::string(to_string(first.code)) + " " + first.subject.str() + ": " +
                          first.detail;
        throw Error(ErrorCode::IntegrityError, first.subject.str(), msg);
    }
    Corpus c;
    c.manifest_ = doc.manifest;
    for (const auto& e : doc.phases) c.phases_.emplace(e.id, e);
    for (const auto& e : doc.tactics) c.tactics_.emplace(e.id, e);
    for (const auto& e : doc.techniques) c.techniques_.emplace(e.id, e);
    for (const auto& e : doc.detections) c.detections_.emplace(e.id, e);
    for (const auto& e : doc.mitigations) c.mitigations_.emplace(e.id, e);
    for (const auto& e : doc.tools) c.tools_.emplace(e.id, e);
    c.digest_ = digest::sha256_hex(save_corpus(c));
    return c;
}

/// Parses, validates and links a document; fails atomically on the first problem class found.
inline Corpus load_corpus(std::string_view text) {
    return Corpus::from_document(parse_corpus_document(text));
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, path.string(), "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Corpus load_corpus_file(const std::filesystem::path& path) {
    return load_corpus(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Diff

struct ChangeSet {
    IdSet added;
    IdSet removed;
    IdSet modified;
    bool manifest_changed = false;

    bool empty() const { return added.empty() && removed.empty() && modified.empty() && !manifest_changed; }
    friend bool operator==(const ChangeSet&, const ChangeSet&) = default;
};

namespace detail {

template <typename Map>
void diff_section(const Map& before, const Map& after, ChangeSet& out) {
    for (const auto& [id, e] : before) {
        auto it = after.find(id);
        if (it == after.end()) {
            out.removed.insert(id);
        } else if (!(it->second == e)) {
            out.modified.insert(id);
        }
    }
    for (const auto& [id, e] : after) {
        if (!before.contains(id)) out.added.insert(id);
    }
}

} // namespace detail

inline ChangeSet diff_corpora(const Corpus& before, const Corpus& after) {
    ChangeSet out;
    detail::diff_section(before.phases(), after.phases(), out);
    detail::diff_section(before.tactics(), after.tactics(), out);
    detail::diff_section(before.techniques(), after.techniques(), out);
    detail::diff_section(before.detections(), after.detections(), out);
    detail::diff_section(before.mitigations(), after.mitigations(), out);
    detail::diff_section(before.tools(), after.tools(), out);
    out.manifest_changed = !(before.manifest() == after.manifest());
    return out;
}

inline Json to_json(const ChangeSet& c) {
    return Json{{"added", detail::id_array(c.added)},
                {"removed", detail::id_array(c.removed)},
                {"modified", detail::id_array(c.modified)},
                {"manifest_changed", c.manifest_changed}};
}

} // namespace fist

#endif
