#ifndef FIST_ENTITY_ID_HPP
#define FIST_ENTITY_ID_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "fist/error.hpp"

namespace fist {

enum class EntityKind : std::uint8_t { Phase, Tactic, Technique, Detection, Mitigation, Tool };

inline constexpr std::array<EntityKind, 6> kAllKinds = {
    EntityKind::Phase,     EntityKind::Tactic,     EntityKind::Technique,
    EntityKind::Detection, EntityKind::Mitigation, EntityKind::Tool,
};

inline std::string_view id_prefix(EntityKind kind) {
    switch (kind) {
        case EntityKind::Phase: return "P";
        case EntityKind::Tactic: return "TA";
        case EntityKind::Technique: return "T";
        case EntityKind::Detection: return "D";
        case EntityKind::Mitigation: return "M";
        case EntityKind::Tool: return "S";
    }
    return "";
}

inline std::string_view kind_name(EntityKind kind) {
    switch (kind) {
        case EntityKind::Phase: return "phase";
        case EntityKind::Tactic: return "tactic";
        case EntityKind::Technique: return "technique";
        case EntityKind::Detection: return "detection";
        case EntityKind::Mitigation: return "mitigation";
        case EntityKind::Tool: return "tool";
    }
    return "";
}

/// Only techniques and detection patterns may be refined by a sub-number.
constexpr bool allows_sub(EntityKind kind) {
    return kind == EntityKind::Technique || kind == EntityKind::Detection;
}

/**
 * Typed identifier for every framework entity.
 *
 * Canonical text is the kind prefix, a zero-padded 4-digit family and, for
 * techniques and detections only, an optional "." plus zero-padded 3-digit
 * sub-number: "P0004", "TA0001", "T0034.002", "D0001.010".
 *
 * Values are ordered by (kind, family, sub) with the bare family sorting
 * before its sub-entries.
 */
class EntityId {
public:
    static constexpr std::uint16_t kMaxFamily = 9999;
    static constexpr std::uint16_t kMaxSub = 999;

    /// Throws Error(MalformedId) when the components are out of range.
    static EntityId make(EntityKind kind, std::uint16_t family,
                         std::optional<std::uint16_t> sub = std::nullopt) {
        if (family > kMaxFamily) {
            throw Error(ErrorCode::MalformedId, "", "family out of range");
        }
        if (sub) {
            if (!allows_sub(kind)) {
                throw Error(ErrorCode::MalformedId, "",
                            std::string(kind_name(kind)) + " ids cannot carry a sub-number");
            }
            if (*sub < 1 || *sub > kMaxSub) {
                throw Error(ErrorCode::MalformedId, "", "sub-number out of range");
            }
        }
        return EntityId(kind, family, sub);
    }

    EntityKind kind() const noexcept { return kind_; }
    std::uint16_t family() const noexcept { return family_; }
    std::optional<std::uint16_t> sub() const noexcept { return sub_; }
    bool is_sub() const noexcept { return sub_.has_value(); }

    /// Same family with the sub-number dropped; nullopt for top-level ids.
    std::optional<EntityId> parent() const {
        if (!sub_) return std::nullopt;
        return EntityId(kind_, family_, std::nullopt);
    }

    std::string str() const {
        std::string out(id_prefix(kind_));
        append_padded(out, family_, 4);
        if (sub_) {
            out.push_back('.');
            append_padded(out, *sub_, 3);
        }
        return out;
    }

    friend auto operator<=>(const EntityId&, const EntityId&) = default;
    friend bool operator==(const EntityId&, const EntityId&) = default;

private:
    EntityId(EntityKind kind, std::uint16_t family, std::optional<std::uint16_t> sub)
        : kind_(kind), family_(family), sub_(sub) {}

    static void append_padded(std::string& out, unsigned value, int width) {
        char buf[8];
        for (int i = width - 1; i >= 0; --i) {
            buf[i] = static_cast<char>('0' + value % 10);
            value /= 10;
        }
        out.append(buf, static_cast<std::size_t>(width));
    }

    EntityKind kind_;
    std::uint16_t family_;
    std::optional<std::uint16_t> sub_;
};

inline std::string format_entity_id(const EntityId& id) { return id.str(); }

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::optional<unsigned> fixed_digits(std::string_view text, std::size_t pos, std::size_t count) {
    if (pos + count > text.size()) return std::nullopt;
    unsigned value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (!is_digit(text[i])) return std::nullopt;
        value = value * 10 + static_cast<unsigned>(text[i] - '0');
    }
    return value;
}

[[noreturn]] inline void malformed(std::string_view text, std::string_view why) {
    throw Error(ErrorCode::MalformedId, std::string(text),
                "malformed id '" + std::string(text) + "': " + std::string(why));
}

} // namespace detail

/// Parses a canonical id. Any other input throws Error(MalformedId).
inline EntityId parse_entity_id(std::string_view text) {
    using detail::malformed;

    EntityKind kind;
    std::size_t pos = 0;
    if (text.starts_with("TA")) {
        kind = EntityKind::Tactic;
        pos = 2;
    } else if (!text.empty()) {
        switch (text.front()) {
            case 'P': kind = EntityKind::Phase; break;
            case 'T': kind = EntityKind::Technique; break;
            case 'D': kind = EntityKind::Detection; break;
            case 'M': kind = EntityKind::Mitigation; break;
            case 'S': kind = EntityKind::Tool; break;
            default: malformed(text, "unknown prefix");
        }
        pos = 1;
    } else {
        malformed(text, "empty");
    }

    auto family = detail::fixed_digits(text, pos, 4);
    if (!family) malformed(text, "family must be exactly 4 digits");
    pos += 4;

    std::optional<std::uint16_t> sub;
    if (pos < text.size()) {
        if (text[pos] != '.') malformed(text, "trailing characters");
        if (!allows_sub(kind)) malformed(text, "sub-number not permitted for this kind");
        auto value = detail::fixed_digits(text, pos + 1, 3);
        if (!value) malformed(text, "sub-number must be exactly 3 digits");
        if (pos + 4 != text.size()) malformed(text, "trailing characters");
        if (*value == 0) malformed(text, "sub-number must be at least 001");
        sub = static_cast<std::uint16_t>(*value);
    }
    return EntityId::make(kind, static_cast<std::uint16_t>(*family), sub);
}

/// Parses and additionally requires the given kind.
inline EntityId parse_entity_id(std::string_view text, EntityKind expected) {
    EntityId id = parse_entity_id(text);
    if (id.kind() != expected) {
        throw Error(ErrorCode::MalformedId, std::string(text),
                    "expected a " + std::string(kind_name(expected)) + " id, got '" +
                        std::string(text) + "'");
    }
    return id;
}

inline std::optional<EntityId> try_parse_entity_id(std::string_view text) noexcept {
    try {
        return parse_entity_id(text);
    } catch (const Error&) {
        return std::nullopt;
    }
}

inline std::ostream& operator<<(std::ostream& os, const EntityId& id) { return os << id.str(); }

} // namespace fist

template <>
struct std::hash<fist::EntityId> {
    std::size_t operator()(const fist::EntityId& id) const noexcept {
        std::size_t v = static_cast<std::size_t>(id.kind());
        v = v * 10007 + id.family();
        v = v * 1009 + id.sub().value_or(0);
        return v;
    }
};

#endif
