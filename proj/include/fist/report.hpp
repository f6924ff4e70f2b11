#ifndef FIST_REPORT_HPP
#define FIST_REPORT_HPP

#include <cstdio>
#include <string>

#include "fist/incident.hpp"

namespace fist {

enum class ReportFormat { Markdown, Json };

namespace detail {

inline std::string md_cell(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n' || c == '\r') {
            out += ' ';
        } else {
            out += c;
        }
    }
    return out;
}

inline std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string ratio_text(const Ratio& r) {
    return fixed4(r.value()) + " (" + std::to_string(r.numerator) + "/" + std::to_string(r.denominator) + ")";
}

inline std::string render_markdown(const Corpus& corpus, const IncidentFlow& flow,
                                   const CoverageReport& report) {
    std::string out;
    out += "# Incident report: " + md_cell(flow.title.empty() ? flow.incident_id : flow.title) + "\n\n";
    out += "- Incident: `" + flow.incident_id + "`\n";
    out += "- Created: " + flow.created_at + "\n";
    out += "- Corpus: " + corpus.manifest().corpus_version + " (`" + corpus.source_digest().substr(0, 12) +
           "`)\n";
    out += "- Observations: " + std::to_string(flow.observations.size()) + "\n\n";
    if (!flow.summary.empty()) out += flow.summary + "\n\n";

    for (const Phase* phase : corpus.phases_in_order()) {
        out += "## " + phase->name + " (" + phase->id.str() + ")\n\n";
        bool any = false;
        for (const auto& o : flow.observations) {
            if (o.phase_id != phase->id) continue;
            if (!any) {
                out += "| Seq | Technique | Name | Observed behavior | Detection hits |\n";
                out += "|---|---|---|---|---|\n";
                any = true;
            }
            std::string hits;
            for (const auto& d : o.detection_hits) hits += (hits.empty() ? "" : ", ") + d.str();
            const TechniqueEntry* t = corpus.find_technique(o.technique_id);
            out += "| " + std::to_string(o.sequence) + " | " + o.technique_id.str() + " | " +
                   md_cell(t ? t->name : "") + " | " + md_cell(o.observed_behavior) + " | " +
                   (hits.empty() ? "-" : hits) + " |\n";
        }
        out += any ? "\n" : "_No observations._\n\n";
    }

    out += "## Coverage\n\n";
    out += "| Metric | Value |\n|---|---|\n";
    out += "| Phase coverage | " + ratio_text(report.phase_coverage) + " |\n";
    out += "| Detection opportunity | " + ratio_text(report.detection_opportunity) + " |\n";
    out += "| Detection realized | " + ratio_text(report.detection_realized) + " |\n\n";

    out += "### Gaps\n\n";
    if (report.gaps.empty()) out += "_None._\n";
    for (const auto& g : report.gaps) {
        out += "- " + g.technique_id.str() + ": " + std::string(to_string(g.reason)) + "\n";
    }

    auto unmapped = unmapped_hits(corpus, flow);
    if (!unmapped.empty()) {
        out += "\n### Unmapped detection hits\n\n";
        for (const auto& u : unmapped) {
            out += "- #" + std::to_string(u.sequence) + " " + u.technique_id.str() + ": " +
                   u.detection_id.str() + " is not mapped to this technique\n";
        }
    }
    return out;
}

} // namespace detail

/**
 * Renders an incident as a standardized document. Markdown groups
 * observations under one section per phase in kill-chain order, followed by
 * the coverage block. JSON is the flow plus its coverage report.
 */
inline std::string render_report(const Corpus& corpus, const IncidentFlow& flow,
                                 const CoverageReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        return Json{{"incident", to_json(flow)}, {"coverage", to_json(report)}}.dump(2) + "\n";
    }
    return detail::render_markdown(corpus, flow, report);
}

} // namespace fist

#endif
