#ifndef FIST_CLI_HPP
#define FIST_CLI_HPP

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fist/service.hpp"

namespace fist::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Process environment lookups, injectable for tests.
using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

namespace detail {

struct Context {
    std::ostream& out;
    std::ostream& err;
    EnvLookup env;
    bool json = false;
    std::string corpus_path;
    std::string data_dir;

    std::string require_corpus_path() const {
        if (!corpus_path.empty()) return corpus_path;
        if (auto v = env("FIST_CORPUS")) return *v;
        throw CLI::ValidationError("--corpus", "no corpus given (use --corpus or FIST_CORPUS)");
    }

    std::string resolved_data_dir() const {
        if (!data_dir.empty()) return data_dir;
        if (auto v = env("FIST_DATA_DIR")) return *v;
        return "fist-data";
    }

    Corpus corpus() const { return load_corpus_file(require_corpus_path()); }
    IncidentStore store() const { return IncidentStore(resolved_data_dir()); }

    void print_json(const Json& j) const { out << j.dump(2) << "\n"; }
};

inline void print_error(const Context& ctx, const Error& e) {
    if (ctx.json) {
        ctx.out << error_body(e).dump() << "\n";
    } else {
        ctx.err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    }
}

inline std::string join_ids(const IdSet& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id.str();
    return out.empty() ? "-" : out;
}

inline int run_validate(const Context& ctx, const std::string& path, bool allow_drift) {
    CorpusDocument doc;
    try {
        doc = parse_corpus_document(read_text_file(path));
    } catch (const Error& e) {
        print_error(ctx, e);
        return kExitFailure;
    }
    auto violations = validate_integrity(doc);
    auto mismatches = validate_manifest(doc);
    std::size_t errors = violations.size() + (allow_drift ? 0 : mismatches.size());

    if (ctx.json) {
        for (const auto& v : violations) {
            Json line = to_json(v);
            line["severity"] = "error";
            ctx.out << line.dump() << "\n";
        }
        for (const auto& m : mismatches) {
            Json line = to_json(m);
            line["code"] = "CountMismatch";
            line["severity"] = allow_drift ? "warning" : "error";
            ctx.out << line.dump() << "\n";
        }
    } else {
        for (const auto& v : violations) {
            ctx.out << "IntegrityError " << to_string(v.code) << " " << v.subject << ": " << v.detail << "\n";
        }
        for (const auto& m : mismatches) {
            ctx.out << (allow_drift ? "warning" : "ScaleError") << " CountMismatch " << m.entity_class
                    << ": declared " << m.declared << ", actual " << m.actual << "\n";
        }
        ctx.out << errors << (errors == 1 ? " violation" : " violations") << "\n";
    }
    return errors == 0 ? kExitOk : kExitFailure;
}

inline void print_entity(const Context& ctx, const Corpus& corpus, const EntityRecord& record) {
    if (ctx.json) {
        ctx.print_json(to_json(record));
        return;
    }
    std::ostream& o = ctx.out;
    o << record_id(record) << "  " << record_name(record) << "\n";
    o << "  kind: " << kind_name(record_id(record).kind()) << "\n";
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, Phase>) {
                o << "  order: " << e.order << "\n";
            } else if constexpr (std::is_same_v<T, Tactic>) {
                o << "  phase: " << e.phase_id << (e.provisional ? " (provisional)" : "") << "\n";
            } else if constexpr (std::is_same_v<T, TechniqueEntry>) {
                if (auto p = e.parent()) o << "  parent: " << *p << "\n";
                o << "  phases: " << join_ids(e.phase_ids) << "\n";
                o << "  tactics: " << join_ids(e.tactic_ids) << "\n";
                o << "  detections: " << join_ids(e.detection_ids) << "\n";
                o << "  mitigations: " << join_ids(e.mitigation_ids) << "\n";
                o << "  tools: " << join_ids(e.tool_ids) << "\n";
            } else if constexpr (std::is_same_v<T, DetectionPattern>) {
                o << "  signal class: " << to_string(e.signal_class) << "\n";
            } else {
                o << "  techniques: " << join_ids(e.technique_ids) << "\n";
            }
            if (!e.description.empty()) o << "\n  " << e.description << "\n";
        },
        record);
    (void)corpus;
}

inline void print_matrix(const Context& ctx, const Corpus& corpus, const Matrix& m) {
    if (ctx.json) {
        ctx.print_json(to_json(corpus, m));
        return;
    }
    if (m.columns.empty()) {
        ctx.out << "(empty corpus)\n";
        return;
    }
    for (const auto& col : m.columns) {
        ctx.out << "== " << col.order << ". " << col.name << " (" << col.phase_id << ") ==\n";
        for (const auto& cell : col.cells) {
            if (cell.tactic_id) {
                ctx.out << "  " << *cell.tactic_id << " " << corpus.tactics().at(*cell.tactic_id).name << "\n";
            } else {
                ctx.out << "  (no tactic)\n";
            }
            for (const auto& t : cell.technique_ids) {
                ctx.out << "    " << std::left << std::setw(10) << t.str() << " "
                        << corpus.techniques().at(t).name << "\n";
            }
        }
    }
    if (!m.orphan_tactics.empty()) {
        ctx.out << "orphan tactics:";
        for (const auto& t : m.orphan_tactics) ctx.out << " " << t;
        ctx.out << "\n";
    }
}

inline void print_coverage(const Context& ctx, const CoverageReport& r) {
    if (ctx.json) {
        ctx.print_json(to_json(r));
        return;
    }
    auto line = [&](const char* label, const Ratio& x) {
        ctx.out << std::left << std::setw(24) << label << std::fixed << std::setprecision(4) << x.value()
                << " (" << x.numerator << "/" << x.denominator << ")\n";
    };
    line("phase coverage", r.phase_coverage);
    line("detection opportunity", r.detection_opportunity);
    line("detection realized", r.detection_realized);
    ctx.out << "gaps: " << r.gaps.size() << "\n";
    for (const auto& g : r.gaps) ctx.out << "  " << g.technique_id << " " << to_string(g.reason) << "\n";
}

inline void print_flow(const Context& ctx, const IncidentFlow& flow) {
    if (ctx.json) {
        ctx.print_json(to_json(flow));
        return;
    }
    ctx.out << flow.incident_id << ": " << flow.observations.size() << " observation(s)\n";
}

inline std::pair<std::string, int> split_addr(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--addr", "expected host:port");
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--addr", "invalid port");
    }
    if (port < 0 || port > 65535) throw CLI::ValidationError("--addr", "invalid port");
    return {addr.substr(0, colon), port};
}

} // namespace detail

/**
 * Runs the `fist` command line. Returns 0 on success, 1 when violations or
 * runtime errors are reported, 2 on usage errors (synopsis goes to `err`).
 */
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err,
               EnvLookup env = process_env) {
    detail::Context ctx{out, err, std::move(env), false, {}, {}};

    CLI::App app{"FIST fraud threat knowledge base tool", "fist"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("--json", ctx.json, "Emit JSON instead of human-readable text");
    app.add_option("--corpus", ctx.corpus_path, "Corpus document (default: $FIST_CORPUS)");
    app.add_option("--data-dir", ctx.data_dir, "Incident data directory (default: $FIST_DATA_DIR)");

    std::function<int()> action;

    // validate
    std::string validate_path;
    bool allow_drift = false;
    auto* validate = app.add_subcommand("validate", "Check a corpus document for integrity and scale");
    validate->add_option("corpus", validate_path, "Corpus document")->required();
    validate->add_flag("--allow-scale-drift", allow_drift, "Report manifest count mismatches as warnings");
    validate->callback([&] { action = [&] { return detail::run_validate(ctx, validate_path, allow_drift); }; });

    // show
    std::string show_id;
    auto* show = app.add_subcommand("show", "Show one entity");
    show->add_option("id", show_id, "Entity id, e.g. T0012")->required();
    show->callback([&] {
        action = [&] {
            Corpus corpus = ctx.corpus();
            detail::print_entity(ctx, corpus, get_entity(corpus, parse_entity_id(show_id)));
            return kExitOk;
        };
    });

    // matrix
    auto* matrix = app.add_subcommand("matrix", "Print the phase/tactic/technique matrix");
    matrix->callback([&] {
        action = [&] {
            Corpus corpus = ctx.corpus();
            detail::print_matrix(ctx, corpus, build_matrix(corpus));
            return kExitOk;
        };
    });

    // incident
    auto* incident = app.add_subcommand("incident", "Create, annotate and report incidents");
    incident->require_subcommand(1);

    std::string new_id, new_title, new_summary, new_created, new_from;
    auto* inc_new = incident->add_subcommand("new", "Create an incident");
    inc_new->add_option("--id", new_id, "Incident id");
    inc_new->add_option("--title", new_title, "Title");
    inc_new->add_option("--summary", new_summary, "Summary");
    inc_new->add_option("--created-at", new_created, "UTC timestamp (default: now)");
    inc_new->add_option("--from", new_from, "Import a complete incident document");
    inc_new->callback([&] {
        if (new_from.empty() && new_id.empty()) throw CLI::RequiredError("--id or --from");
        action = [&] {
            Corpus corpus = ctx.corpus();
            IncidentFlow flow;
            if (!new_from.empty()) {
                flow = parse_incident_document(read_text_file(new_from));
            } else {
                flow.incident_id = new_id;
                flow.title = new_title;
                flow.summary = new_summary;
                flow.created_at = new_created.empty() ? utc_now() : new_created;
                if (!is_utc_timestamp(flow.created_at)) {
                    throw Error(ErrorCode::SchemaError, flow.created_at, "--created-at must be a UTC timestamp");
                }
            }
            flow = annotate_incident(corpus, std::move(flow));
            ctx.store().store(flow);
            detail::print_flow(ctx, flow);
            return kExitOk;
        };
    });

    std::string obs_incident, obs_technique, obs_phase, obs_behavior, obs_at;
    std::vector<std::string> obs_hits;
    auto* inc_add = incident->add_subcommand("add-observation", "Append a technique observation");
    inc_add->add_option("incident", obs_incident, "Incident id")->required();
    inc_add->add_option("--technique", obs_technique, "Technique id")->required();
    inc_add->add_option("--phase", obs_phase, "Phase id")->required();
    inc_add->add_option("--behavior", obs_behavior, "Observed behavior");
    inc_add->add_option("--hit", obs_hits, "Detection pattern that fired (repeatable)");
    inc_add->add_option("--observed-at", obs_at, "UTC timestamp of the observation");
    inc_add->callback([&] {
        action = [&] {
            Corpus corpus = ctx.corpus();
            TechniqueObservation o{parse_entity_id(obs_technique, EntityKind::Technique),
                                   parse_entity_id(obs_phase, EntityKind::Phase), obs_behavior, {}, 0,
                                   std::nullopt};
            for (const auto& h : obs_hits) o.detection_hits.insert(parse_entity_id(h, EntityKind::Detection));
            if (!obs_at.empty()) {
                if (!is_utc_timestamp(obs_at)) {
                    throw Error(ErrorCode::SchemaError, obs_at, "--observed-at must be a UTC timestamp");
                }
                o.observed_at = obs_at;
            }
            IncidentStore store = ctx.store();
            detail::print_flow(ctx, store.append_observation(corpus, obs_incident, std::move(o)));
            return kExitOk;
        };
    });

    std::string report_incident, report_format = "markdown";
    auto* inc_report = incident->add_subcommand("report", "Render an incident report");
    inc_report->add_option("incident", report_incident, "Incident id")->required();
    inc_report->add_option("--format", report_format, "markdown or json")
        ->check(CLI::IsMember({"markdown", "json"}));
    inc_report->callback([&] {
        action = [&] {
            Corpus corpus = ctx.corpus();
            IncidentFlow flow = ctx.store().load(report_incident);
            bool json = ctx.json || report_format == "json";
            ctx.out << render_report(corpus, flow, compute_coverage(corpus, flow),
                                     json ? ReportFormat::Json : ReportFormat::Markdown);
            return kExitOk;
        };
    });

    std::string coverage_incident;
    auto* inc_coverage = incident->add_subcommand("coverage", "Compute coverage metrics");
    inc_coverage->add_option("incident", coverage_incident, "Incident id")->required();
    inc_coverage->callback([&] {
        action = [&] {
            Corpus corpus = ctx.corpus();
            detail::print_coverage(ctx, compute_coverage(corpus, ctx.store().load(coverage_incident)));
            return kExitOk;
        };
    });

    auto* inc_list = incident->add_subcommand("list", "List stored incident ids");
    inc_list->callback([&] {
        action = [&] {
            auto ids = ctx.store().list();
            if (ctx.json) {
                ctx.print_json(Json{{"incidents", ids}});
            } else {
                for (const auto& id : ids) ctx.out << id << "\n";
            }
            return kExitOk;
        };
    });

    // export
    auto* exp = app.add_subcommand("export", "Export interchange documents");
    exp->require_subcommand(1);
    std::vector<std::string> stix_incidents;
    auto* exp_stix = exp->add_subcommand("stix", "STIX 2.1-style bundle of the corpus and incidents");
    exp_stix->add_option("--incident", stix_incidents, "Include a stored incident as a report (repeatable)");
    exp_stix->callback([&] {
        action = [&] {
            Corpus corpus = ctx.corpus();
            std::vector<IncidentFlow> flows;
            if (!stix_incidents.empty()) {
                IncidentStore store = ctx.store();
                for (const auto& id : stix_incidents) flows.push_back(store.load(id));
            }
            ctx.print_json(export_stix_bundle(corpus, flows));
            return kExitOk;
        };
    });
    std::string layer_incident;
    auto* exp_layer = exp->add_subcommand("layer", "Navigator layer for one incident");
    exp_layer->add_option("incident", layer_incident, "Incident id")->required();
    exp_layer->callback([&] {
        action = [&] {
            Corpus corpus = ctx.corpus();
            ctx.print_json(to_json(export_layer(corpus, ctx.store().load(layer_incident))));
            return kExitOk;
        };
    });

    // diff
    std::string diff_old, diff_new;
    auto* diff = app.add_subcommand("diff", "Compare two corpus documents");
    diff->add_option("old", diff_old, "Old corpus")->required();
    diff->add_option("new", diff_new, "New corpus")->required();
    diff->callback([&] {
        action = [&] {
            ChangeSet c = diff_corpora(load_corpus_file(diff_old), load_corpus_file(diff_new));
            if (ctx.json) {
                ctx.print_json(to_json(c));
            } else {
                ctx.out << "added: " << detail::join_ids(c.added) << "\n";
                ctx.out << "removed: " << detail::join_ids(c.removed) << "\n";
                ctx.out << "modified: " << detail::join_ids(c.modified) << "\n";
                ctx.out << "manifest changed: " << (c.manifest_changed ? "yes" : "no") << "\n";
            }
            return kExitOk;
        };
    });

    // serve
    std::string serve_addr, serve_ui;
    auto* serve = app.add_subcommand("serve", "Run the HTTP JSON API");
    serve->add_option("--addr", serve_addr, "host:port (default: $FIST_ADDR or 127.0.0.1:8080)");
    serve->add_option("--ui-dir", serve_ui, "Directory of static UI assets to serve at /");
    serve->callback([&] {
        action = [&] {
            std::string addr = serve_addr;
            if (addr.empty()) addr = ctx.env("FIST_ADDR").value_or("127.0.0.1:8080");
            auto [host, port] = detail::split_addr(addr);
            // Load everything before binding: an invalid corpus never opens a socket.
            Corpus corpus = ctx.corpus();
            IncidentStore store = ctx.store();
            ServiceOptions options;
            if (!serve_ui.empty()) options.ui_dir = serve_ui;
            Service service(corpus, store, options);
            if (!service.bind(host, port)) {
                throw Error(ErrorCode::IoError, addr, "cannot bind " + addr);
            }
            ctx.err << "fist: serving " << corpus.manifest().corpus_version << " on " << addr << "\n";
            return service.listen_after_bind() ? kExitOk : kExitFailure;
        };
    });

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
        return action ? action() : kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "fist: " << e.what() << "\n";
        err << app.help();
        return kExitUsage;
    } catch (const Error& e) {
        detail::print_error(ctx, e);
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

} // namespace fist::cli

#endif
