#ifndef FIST_SERVICE_HPP
#define FIST_SERVICE_HPP

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>

#include <httplib.h>

#include "fist/incident_store.hpp"
#include "fist/interop.hpp"
#include "fist/query.hpp"
#include "fist/report.hpp"

namespace fist {

inline int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::DuplicateIncidentId: return 409;
        case ErrorCode::UnknownTechnique:
        case ErrorCode::PhaseMismatch:
        case ErrorCode::UnknownDetection: return 422;
        case ErrorCode::MalformedId:
        case ErrorCode::SchemaError: return 400;
        case ErrorCode::IntegrityError:
        case ErrorCode::IoError: return 500;
    }
    return 500;
}

inline Json error_body(const Error& e) {
    return Json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"subject", e.subject()}};
}

inline std::string utc_now() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Json manifest_json(const Corpus& corpus) {
    Json out = to_json(corpus.manifest());
    ScaleCounts a = corpus.to_document().actual_counts();
    out["actual"] = {{"phases", a.phases},           {"tactics", a.tactics},
                     {"techniques", a.techniques},   {"detections", a.detections},
                     {"mitigations", a.mitigations}, {"tools", a.tools}};
    Json mismatches = Json::array();
    for (const auto& m : validate_manifest(corpus)) mismatches.push_back(to_json(m));
    out["mismatches"] = mismatches;
    out["source_digest"] = corpus.source_digest();
    return out;
}

struct ServiceOptions {
    std::optional<std::filesystem::path> ui_dir;  // static assets mounted at "/"
};

/**
 * HTTP JSON API over an immutable corpus and a file-backed incident store.
 *
 *   GET  /api/corpus/manifest
 *   GET  /api/entities/{id}
 *   GET  /api/matrix
 *   GET  /api/incidents
 *   POST /api/incidents
 *   GET  /api/incidents/{id}
 *   POST /api/incidents/{id}/observations
 *   GET  /api/incidents/{id}/coverage
 *   GET  /api/incidents/{id}/report?format=markdown|json
 *   GET  /api/export/stix[?incident=ID...]
 *   GET  /api/export/layer/{incident_id}
 *
 * Corpus reads carry an ETag derived from the corpus digest and honour
 * If-None-Match. Failures use the body {code, message, subject}.
 */
class Service {
public:
    Service(const Corpus& corpus, IncidentStore& store, ServiceOptions options = {})
        : corpus_(corpus), store_(store), etag_("\"" + corpus.source_digest() + "\"") {
        routes();
        if (options.ui_dir) server_.set_mount_point("/", options.ui_dir->string());
    }

    httplib::Server& server() noexcept { return server_; }

    bool bind(const std::string& host, int port) { return server_.bind_to_port(host, port); }
    int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

private:
    static void send_json(httplib::Response& res, const Json& body, int status = 200) {
        res.status = status;
        res.set_content(body.dump(2) + "\n", "application/json");
    }

    static void send_error(httplib::Response& res, const Error& e) {
        send_json(res, error_body(e), http_status(e.code()));
    }

    /// Corpus-only reads: ETag + conditional GET.
    template <typename Fn>
    void corpus_read(const httplib::Request& req, httplib::Response& res, Fn&& fn) const {
        res.set_header("ETag", etag_);
        if (req.get_header_value("If-None-Match") == etag_) {
            res.status = 304;
            return;
        }
        send_json(res, fn());
    }

    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const nlohmann::json::exception& e) {
            send_error(res, Error(ErrorCode::SchemaError, "", e.what()));
        }
    }

    static Json parse_body(const httplib::Request& req) {
        Json body = Json::parse(req.body, nullptr, false);
        if (body.is_discarded()) throw Error(ErrorCode::SchemaError, "$", "request body is not valid JSON");
        return body;
    }

    void routes() {
        server_.Get("/api/corpus/manifest", [this](const httplib::Request& req, httplib::Response& res) {
            corpus_read(req, res, [this] { return manifest_json(corpus_); });
        });

        server_.Get(R"(/api/entities/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                EntityRecord record = get_entity(corpus_, parse_entity_id(req.matches[1].str()));
                corpus_read(req, res, [&] { return to_json(record); });
            });
        });

        server_.Get("/api/matrix", [this](const httplib::Request& req, httplib::Response& res) {
            corpus_read(req, res, [this] { return to_json(corpus_, build_matrix(corpus_)); });
        });

        server_.Get("/api/incidents", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                Json ids = Json::array();
                for (const auto& id : store_.list()) ids.push_back(id);
                send_json(res, Json{{"incidents", ids}});
            });
        });

        server_.Post("/api/incidents", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                Json body = parse_body(req);
                if (body.is_object() && !body.contains("created_at")) body["created_at"] = utc_now();
                IncidentFlow flow = annotate_incident(corpus_, incident_from_json(body));
                store_.store(flow);
                send_json(res, to_json(flow), 201);
            });
        });

        server_.Get(R"(/api/incidents/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, to_json(store_.load(req.matches[1].str()))); });
        });

        server_.Post(R"(/api/incidents/([^/]+)/observations)",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         guarded(res, [&] {
                             std::string id = req.matches[1].str();
                             TechniqueObservation o = parse_observation(parse_body(req), "$", 0);
                             IncidentFlow flow = store_.append_observation(corpus_, id, std::move(o));
                             send_json(res, to_json(flow), 201);
                         });
                     });

        server_.Get(R"(/api/incidents/([^/]+)/coverage)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        guarded(res, [&] {
                            IncidentFlow flow = store_.load(req.matches[1].str());
                            send_json(res, to_json(compute_coverage(corpus_, flow)));
                        });
                    });

        server_.Get(R"(/api/incidents/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                IncidentFlow flow = store_.load(req.matches[1].str());
                std::string format = req.has_param("format") ? req.get_param_value("format") : "markdown";
                if (format != "markdown" && format != "json") {
                    throw Error(ErrorCode::SchemaError, format, "format must be markdown or json");
                }
                bool json = format == "json";
                std::string doc = render_report(corpus_, flow, compute_coverage(corpus_, flow),
                                                json ? ReportFormat::Json : ReportFormat::Markdown);
                res.set_content(doc, json ? "application/json" : "text/markdown; charset=utf-8");
            });
        });

        server_.Get("/api/export/stix", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                std::size_t n = req.get_param_value_count("incident");
                if (n == 0) {
                    corpus_read(req, res, [this] { return export_stix_bundle(corpus_); });
                    return;
                }
                std::vector<IncidentFlow> flows;
                for (std::size_t i = 0; i < n; ++i) flows.push_back(store_.load(req.get_param_value("incident", i)));
                send_json(res, export_stix_bundle(corpus_, flows));
            });
        });

        server_.Get(R"(/api/export/layer/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                send_json(res, to_json(export_layer(corpus_, store_.load(req.matches[1].str()))));
            });
        });

        server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            res.status = 500;
            res.set_content(Json{{"code", "Internal"}, {"message", what}, {"subject", ""}}.dump(2) + "\n",
                            "application/json");
        });
    }

    const Corpus& corpus_;
    IncidentStore& store_;
    std::string etag_;
    httplib::Server server_;
};

} // namespace fist

#endif
