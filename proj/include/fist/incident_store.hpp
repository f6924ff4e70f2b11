#ifndef FIST_INCIDENT_STORE_HPP
#define FIST_INCIDENT_STORE_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "fist/incident.hpp"

namespace fist {

/**
 * File-backed incident store: one `<incident_id>.json` per incident inside a
 * data directory.
 *
 * Writers are serialized by an in-process mutex plus an flock() on
 * `<dir>/.lock`, so only one writer touches the directory at a time even
 * across processes. Documents are written to a temporary file and renamed
 * into place; readers never observe a partial document.
 */
class IncidentStore {
public:
    explicit IncidentStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_)) {
            throw Error(ErrorCode::IoError, dir_.string(), "cannot create data directory " + dir_.string());
        }
    }

    const std::filesystem::path& directory() const noexcept { return dir_; }

    /// Throws DuplicateIncidentId if the id is taken.
    void store(const IncidentFlow& flow) {
        require_valid_id(flow.incident_id);
        WriterLock lock(*this);
        if (std::filesystem::exists(path_for(flow.incident_id))) {
            throw Error(ErrorCode::DuplicateIncidentId, flow.incident_id,
                        "incident " + flow.incident_id + " already exists");
        }
        write_atomically(flow);
    }

    IncidentFlow load(const std::string& incident_id) const {
        require_valid_id(incident_id);
        auto path = path_for(incident_id);
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::NotFound, incident_id, "incident " + incident_id + " not found");
        }
        return parse_incident_document(read_text_file(path));
    }

    /// Incident ids, sorted lexicographically.
    std::vector<std::string> list() const {
        std::vector<std::string> ids;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
            std::string id = entry.path().stem().string();
            if (is_valid_incident_id(id)) ids.push_back(std::move(id));
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    /**
     * Appends an observation to a stored incident after checking it against
     * the corpus. The new observation receives the next sequence number.
     */
    IncidentFlow append_observation(const Corpus& corpus, const std::string& incident_id,
                                    TechniqueObservation observation) {
        WriterLock lock(*this);
        IncidentFlow flow = load(incident_id);
        observation.sequence = static_cast<int>(flow.observations.size()) + 1;
        flow.observations.push_back(std::move(observation));
        flow = annotate_incident(corpus, std::move(flow));
        write_atomically(flow);
        return flow;
    }

private:
    class WriterLock {
    public:
        explicit WriterLock(IncidentStore& store) : guard_(store.mutex_) {
            auto lock_path = store.dir_ / ".lock";
            fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
            if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
                if (fd_ >= 0) ::close(fd_);
                throw Error(ErrorCode::IoError, lock_path.string(), "cannot lock " + lock_path.string());
            }
        }
        ~WriterLock() {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
        WriterLock(const WriterLock&) = delete;
        WriterLock& operator=(const WriterLock&) = delete;

    private:
        std::lock_guard<std::mutex> guard_;
        int fd_ = -1;
    };

    static void require_valid_id(const std::string& id) {
        if (!is_valid_incident_id(id)) throw Error(ErrorCode::SchemaError, id, "invalid incident id '" + id + "'");
    }

    std::filesystem::path path_for(const std::string& id) const { return dir_ / (id + ".json"); }

    void write_atomically(const IncidentFlow& flow) const {
        auto target = path_for(flow.incident_id);
        auto tmp = dir_ / ("." + flow.incident_id + ".json.tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << to_json(flow).dump(2) << "\n";
            out.flush();
            if (!out) throw Error(ErrorCode::IoError, tmp.string(), "cannot write " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, target, ec);
        if (ec) throw Error(ErrorCode::IoError, target.string(), "cannot replace " + target.string());
    }

    std::filesystem::path dir_;
    std::mutex mutex_;
};

} // namespace fist

#endif
