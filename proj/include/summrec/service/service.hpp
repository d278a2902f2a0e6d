#pragma once

#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "summrec/service/config.hpp"
#include "summrec/store/corpus.hpp"

namespace summrec::service {

struct Request {
    std::string method;
    std::string path;
    std::multimap<std::string, std::string> params;
    std::string body;
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

nlohmann::json error_body(const std::string& code, const std::string& message);

struct TrainingJob {
    std::string id;
    std::string state;  // running, succeeded, failed
    std::string error;
    std::string checkpoint_id;
};

// Transport-independent request handling. Reads work on an immutable corpus
// snapshot; writers build a new snapshot, persist it when a store path is
// set, then publish it.
class ServiceCore {
public:
    ServiceCore(store::Corpus corpus, ServiceConfig config, std::optional<std::filesystem::path> store_path);
    ~ServiceCore();

    ServiceCore(const ServiceCore&) = delete;
    ServiceCore& operator=(const ServiceCore&) = delete;

    Response handle(const Request& request);

    std::shared_ptr<const store::Corpus> snapshot() const;
    // Blocks until no training job is running.
    void wait_for_training();
    const ServiceConfig& config() const { return config_; }

private:
    Response get_paragraphs(const Request& r);
    Response get_related(const Request& r, const std::string& id);
    Response get_topics(const Request& r);
    Response get_batch(const Request& r);
    Response post_start(const Request& r);
    Response post_annotations(const Request& r);
    Response post_train(const Request& r);
    Response get_job(const std::string& id);
    Response get_metrics();

    // Runs `mutate` on a copy of the current corpus, saves and publishes it.
    template <typename F>
    auto update(F&& mutate);
    // Returns the job id, or "" when a job is already running.
    std::string start_training(classifier::HeadConfig config);
    void run_training(std::string job_id, classifier::HeadConfig config);

    ServiceConfig config_;
    std::optional<std::filesystem::path> store_path_;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const store::Corpus> corpus_;
    std::mutex write_mutex_;

    std::mutex jobs_mutex_;
    std::condition_variable jobs_cv_;
    std::map<std::string, TrainingJob> jobs_;
    bool training_ = false;
    bool rerun_ = false;
    std::uint64_t job_counter_ = 0;
    std::thread worker_;

    // Batches of closed rounds, kept to answer repeated submissions.
    std::map<int, std::vector<std::string>> closed_rounds_;
};

// cpp-httplib front end for ServiceCore. Adds CORS headers from the config.
class HttpServer {
public:
    explicit HttpServer(ServiceCore& core);
    ~HttpServer();

    // Binds host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    // Serves until stop(). Blocks.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace summrec::service
