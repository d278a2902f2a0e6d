#include "summrec/service/service.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro that
// collides with Eigen parameter names.
#include <httplib.h>

#include "summrec/common/error.hpp"

namespace summrec::service {

struct HttpServer::Impl {
    ServiceCore& core;
    httplib::Server server;

    explicit Impl(ServiceCore& c) : core(c) {}

    void cors(httplib::Response& res) const {
        const std::string& origin = core.config().cors_origin;
        if (origin.empty()) return;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }

    void dispatch(const httplib::Request& req, httplib::Response& res) {
        Request r{req.method, req.path, {}, req.body};
        for (const auto& [key, value] : req.params) r.params.emplace(key, value);
        const Response out = core.handle(r);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
        cors(res);
    }
};

HttpServer::HttpServer(ServiceCore& core) : impl_(std::make_unique<Impl>(core)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->dispatch(req, res); };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.Put(".*", handler);
    impl_->server.Delete(".*", handler);
    impl_->server.Options(".*", [this](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        impl_->cors(res);
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw IoError("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace summrec::service
