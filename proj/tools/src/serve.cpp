// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#include "splatview_tools/serve.hpp"

#include "splatview/errors.hpp"
#include "splatview/image_io.hpp"
#include "splatview/scene_io.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <sstream>

namespace splatview::tools {

using nlohmann::json;

/// Ticket lock: waiters are admitted strictly in arrival order.
class RenderService::FifoGate {
  public:
    class Pass {
      public:
        explicit Pass(FifoGate &gate) : gate_(gate) {
            std::unique_lock lock(gate_.mutex_);
            const std::uint64_t ticket = gate_.next_++;
            gate_.cv_.wait(lock, [&] { return gate_.serving_ == ticket; });
        }
        ~Pass() {
            {
                std::lock_guard lock(gate_.mutex_);
                ++gate_.serving_;
            }
            gate_.cv_.notify_all();
        }
        Pass(const Pass &) = delete;
        Pass &operator=(const Pass &) = delete;

      private:
        FifoGate &gate_;
    };

  private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t next_ = 0;
    std::uint64_t serving_ = 0;
};

namespace {

HttpReply json_reply(int status, const json &body) {
    HttpReply r;
    r.status = status;
    r.body = body.dump();
    return r;
}

HttpReply error_reply(int status, const std::string &message) { return json_reply(status, {{"error", message}}); }

struct RenderRequest {
    CameraModel camera;
    RenderOptions options;
};

RenderRequest parse_request(const json &doc) {
    RenderRequest req;
    req.camera = camera_from_json_text(doc.dump());
    if (doc.contains("k")) {
        if (!doc.at("k").is_number_integer() || doc.at("k").get<int>() < 1) {
            throw ParseError("pose: k must be a positive integer");
        }
        req.options.k = doc.at("k").get<int>();
    }
    if (doc.contains("fast")) {
        if (!doc.at("fast").is_boolean()) {
            throw ParseError("pose: fast must be a boolean");
        }
        req.options.fast = doc.at("fast").get<bool>();
    }
    return req;
}

/// Query parameters carry numbers as text; lists are comma separated.
json query_to_json(const std::map<std::string, std::string> &query) {
    auto numbers = [](const std::string &text) {
        json arr = json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) {
                throw ParseError("pose: bad number '" + item + "'");
            }
            arr.push_back(v);
        }
        return arr;
    };
    json doc = json::object();
    try {
        for (const auto &[key, value] : query) {
            if (key == "rotation" || key == "translation") {
                doc[key] = numbers(value);
            } else if (key == "width" || key == "height" || key == "k") {
                doc[key] = std::stoi(value);
            } else if (key == "fast") {
                doc[key] = value == "1" || value == "true";
            } else if (key == "fx" || key == "fy" || key == "cx" || key == "cy") {
                doc[key] = std::stod(value);
            }
        }
    } catch (const std::logic_error &e) {
        throw ParseError(std::string("pose: malformed query parameter: ") + e.what());
    }
    return doc;
}

std::string join_ids(const std::vector<int> &ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += (i ? "," : "") + std::to_string(ids[i]);
    }
    return out;
}

} // namespace

std::map<int, double> mean_view_weights(const NovelRender &render) {
    std::map<int, double> out;
    const std::size_t npix = render.validity.size();
    std::size_t valid = 0;
    std::vector<double> sums(render.selectedIds.size(), 0.0);
    for (std::size_t p = 0; p < npix; ++p) {
        double total = 0.0;
        for (const auto &w : render.perViewWeights) {
            total += w.data()[p];
        }
        if (!render.validity[p] || total <= 0.0) {
            continue;
        }
        ++valid;
        for (std::size_t n = 0; n < sums.size(); ++n) {
            sums[n] += render.perViewWeights[n].data()[p] / total;
        }
    }
    for (std::size_t n = 0; n < sums.size(); ++n) {
        out[render.selectedIds[n]] = valid ? sums[n] / static_cast<double>(valid) : 0.0;
    }
    return out;
}

RenderService::RenderService(Scene scene, LinearHead head)
    : scene_(std::move(scene)), head_(head), gate_(std::make_unique<FifoGate>()) {
    scene_.validate();
}

RenderService::~RenderService() = default;

HttpReply RenderService::cameras() const {
    json list = json::array();
    for (const auto &v : scene_.views) {
        const auto &c = v.camera;
        std::vector<double> r(9);
        for (int i = 0; i < 9; ++i) {
            r[static_cast<std::size_t>(i)] = c.rotation(i / 3, i % 3);
        }
        list.push_back({{"id", v.id},
                        {"width", c.width},
                        {"height", c.height},
                        {"fx", c.fx},
                        {"fy", c.fy},
                        {"cx", c.cx},
                        {"cy", c.cy},
                        {"rotation", r},
                        {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
                        {"mu", v.mu}});
    }
    return json_reply(200, list);
}

HttpReply RenderService::render(const std::string &body) {
    RenderRequest req;
    try {
        req = parse_request(json::parse(body));
    } catch (const json::exception &e) {
        return error_reply(400, std::string("malformed pose: ") + e.what());
    } catch (const ParseError &e) {
        return error_reply(400, e.what());
    }
    try {
        FifoGate::Pass pass(*gate_);
        const auto t0 = std::chrono::steady_clock::now();
        const NovelRender r = render_novel(scene_, req.camera, req.options, head_);
        const std::vector<std::uint8_t> png = encode_png(r.color);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        HttpReply reply;
        reply.contentType = "image/png";
        reply.body.assign(png.begin(), png.end());
        reply.headers["X-Selected-Views"] = join_ids(r.selectedIds);
        reply.headers["X-Render-Millis"] = std::to_string(static_cast<long long>(std::llround(ms)));
        return reply;
    } catch (const std::exception &e) {
        return error_reply(500, std::string("render failed: ") + e.what());
    }
}

HttpReply RenderService::weights(const std::map<std::string, std::string> &query) {
    RenderRequest req;
    try {
        req = parse_request(query_to_json(query));
    } catch (const json::exception &e) {
        return error_reply(400, std::string("malformed pose: ") + e.what());
    } catch (const ParseError &e) {
        return error_reply(400, e.what());
    }
    try {
        FifoGate::Pass pass(*gate_);
        const NovelRender r = render_novel(scene_, req.camera, req.options, head_);
        json out = json::object();
        for (const auto &[id, w] : mean_view_weights(r)) {
            out[std::to_string(id)] = w;
        }
        return json_reply(200, out);
    } catch (const std::exception &e) {
        return error_reply(500, std::string("render failed: ") + e.what());
    }
}

struct HttpServer::Impl {
    RenderService &service;
    httplib::Server server;
};

namespace {

void send(httplib::Response &res, const HttpReply &reply) {
    res.status = reply.status;
    for (const auto &[k, v] : reply.headers) {
        res.set_header(k, v);
    }
    res.set_content(reply.body, reply.contentType);
}

} // namespace

HttpServer::HttpServer(RenderService &service) : impl_(new Impl{service, {}}) {
    auto &s = impl_->server;
    s.Get("/api/cameras", [this](const httplib::Request &, httplib::Response &res) {
        send(res, impl_->service.cameras());
    });
    s.Post("/api/render", [this](const httplib::Request &req, httplib::Response &res) {
        send(res, impl_->service.render(req.body));
    });
    s.Get("/api/weights", [this](const httplib::Request &req, httplib::Response &res) {
        std::map<std::string, std::string> query;
        for (const auto &[k, v] : req.params) {
            query[k] = v;
        }
        send(res, impl_->service.weights(query));
    });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string &host, int port) { return impl_->server.listen(host, port); }

int HttpServer::bindToAnyPort(const std::string &host) { return impl_->server.bind_to_any_port(host); }

bool HttpServer::listenAfterBind() { return impl_->server.listen_after_bind(); }

void HttpServer::waitUntilReady() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() { impl_->server.stop(); }

} // namespace splatview::tools
