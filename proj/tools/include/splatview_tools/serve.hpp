// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatview/renderer.hpp"
#include "splatview/scene.hpp"

#include <map>
#include <memory>
#include <string>

namespace splatview::tools {

struct HttpReply {
    int status = 200;
    std::string contentType = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;
};

/// Request handling for the render server. The scene is held immutable; every reply is a pure
/// function of (scene, request). Renders run one at a time in arrival order.
class RenderService {
  public:
    RenderService(Scene scene, LinearHead head);
    ~RenderService();
    RenderService(const RenderService &) = delete;
    RenderService &operator=(const RenderService &) = delete;

    /// GET /api/cameras
    HttpReply cameras() const;
    /// POST /api/render with a JSON pose body
    HttpReply render(const std::string &body);
    /// GET /api/weights with the pose as query parameters (rotation and translation comma separated)
    HttpReply weights(const std::map<std::string, std::string> &query);

    const Scene &scene() const { return scene_; }

  private:
    class FifoGate;
    Scene scene_;
    LinearHead head_;
    std::unique_ptr<FifoGate> gate_;
};

/// Blocking HTTP server exposing a RenderService under /api.
class HttpServer {
  public:
    explicit HttpServer(RenderService &service);
    ~HttpServer();
    HttpServer(const HttpServer &) = delete;
    HttpServer &operator=(const HttpServer &) = delete;

    /// Binds and serves until stop(). Returns false if the port could not be bound.
    bool listen(const std::string &host, int port);
    /// Binds an ephemeral port and returns it (or -1); serve with listenAfterBind().
    int bindToAnyPort(const std::string &host);
    bool listenAfterBind();
    void waitUntilReady() const;
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Mean normalized pooling weight of every selected view over valid pixels.
std::map<int, double> mean_view_weights(const NovelRender &render);

} // namespace splatview::tools
