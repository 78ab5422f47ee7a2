#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "facemorph/project.hpp"

namespace facemorph {

/// Landmark names, kinds, bilateral pairs, midline and default sliders.
nlohmann::json schema_json();

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Routes one /api request. Socket-free so the API can be exercised directly.
///
///   GET  /api/schema
///   GET  /api/specimens
///   GET  /api/specimens/{i}/image       {width, height, pixels: base64 8-bit}
///   GET  /api/specimens/{i}/landmarks   pixel coordinates, y down
///   PUT  /api/specimens/{i}/landmarks   all 72 points; marks reviewed
///   POST /api/save
ApiResponse handle_api(Project& project, const std::string& method, const std::string& path,
                       const std::string& body);

/// HTTP front end: the API above plus static review-UI assets.
class ReviewServer {
 public:
  /// `ui_dir` holds the built review UI; when empty a placeholder page is served.
  explicit ReviewServer(Project& project, std::string ui_dir = {});
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace facemorph
