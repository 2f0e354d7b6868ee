// Copyright 2026 The hwloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <regex>

#include "hwloop/errors.hpp"
#include "hwloop/llm_session.hpp"

namespace hwloop {

HttpTransport default_http_transport(std::chrono::milliseconds timeout) {
  return [timeout](const HttpRequest& req) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(req.url, m, url)) throw TransportError("bad endpoint URL: " + req.url, false);
    httplib::Client client(m[1].str());
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : req.headers) {
      if (k == "Content-Type") content_type = v;
      else headers.emplace(k, v);
    }
    std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Post(path, headers, req.body, content_type);
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()), true);
    return HttpResponse{res->status, res->body};
  };
}

}  // namespace hwloop
