#pragma once

// HTTP binding of Service. Needs cpp-httplib on the include path.

#include <memory>
#include <string>

#include <httplib.h>

#include "lumiedit/service.hpp"

namespace lumiedit {

namespace detail {

inline Request to_request(const httplib::Request& in) {
  Request r;
  r.method = in.method;
  r.path = in.path;
  r.body = in.body;
  for (const auto& [k, v] : in.params) r.query[k] = v;
  for (const auto& [k, v] : in.headers) r.headers[k] = v;
  return r;
}

inline void write_response(const Response& in, httplib::Response& out) {
  out.status = in.status;
  for (const auto& [k, v] : in.headers) out.set_header(k, v);
  if (in.status != 204) out.set_content(in.body, in.content_type);
}

}  // namespace detail

// Routes every request to `service`. /refine streams NDJSON progress with
// chunked transfer encoding.
inline void bind_service(httplib::Server& server, Service& service) {
  const auto handler = [&service](const httplib::Request& in, httplib::Response& out) {
    const Request req = detail::to_request(in);
    if (!Service::is_streaming(req)) {
      detail::write_response(service.handle(req), out);
      return;
    }
    const Response pre = service.preflight(req);
    if (pre.status != 200) {
      detail::write_response(pre, out);
      return;
    }
    // The job runs inside the content provider so lines reach the client
    // while it progresses.
    auto shared = std::make_shared<Request>(req);
    out.status = 200;
    for (const auto& [k, v] : pre.headers) out.set_header(k, v);
    out.set_chunked_content_provider("application/x-ndjson", [&service, shared](std::size_t, httplib::DataSink& sink) {
      const Response r = service.handle_streaming(*shared, [&sink](const std::string& chunk) {
        return sink.is_writable() && sink.write(chunk.data(), chunk.size());
      });
      if (r.status != 200) {
        const std::string line =
            json{{"done", true}, {"status", r.status}, {"error", r.json_body()["error"]}}.dump() + "\n";
        sink.write(line.data(), line.size());
      }
      sink.done();
      return true;
    });
  };
  const std::string all = R"(/.*)";
  server.Get(all, handler);
  server.Post(all, handler);
  server.Put(all, handler);
  server.Delete(all, handler);
  server.Options(all, handler);
}

}  // namespace lumiedit
