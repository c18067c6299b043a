#include "http_util.hpp"

#include <httplib.h>

namespace amt::detail {

nlohmann::json post_json(const std::string& endpoint, const std::string& auth_token,
                         std::chrono::milliseconds timeout, const nlohmann::json& body,
                         ErrorCode failure) {
  auto scheme_end = endpoint.find("://");
  auto path_start = endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string base = endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

  httplib::Client cli(base);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout).count() % 1000000;
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!auth_token.empty()) headers.emplace("Authorization", "Bearer " + auth_token);

  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
      throw Error(ErrorCode::Timeout, endpoint + ": " + httplib::to_string(err));
    throw Error(failure, endpoint + ": " + httplib::to_string(err));
  }
  if (res->status != 200) throw Error(failure, endpoint + " returned HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(failure, endpoint + ": unparsable response: " + e.what());
  }
}

}  // namespace amt::detail
