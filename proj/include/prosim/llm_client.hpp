#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "prosim/decision.hpp"
#include "prosim/error.hpp"
#include "prosim/log.hpp"
#include "prosim/scenario.hpp"

namespace prosim {

struct LlmBackendConfig {
  std::string endpoint = "https://api.openai.com";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60000};  // per attempt
  std::string api_key_env = "PROSIM_API_KEY";
  bool verbose = false;

  void validate() const {
    require(temperature >= 0.0, ErrorKind::InvalidSpec, "temperature must be >= 0");
    require(max_retries >= 0, ErrorKind::InvalidSpec, "max_retries must be >= 0");
    require(timeout.count() > 0, ErrorKind::InvalidSpec, "timeout must be positive");
    require(!endpoint.empty() && !path.empty(), ErrorKind::InvalidSpec, "endpoint/path empty");
  }
};

/// Case-insensitive scan for standalone ACCEPT / PUNISH; the last keyword wins
/// since the answer format puts the decision last.
inline std::optional<bool> try_parse_punish(std::string_view text) {
  std::string lower(text);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  std::optional<bool> result;
  std::size_t best = 0;
  for (const auto& [word, value] : {std::pair{std::string_view("accept"), false},
                                    std::pair{std::string_view("punish"), true}}) {
    std::size_t pos = lower.find(word);
    while (pos != std::string::npos) {
      const bool left_ok = pos == 0 || !is_alpha(lower[pos - 1]);
      const std::size_t end = pos + word.size();
      const bool right_ok = end >= lower.size() || !is_alpha(lower[end]);
      if (left_ok && right_ok && (!result || pos >= best)) {
        result = value;
        best = pos;
      }
      pos = lower.find(word, pos + 1);
    }
  }
  return result;
}

namespace detail {

inline constexpr std::string_view kLikertClarification =
    "Answer with a single integer from 1 to 7 and nothing else.";
inline constexpr std::string_view kPunishClarification =
    "Answer with a single word, ACCEPT or PUNISH, and nothing else.";

inline std::string strip_persona(const std::string& prompt, const std::string& persona) {
  if (persona.empty() || prompt.rfind(persona, 0) != 0) return prompt;
  std::size_t start = persona.size();
  while (start < prompt.size() && (prompt[start] == '\n' || prompt[start] == ' ')) ++start;
  return prompt.substr(start);
}

struct AttemptResult {
  std::optional<std::string> content;
  std::string error;
  bool retryable = true;
};

}  // namespace detail

/// One chat-completion call with parse-retry. Total wall time is bounded by
/// timeout * (max_retries + 1): each attempt has a watchdog that stops the
/// client at the end of its time slot.
inline DecisionResponse llm_decide(const LlmBackendConfig& config, const DecisionRequest& request) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  validate_request(request);
  const char* key = std::getenv(config.api_key_env.c_str());
  require(key != nullptr && *key != '\0', ErrorKind::MissingCredential,
          "environment variable " + config.api_key_env + " is not set");
  const std::string api_key = key;

  const std::string user_prompt = detail::strip_persona(request.prompt, request.agent->persona);
  const bool punish_query = request.query == QueryKind::PunishChoice;
  const auto started = Clock::now();

  std::string last_error = "no attempts made";
  bool clarify = false;
  const int attempts = config.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    std::string content = user_prompt;
    if (clarify) {
      content += "\n\n";
      content += punish_query ? detail::kPunishClarification : detail::kLikertClarification;
    }
    nlohmann::json body = {
        {"model", config.model_name},
        {"temperature", config.temperature},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", request.agent->persona}},
                                {{"role", "user"}, {"content", content}}})}};
    const std::string payload = body.dump();
    if (config.verbose) {
      log(LogLevel::Info, "POST " + config.endpoint + config.path +
                              " (Authorization: Bearer <redacted>) " + payload);
    }

    detail::AttemptResult result;
    {
      // Attempt k owns the slot ending at started + k * timeout; stopping a
      // little early leaves room for teardown inside the overall bound.
      const auto guard = std::min<std::chrono::milliseconds>(config.timeout / 20,
                                                             std::chrono::milliseconds(10));
      const auto deadline = started + attempt * config.timeout - guard;
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) {
        last_error = "time budget exhausted before attempt " + std::to_string(attempt);
        continue;
      }
      httplib::Client client(config.endpoint);
      client.set_connection_timeout(remaining);
      client.set_read_timeout(remaining);
      client.set_write_timeout(remaining);
      client.set_bearer_token_auth(api_key);

      std::mutex m;
      std::condition_variable cv;
      bool finished = false;
      std::thread watchdog([&] {
        std::unique_lock lock(m);
        if (!cv.wait_until(lock, deadline, [&] { return finished; })) client.stop();
      });
      auto res = client.Post(config.path, payload, "application/json");
      {
        std::lock_guard lock(m);
        finished = true;
      }
      cv.notify_one();
      watchdog.join();

      if (!res) {
        result.error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status == 429 || res->status >= 500) {
        result.error = "HTTP status " + std::to_string(res->status);
      } else if (res->status != 200) {
        result.error = "HTTP status " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        result.retryable = false;
      } else {
        if (config.verbose) log(LogLevel::Info, "response " + res->body);
        try {
          const auto parsed = nlohmann::json::parse(res->body);
          result.content = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
          result.error = std::string("malformed completion body: ") + e.what();
        }
      }
    }

    if (!result.retryable) fail(ErrorKind::TransportFailure, result.error);
    if (!result.content) {
      last_error = result.error;
      log_debug("attempt " + std::to_string(attempt) + " failed: " + last_error);
      continue;
    }

    DecisionResponse out;
    out.raw_text = *result.content;
    out.backend_name = "llm:" + config.model_name;
    if (punish_query) {
      out.punish = try_parse_punish(out.raw_text);
    } else {
      out.likert = try_parse_likert(out.raw_text);
    }
    if (out.punish || out.likert) {
      out.latency_ms = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count());
      return out;
    }
    last_error = "unparseable answer '" + out.raw_text.substr(0, 200) + "'";
    clarify = true;
  }
  fail(ErrorKind::ExhaustedRetries,
       "gave up after " + std::to_string(attempts) + " attempts; last error: " + last_error);
}

class LlmBackend final : public DecisionBackend {
 public:
  explicit LlmBackend(LlmBackendConfig config) : config_(std::move(config)) { config_.validate(); }

  DecisionResponse decide(const DecisionRequest& request) const override {
    return llm_decide(config_, request);
  }
  std::string name() const override { return "llm:" + config_.model_name; }
  bool reports_unfairness() const noexcept override { return true; }
  const LlmBackendConfig& config() const noexcept { return config_; }

 private:
  LlmBackendConfig config_;
};

}  // namespace prosim
