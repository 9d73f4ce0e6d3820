#pragma once

// Chat-completions API judge. Speaks the common JSON chat protocol
// (POST {base}/chat/completions) so it works against hosted endpoints and
// local test servers alike. Retries transient failures with exponential
// backoff; auth and malformed-response failures surface immediately.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "batcheval/errors.hpp"
#include "batcheval/judge.hpp"

namespace batcheval {

struct ApiJudgeConfig {
    std::string api_base;  // e.g. "https://api.openai.com/v1"; empty -> $JUDGE_API_BASE
    std::string api_key;   // empty -> $JUDGE_API_KEY
    std::string model = "gpt-4";
    int max_retries = 3;          // extra attempts after the first
    int backoff_base_ms = 250;    // doubled per retry
    int backoff_cap_ms = 4000;
    double timeout_seconds = 120.0;
    PriceTable prices;
    double budget_cap = 0.0;  // dollars; 0 disables
};

class ApiJudge : public JudgeGateway {
  public:
    explicit ApiJudge(ApiJudgeConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.api_base.empty())
            if (const char* e = std::getenv("JUDGE_API_BASE")) cfg_.api_base = e;
        if (cfg_.api_base.empty()) cfg_.api_base = "https://api.openai.com/v1";
        if (cfg_.api_key.empty())
            if (const char* e = std::getenv("JUDGE_API_KEY")) cfg_.api_key = e;
        split_base(cfg_.api_base, host_, path_prefix_);
        ledger_.set_prices(cfg_.prices);
        set_budget_cap(cfg_.budget_cap);
    }

    JudgeResponse complete(const JudgeRequest& req) override {
        ensure_budget();
        nlohmann::json body = {
            {"model", cfg_.model},
            {"messages", {{{"role", "user"}, {"content", req.prompt}}}},
            {"temperature", req.temperature},
            {"max_tokens", req.max_output_tokens},
        };
        const std::string payload = body.dump();

        std::string last_err;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                int ms = cfg_.backoff_base_ms << (attempt - 1);
                std::this_thread::sleep_for(std::chrono::milliseconds(std::min(ms, cfg_.backoff_cap_ms)));
            }
            httplib::Client cli(host_);
            cli.set_connection_timeout(std::chrono::milliseconds(
                static_cast<long long>(cfg_.timeout_seconds * 1000)));
            cli.set_read_timeout(std::chrono::milliseconds(
                static_cast<long long>(cfg_.timeout_seconds * 1000)));
            httplib::Headers headers;
            if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
            auto res = cli.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
            if (!res) {
                last_err = "connection failed: " + httplib::to_string(res.error());
                continue;  // transient
            }
            if (res->status == 401 || res->status == 403)
                throw JudgeError(JudgeError::Kind::auth_failure,
                                 "judge endpoint rejected credentials (HTTP " +
                                     std::to_string(res->status) + ")");
            if (res->status == 429 || res->status >= 500) {
                last_err = "HTTP " + std::to_string(res->status);
                continue;  // transient
            }
            if (res->status != 200)
                throw JudgeError(JudgeError::Kind::bad_response,
                                 "judge endpoint returned HTTP " + std::to_string(res->status));
            return parse_response(req, res->body);
        }
        throw JudgeError(JudgeError::Kind::unavailable,
                         "judge endpoint unavailable after " + std::to_string(cfg_.max_retries + 1) +
                             " attempts (" + last_err + ")");
    }

    const ApiJudgeConfig& config() const { return cfg_; }

  private:
    JudgeResponse parse_response(const JudgeRequest& req, const std::string& body) {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("message"))
            throw JudgeError(JudgeError::Kind::bad_response, "malformed completion payload");
        JudgeResponse resp;
        resp.text = j["choices"][0]["message"].value("content", "");
        if (j.contains("usage")) {
            resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0ll);
            resp.usage.completion_tokens = j["usage"].value("completion_tokens", 0ll);
        }
        if (resp.usage.prompt_tokens == 0 && resp.usage.completion_tokens == 0) {
            resp.usage.prompt_tokens = whitespace_token_count(req.prompt);
            resp.usage.completion_tokens = whitespace_token_count(resp.text);
        }
        ledger_.add(resp.usage);
        return resp;
    }

    // "https://host:port/v1" -> scheme://host:port plus "/v1" path prefix.
    static void split_base(const std::string& base, std::string& host, std::string& prefix) {
        std::size_t scheme = base.find("://");
        std::size_t path = scheme == std::string::npos ? base.find('/') : base.find('/', scheme + 3);
        if (path == std::string::npos) {
            host = base;
            prefix.clear();
        } else {
            host = base.substr(0, path);
            prefix = base.substr(path);
            while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        }
    }

    ApiJudgeConfig cfg_;
    std::string host_;
    std::string path_prefix_;
};

}  // namespace batcheval
