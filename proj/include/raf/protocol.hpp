#pragma once

// Newline-delimited JSON wire protocol shared by external forecasters and
// embedders. One request frame per line, one response frame per line:
//
//   request:  {"id", "role": "forecast"|"embed", "horizon", "target_indices",
//              "matrix": [[...], ...], "variables": [...]}
//   response: {"id", "matrix": [[...], ...]}
//   error:    {"id", "error": "..."}
//
// Matrices are row-major, oldest row first. NaN/Inf are protocol violations.

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "raf/forecast.hpp"
#include "raf/retrieval.hpp"

namespace raf {

enum class Role { Forecast, Embed };

std::string to_string(Role role);

struct WireRequest {
    std::string id;
    Role role = Role::Forecast;
    Eigen::Index horizon = 0;
    std::vector<int> target_indices;
    Matrix matrix;
    std::vector<std::string> variables;
};

struct WireResponse {
    std::string id;
    std::optional<Matrix> matrix;
    std::optional<std::string> error;
};

/// Single-line JSON encodings (no trailing newline). Doubles use shortest
/// round-trip formatting, so decode(encode(x)) reproduces x bit for bit.
std::string encode_request(const WireRequest& request);
std::string encode_response(const WireResponse& response);
WireRequest decode_request(const std::string& line);
WireResponse decode_response(const std::string& line);

/// Server side: decode one request line, run `handler`, encode the answer.
/// Malformed frames and handler exceptions become error frames.
using FrameHandler = std::function<Matrix(const WireRequest&)>;
std::string handle_frame(const std::string& line, const FrameHandler& handler);

/// Moves one encoded frame to a peer and returns its reply line.
/// Implementations serialise calls; failures throw TransportError.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string exchange(const std::string& line) = 0;
    virtual std::string describe() const = 0;
};

/// Child process speaking the protocol over stdin/stdout. The command is split
/// on whitespace; the child is (re)started lazily.
class ChildProcessTransport final : public Transport {
public:
    explicit ChildProcessTransport(std::string command,
                                   std::chrono::milliseconds timeout = std::chrono::minutes(5));
    ~ChildProcessTransport() override;
    ChildProcessTransport(const ChildProcessTransport&) = delete;
    ChildProcessTransport& operator=(const ChildProcessTransport&) = delete;

    std::string exchange(const std::string& line) override;
    std::string describe() const override { return "exec:" + command_; }

private:
    void start();
    void stop();

    std::string command_;
    std::chrono::milliseconds timeout_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string pending_;
};

/// HTTP POST of each frame to a URL (scheme://host:port/path).
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::string url, std::chrono::seconds timeout = std::chrono::minutes(5));
    std::string exchange(const std::string& line) override;
    std::string describe() const override { return url_; }

private:
    std::string url_;
    std::string base_;
    std::string path_;
    std::chrono::seconds timeout_;
    std::mutex mutex_;
};

/// "exec:COMMAND" or an http(s) URL.
std::unique_ptr<Transport> make_transport(const std::string& endpoint);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
};

/// Request/response client with retries on transport failures and strict
/// validation of every reply.
class ProtocolClient {
public:
    explicit ProtocolClient(std::unique_ptr<Transport> transport, RetryPolicy retry = {});

    /// Sends `request` and returns the decoded reply matrix. Error frames,
    /// mismatched ids and non-finite numbers throw ProtocolError.
    Matrix call(WireRequest request);

    const Transport& transport() const { return *transport_; }

private:
    std::unique_ptr<Transport> transport_;
    RetryPolicy retry_;
    std::mutex counter_mutex_;
    unsigned long long next_id_ = 0;
};

ForecastResult forecast_external(const ForecastRequest& request, ProtocolClient& client);

class ExternalForecaster final : public Forecaster {
public:
    ExternalForecaster(std::unique_ptr<Transport> transport, std::optional<Eigen::Index> max_rows,
                       RetryPolicy retry = {});
    ForecastResult forecast(const ForecastRequest& request) const override;
    std::string id() const override { return "external(" + client_->transport().describe() + ")"; }
    std::optional<Eigen::Index> max_rows() const override { return max_rows_; }

private:
    std::unique_ptr<ProtocolClient> client_;
    std::optional<Eigen::Index> max_rows_;
};

class ExternalEmbedder final : public Embedder {
public:
    ExternalEmbedder(std::unique_ptr<Transport> transport, Eigen::Index k_emb, RetryPolicy retry = {});
    Embedding embed(const Matrix& window) const override;
    Eigen::Index dimension() const override { return k_emb_; }
    std::string id() const override { return "external(" + client_->transport().describe() + ")"; }

private:
    std::unique_ptr<ProtocolClient> client_;
    Eigen::Index k_emb_;
};

}  // namespace raf
