#include "raf/protocol.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>
#include <thread>

namespace raf {
namespace {

using nlohmann::json;

std::string excerpt(const std::string& text) {
    constexpr std::size_t kMax = 160;
    return text.size() <= kMax ? text : text.substr(0, kMax) + "...";
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double x = m(r, c);
            if (!std::isfinite(x)) {
                throw ProtocolError(fmt::format("non-finite value at ({}, {}) cannot be sent", r, c));
            }
            row.push_back(x);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& raw) {
    if (!rows.is_array()) throw ProtocolError("'matrix' is not an array: " + excerpt(raw));
    const auto n_rows = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index n_cols = n_rows == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
    Matrix m(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols) {
            throw ProtocolError(fmt::format("matrix row {} is ragged: {}", r, excerpt(raw)));
        }
        for (Eigen::Index c = 0; c < n_cols; ++c) {
            const json& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number()) {
                throw ProtocolError(fmt::format("matrix cell ({}, {}) is not a number: {}", r, c, excerpt(raw)));
            }
            const double x = cell.get<double>();
            if (!std::isfinite(x)) throw ProtocolError(fmt::format("matrix cell ({}, {}) is not finite", r, c));
            m(r, c) = x;
        }
    }
    return m;
}

json parse_object(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("malformed JSON frame ({}): {}", e.what(), excerpt(line)));
    }
    if (!j.is_object()) throw ProtocolError("frame is not a JSON object: " + excerpt(line));
    if (!j.contains("id") || !j["id"].is_string()) throw ProtocolError("frame lacks a string 'id': " + excerpt(line));
    return j;
}

Role parse_role(const std::string& s) {
    if (s == "forecast") return Role::Forecast;
    if (s == "embed") return Role::Embed;
    throw ProtocolError(fmt::format("unknown role '{}'", s));
}

std::vector<std::string> split_command(const std::string& command) {
    std::istringstream in(command);
    std::vector<std::string> args;
    for (std::string a; in >> a;) args.push_back(a);
    return args;
}

}  // namespace

std::string to_string(Role role) { return role == Role::Forecast ? "forecast" : "embed"; }

std::string encode_request(const WireRequest& request) {
    json j;
    j["id"] = request.id;
    j["role"] = to_string(request.role);
    j["horizon"] = request.horizon;
    j["target_indices"] = request.target_indices;
    j["matrix"] = matrix_to_json(request.matrix);
    j["variables"] = request.variables;
    return j.dump();
}

std::string encode_response(const WireResponse& response) {
    json j;
    j["id"] = response.id;
    if (response.error) {
        j["error"] = *response.error;
    } else {
        j["matrix"] = matrix_to_json(response.matrix.value_or(Matrix()));
    }
    return j.dump();
}

WireRequest decode_request(const std::string& line) {
    const json j = parse_object(line);
    WireRequest r;
    r.id = j["id"].get<std::string>();
    try {
        r.role = parse_role(j.at("role").get<std::string>());
        r.horizon = j.value("horizon", 0);
        r.target_indices = j.value("target_indices", std::vector<int>{});
        r.variables = j.value("variables", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ProtocolError(fmt::format("bad request field ({}): {}", e.what(), excerpt(line)));
    }
    if (!j.contains("matrix")) throw ProtocolError("request lacks 'matrix': " + excerpt(line));
    r.matrix = matrix_from_json(j["matrix"], line);
    return r;
}

WireResponse decode_response(const std::string& line) {
    const json j = parse_object(line);
    WireResponse r;
    r.id = j["id"].get<std::string>();
    if (j.contains("error")) {
        r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
        return r;
    }
    if (!j.contains("matrix")) throw ProtocolError("response has neither 'matrix' nor 'error': " + excerpt(line));
    r.matrix = matrix_from_json(j["matrix"], line);
    return r;
}

std::string handle_frame(const std::string& line, const FrameHandler& handler) {
    std::string id;
    try {
        const json j = json::parse(line);
        if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
    } catch (const json::exception&) {
    }
    try {
        const WireRequest request = decode_request(line);
        return encode_response({request.id, handler(request), std::nullopt});
    } catch (const std::exception& e) {
        return encode_response({id, std::nullopt, std::string(e.what())});
    }
}

// --- child process transport -------------------------------------------------

ChildProcessTransport::ChildProcessTransport(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
    if (split_command(command_).empty()) throw ConfigError("exec endpoint has an empty command");
    // EPIPE instead of SIGPIPE on writes to an exited child.
    ::signal(SIGPIPE, SIG_IGN);
}

ChildProcessTransport::~ChildProcessTransport() { stop(); }

void ChildProcessTransport::start() {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw TransportError(fmt::format("pipe: {}", std::strerror(errno)), 1);
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw TransportError(fmt::format("pipe: {}", std::strerror(errno)), 1);
    }
    const auto args = split_command(command_);
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError(fmt::format("fork: {}", std::strerror(errno)), 1);
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::execvp(argv[0], argv.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    pending_.clear();
}

void ChildProcessTransport::stop() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == 0) {
            ::kill(pid_, SIGTERM);
            ::waitpid(pid_, &status, 0);
        }
    }
    pid_ = -1;
    pending_.clear();
}

std::string ChildProcessTransport::exchange(const std::string& line) {
    std::lock_guard lock(mutex_);
    if (pid_ < 0) start();
    const auto fail = [&](const std::string& why) {
        stop();
        return TransportError(fmt::format("{}: {}", describe(), why), 1);
    };

    std::string frame = line + '\n';
    std::size_t written = 0;
    while (written < frame.size()) {
        const ssize_t n = ::write(to_child_, frame.data() + written, frame.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw fail(fmt::format("write failed: {}", std::strerror(errno)));
        }
        written += static_cast<std::size_t>(n);
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
        const auto nl = pending_.find('\n');
        if (nl != std::string::npos) {
            std::string reply = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            return reply;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw fail("timed out waiting for a reply");
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw fail(fmt::format("poll failed: {}", std::strerror(errno)));
        }
        if (ready == 0) continue;
        char buf[65536];
        const ssize_t n = ::read(from_child_, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw fail(fmt::format("read failed: {}", std::strerror(errno)));
        }
        if (n == 0) throw fail("child process closed its output");
        pending_.append(buf, static_cast<std::size_t>(n));
    }
}

// --- HTTP transport ----------------------------------------------------------

HttpTransport::HttpTransport(std::string url, std::chrono::seconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
    const auto scheme = url_.find("://");
    if (scheme == std::string::npos) throw ConfigError(fmt::format("endpoint '{}' is not a URL", url_));
    const auto slash = url_.find('/', scheme + 3);
    base_ = url_.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url_.substr(slash);
}

std::string HttpTransport::exchange(const std::string& line) {
    std::lock_guard lock(mutex_);
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    const auto res = client.Post(path_, line, "application/json");
    if (!res) {
        throw TransportError(fmt::format("{}: {}", url_, httplib::to_string(res.error())), 1);
    }
    if (res->status >= 500) throw TransportError(fmt::format("{}: HTTP {}", url_, res->status), 1);
    if (res->status != 200 && res->body.empty()) {
        throw ProtocolError(fmt::format("{}: HTTP {} with empty body", url_, res->status));
    }
    std::string body = res->body;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return body;
}

std::unique_ptr<Transport> make_transport(const std::string& endpoint) {
    if (endpoint.rfind("exec:", 0) == 0) return std::make_unique<ChildProcessTransport>(endpoint.substr(5));
    if (endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0) {
        return std::make_unique<HttpTransport>(endpoint);
    }
    throw ConfigError(fmt::format("endpoint '{}' must be exec:COMMAND or an http URL", endpoint));
}

// --- client ------------------------------------------------------------------

ProtocolClient::ProtocolClient(std::unique_ptr<Transport> transport, RetryPolicy retry)
    : transport_(std::move(transport)), retry_(retry) {
    if (!transport_) throw ConfigError("protocol client needs a transport");
    if (retry_.attempts < 1) throw ConfigError("retry attempts must be >= 1");
}

Matrix ProtocolClient::call(WireRequest request) {
    {
        std::lock_guard lock(counter_mutex_);
        request.id = fmt::format("{}-{}", to_string(request.role), next_id_++);
    }
    const std::string line = encode_request(request);
    auto backoff = retry_.initial_backoff;
    std::string reply;
    for (int attempt = 1;; ++attempt) {
        try {
            reply = transport_->exchange(line);
            break;
        } catch (const TransportError& e) {
            if (attempt >= retry_.attempts) {
                throw TransportError(e.reason(), attempt);
            }
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    const WireResponse response = decode_response(reply);
    if (response.id != request.id) {
        throw ProtocolError(fmt::format("reply id '{}' does not match request id '{}'", response.id, request.id));
    }
    if (response.error) throw ProtocolError(fmt::format("peer reported an error: {}", *response.error));
    return *response.matrix;
}

ForecastResult forecast_external(const ForecastRequest& request, ProtocolClient& client) {
    request.validate();
    WireRequest wire;
    wire.role = Role::Forecast;
    wire.horizon = request.horizon;
    wire.target_indices = request.target_indices;
    wire.matrix = request.context;
    wire.variables = request.variables;
    Matrix values = client.call(std::move(wire));
    const auto n = static_cast<Eigen::Index>(request.target_indices.size());
    if (values.rows() != request.horizon || values.cols() != n) {
        throw ContractViolation(fmt::format("external forecaster returned {}x{}, expected {}x{}",
                                            values.rows(), values.cols(), request.horizon, n));
    }
    return {std::move(values), "external(" + client.transport().describe() + ")"};
}

ExternalForecaster::ExternalForecaster(std::unique_ptr<Transport> transport,
                                       std::optional<Eigen::Index> max_rows, RetryPolicy retry)
    : client_(std::make_unique<ProtocolClient>(std::move(transport), retry)), max_rows_(max_rows) {}

ForecastResult ExternalForecaster::forecast(const ForecastRequest& request) const {
    if (max_rows_ && request.context.rows() > *max_rows_) {
        throw ContractViolation(fmt::format("context of {} rows exceeds the endpoint limit of {}",
                                            request.context.rows(), *max_rows_));
    }
    return forecast_external(request, *client_);
}

ExternalEmbedder::ExternalEmbedder(std::unique_ptr<Transport> transport, Eigen::Index k_emb, RetryPolicy retry)
    : client_(std::make_unique<ProtocolClient>(std::move(transport), retry)), k_emb_(k_emb) {}

Embedding ExternalEmbedder::embed(const Matrix& window) const {
    WireRequest wire;
    wire.role = Role::Embed;
    wire.matrix = window;
    const Matrix reply = client_->call(std::move(wire));
    if (reply.rows() != 1 || reply.cols() != k_emb_) {
        throw ContractViolation(fmt::format("external embedder returned {}x{}, expected 1x{}", reply.rows(),
                                            reply.cols(), k_emb_));
    }
    return reply.row(0).transpose();
}

}  // namespace raf
