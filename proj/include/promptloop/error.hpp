#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace promptloop {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class decode_error : public error {
public:
    decode_error(const std::string& what, std::size_t offset)
        : error(what + " (at byte offset " + std::to_string(offset) + ")"), message_(what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    std::size_t offset_;
};

// mismatched dimensions or channel counts between two inputs
class shape_error : public error {
public:
    using error::error;
};

// input too small for the requested window / filter bank
class size_error : public error {
public:
    using error::error;
};

class metric_undefined_error : public error {
public:
    using error::error;
};

// value outside a type's declared invariants
class precondition_error : public error {
public:
    using error::error;
};

class backend_unreachable_error : public error {
public:
    using error::error;
};

class parse_error : public error {
public:
    parse_error(const std::string& what, std::string raw_response)
        : error(what), raw_response_(std::move(raw_response)) {}

    const std::string& raw_response() const noexcept { return raw_response_; }

private:
    std::string raw_response_;
};

// backend answered with a 4xx status
class backend_rejected_error : public error {
public:
    backend_rejected_error(const std::string& what, int status) : error(what), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

// backend answered, but the response body is unusable
class payload_error : public error {
public:
    using error::error;
};

class manifest_error : public error {
public:
    using error::error;
};

class run_error : public error {
public:
    using error::error;
};

} // namespace promptloop
