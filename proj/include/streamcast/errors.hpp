#pragma once

#include <stdexcept>
#include <string>

namespace streamcast {

/// Coarse error class; maps one-to-one onto CLI exit codes.
enum class ErrorKind { validation = 1, data = 2, runtime = 3 };

class Error : public std::runtime_error {
public:
	Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {
	}

	ErrorKind kind() const noexcept {
		return kind_;
	}

private:
	ErrorKind kind_;
};

/// Invalid run configuration (unknown key, violated constraint).
class ConfigError : public Error {
public:
	explicit ConfigError(const std::string &what) : Error(ErrorKind::validation, what) {
	}
};

/// Input does not carry a column the role mapping asks for.
class SchemaError : public Error {
public:
	explicit SchemaError(const std::string &what) : Error(ErrorKind::data, what) {
	}
};

/// Malformed input file: bad cell, duplicated or gapped timestamps.
class FormatError : public Error {
public:
	FormatError(const std::string &what, std::size_t line) : Error(ErrorKind::data, what), line_(line) {
	}

	/// 1-based line of the first offending row (header is line 1), 0 if unknown.
	std::size_t line() const noexcept {
		return line_;
	}

private:
	std::size_t line_;
};

/// Well-formed input that cannot be used: too short, unrecoverable gaps.
class DataError : public Error {
public:
	explicit DataError(const std::string &what) : Error(ErrorKind::data, what) {
	}
};

/// Violation of the test-then-train stream protocol.
class ProtocolError : public Error {
public:
	explicit ProtocolError(const std::string &what) : Error(ErrorKind::runtime, what) {
	}
};

/// Two forecast reports that do not cover the same origins.
class AlignmentError : public Error {
public:
	explicit AlignmentError(const std::string &what) : Error(ErrorKind::data, what) {
	}
};

/// Statistical test whose variance estimate is zero or negative.
class DegenerateTestError : public Error {
public:
	explicit DegenerateTestError(const std::string &what) : Error(ErrorKind::runtime, what) {
	}
};

} // namespace streamcast
