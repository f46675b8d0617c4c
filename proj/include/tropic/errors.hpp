#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tropic {

// Base of every error raised by the library. `code()` is a stable
// machine-readable tag used by the HTTP layer.
class error : public std::runtime_error {
public:
  error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

class empty_input : public error {
public:
  empty_input() : error("empty_input", "input contains no records") {}
};

class limit_exceeded : public error {
public:
  limit_exceeded(std::size_t count, std::size_t limit)
      : error("limit_exceeded", "input has " + std::to_string(count) +
                                    " records, limit is " + std::to_string(limit)),
        count(count), limit(limit) {}

  std::size_t count;
  std::size_t limit;
};

struct row_error {
  std::size_t line_no;
  std::string reason;
};

// Raised with every collected row diagnostic. `aborted` is set when the
// collection cap was reached and parsing stopped early.
class malformed_input : public error {
public:
  malformed_input(std::vector<row_error> rows, bool aborted)
      : error(aborted ? "parse_aborted" : "malformed_row", describe(rows, aborted)),
        rows(std::move(rows)), aborted(aborted) {}

  std::vector<row_error> rows;
  bool aborted;

private:
  static std::string describe(const std::vector<row_error>& rows, bool aborted) {
    std::string s = std::to_string(rows.size()) + " malformed row(s)";
    if (!rows.empty())
      s += ", first at line " + std::to_string(rows.front().line_no) + ": " + rows.front().reason;
    if (aborted)
      s += " (parse aborted)";
    return s;
  }
};

class no_host : public error {
public:
  explicit no_host(const std::string& url) : error("no_host", "no host in '" + url + "'") {}
};

class score_out_of_range : public error {
public:
  explicit score_out_of_range(const std::string& what, std::size_t line_no = 0)
      : error("score_out_of_range", what), line_no(line_no) {}

  // 1-based input line, 0 when the score did not come from a file.
  std::size_t line_no;
};

class duplicate_domain : public error {
public:
  explicit duplicate_domain(const std::string& domain)
      : error("duplicate_domain", "duplicate domain '" + domain + "'"), domain(domain) {}

  std::string domain;
};

class index_out_of_range : public error {
public:
  index_out_of_range(std::size_t index, std::size_t size)
      : error("index_out_of_range",
              "index " + std::to_string(index) + " out of range [0, " + std::to_string(size) + ")") {}
};

class no_convergence : public error {
public:
  no_convergence(std::size_t iterations, double residual)
      : error("no_convergence", "solver stopped after " + std::to_string(iterations) +
                                    " iterations with residual " + std::to_string(residual)),
        iterations(iterations), residual(residual) {}

  std::size_t iterations;
  double residual;
};

class invalid_argument : public error {
public:
  explicit invalid_argument(const std::string& what) : error("invalid_argument", what) {}
};

class not_a_voter : public error {
public:
  explicit not_a_voter(const std::string& user) : error("not_a_voter", "'" + user + "' is not a voter") {}
};

class already_annotated : public error {
public:
  explicit already_annotated(const std::string& publisher)
      : error("already_annotated", "'" + publisher + "' is already annotated") {}
};

class unknown_publisher : public error {
public:
  explicit unknown_publisher(const std::string& publisher)
      : error("unknown_publisher", "publisher '" + publisher + "' does not appear in the edge list") {}
};

class not_user_annotated : public error {
public:
  explicit not_user_annotated(const std::string& publisher)
      : error("not_user_annotated", "'" + publisher + "' has no user annotation") {}
};

}  // namespace tropic
