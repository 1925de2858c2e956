#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace quiet {

// Error categories map 1:1 onto process exit codes and C API status codes.
enum class ErrorKind { usage = 1, validation = 2, provider = 3, scoring = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorKind::usage, m) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error(ErrorKind::validation, m) {}
};
struct ProviderError : Error {
    explicit ProviderError(const std::string& m) : Error(ErrorKind::provider, m) {}
};
struct ScoringError : Error {
    explicit ScoringError(const std::string& m) : Error(ErrorKind::scoring, m) {}
};

std::string sha256_hex(const std::string& bytes);
uint64_t fnv1a64(const std::string& s);

// Deterministic cross-platform PRNG stream. Used for fixtures and fuzz tests;
// std::random distributions are not bit-stable across standard libraries.
struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next();
    double next_double();                    // [0, 1)
    double next_in(double lo, double hi);    // [lo, hi)
    uint64_t next_below(uint64_t n);         // [0, n)
};

std::string read_file(const std::string& path);
// Write via temp file + rename so concurrent readers never see partial content.
void write_file_atomic(const std::string& path, const std::string& content);

std::string fmt_fixed(double v, int decimals);
std::string fmt_full(double v);  // round-trippable %.17g
std::string csv_cell(const std::string& s);
std::vector<std::string> csv_split_line(const std::string& line);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
std::string lower(const std::string& s);
bool starts_with(const std::string& s, const std::string& prefix);

// Runs fn(0..n-1) on up to `bound` worker threads. Rethrows the first
// exception after all workers join. bound <= 1 runs inline.
void parallel_for(std::size_t n, int bound, const std::function<void(std::size_t)>& fn);

}  // namespace quiet
