#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace twospin {

// Spin configurations are packed into a bitmask: bit i set means spin +1.
using Config = std::uint32_t;
inline constexpr int kMaxBits = 30;

inline int spin_at(Config c, int i) { return ((c >> i) & 1u) ? +1 : -1; }
inline bool is_plus(Config c, int i) { return (c >> i) & 1u; }
inline Config set_spin(Config c, int i, int spin) {
    return spin > 0 ? (c | (Config{1} << i)) : (c & ~(Config{1} << i));
}
inline Config flip_bit(Config c, int i) { return c ^ (Config{1} << i); }
inline int popcount(Config c) { return __builtin_popcount(c); }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DimensionError : public Error {
public:
    using Error::Error;
};
class InfeasiblePinning : public Error {
public:
    using Error::Error;
};
class LimitExceeded : public Error {
public:
    using Error::Error;
};
class DomainError : public Error {
public:
    using Error::Error;
};
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

// Enumeration limit, overridable with TWOSPIN_ENUM_LIMIT.
int enumeration_limit();

// Extended real with explicit infinity tags; never relies on IEEE inf in products.
class ExtReal {
public:
    enum class Kind { Finite, PosInf, NegInf };

    ExtReal() = default;
    static ExtReal finite(double v) { return ExtReal(Kind::Finite, v); }
    static ExtReal pos_inf() { return ExtReal(Kind::PosInf, 0.0); }
    static ExtReal neg_inf() { return ExtReal(Kind::NegInf, 0.0); }

    Kind kind() const { return kind_; }
    bool is_finite() const { return kind_ == Kind::Finite; }
    bool is_pos_inf() const { return kind_ == Kind::PosInf; }
    bool is_neg_inf() const { return kind_ == Kind::NegInf; }
    // Only valid for finite values.
    double value() const;
    // IEEE view, for printing and comparisons at the edges.
    double as_double() const;
    std::string to_string() const;

    friend bool operator==(const ExtReal& a, const ExtReal& b) {
        return a.kind_ == b.kind_ && (a.kind_ != Kind::Finite || a.value_ == b.value_);
    }
    friend bool operator<(const ExtReal& a, const ExtReal& b);
    friend bool operator<=(const ExtReal& a, const ExtReal& b) { return a < b || a == b; }

private:
    ExtReal(Kind k, double v) : kind_(k), value_(v) {}
    Kind kind_ = Kind::Finite;
    double value_ = 0.0;
};

// Verdict shared by falsifier-style checkers. Maps to CLI exit codes 0/1/3.
enum class Verdict { Pass, Violation, BudgetExhausted };
const char* to_string(Verdict v);

// Deterministic RNG helpers; the draws do not depend on the standard library's
// distribution implementations, so traces are identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                      // [0,1)
    double uniform(double lo, double hi);  // [lo,hi)
    std::uint64_t below(std::uint64_t n);  // [0,n)
    double log_uniform(double lo, double hi);
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// splitmix-style mixer used to derive per-task seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

double binomial(int n, int k);

}  // namespace twospin
