#include "twospin/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace twospin {

int enumeration_limit() {
    if (const char* env = std::getenv("TWOSPIN_ENUM_LIMIT")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0 && v <= kMaxBits) return static_cast<int>(v);
        throw DomainError("TWOSPIN_ENUM_LIMIT must be an integer in [1, 30]");
    }
    return 20;
}

double ExtReal::value() const {
    if (kind_ != Kind::Finite) throw DomainError("value() on an infinite extended real");
    return value_;
}

double ExtReal::as_double() const {
    switch (kind_) {
        case Kind::PosInf: return std::numeric_limits<double>::infinity();
        case Kind::NegInf: return -std::numeric_limits<double>::infinity();
        default: return value_;
    }
}

std::string ExtReal::to_string() const {
    if (kind_ == Kind::PosInf) return "inf";
    if (kind_ == Kind::NegInf) return "-inf";
    std::ostringstream os;
    os.precision(17);
    os << value_;
    return os.str();
}

bool operator<(const ExtReal& a, const ExtReal& b) {
    using K = ExtReal::Kind;
    if (a.kind_ == b.kind_) return a.kind_ == K::Finite && a.value_ < b.value_;
    if (a.kind_ == K::NegInf || b.kind_ == K::PosInf) return true;
    return false;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Violation: return "violation";
        case Verdict::BudgetExhausted: return "budget_exhausted";
    }
    return "?";
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw DomainError("Rng::below(0)");
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed ^ (salt + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

}  // namespace twospin
