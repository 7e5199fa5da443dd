#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "marketspin/common.hpp"

namespace mspin {

/// Exact decimal number: value = units / 10^scale, normalized so that
/// units has no factor of 10 unless scale is 0. Quoted prices are discrete,
/// and the spin tie rule compares them exactly, so prices are never held
/// as binary floating point.
class Decimal {
public:
    Decimal() = default;

    static Decimal from_int(std::int64_t v) { return Decimal(v, 0); }

    /// Nearest decimal with `digits` fractional digits (ties away from zero).
    static Decimal from_double(double v, int digits) {
        if (!std::isfinite(v)) throw Error("non-finite value cannot be a price");
        if (digits < 0 || digits > 18) throw Error("decimal digits out of range");
        double scaled = v;
        for (int i = 0; i < digits; ++i) scaled *= 10.0;
        if (std::abs(scaled) >= 9.2e18) throw Error("value out of decimal range");
        return Decimal(static_cast<std::int64_t>(std::llround(scaled)), digits);
    }

    /// Strict parse: [-]digits[.digits], no exponent, at most 18 digits total.
    static std::optional<Decimal> try_parse(std::string_view text) {
        std::size_t i = 0;
        bool negative = false;
        if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
            negative = text[i] == '-';
            ++i;
        }
        std::int64_t units = 0;
        int digits = 0, scale = 0;
        bool seen_dot = false, seen_digit = false;
        for (; i < text.size(); ++i) {
            char c = text[i];
            if (c == '.') {
                if (seen_dot) return std::nullopt;
                seen_dot = true;
                continue;
            }
            if (c < '0' || c > '9') return std::nullopt;
            seen_digit = true;
            if (units == 0 && c == '0' && !seen_dot && digits == 0) continue; // leading zeros
            if (++digits > 18) return std::nullopt;
            units = units * 10 + (c - '0');
            if (seen_dot) ++scale;
        }
        if (!seen_digit) return std::nullopt;
        if (negative) units = -units;
        return Decimal(units, scale);
    }

    static Decimal parse(std::string_view text) {
        auto d = try_parse(text);
        if (!d) throw Error("malformed decimal: '" + std::string(text) + "'");
        return *d;
    }

    bool positive() const { return units_ > 0; }
    bool is_zero() const { return units_ == 0; }
    bool is_integer() const { return scale_ == 0; }

    /// Exact integer value; only valid when is_integer().
    std::int64_t to_int64() const {
        if (scale_ != 0) throw Error("decimal " + str() + " is not an integer");
        return units_;
    }

    double to_double() const {
        double v = static_cast<double>(units_);
        for (int i = 0; i < scale_; ++i) v /= 10.0;
        return v;
    }

    std::string str() const {
        std::string digits = std::to_string(units_ < 0 ? -units_ : units_);
        if (scale_ == 0) return (units_ < 0 ? "-" : "") + digits;
        if (static_cast<int>(digits.size()) <= scale_)
            digits.insert(0, scale_ + 1 - digits.size(), '0');
        digits.insert(digits.size() - scale_, ".");
        return (units_ < 0 ? "-" : "") + digits;
    }

    friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
        // Cross-multiplied comparison on a common scale; 128-bit holds
        // 18 digits * 10^18 without overflow.
        __int128 lhs = static_cast<__int128>(a.units_) * pow10(b.scale_);
        __int128 rhs = static_cast<__int128>(b.units_) * pow10(a.scale_);
        if (lhs < rhs) return std::strong_ordering::less;
        if (lhs > rhs) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    friend bool operator==(const Decimal& a, const Decimal& b) {
        return (a <=> b) == std::strong_ordering::equal;
    }

private:
    Decimal(std::int64_t units, int scale) : units_(units), scale_(scale) {
        while (scale_ > 0 && units_ % 10 == 0) {
            units_ /= 10;
            --scale_;
        }
    }

    static __int128 pow10(int n) {
        __int128 p = 1;
        while (n-- > 0) p *= 10;
        return p;
    }

    std::int64_t units_ = 0;
    int scale_ = 0;
};

} // namespace mspin
