#ifndef RCBO_SCHEDULE_HPP
#define RCBO_SCHEDULE_HPP

#include "rcbo/types.hpp"

#include <cmath>
#include <string>

namespace rcbo {

// Time-dependent coefficient t -> value, used for beta(t), sigma(t) and the
// repelling strength lambda(t).
template <typename Scalar>
class Schedule {
public:
    enum class Kind { Constant, Linear, ExpDecay, InverseSquare };

    Schedule() = default;

    static Schedule constant(Scalar v) { return Schedule(Kind::Constant, v, 0); }
    // a + b t
    static Schedule linear(Scalar a, Scalar b) { return Schedule(Kind::Linear, a, b); }
    // v0 exp(-rate t)
    static Schedule exp_decay(Scalar v0, Scalar rate) { return Schedule(Kind::ExpDecay, v0, rate); }
    // v0 / (1 + t^2)
    static Schedule inverse_square(Scalar v0) { return Schedule(Kind::InverseSquare, v0, 0); }

    Scalar operator()(Scalar t) const
    {
        switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Linear: return a_ + b_ * t;
        case Kind::ExpDecay: return a_ * std::exp(-b_ * t);
        case Kind::InverseSquare: return a_ / (1 + t * t);
        }
        return a_;
    }

    Kind kind() const { return kind_; }

    // Nonnegative on [0, t_end]. Linear is monotone, the others keep the sign of v0.
    bool nonnegative_on(Scalar t_end) const
    {
        if (kind_ == Kind::Linear) return a_ >= 0 && a_ + b_ * t_end >= 0;
        return a_ >= 0;
    }

    // Round-trips through parse_schedule.
    std::string to_string() const
    {
        auto num = [](Scalar v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", double(v));
            return std::string(buf);
        };
        switch (kind_) {
        case Kind::Constant: return "const:" + num(a_);
        case Kind::Linear: return "linear:" + num(a_) + ":" + num(b_);
        case Kind::ExpDecay: return "expdecay:" + num(a_) + ":" + num(b_);
        case Kind::InverseSquare: return "invsq:" + num(a_);
        }
        return {};
    }

private:
    Schedule(Kind kind, Scalar a, Scalar b) : kind_(kind), a_(a), b_(b) {}

    Kind kind_ = Kind::Constant;
    Scalar a_ = 0;
    Scalar b_ = 0;
};

// Accepts "const:v", "linear:a:b", "expdecay:v0:rate", "invsq:v0", or a bare
// number (constant).
template <typename Scalar = double>
Schedule<Scalar> parse_schedule(const std::string& text)
{
    auto fail = [&]() -> ConfigError {
        return ConfigError("invalid schedule '" + text +
                           "' (expected const:v, linear:a:b, expdecay:v0:rate, invsq:v0 or a number)");
    };
    auto to_number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw fail();
        }
        if (used != s.size()) throw fail();
        return Scalar(v);
    };

    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(':', start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (parts.size() == 1) return Schedule<Scalar>::constant(to_number(parts[0]));
    const std::string& kind = parts[0];
    if (kind == "const" && parts.size() == 2) return Schedule<Scalar>::constant(to_number(parts[1]));
    if (kind == "linear" && parts.size() == 3)
        return Schedule<Scalar>::linear(to_number(parts[1]), to_number(parts[2]));
    if (kind == "expdecay" && parts.size() == 3)
        return Schedule<Scalar>::exp_decay(to_number(parts[1]), to_number(parts[2]));
    if (kind == "invsq" && parts.size() == 2) return Schedule<Scalar>::inverse_square(to_number(parts[1]));
    throw fail();
}

} // namespace rcbo

#endif // RCBO_SCHEDULE_HPP
