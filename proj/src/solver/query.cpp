#include "elastic/query.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cstdlib>

namespace elastic {

namespace {

std::string_view field_name(Field f) {
    switch (f) {
    case Field::vms_num: return "vms_num";
    case Field::latency: return "latency";
    case Field::throughput: return "throughput";
    }
    return "?";
}

std::string_view op_symbol(CompareOp op) {
    switch (op) {
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    case CompareOp::eq: return "=";
    case CompareOp::ne: return "!=";
    }
    return "?";
}

// Recursive-descent reader over the query text; every error carries the
// offset where it was detected.
class QueryParser {
public:
    explicit QueryParser(std::string_view text) : text_(text) {}

    ReachabilityQuery parse() {
        ReachabilityQuery q;
        skip_space();
        if (consume("Pmax")) {
            q.mode = ReachabilityQuery::Mode::max;
        } else if (consume("Pmin")) {
            q.mode = ReachabilityQuery::Mode::min;
        } else {
            throw ParseError("expected 'Pmax' or 'Pmin'", pos_);
        }
        expect("=?");
        expect("[");
        expect("F");
        q.predicate.terms.push_back(comparison());
        while (peek_is('&')) {
            ++pos_;
            if (peek_is('&')) ++pos_; // accept "&&"
            q.predicate.terms.push_back(comparison());
        }
        expect("]");
        skip_space();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return q;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek_is(char c) {
        skip_space();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool consume(std::string_view token) {
        skip_space();
        if (text_.substr(pos_).starts_with(token)) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view token) {
        if (!consume(token)) {
            if (pos_ >= text_.size()) throw ParseError(fmt::format("unexpected end of input, expected '{}'", token), pos_);
            throw ParseError(fmt::format("expected '{}'", token), pos_);
        }
    }

    Comparison comparison() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        if (start == pos_) {
            if (pos_ >= text_.size()) throw ParseError("unexpected end of input, expected a field name", pos_);
            throw ParseError("expected a field name", pos_);
        }
        const std::string name(text_.substr(start, pos_ - start));
        Comparison c;
        if (name == "vms_num") c.field = Field::vms_num;
        else if (name == "latency") c.field = Field::latency;
        else if (name == "throughput") c.field = Field::throughput;
        else throw ParseError(fmt::format("unknown field '{}'", name), start);

        skip_space();
        if (consume("<=")) c.op = CompareOp::le;
        else if (consume(">=")) c.op = CompareOp::ge;
        else if (consume("!=")) c.op = CompareOp::ne;
        else if (consume("==")) c.op = CompareOp::eq;
        else if (consume("<")) c.op = CompareOp::lt;
        else if (consume(">")) c.op = CompareOp::gt;
        else if (consume("=")) c.op = CompareOp::eq;
        else if (pos_ >= text_.size()) throw ParseError("unexpected end of input, expected a comparison operator", pos_);
        else throw ParseError("expected a comparison operator", pos_);

        skip_space();
        const std::size_t num_start = pos_;
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input, expected a number", pos_);
        const std::string rest(text_.substr(pos_));
        char* end = nullptr;
        c.value = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) throw ParseError("expected a number", num_start);
        pos_ += static_cast<std::size_t>(end - rest.c_str());
        return c;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

bool compare(double lhs, CompareOp op, double rhs) {
    switch (op) {
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
    }
    return false;
}

} // namespace

bool Predicate::holds(const MdpState& state) const {
    for (const Comparison& c : terms) {
        double lhs = 0.0;
        if (c.field == Field::vms_num) {
            lhs = state.vms;
        } else {
            if (!state.center) {
                throw InstantiationError(
                    fmt::format("state with {} VMs has no behavior center to evaluate '{}'", state.vms, field_name(c.field)));
            }
            lhs = c.field == Field::latency ? state.center->latency_ms : state.center->throughput;
        }
        if (!compare(lhs, c.op, c.value)) return false;
    }
    return true;
}

ReachabilityQuery parse_query(std::string_view text) { return QueryParser(text).parse(); }

std::string to_string(const ReachabilityQuery& query) {
    std::string out = query.mode == ReachabilityQuery::Mode::max ? "Pmax=? [ F " : "Pmin=? [ F ";
    for (std::size_t i = 0; i < query.predicate.terms.size(); ++i) {
        const Comparison& c = query.predicate.terms[i];
        if (i > 0) out += " & ";
        out += fmt::format("{}{}{}", field_name(c.field), op_symbol(c.op), c.value);
    }
    return out + " ]";
}

} // namespace elastic
