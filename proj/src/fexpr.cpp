#include "pcurve/fexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace pcurve::fexpr {

enum class Kind {
    Number, X, Z, Nu, W, R2,
    Neg, Add, Sub, Mul, Div, Pow,
    Exp, Log, Sqrt
};

struct Node {
    Kind kind;
    double num = 0.0;  // Number value; Pow exponent lives in b as a Number
    int index = 0;     // 0-based X / Nu index
    std::shared_ptr<const Node> a, b;
};

namespace {

using P = std::shared_ptr<const Node>;

P make_num(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Number;
    n->num = v;
    return n;
}

P make_leaf(Kind k, int index = 0) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->index = index;
    return n;
}

P make_unary(Kind k, P a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    return n;
}

P make_binary(Kind k, P a, P b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

bool is_num(const P& e, double v) {
    return e->kind == Kind::Number && e->num == v;
}

// Folding constructors. Only number-on-number arithmetic and the algebraic
// identities that cannot change runtime error behaviour are folded.
P add(P a, P b) {
    if (a->kind == Kind::Number && b->kind == Kind::Number)
        return make_num(a->num + b->num);
    if (is_num(a, 0.0)) return b;
    if (is_num(b, 0.0)) return a;
    return make_binary(Kind::Add, std::move(a), std::move(b));
}

P sub(P a, P b) {
    if (a->kind == Kind::Number && b->kind == Kind::Number)
        return make_num(a->num - b->num);
    if (is_num(b, 0.0)) return a;
    return make_binary(Kind::Sub, std::move(a), std::move(b));
}

P neg(P a) {
    if (a->kind == Kind::Number) return make_num(-a->num);
    if (a->kind == Kind::Neg) return a->a;
    return make_unary(Kind::Neg, std::move(a));
}

P mul(P a, P b) {
    if (a->kind == Kind::Number && b->kind == Kind::Number)
        return make_num(a->num * b->num);
    if (is_num(a, 0.0) || is_num(b, 0.0)) return make_num(0.0);
    if (is_num(a, 1.0)) return b;
    if (is_num(b, 1.0)) return a;
    return make_binary(Kind::Mul, std::move(a), std::move(b));
}

P div(P a, P b) {
    if (b->kind == Kind::Number && b->num != 0.0) {
        if (a->kind == Kind::Number) return make_num(a->num / b->num);
        if (b->num == 1.0) return a;
    }
    return make_binary(Kind::Div, std::move(a), std::move(b));
}

P pow_const(P a, double c) {
    if (c == 1.0) return a;
    if (a->kind == Kind::Number) return make_num(std::pow(a->num, c));
    return make_binary(Kind::Pow, std::move(a), make_num(c));
}

double eval_node(const Node& e, const Env& env) {
    switch (e.kind) {
        case Kind::Number: return e.num;
        case Kind::X:
            if (e.index >= env.x.size())
                throw Error("environment is missing coordinate x" +
                            std::to_string(e.index + 1));
            return env.x[e.index];
        case Kind::Z: return env.z;
        case Kind::Nu:
            if (e.index >= env.nu.size())
                throw Error("environment is missing normal component nu" +
                            std::to_string(e.index + 1));
            return env.nu[e.index];
        case Kind::W: {
            if (env.nu.size() == 0)
                throw Error("environment is missing the normal vector");
            const double top = env.nu[env.nu.size() - 1];
            if (top == 0.0) throw EvalDomainError("w undefined: nu_{n+1} = 0");
            return 1.0 / top;
        }
        case Kind::R2: return env.x.squaredNorm();
        case Kind::Neg: return -eval_node(*e.a, env);
        case Kind::Add: return eval_node(*e.a, env) + eval_node(*e.b, env);
        case Kind::Sub: return eval_node(*e.a, env) - eval_node(*e.b, env);
        case Kind::Mul: return eval_node(*e.a, env) * eval_node(*e.b, env);
        case Kind::Div: {
            const double d = eval_node(*e.b, env);
            if (d == 0.0) throw EvalDomainError("division by zero");
            return eval_node(*e.a, env) / d;
        }
        case Kind::Pow: {
            const double base = eval_node(*e.a, env);
            const double c = e.b->num;
            if (base < 0.0 && c != std::floor(c))
                throw EvalDomainError("negative base with non-integer exponent");
            if (base == 0.0 && c < 0.0)
                throw EvalDomainError("zero base with negative exponent");
            return std::pow(base, c);
        }
        case Kind::Exp: return std::exp(eval_node(*e.a, env));
        case Kind::Log: {
            const double v = eval_node(*e.a, env);
            if (v <= 0.0) throw EvalDomainError("log of a non-positive value");
            return std::log(v);
        }
        case Kind::Sqrt: {
            const double v = eval_node(*e.a, env);
            if (v < 0.0) throw EvalDomainError("sqrt of a negative value");
            return std::sqrt(v);
        }
    }
    throw Error("corrupt expression tree");
}

// d(node)/d(var) where var is Z, or Nu with a fixed index (nu_idx >= 0).
// w differentiates as (nu_{n+1})^{-1}; r2 depends on x only.
P diff_node(const P& e, Kind var, int nu_idx, int n) {
    switch (e->kind) {
        case Kind::Number:
        case Kind::X:
        case Kind::R2:
            return make_num(0.0);
        case Kind::Z:
            return make_num(var == Kind::Z ? 1.0 : 0.0);
        case Kind::Nu:
            return make_num(var == Kind::Nu && e->index == nu_idx ? 1.0 : 0.0);
        case Kind::W:
            if (var == Kind::Nu && nu_idx == n)
                return neg(pow_const(make_leaf(Kind::Nu, n), -2.0));
            return make_num(0.0);
        case Kind::Neg:
            return neg(diff_node(e->a, var, nu_idx, n));
        case Kind::Add:
            return add(diff_node(e->a, var, nu_idx, n), diff_node(e->b, var, nu_idx, n));
        case Kind::Sub:
            return sub(diff_node(e->a, var, nu_idx, n), diff_node(e->b, var, nu_idx, n));
        case Kind::Mul:
            return add(mul(diff_node(e->a, var, nu_idx, n), e->b),
                       mul(e->a, diff_node(e->b, var, nu_idx, n)));
        case Kind::Div:
            // (a/b)' = a'/b - a b' / b^2
            return sub(div(diff_node(e->a, var, nu_idx, n), e->b),
                       div(mul(e->a, diff_node(e->b, var, nu_idx, n)),
                           mul(e->b, e->b)));
        case Kind::Pow: {
            const double c = e->b->num;
            if (c == 0.0) return make_num(0.0);
            return mul(mul(make_num(c), pow_const(e->a, c - 1.0)),
                       diff_node(e->a, var, nu_idx, n));
        }
        case Kind::Exp:
            return mul(make_unary(Kind::Exp, e->a), diff_node(e->a, var, nu_idx, n));
        case Kind::Log:
            return div(diff_node(e->a, var, nu_idx, n), e->a);
        case Kind::Sqrt:
            return div(diff_node(e->a, var, nu_idx, n),
                       mul(make_num(2.0), make_unary(Kind::Sqrt, e->a)));
    }
    throw Error("corrupt expression tree");
}

void print_node(const Node& e, std::ostream& os) {
    switch (e.kind) {
        case Kind::Number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", e.num);
            if (e.num < 0)
                os << "(" << buf << ")";
            else
                os << buf;
            return;
        }
        case Kind::X: os << "x" << (e.index + 1); return;
        case Kind::Z: os << "z"; return;
        case Kind::Nu: os << "nu" << (e.index + 1); return;
        case Kind::W: os << "w"; return;
        case Kind::R2: os << "r2"; return;
        case Kind::Neg:
            os << "(-";
            print_node(*e.a, os);
            os << ")";
            return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div:
        case Kind::Pow: {
            const char* op = e.kind == Kind::Add   ? "+"
                             : e.kind == Kind::Sub ? "-"
                             : e.kind == Kind::Mul ? "*"
                             : e.kind == Kind::Div ? "/"
                                                   : "^";
            os << "(";
            print_node(*e.a, os);
            os << op;
            print_node(*e.b, os);
            os << ")";
            return;
        }
        case Kind::Exp:
        case Kind::Log:
        case Kind::Sqrt: {
            os << (e.kind == Kind::Exp ? "exp" : e.kind == Kind::Log ? "log" : "sqrt");
            os << "(";
            print_node(*e.a, os);
            os << ")";
            return;
        }
    }
}

void collect_use(const Node& e, Expr::VarUse& u, int n) {
    switch (e.kind) {
        case Kind::X: u.x = true; break;
        case Kind::Z: u.z = true; break;
        case Kind::R2: u.r2 = true; break;
        case Kind::W: u.w = true; break;
        case Kind::Nu:
            (e.index == n ? u.nu_vertical : u.nu_lateral) = true;
            break;
        default: break;
    }
    if (e.a) collect_use(*e.a, u, n);
    if (e.b) collect_use(*e.b, u, n);
}

P fold(const P& e);

class Parser {
public:
    Parser(const std::string& src, int n) : src_(src), n_(n) {}

    P run() {
        P e = expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    // expr := term (("+"|"-") term)*
    P expr() {
        P e = term();
        while (true) {
            skip_ws();
            if (peek() == '+') {
                ++pos_;
                e = make_binary(Kind::Add, e, term());
            } else if (peek() == '-') {
                ++pos_;
                e = make_binary(Kind::Sub, e, term());
            } else {
                return e;
            }
        }
    }

    // term := factor (("*"|"/") factor)*
    P term() {
        P e = factor();
        while (true) {
            skip_ws();
            if (peek() == '*') {
                ++pos_;
                e = make_binary(Kind::Mul, e, factor());
            } else if (peek() == '/') {
                ++pos_;
                e = make_binary(Kind::Div, e, factor());
            } else {
                return e;
            }
        }
    }

    // factor := unary ("^" factor)?   -- right-associative, constant exponent
    P factor() {
        P base = unary();
        skip_ws();
        if (peek() == '^') {
            ++pos_;
            skip_ws();
            const std::size_t at = pos_;
            P e = fold(factor());
            if (e->kind != Kind::Number)
                throw ParseError("exponent must be a constant", at);
            return make_binary(Kind::Pow, base, e);
        }
        return base;
    }

    // unary := "-" unary | primary
    P unary() {
        skip_ws();
        if (peek() == '-') {
            ++pos_;
            return make_unary(Kind::Neg, unary());
        }
        return primary();
    }

    // primary := number | ident | ident "(" expr ")" | "(" expr ")"
    P primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            P e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    P number() {
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("malformed number", pos_);
        pos_ += static_cast<std::size_t>(end - begin);
        return make_num(v);
    }

    P ident() {
        const std::size_t at = pos_;
        std::size_t len = 0;
        while (pos_ + len < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_ + len])) ||
                src_[pos_ + len] == '_'))
            ++len;
        const std::string name = src_.substr(pos_, len);
        pos_ += len;

        if (name == "z") return make_leaf(Kind::Z);
        if (name == "w") return make_leaf(Kind::W);
        if (name == "r2") return make_leaf(Kind::R2);
        if (name == "exp" || name == "log" || name == "sqrt") {
            skip_ws();
            expect('(');
            P arg = expr();
            expect(')');
            const Kind k = name == "exp" ? Kind::Exp
                           : name == "log" ? Kind::Log
                                           : Kind::Sqrt;
            return make_unary(k, std::move(arg));
        }
        if (name.size() > 1 && name[0] == 'x' && all_digits(name, 1)) {
            const int idx = std::atoi(name.c_str() + 1);
            if (idx < 1 || idx > n_)
                throw ParseError("coordinate index out of range for n = " +
                                     std::to_string(n_),
                                 at);
            return make_leaf(Kind::X, idx - 1);
        }
        if (name.size() > 2 && name.compare(0, 2, "nu") == 0 && all_digits(name, 2)) {
            const int idx = std::atoi(name.c_str() + 2);
            if (idx < 1 || idx > n_ + 1)
                throw ParseError("normal component index out of range for n = " +
                                     std::to_string(n_),
                                 at);
            return make_leaf(Kind::Nu, idx - 1);
        }
        throw ParseError("unknown identifier '" + name + "'", at);
    }

    static bool all_digits(const std::string& s, std::size_t from) {
        for (std::size_t i = from; i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        return true;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != c)
            throw ParseError(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    const std::string& src_;
    int n_;
    std::size_t pos_ = 0;
};

// Re-fold a parsed tree so that constant subtrees collapse; in particular a
// constant exponent expression like 2^(1+1) becomes a Number.
P fold(const P& e) {
    switch (e->kind) {
        case Kind::Number:
        case Kind::X:
        case Kind::Z:
        case Kind::Nu:
        case Kind::W:
        case Kind::R2:
            return e;
        case Kind::Neg: return neg(fold(e->a));
        case Kind::Add: return add(fold(e->a), fold(e->b));
        case Kind::Sub: return sub(fold(e->a), fold(e->b));
        case Kind::Mul: return mul(fold(e->a), fold(e->b));
        case Kind::Div: return div(fold(e->a), fold(e->b));
        case Kind::Pow: return pow_const(fold(e->a), e->b->num);
        case Kind::Exp: {
            P a = fold(e->a);
            if (a->kind == Kind::Number) return make_num(std::exp(a->num));
            return make_unary(Kind::Exp, std::move(a));
        }
        case Kind::Log: {
            P a = fold(e->a);
            if (a->kind == Kind::Number && a->num > 0.0)
                return make_num(std::log(a->num));
            return make_unary(Kind::Log, std::move(a));
        }
        case Kind::Sqrt: {
            P a = fold(e->a);
            if (a->kind == Kind::Number && a->num >= 0.0)
                return make_num(std::sqrt(a->num));
            return make_unary(Kind::Sqrt, std::move(a));
        }
    }
    throw Error("corrupt expression tree");
}

} // namespace

Expr::Expr() : root_(make_num(0.0)), n_(0) {}

Expr Expr::constant(double v) { return Expr(make_num(v), 0); }

double Expr::eval(const Env& env) const { return eval_node(*root_, env); }

std::string Expr::to_string() const {
    std::ostringstream os;
    print_node(*root_, os);
    return os.str();
}

Expr Expr::dz() const { return Expr(diff_node(root_, Kind::Z, -1, n_), n_); }

Expr Expr::dnu(int j) const {
    if (j < 0 || j > n_)
        throw Error("dnu index out of range");
    return Expr(diff_node(root_, Kind::Nu, j, n_), n_);
}

Expr::VarUse Expr::var_use() const {
    VarUse u;
    collect_use(*root_, u, n_);
    return u;
}

bool Expr::is_constant() const { return root_->kind == Kind::Number; }

Expr parse(const std::string& src, int n) {
    if (n < 1) throw Error("expression dimension must be positive");
    Parser parser(src, n);
    return Expr(fold(parser.run()), n);
}

Partials partials(const Expr& e) {
    Partials out;
    out.dz = e.dz();
    out.dnu.reserve(e.dim() + 1);
    for (int j = 0; j <= e.dim(); ++j) out.dnu.push_back(e.dnu(j));
    return out;
}

HypothesisReport check_hypotheses(const Expr& f, const std::vector<Env>& samples) {
    if (samples.empty()) throw Error("check_hypotheses needs samples");
    HypothesisReport rep;
    rep.min_f = std::numeric_limits<double>::infinity();
    rep.min_fz = std::numeric_limits<double>::infinity();
    const Expr fz = f.dz();
    for (const Env& env : samples) {
        const double v = f.eval(env);
        if (v < rep.min_f) {
            rep.min_f = v;
            rep.worst_f = env;
        }
        rep.min_fz = std::min(rep.min_fz, fz.eval(env));
    }
    rep.f_positive = rep.min_f > 0.0;
    rep.fz_nonnegative = rep.min_fz >= -1e-12;
    rep.pass = rep.f_positive && rep.fz_nonnegative;
    return rep;
}

} // namespace pcurve::fexpr
