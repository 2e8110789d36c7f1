#include "roughforms/expr.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <cmath>
#include <numbers>
#include <vector>

#include "roughforms/errors.hpp"

namespace roughforms::expr {

namespace {

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr num(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Num;
    n->value = v;
    return n;
}

NodePtr var(int i) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = i;
    return n;
}

struct FuncName {
    const char* name;
    Op op;
};

constexpr FuncName kFunctions[] = {{"sin", Op::Sin}, {"cos", Op::Cos},   {"exp", Op::Exp},
                                   {"log", Op::Log}, {"abs", Op::Abs},   {"sqrt", Op::Sqrt}};

const char* func_name(Op op) {
    for (const auto& f : kFunctions)
        if (f.op == op) return f.name;
    return "?";
}

double eval(const Node& n, const Point& x) {
    switch (n.op) {
        case Op::Num: return n.value;
        case Op::Var:
            if (n.var > x.size())
                throw InvalidArgument("x" + std::to_string(n.var) + " used at a point of dimension " +
                                      std::to_string(x.size()));
            return x(n.var - 1);
        case Op::Neg: return -eval(*n.a, x);
        case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
        case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
        case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
        case Op::Div: {
            const double den = eval(*n.b, x);
            if (den == 0) throw DomainError("division by zero");
            return eval(*n.a, x) / den;
        }
        case Op::Pow: {
            const double base = eval(*n.a, x), ex = eval(*n.b, x);
            if (base < 0 && ex != std::floor(ex)) throw DomainError("negative base with non-integer exponent");
            if (base == 0 && ex < 0) throw DomainError("zero raised to a negative power");
            return std::pow(base, ex);
        }
        case Op::Sin: return std::sin(eval(*n.a, x));
        case Op::Cos: return std::cos(eval(*n.a, x));
        case Op::Exp: return std::exp(eval(*n.a, x));
        case Op::Log: {
            const double v = eval(*n.a, x);
            if (v <= 0) throw DomainError("log of a non-positive number");
            return std::log(v);
        }
        case Op::Abs: return std::abs(eval(*n.a, x));
        case Op::Sqrt: {
            const double v = eval(*n.a, x);
            if (v < 0) throw DomainError("sqrt of a negative number");
            return std::sqrt(v);
        }
        case Op::Weierstrass: {
            const int d = static_cast<int>(x.size());
            if (d < 1 || d > kMaxDim) throw UnsupportedDimension("weierstrass needs 1 <= d <= 4");
            return (*n.w->by_dim[d - 1])(x);
        }
    }
    return 0;
}

std::string fmt_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

int precedence(const Node& n) {
    switch (n.op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Num: return n.value < 0 ? 0 : 5;
        default: return 5;
    }
}

void print(const Node& n, std::string& out);

void print_child(const Node& n, bool parens, std::string& out) {
    if (parens) out += '(';
    print(n, out);
    if (parens) out += ')';
}

void print(const Node& n, std::string& out) {
    switch (n.op) {
        case Op::Num: out += fmt_number(n.value); return;
        case Op::Var: out += "x" + std::to_string(n.var); return;
        case Op::Neg:
            out += '-';
            print_child(*n.a, precedence(*n.a) < 3, out);
            return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const int p = precedence(n);
            print_child(*n.a, precedence(*n.a) < p, out);
            out += n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
            print_child(*n.b, precedence(*n.b) <= p, out);
            return;
        }
        case Op::Pow:
            print_child(*n.a, precedence(*n.a) <= 4, out);
            out += '^';
            print_child(*n.b, precedence(*n.b) < 3, out);
            return;
        case Op::Weierstrass:
            out += "weierstrass(" + fmt_number(n.w->gamma) + ", " + std::to_string(n.w->seed);
            if (n.w->phase != 0) out += ", " + fmt_number(n.w->phase);
            out += ')';
            return;
        default:
            out += func_name(n.op);
            out += '(';
            print(*n.a, out);
            out += ')';
    }
}

bool equal(const Node& a, const Node& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
        case Op::Num: return a.value == b.value;
        case Op::Var: return a.var == b.var;
        case Op::Weierstrass:
            return a.w->gamma == b.w->gamma && a.w->seed == b.w->seed && a.w->phase == b.w->phase;
        default: break;
    }
    if ((a.a == nullptr) != (b.a == nullptr) || (a.b == nullptr) != (b.b == nullptr)) return false;
    if (a.a && !equal(*a.a, *b.a)) return false;
    if (a.b && !equal(*a.b, *b.b)) return false;
    return true;
}

int max_var_of(const Node& n) {
    int m = n.op == Op::Var ? n.var : 0;
    if (n.a) m = std::max(m, max_var_of(*n.a));
    if (n.b) m = std::max(m, max_var_of(*n.b));
    return m;
}

bool uses_op(const Node& n, Op op) {
    return n.op == op || (n.a && uses_op(*n.a, op)) || (n.b && uses_op(*n.b, op));
}

bool depends_on(const Node& n, int v) {
    if (n.op == Op::Var) return n.var == v;
    if (n.op == Op::Weierstrass) return true;
    return (n.a && depends_on(*n.a, v)) || (n.b && depends_on(*n.b, v));
}

// ---- lexer / parser ----

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::string text;
    double value = 0;
    int line = 1;
    int column = 1;
};

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (s[i] == '\n') {
                ++line;
                col = 1;
            } else if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
                ++col;
            }
        }
    };
    while (i < s.size()) {
        const char c = s[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        Token t{Tok::End, "", 0, line, col};
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t j = i;
            while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                    j = k;
                }
            }
            t.kind = Tok::Number;
            t.text = std::string(s.substr(i, j - i));
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
            if (ec != std::errc() || p != t.text.data() + t.text.size())
                throw SyntaxError("malformed number '" + t.text + "'", line, col);
            advance(j - i);
            out.push_back(t);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = std::string(s.substr(i, j - i));
            advance(j - i);
            out.push_back(t);
            continue;
        }
        switch (c) {
            case '+': t.kind = Tok::Plus; break;
            case '-': t.kind = Tok::Minus; break;
            case '*': t.kind = Tok::Star; break;
            case '/': t.kind = Tok::Slash; break;
            case '^': t.kind = Tok::Caret; break;
            case '(': t.kind = Tok::LParen; break;
            case ')': t.kind = Tok::RParen; break;
            case ',': t.kind = Tok::Comma; break;
            default: throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
        }
        t.text = std::string(1, c);
        advance(1);
        out.push_back(t);
    }
    out.push_back(Token{Tok::End, "", 0, line, col});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    NodePtr parse_all() {
        NodePtr e = expression();
        if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'", peek());
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& take() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg, const Token& t) const {
        // Errors at end of input point at the last token read.
        if (t.kind == Tok::End && pos_ > 0) {
            const Token& last = toks_[pos_ - 1];
            throw SyntaxError(msg, last.line, last.column);
        }
        throw SyntaxError(msg, t.line, t.column);
    }

    void expect(Tok kind, const char* what) {
        if (peek().kind != kind) fail(std::string("expected ") + what, peek());
        take();
    }

    NodePtr expression() {
        NodePtr lhs = term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            const Op op = take().kind == Tok::Plus ? Op::Add : Op::Sub;
            lhs = make(op, lhs, term());
        }
        return lhs;
    }

    NodePtr term() {
        NodePtr lhs = unary();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            const Op op = take().kind == Tok::Star ? Op::Mul : Op::Div;
            lhs = make(op, lhs, unary());
        }
        return lhs;
    }

    NodePtr unary() {
        if (peek().kind == Tok::Minus) {
            take();
            return make(Op::Neg, unary());
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (peek().kind == Tok::Caret) {
            take();
            return make(Op::Pow, base, unary());
        }
        return base;
    }

    double constant_arg(const char* what) {
        const Token& start = peek();
        NodePtr e = expression();
        if (max_var_of(*e) != 0 || uses_op(*e, Op::Weierstrass))
            throw SyntaxError(std::string(what) + " must be a constant", start.line, start.column);
        return eval(*e, Point());
    }

    NodePtr weierstrass(const Token& name) {
        expect(Tok::LParen, "'('");
        auto w = std::make_shared<WeierstrassBuiltin>();
        w->gamma = constant_arg("weierstrass exponent");
        expect(Tok::Comma, "','");
        const Token& seed_tok = peek();
        const double seed = constant_arg("weierstrass seed");
        if (seed < 0 || seed != std::floor(seed) || seed > 9007199254740992.0)
            throw SyntaxError("weierstrass seed must be a non-negative integer", seed_tok.line, seed_tok.column);
        w->seed = static_cast<std::uint64_t>(seed);
        if (peek().kind == Tok::Comma) {
            take();
            w->phase = constant_arg("weierstrass phase");
        }
        expect(Tok::RParen, "')'");
        if (!(w->gamma > 0 && w->gamma <= 1))
            throw SyntaxError("weierstrass exponent must lie in (0, 1]", name.line, name.column);
        for (int d = 1; d <= kMaxDim; ++d)
            w->by_dim[d - 1] = std::make_shared<roughforms::Weierstrass>(w->gamma, w->seed, d, w->phase);
        auto n = std::make_shared<Node>();
        n->op = Op::Weierstrass;
        n->w = w;
        return n;
    }

    NodePtr primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Number: take(); return num(t.value);
            case Tok::LParen: {
                take();
                NodePtr e = expression();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident: {
                const Token name = take();
                if (name.text == "pi") return num(std::numbers::pi);
                if (name.text.size() > 1 && name.text[0] == 'x' &&
                    name.text.find_first_not_of("0123456789", 1) == std::string::npos && name.text[1] != '0') {
                    int v = 0;
                    std::from_chars(name.text.data() + 1, name.text.data() + name.text.size(), v);
                    return var(v);
                }
                if (name.text == "weierstrass") return weierstrass(name);
                for (const auto& f : kFunctions)
                    if (name.text == f.name) {
                        expect(Tok::LParen, "'('");
                        NodePtr arg = expression();
                        expect(Tok::RParen, "')'");
                        return make(f.op, arg);
                    }
                throw UnknownIdentifier("unknown identifier '" + name.text + "' at line " +
                                        std::to_string(name.line) + ", column " + std::to_string(name.column));
            }
            case Tok::End: fail("unexpected end of input", t);
            default: fail("unexpected '" + t.text + "'", t);
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// ---- differentiation with light simplification ----

bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

NodePtr s_neg(NodePtr a) {
    if (a->op == Op::Num) return a->value == 0 ? a : make(Op::Neg, a);
    if (a->op == Op::Neg) return a->a;
    return make(Op::Neg, a);
}

NodePtr s_add(NodePtr a, NodePtr b) {
    if (is_num(a, 0)) return b;
    if (is_num(b, 0)) return a;
    if (a->op == Op::Num && b->op == Op::Num) return num(a->value + b->value);
    return make(Op::Add, a, b);
}

NodePtr s_sub(NodePtr a, NodePtr b) {
    if (is_num(b, 0)) return a;
    if (is_num(a, 0)) return s_neg(b);
    if (a->op == Op::Num && b->op == Op::Num && a->value >= b->value) return num(a->value - b->value);
    return make(Op::Sub, a, b);
}

NodePtr s_mul(NodePtr a, NodePtr b) {
    if (is_num(a, 0) || is_num(b, 0)) return num(0);
    if (is_num(a, 1)) return b;
    if (is_num(b, 1)) return a;
    if (a->op == Op::Num && b->op == Op::Num) return num(a->value * b->value);
    return make(Op::Mul, a, b);
}

NodePtr s_div(NodePtr a, NodePtr b) {
    if (is_num(a, 0)) return num(0);
    if (is_num(b, 1)) return a;
    return make(Op::Div, a, b);
}

NodePtr s_pow(NodePtr a, NodePtr b) {
    if (is_num(b, 1)) return a;
    if (is_num(b, 0)) return num(1);
    return make(Op::Pow, a, b);
}

NodePtr diff(const NodePtr& n, int v) {
    if (!depends_on(*n, v)) return num(0);
    switch (n->op) {
        case Op::Num: return num(0);
        case Op::Var: return num(n->var == v ? 1 : 0);
        case Op::Neg: return s_neg(diff(n->a, v));
        case Op::Add: return s_add(diff(n->a, v), diff(n->b, v));
        case Op::Sub: return s_sub(diff(n->a, v), diff(n->b, v));
        case Op::Mul: return s_add(s_mul(diff(n->a, v), n->b), s_mul(n->a, diff(n->b, v)));
        case Op::Div:
            return s_div(s_sub(s_mul(diff(n->a, v), n->b), s_mul(n->a, diff(n->b, v))), s_pow(n->b, num(2)));
        case Op::Pow: {
            if (!depends_on(*n->b, v)) {
                NodePtr ex = n->b->op == Op::Num ? num(n->b->value - 1) : s_sub(n->b, num(1));
                if (ex->op == Op::Num && ex->value < 0) ex = s_neg(num(-ex->value));
                return s_mul(s_mul(n->b, s_pow(n->a, ex)), diff(n->a, v));
            }
            NodePtr inner = s_add(s_mul(diff(n->b, v), make(Op::Log, n->a)),
                                  s_div(s_mul(n->b, diff(n->a, v)), n->a));
            return s_mul(n, inner);
        }
        case Op::Sin: return s_mul(make(Op::Cos, n->a), diff(n->a, v));
        case Op::Cos: return s_neg(s_mul(make(Op::Sin, n->a), diff(n->a, v)));
        case Op::Exp: return s_mul(n, diff(n->a, v));
        case Op::Log: return s_div(diff(n->a, v), n->a);
        case Op::Sqrt: return s_div(diff(n->a, v), s_mul(num(2), n));
        case Op::Abs: throw NotDifferentiable("abs is not differentiable");
        case Op::Weierstrass: throw NotDifferentiable("weierstrass is not differentiable");
    }
    return num(0);
}

void min_gamma(const Node& n, double& g) {
    if (n.op == Op::Weierstrass) g = std::min(g, n.w->gamma);
    if (n.a) min_gamma(*n.a, g);
    if (n.b) min_gamma(*n.b, g);
}

}  // namespace

Expr::Expr() : root_(num(0)) {}

double Expr::operator()(const Point& x) const { return eval(*root_, x); }

std::string Expr::str() const {
    std::string out;
    print(*root_, out);
    return out;
}

int Expr::max_var() const { return max_var_of(*root_); }
bool Expr::uses(Op op) const { return uses_op(*root_, op); }
bool Expr::operator==(const Expr& other) const { return equal(*root_, *other.root_); }

Expr parse(std::string_view text) { return Expr(Parser(lex(text)).parse_all()); }

Expr differentiate(const Expr& e, int v) {
    if (v < 1) throw InvalidArgument("variable index is 1-based");
    return Expr(diff(e.node(), v));
}

Expr number(double v) { return Expr(num(v)); }
Expr variable(int v) { return Expr(var(v)); }

HolderFunction to_holder(const Expr& e, int d) {
    if (e.max_var() > d)
        throw InvalidArgument("expression uses x" + std::to_string(e.max_var()) + " in dimension " + std::to_string(d));
    HolderFunction h;
    h.f = [e](const Point& x) { return e(x); };
    double g = 1.0;
    min_gamma(e.root(), g);
    h.gamma = g;
    h.is_constant = e.is_constant();
    h.name = e.str();
    h.constant = h.is_constant ? 0.0 : std::numeric_limits<double>::infinity();
    return h;
}

}  // namespace roughforms::expr
