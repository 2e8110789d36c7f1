#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>

#include "roughforms/geometry.hpp"
#include "roughforms/holder.hpp"

namespace roughforms::expr {

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Abs, Sqrt, Weierstrass };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct WeierstrassBuiltin {
    double gamma = 0;
    std::uint64_t seed = 0;
    double phase = 0;
    std::array<std::shared_ptr<const roughforms::Weierstrass>, kMaxDim> by_dim;
};

struct Node {
    Op op = Op::Num;
    double value = 0;  // Num
    int var = 0;       // Var, 1-based
    NodePtr a, b;
    std::shared_ptr<const WeierstrassBuiltin> w;
};

/// Immutable expression over variables x1..xd.
class Expr {
public:
    Expr();
    explicit Expr(NodePtr root) : root_(std::move(root)) {}

    double operator()(const Point& x) const;
    std::string str() const;
    const Node& root() const { return *root_; }
    NodePtr node() const { return root_; }
    /// Largest variable index used (0 for constants).
    int max_var() const;
    bool is_constant() const { return max_var() == 0 && !uses(Op::Weierstrass); }
    bool uses(Op op) const;
    /// Structural equality of the syntax trees.
    bool operator==(const Expr& other) const;

private:
    NodePtr root_;
};

Expr parse(std::string_view text);
/// Symbolic ∂/∂x_var (var is 1-based). Throws NotDifferentiable for abs and weierstrass.
Expr differentiate(const Expr& e, int var);

Expr number(double v);
Expr variable(int var);

/// The Hölder function defined by an expression: γ = min over weierstrass builtins, else 1.
HolderFunction to_holder(const Expr& e, int d);

}  // namespace roughforms::expr
