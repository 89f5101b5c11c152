#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtg/errors.hpp"

// Arithmetic expression trees over named variables (t1..tm, x1..xn, u1..up,
// v1..vq plus whatever a caller binds).  Game dynamics and costs are given as
// strings in configs, parsed once, then evaluated many times.

namespace mtg::expr {

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };
enum class Builtin : std::uint8_t { Sin, Cos, Exp, Abs, Min, Max };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind : std::uint8_t { Literal, Variable, Unary, Binary, Call };

  Kind kind = Kind::Literal;
  double literal = 0.0;       // Kind::Literal
  std::string name;           // Kind::Variable
  BinaryOp binary_op{};       // Kind::Binary
  Builtin builtin{};          // Kind::Call
  std::vector<NodePtr> args;  // children (Unary: 1, Binary: 2, Call: 1 or 2)
};

// Immutable expression handle; cheap to copy, safe to share across threads.
class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  bool valid() const { return root_ != nullptr; }
  const Node& root() const { return *root_; }

  // Evaluates with explicit name->value bindings.  Throws EvalError for an
  // unbound variable or a non-finite result; intermediate arithmetic follows
  // IEEE semantics (0^0 == 1).
  double evaluate(const std::map<std::string, double>& bindings) const;

  // Names of all variables referenced anywhere in the tree.
  std::set<std::string> variables() const;

  // Fully parenthesized text form; parse(pretty_print(e)) evaluates
  // identically to e.
  std::string pretty_print() const;

 private:
  NodePtr root_;
};

// Recursive-descent parser.  Precedence: ^ (right-assoc) over unary minus
// over * / over + - (left-assoc).  Whitespace-insensitive.  Unknown function
// names and implicit multiplication are syntax errors; throws ParseError
// with the byte offset of the offending token.
Expression parse(std::string_view source);

// Tree builders, mainly for tests and programmatic instance tweaks.
Expression literal(double value);
Expression variable(std::string name);
Expression unary_neg(const Expression& e);
Expression binary(BinaryOp op, const Expression& lhs, const Expression& rhs);
Expression call(Builtin f, const std::vector<Expression>& args);

// ---------------------------------------------------------------------------
// Compiled form for hot loops: variables resolve to slots in a flat
// environment vector, the tree flattens to a postfix program.

// Variable slot assignment.  For a game with dimensions (m,n,p,q) the order
// is t1..tm, x1..xn, u1..up, v1..vq.
class VarLayout {
 public:
  VarLayout() = default;
  explicit VarLayout(std::vector<std::string> names);
  static VarLayout for_game(int m, int n, int p, int q);

  int index_of(std::string_view name) const;  // -1 when absent
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

class CompiledExpr {
 public:
  CompiledExpr() = default;

  // Evaluates against an environment indexed per the layout used at compile
  // time.  No allocation, no throwing; non-finite results are returned as-is
  // and policed by callers.
  double eval(std::span<const double> env) const;

  // True if the program reads any slot in [first, first+count).
  bool reads_slot_range(int first, int count) const;

  bool empty() const { return code_.empty(); }

  enum class Op : std::uint8_t {
    PushConst, PushVar, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Abs,
    Min, Max
  };
  struct Instr {
    Op op;
    std::int32_t slot = 0;
    double constant = 0.0;
  };

 private:
  friend CompiledExpr compile(const Expression&, const VarLayout&);

  std::vector<Instr> code_;
  int max_stack_ = 0;
};

// Resolves every variable against `layout`; an unknown name is an EvalError
// (bindings must be decided before the hot path runs).
CompiledExpr compile(const Expression& e, const VarLayout& layout);

}  // namespace mtg::expr
