#include "mtg/expr.hpp"

#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace mtg::expr {

namespace {

NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: return a / b;
    case BinaryOp::Pow: return std::pow(a, b);  // pow(0,0) == 1
  }
  return 0.0;
}

double apply_builtin(Builtin f, double a, double b) {
  switch (f) {
    case Builtin::Sin: return std::sin(a);
    case Builtin::Cos: return std::cos(a);
    case Builtin::Exp: return std::exp(a);
    case Builtin::Abs: return std::fabs(a);
    case Builtin::Min: return std::fmin(a, b);
    case Builtin::Max: return std::fmax(a, b);
  }
  return 0.0;
}

int builtin_arity(Builtin f) {
  return (f == Builtin::Min || f == Builtin::Max) ? 2 : 1;
}

double eval_node(const Node& n, const std::map<std::string, double>& bindings) {
  switch (n.kind) {
    case Node::Kind::Literal:
      return n.literal;
    case Node::Kind::Variable: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) {
        throw EvalError("unbound variable '" + n.name + "'");
      }
      return it->second;
    }
    case Node::Kind::Unary:
      return -eval_node(*n.args[0], bindings);
    case Node::Kind::Binary:
      return apply_binary(n.binary_op, eval_node(*n.args[0], bindings),
                          eval_node(*n.args[1], bindings));
    case Node::Kind::Call: {
      double a = eval_node(*n.args[0], bindings);
      double b = n.args.size() > 1 ? eval_node(*n.args[1], bindings) : 0.0;
      return apply_builtin(n.builtin, a, b);
    }
  }
  return 0.0;
}

void collect_vars(const Node& n, std::set<std::string>& out) {
  if (n.kind == Node::Kind::Variable) out.insert(n.name);
  for (const auto& c : n.args) collect_vars(*c, out);
}

const char* builtin_name(Builtin f) {
  switch (f) {
    case Builtin::Sin: return "sin";
    case Builtin::Cos: return "cos";
    case Builtin::Exp: return "exp";
    case Builtin::Abs: return "abs";
    case Builtin::Min: return "min";
    case Builtin::Max: return "max";
  }
  return "?";
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Literal: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", n.literal);
      out += buf;
      break;
    }
    case Node::Kind::Variable:
      out += n.name;
      break;
    case Node::Kind::Unary:
      out += "(-";
      print_node(*n.args[0], out);
      out += ')';
      break;
    case Node::Kind::Binary: {
      static const char* sym[] = {"+", "-", "*", "/", "^"};
      out += '(';
      print_node(*n.args[0], out);
      out += sym[static_cast<int>(n.binary_op)];
      print_node(*n.args[1], out);
      out += ')';
      break;
    }
    case Node::Kind::Call:
      out += builtin_name(n.builtin);
      out += '(';
      print_node(*n.args[0], out);
      if (n.args.size() > 1) {
        out += ',';
        print_node(*n.args[1], out);
      }
      out += ')';
      break;
  }
}

// --- tokenizer + recursive-descent parser ---

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen,
                     RParen, Comma, End };

struct Token {
  TokKind kind;
  std::size_t offset;
  double number = 0.0;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
    tok_.offset = pos_;
    tok_.text.clear();
    if (pos_ >= src_.size()) {
      tok_.kind = TokKind::End;
      return;
    }
    char c = src_[pos_];
    switch (c) {
      case '+': tok_.kind = TokKind::Plus; ++pos_; return;
      case '-': tok_.kind = TokKind::Minus; ++pos_; return;
      case '*': tok_.kind = TokKind::Star; ++pos_; return;
      case '/': tok_.kind = TokKind::Slash; ++pos_; return;
      case '^': tok_.kind = TokKind::Caret; ++pos_; return;
      case '(': tok_.kind = TokKind::LParen; ++pos_; return;
      case ')': tok_.kind = TokKind::RParen; ++pos_; return;
      case ',': tok_.kind = TokKind::Comma; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_')) {
        ++pos_;
      }
      tok_.kind = TokKind::Ident;
      tok_.text.assign(src_.substr(start, pos_ - start));
      return;
    }
    throw ParseError("unexpected character '" + std::string(1, c) +
                         "' at offset " + std::to_string(pos_),
                     pos_);
  }

  void lex_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          ++pos_;
        }
      } else {
        pos_ = mark;  // bare 'e' belongs to the next token
      }
    }
    double value = 0.0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc()) {
      throw ParseError("bad numeric literal at offset " + std::to_string(start),
                       start);
    }
    tok_.kind = TokKind::Number;
    tok_.number = value;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  NodePtr parse_all() {
    NodePtr e = parse_sum();
    const Token& t = lex_.peek();
    if (t.kind != TokKind::End) {
      throw ParseError("unexpected trailing input at offset " +
                           std::to_string(t.offset),
                       t.offset);
    }
    return e;
  }

 private:
  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      TokKind k = lex_.peek().kind;
      if (k != TokKind::Plus && k != TokKind::Minus) return lhs;
      lex_.take();
      NodePtr rhs = parse_product();
      Node n;
      n.kind = Node::Kind::Binary;
      n.binary_op = (k == TokKind::Plus) ? BinaryOp::Add : BinaryOp::Sub;
      n.args = {std::move(lhs), std::move(rhs)};
      lhs = make_node(std::move(n));
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      TokKind k = lex_.peek().kind;
      if (k != TokKind::Star && k != TokKind::Slash) return lhs;
      lex_.take();
      NodePtr rhs = parse_unary();
      Node n;
      n.kind = Node::Kind::Binary;
      n.binary_op = (k == TokKind::Star) ? BinaryOp::Mul : BinaryOp::Div;
      n.args = {std::move(lhs), std::move(rhs)};
      lhs = make_node(std::move(n));
    }
  }

  // Unary minus binds looser than ^, so -x^2 == -(x^2).
  NodePtr parse_unary() {
    if (lex_.peek().kind == TokKind::Minus) {
      lex_.take();
      Node n;
      n.kind = Node::Kind::Unary;
      n.args = {parse_unary()};
      return make_node(std::move(n));
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (lex_.peek().kind == TokKind::Caret) {
      lex_.take();
      NodePtr exponent = parse_unary();  // right-assoc: 2^3^2 == 2^(3^2)
      Node n;
      n.kind = Node::Kind::Binary;
      n.binary_op = BinaryOp::Pow;
      n.args = {std::move(base), std::move(exponent)};
      return make_node(std::move(n));
    }
    return base;
  }

  NodePtr parse_primary() {
    Token t = lex_.take();
    switch (t.kind) {
      case TokKind::Number: {
        Node n;
        n.kind = Node::Kind::Literal;
        n.literal = t.number;
        return make_node(std::move(n));
      }
      case TokKind::LParen: {
        NodePtr e = parse_sum();
        expect(TokKind::RParen, "')'");
        return e;
      }
      case TokKind::Ident: {
        if (lex_.peek().kind == TokKind::LParen) return parse_call(t);
        Node n;
        n.kind = Node::Kind::Variable;
        n.name = t.text;
        return make_node(std::move(n));
      }
      default:
        throw ParseError("expected expression at offset " +
                             std::to_string(t.offset),
                         t.offset);
    }
  }

  NodePtr parse_call(const Token& name) {
    Builtin f;
    if (name.text == "sin") f = Builtin::Sin;
    else if (name.text == "cos") f = Builtin::Cos;
    else if (name.text == "exp") f = Builtin::Exp;
    else if (name.text == "abs") f = Builtin::Abs;
    else if (name.text == "min") f = Builtin::Min;
    else if (name.text == "max") f = Builtin::Max;
    else
      throw ParseError("unknown function '" + name.text + "' at offset " +
                           std::to_string(name.offset),
                       name.offset);
    lex_.take();  // '('
    Node n;
    n.kind = Node::Kind::Call;
    n.builtin = f;
    n.args.push_back(parse_sum());
    if (builtin_arity(f) == 2) {
      expect(TokKind::Comma, "','");
      n.args.push_back(parse_sum());
    }
    expect(TokKind::RParen, "')'");
    return make_node(std::move(n));
  }

  void expect(TokKind k, const char* what) {
    const Token& t = lex_.peek();
    if (t.kind != k) {
      throw ParseError(std::string("expected ") + what + " at offset " +
                           std::to_string(t.offset),
                       t.offset);
    }
    lex_.take();
  }

  Lexer lex_;
};

}  // namespace

double Expression::evaluate(const std::map<std::string, double>& bindings) const {
  if (!root_) throw EvalError("empty expression");
  double v = eval_node(*root_, bindings);
  if (!std::isfinite(v)) {
    throw EvalError("non-finite result (" + std::to_string(v) +
                    ") evaluating '" + pretty_print() + "'");
  }
  return v;
}

std::set<std::string> Expression::variables() const {
  std::set<std::string> out;
  if (root_) collect_vars(*root_, out);
  return out;
}

std::string Expression::pretty_print() const {
  std::string out;
  if (root_) print_node(*root_, out);
  return out;
}

Expression parse(std::string_view source) {
  if (source.empty()) throw ParseError("empty expression", 0);
  Parser p(source);
  return Expression(p.parse_all());
}

Expression literal(double value) {
  Node n;
  n.kind = Node::Kind::Literal;
  n.literal = value;
  return Expression(make_node(std::move(n)));
}

Expression variable(std::string name) {
  Node n;
  n.kind = Node::Kind::Variable;
  n.name = std::move(name);
  return Expression(make_node(std::move(n)));
}

Expression unary_neg(const Expression& e) {
  Node n;
  n.kind = Node::Kind::Unary;
  n.args = {std::make_shared<const Node>(e.root())};
  return Expression(make_node(std::move(n)));
}

Expression binary(BinaryOp op, const Expression& lhs, const Expression& rhs) {
  Node n;
  n.kind = Node::Kind::Binary;
  n.binary_op = op;
  n.args = {std::make_shared<const Node>(lhs.root()),
            std::make_shared<const Node>(rhs.root())};
  return Expression(make_node(std::move(n)));
}

Expression call(Builtin f, const std::vector<Expression>& args) {
  if (static_cast<int>(args.size()) != builtin_arity(f)) {
    throw EvalError("wrong arity for builtin");
  }
  Node n;
  n.kind = Node::Kind::Call;
  n.builtin = f;
  for (const auto& a : args) n.args.push_back(std::make_shared<const Node>(a.root()));
  return Expression(make_node(std::move(n)));
}

// --- layout / compilation ---

VarLayout::VarLayout(std::vector<std::string> names) : names_(std::move(names)) {}

VarLayout VarLayout::for_game(int m, int n, int p, int q) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(m + n + p + q));
  for (int a = 1; a <= m; ++a) names.push_back("t" + std::to_string(a));
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (int a = 1; a <= p; ++a) names.push_back("u" + std::to_string(a));
  for (int b = 1; b <= q; ++b) names.push_back("v" + std::to_string(b));
  return VarLayout(std::move(names));
}

int VarLayout::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double CompiledExpr::eval(std::span<const double> env) const {
  double stack[64];
  int sp = 0;
  for (const Instr& ins : code_) {
    switch (ins.op) {
      case Op::PushConst: stack[sp++] = ins.constant; break;
      case Op::PushVar: stack[sp++] = env[static_cast<std::size_t>(ins.slot)]; break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
      case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
      case Op::Min: --sp; stack[sp - 1] = std::fmin(stack[sp - 1], stack[sp]); break;
      case Op::Max: --sp; stack[sp - 1] = std::fmax(stack[sp - 1], stack[sp]); break;
    }
  }
  return sp > 0 ? stack[0] : 0.0;
}

bool CompiledExpr::reads_slot_range(int first, int count) const {
  for (const Instr& ins : code_) {
    if (ins.op == Op::PushVar && ins.slot >= first && ins.slot < first + count) {
      return true;
    }
  }
  return false;
}

namespace {

struct Emitter {
  std::vector<CompiledExpr::Instr>* code;
  const VarLayout* layout;
  int depth = 0;
  int max_depth = 0;

  void emit(const Node& n) {
    using Op = CompiledExpr::Op;
    switch (n.kind) {
      case Node::Kind::Literal:
        push({Op::PushConst, 0, n.literal});
        return;
      case Node::Kind::Variable: {
        int slot = layout->index_of(n.name);
        if (slot < 0) {
          throw EvalError("unbound variable '" + n.name + "' for this layout");
        }
        push({Op::PushVar, slot, 0.0});
        return;
      }
      case Node::Kind::Unary:
        emit(*n.args[0]);
        code->push_back({Op::Neg, 0, 0.0});
        return;
      case Node::Kind::Binary: {
        emit(*n.args[0]);
        emit(*n.args[1]);
        static const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
        code->push_back({ops[static_cast<int>(n.binary_op)], 0, 0.0});
        --depth;
        return;
      }
      case Node::Kind::Call: {
        emit(*n.args[0]);
        if (n.args.size() > 1) emit(*n.args[1]);
        static const Op ops[] = {Op::Sin, Op::Cos, Op::Exp, Op::Abs, Op::Min,
                                 Op::Max};
        code->push_back({ops[static_cast<int>(n.builtin)], 0, 0.0});
        if (n.args.size() > 1) --depth;
        return;
      }
    }
  }

  void push(CompiledExpr::Instr ins) {
    code->push_back(ins);
    ++depth;
    if (depth > max_depth) max_depth = depth;
  }
};

}  // namespace

CompiledExpr compile(const Expression& e, const VarLayout& layout) {
  if (!e.valid()) throw EvalError("cannot compile an empty expression");
  CompiledExpr out;
  Emitter em{&out.code_, &layout};
  em.emit(e.root());
  out.max_stack_ = em.max_depth;
  if (out.max_stack_ > 63) {
    throw EvalError("expression nests too deeply to compile");
  }
  return out;
}

}  // namespace mtg::expr
