#pragma once

// Boolean constraint expressions over scenario attributes.
//
// Grammar (whitespace-insensitive, keywords case-sensitive):
//
//   expr        := implication
//   implication := disjunction [ ("->" | "implies") implication ]
//   disjunction := conjunction { ("||" | "or") conjunction }
//   conjunction := unary { ("&&" | "and") unary }
//   unary       := ("!" | "not") unary | primary
//   primary     := "(" expr ")" | "true" | "false"
//                | attribute op literal
//                | attribute ["not"] "in" "{" literal { "," literal } "}"
//   op          := "==" | "=" | "!=" | "<" | "<=" | ">" | ">="
//   attribute   := identifier with dots, e.g. Road.type
//   literal     := identifier | integer
//
// Ordering comparisons on enumerations follow the declared value order.

#include <algorithm>
#include <cctype>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attribute.hpp"
#include "error.hpp"

namespace lanecheck {

/// Kleene three-valued truth, used to evaluate constraints on partial
/// assignments.
enum class Truth { False, Unknown, True };

inline Truth truth_not(Truth t) noexcept {
  if (t == Truth::True) return Truth::False;
  if (t == Truth::False) return Truth::True;
  return Truth::Unknown;
}

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

inline std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

using PartialAssignment = std::vector<std::optional<int>>;

class Expr {
 public:
  struct Node {
    enum class Kind { Const, Compare, In, Not, And, Or, Implies };
    Kind kind = Kind::Const;
    bool constant = true;
    std::size_t attribute = 0;
    CompareOp op = CompareOp::Eq;
    int code = 0;
    std::vector<int> codes;  // In: sorted
    std::vector<std::shared_ptr<const Node>> children;
  };

  Expr() : root_(std::make_shared<Node>()) {}

  /// Parses `text` and resolves attribute names and literals against
  /// `attributes`. Throws ParseError or DomainError.
  static Expr compile(std::string_view text, std::span<const AttributeDef> attributes) {
    Parser parser(text, attributes);
    Expr expr;
    expr.root_ = parser.parse();
    expr.text_ = std::string(text);
    return expr;
  }

  const std::string& text() const noexcept { return text_; }

  bool evaluate(std::span<const int> values) const { return eval(*root_, values); }

  Truth evaluate_partial(std::span<const std::optional<int>> values) const { return eval_partial(*root_, values); }

  /// Indices of the attributes referenced anywhere in the expression.
  std::vector<std::size_t> attributes() const {
    std::vector<std::size_t> out;
    collect(*root_, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  using NodePtr = std::shared_ptr<const Node>;

  static bool compare(int lhs, CompareOp op, int rhs) noexcept {
    switch (op) {
      case CompareOp::Eq: return lhs == rhs;
      case CompareOp::Ne: return lhs != rhs;
      case CompareOp::Lt: return lhs < rhs;
      case CompareOp::Le: return lhs <= rhs;
      case CompareOp::Gt: return lhs > rhs;
      case CompareOp::Ge: return lhs >= rhs;
    }
    return false;
  }

  static bool eval(const Node& node, std::span<const int> values) {
    using K = Node::Kind;
    switch (node.kind) {
      case K::Const: return node.constant;
      case K::Compare: return compare(values[node.attribute], node.op, node.code);
      case K::In: return std::binary_search(node.codes.begin(), node.codes.end(), values[node.attribute]);
      case K::Not: return !eval(*node.children[0], values);
      case K::And: return eval(*node.children[0], values) && eval(*node.children[1], values);
      case K::Or: return eval(*node.children[0], values) || eval(*node.children[1], values);
      case K::Implies: return !eval(*node.children[0], values) || eval(*node.children[1], values);
    }
    return false;
  }

  static Truth eval_partial(const Node& node, std::span<const std::optional<int>> values) {
    using K = Node::Kind;
    auto lift = [](bool b) { return b ? Truth::True : Truth::False; };
    switch (node.kind) {
      case K::Const: return lift(node.constant);
      case K::Compare: {
        const auto& v = values[node.attribute];
        return v ? lift(compare(*v, node.op, node.code)) : Truth::Unknown;
      }
      case K::In: {
        const auto& v = values[node.attribute];
        return v ? lift(std::binary_search(node.codes.begin(), node.codes.end(), *v)) : Truth::Unknown;
      }
      case K::Not: return truth_not(eval_partial(*node.children[0], values));
      case K::And: {
        const Truth a = eval_partial(*node.children[0], values);
        if (a == Truth::False) return Truth::False;
        const Truth b = eval_partial(*node.children[1], values);
        if (b == Truth::False) return Truth::False;
        return (a == Truth::True && b == Truth::True) ? Truth::True : Truth::Unknown;
      }
      case K::Or: {
        const Truth a = eval_partial(*node.children[0], values);
        if (a == Truth::True) return Truth::True;
        const Truth b = eval_partial(*node.children[1], values);
        if (b == Truth::True) return Truth::True;
        return (a == Truth::False && b == Truth::False) ? Truth::False : Truth::Unknown;
      }
      case K::Implies: {
        const Truth a = truth_not(eval_partial(*node.children[0], values));
        if (a == Truth::True) return Truth::True;
        const Truth b = eval_partial(*node.children[1], values);
        if (b == Truth::True) return Truth::True;
        return (a == Truth::False && b == Truth::False) ? Truth::False : Truth::Unknown;
      }
    }
    return Truth::Unknown;
  }

  static void collect(const Node& node, std::vector<std::size_t>& out) {
    if (node.kind == Node::Kind::Compare || node.kind == Node::Kind::In) out.push_back(node.attribute);
    for (const auto& child : node.children) collect(*child, out);
  }

  class Parser {
   public:
    Parser(std::string_view text, std::span<const AttributeDef> attributes) : text_(text), attributes_(attributes) {
      tokenize();
    }

    NodePtr parse() {
      if (tokens_.empty()) fail("empty expression");
      NodePtr root = implication();
      if (pos_ != tokens_.size()) fail("unexpected token '" + tokens_[pos_].text + "'");
      return root;
    }

   private:
    enum class Tok { Ident, Number, Op, LParen, RParen, LBrace, RBrace, Comma };
    struct Token {
      Tok type;
      std::string text;
    };

    [[noreturn]] void fail(const std::string& message) const {
      throw ParseError("constraint '" + std::string(text_) + "': " + message);
    }

    void tokenize() {
      std::size_t i = 0;
      auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
      auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
      while (i < text_.size()) {
        const char c = text_[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
          ++i;
        } else if (is_ident_start(c)) {
          std::size_t j = i;
          while (j < text_.size() && is_ident(text_[j])) ++j;
          tokens_.push_back({Tok::Ident, std::string(text_.substr(i, j - i))});
          i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && i + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i + 1])) &&
                    !(i + 1 < text_.size() && text_[i + 1] == '>'))) {
          std::size_t j = i + 1;
          while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
          tokens_.push_back({Tok::Number, std::string(text_.substr(i, j - i))});
          i = j;
        } else if (c == '(') {
          tokens_.push_back({Tok::LParen, "("});
          ++i;
        } else if (c == ')') {
          tokens_.push_back({Tok::RParen, ")"});
          ++i;
        } else if (c == '{') {
          tokens_.push_back({Tok::LBrace, "{"});
          ++i;
        } else if (c == '}') {
          tokens_.push_back({Tok::RBrace, "}"});
          ++i;
        } else if (c == ',') {
          tokens_.push_back({Tok::Comma, ","});
          ++i;
        } else {
          static constexpr std::string_view two[] = {"==", "!=", "<=", ">=", "&&", "||", "->"};
          bool matched = false;
          for (auto op : two) {
            if (text_.substr(i, 2) == op) {
              tokens_.push_back({Tok::Op, std::string(op)});
              i += 2;
              matched = true;
              break;
            }
          }
          if (matched) continue;
          if (c == '<' || c == '>' || c == '!' || c == '=') {
            tokens_.push_back({Tok::Op, std::string(1, c)});
            ++i;
            continue;
          }
          fail(std::string("unexpected character '") + c + "'");
        }
      }
    }

    bool peek_word(std::string_view word) const {
      return pos_ < tokens_.size() && (tokens_[pos_].type == Tok::Op || tokens_[pos_].type == Tok::Ident) &&
             tokens_[pos_].text == word;
    }

    bool accept(std::string_view word) {
      if (peek_word(word)) {
        ++pos_;
        return true;
      }
      return false;
    }

    const Token& expect(Tok type, std::string_view what) {
      if (pos_ >= tokens_.size()) fail("expected " + std::string(what) + " at end of input");
      if (tokens_[pos_].type != type) fail("expected " + std::string(what) + ", got '" + tokens_[pos_].text + "'");
      return tokens_[pos_++];
    }

    static NodePtr binary(Node::Kind kind, NodePtr lhs, NodePtr rhs) {
      auto node = std::make_shared<Node>();
      node->kind = kind;
      node->children = {std::move(lhs), std::move(rhs)};
      return node;
    }

    NodePtr implication() {
      NodePtr lhs = disjunction();
      if (accept("->") || accept("implies")) return binary(Node::Kind::Implies, lhs, implication());
      return lhs;
    }

    NodePtr disjunction() {
      NodePtr lhs = conjunction();
      while (accept("||") || accept("or")) lhs = binary(Node::Kind::Or, lhs, conjunction());
      return lhs;
    }

    NodePtr conjunction() {
      NodePtr lhs = unary();
      while (accept("&&") || accept("and")) lhs = binary(Node::Kind::And, lhs, unary());
      return lhs;
    }

    NodePtr unary() {
      if (accept("!") || accept("not")) {
        auto node = std::make_shared<Node>();
        node->kind = Node::Kind::Not;
        node->children = {unary()};
        return node;
      }
      return primary();
    }

    std::size_t resolve_attribute(const std::string& name) const {
      for (std::size_t i = 0; i < attributes_.size(); ++i) {
        if (attributes_[i].name == name) return i;
      }
      throw DomainError("constraint '" + std::string(text_) + "': unknown attribute '" + name + "'");
    }

    int resolve_literal(const AttributeDef& attribute, const Token& token) const {
      if (token.type != Tok::Ident && token.type != Tok::Number) fail("expected a value, got '" + token.text + "'");
      if (auto code = attribute.literal_code(token.text)) return *code;
      throw DomainError("constraint '" + std::string(text_) + "': '" + token.text + "' is not a value of " +
                        attribute.name);
    }

    NodePtr primary() {
      if (pos_ >= tokens_.size()) fail("unexpected end of input");
      if (tokens_[pos_].type == Tok::LParen) {
        ++pos_;
        NodePtr inner = implication();
        expect(Tok::RParen, "')'");
        return inner;
      }
      if (accept("true") || accept("false")) {
        auto node = std::make_shared<Node>();
        node->constant = tokens_[pos_ - 1].text == "true";
        return node;
      }
      const Token& name = expect(Tok::Ident, "attribute name");
      const std::size_t index = resolve_attribute(name.text);
      const AttributeDef& attribute = attributes_[index];

      bool negated = false;
      if (peek_word("not") && pos_ + 1 < tokens_.size() && tokens_[pos_ + 1].text == "in") {
        pos_ += 1;
        negated = true;
      }
      if (accept("in")) {
        expect(Tok::LBrace, "'{'");
        auto node = std::make_shared<Node>();
        node->kind = Node::Kind::In;
        node->attribute = index;
        do {
          if (pos_ >= tokens_.size()) fail("unterminated value set");
          node->codes.push_back(resolve_literal(attribute, tokens_[pos_++]));
        } while (pos_ < tokens_.size() && tokens_[pos_].type == Tok::Comma && ++pos_);
        expect(Tok::RBrace, "'}'");
        std::sort(node->codes.begin(), node->codes.end());
        node->codes.erase(std::unique(node->codes.begin(), node->codes.end()), node->codes.end());
        if (!negated) return node;
        auto neg = std::make_shared<Node>();
        neg->kind = Node::Kind::Not;
        neg->children = {node};
        return neg;
      }
      if (negated) fail("expected 'in' after 'not'");

      if (pos_ >= tokens_.size() || tokens_[pos_].type != Tok::Op) fail("expected comparison after " + name.text);
      const std::string op = tokens_[pos_++].text;
      auto node = std::make_shared<Node>();
      node->kind = Node::Kind::Compare;
      node->attribute = index;
      if (op == "==" || op == "=") node->op = CompareOp::Eq;
      else if (op == "!=") node->op = CompareOp::Ne;
      else if (op == "<") node->op = CompareOp::Lt;
      else if (op == "<=") node->op = CompareOp::Le;
      else if (op == ">") node->op = CompareOp::Gt;
      else if (op == ">=") node->op = CompareOp::Ge;
      else fail("unknown comparison '" + op + "'");
      if (pos_ >= tokens_.size()) fail("expected a value at end of input");
      node->code = resolve_literal(attribute, tokens_[pos_++]);
      return node;
    }

    std::string_view text_;
    std::span<const AttributeDef> attributes_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
  };

  NodePtr root_;
  std::string text_;
};

}  // namespace lanecheck
