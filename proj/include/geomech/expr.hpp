#pragma once

#include <geomech/errors.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace geomech::exprlang {

/// Variable bindings for evaluation: name -> value.
using Bindings = std::map<std::string, double>;

struct Node;
using NodePtr = std::shared_ptr<const Node>;

enum class NodeKind { Number, Variable, Neg, Binary, Call };

struct Node {
    NodeKind kind;
    double number = 0.0;             // Number
    std::string name;                // Variable / Call
    char op = 0;                     // Binary: + - * / ^
    std::vector<NodePtr> args;       // Neg: 1, Binary: 2, Call: arity of fn
};

/// Immutable arithmetic expression. Safe to evaluate concurrently.
class Expression {
  public:
    Expression() = default;
    explicit Expression(NodePtr root) : root_(std::move(root)) {}

    const NodePtr& root() const { return root_; }
    bool valid() const { return root_ != nullptr; }

    /// Free variables of the expression, in first-appearance order.
    std::vector<std::string> free_variables() const;

  private:
    NodePtr root_;
};

/// Names a chart exposes to expressions: t, q1..qn, v1..vn plus parameters.
std::set<std::string> chart_names(int dim, const std::set<std::string>& params = {});

/// Parse `source` into an AST. Operator precedence is ^ > unary- > * / > + -,
/// with ^ right-associative. When `declared` is non-null, any identifier
/// outside it (and outside the builtin function set) is a parse error;
/// otherwise unknown identifiers fail at evaluation time.
Expression parse(const std::string& source, const std::set<std::string>* declared = nullptr);

/// Evaluate with every free variable bound. IEEE double semantics; throws
/// EvalError for unbound variables, log/sqrt of negatives and division by zero.
double evaluate(const Expression& expr, const Bindings& env);

/// Expression compiled against a fixed slot layout; evaluation is
/// allocation-free. Domain errors still throw EvalError.
using CompiledFn = std::function<double(const double* slots)>;

/// Resolve every variable to its slot index and build an evaluator. Unknown
/// names fail here (the evaluation-time error for undeclared identifiers).
CompiledFn compile(const Expression& expr, const std::map<std::string, int>& slots);

/// Render the AST back to source that reparses to a structurally equal tree.
std::string pretty_print(const Expression& expr);

bool structurally_equal(const Expression& a, const Expression& b);

}  // namespace geomech::exprlang
