#include <geomech/expr.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace geomech::exprlang {

namespace {

const std::map<std::string, int>& function_table() {
    static const std::map<std::string, int> fns = {
        {"sin", 1}, {"cos", 1}, {"tan", 1}, {"exp", 1}, {"log", 1},
        {"sqrt", 1}, {"abs", 1}, {"pow", 2},
    };
    return fns;
}

struct Token {
    enum Kind { Number, Ident, Op, LParen, RParen, Comma, End } kind;
    double number = 0.0;
    std::string text;
    char op = 0;
    std::size_t offset = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        tok_.offset = pos_;
        if (pos_ >= src_.size()) {
            tok_.kind = Token::End;
            return;
        }
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            tok_.kind = Token::Ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        switch (c) {
            case '+': case '-': case '*': case '/': case '^':
                tok_.kind = Token::Op;
                tok_.op = c;
                ++pos_;
                return;
            case '(': tok_.kind = Token::LParen; ++pos_; return;
            case ')': tok_.kind = Token::RParen; ++pos_; return;
            case ',': tok_.kind = Token::Comma; ++pos_; return;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", pos_);
        }
    }

    void lex_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            } else {
                pos_ = mark;  // trailing 'e' belongs to an identifier or is an error downstream
            }
        }
        tok_.kind = Token::Number;
        tok_.text = src_.substr(start, pos_ - start);
        tok_.number = std::strtod(tok_.text.c_str(), nullptr);
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    Token tok_;
};

// Precedence-climbing parser. Binding powers: +- (10), */ (20), unary- (30),
// ^ (40, right-assoc so its rhs is parsed at 39).
class Parser {
  public:
    Parser(const std::string& src, const std::set<std::string>* declared)
        : lex_(src), declared_(declared) {}

    Expression run() {
        NodePtr e = parse_expr(0);
        if (lex_.peek().kind != Token::End)
            throw ParseError("trailing input; expected operator or end", lex_.peek().offset);
        return Expression(std::move(e));
    }

  private:
    NodePtr parse_expr(int min_bp) {
        NodePtr lhs = parse_prefix();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind != Token::Op) break;
            int bp = binding_power(t.op);
            if (bp < min_bp) break;
            char op = lex_.take().op;
            int rhs_bp = (op == '^') ? bp - 1 : bp + 1;
            NodePtr rhs = parse_expr(rhs_bp);
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Binary;
            n->op = op;
            n->args = {std::move(lhs), std::move(rhs)};
            lhs = std::move(n);
        }
        return lhs;
    }

    static int binding_power(char op) {
        switch (op) {
            case '+': case '-': return 10;
            case '*': case '/': return 20;
            case '^': return 40;
        }
        return -1;
    }

    NodePtr parse_prefix() {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::Number: {
                auto n = std::make_shared<Node>();
                n->kind = NodeKind::Number;
                n->number = t.number;
                return n;
            }
            case Token::Op:
                if (t.op == '-') {
                    auto n = std::make_shared<Node>();
                    n->kind = NodeKind::Neg;
                    n->args = {parse_expr(30)};
                    return n;
                }
                if (t.op == '+') return parse_expr(30);
                throw ParseError("expected number, identifier, '(' or unary '-'", t.offset);
            case Token::LParen: {
                NodePtr e = parse_expr(0);
                expect_rparen();
                return e;
            }
            case Token::Ident:
                return parse_ident(std::move(t));
            default:
                throw ParseError("expected number, identifier, '(' or unary '-'", t.offset);
        }
    }

    NodePtr parse_ident(Token t) {
        auto it = function_table().find(t.text);
        if (lex_.peek().kind == Token::LParen) {
            if (it == function_table().end())
                throw ParseError("unknown function '" + t.text + "'", t.offset);
            lex_.take();
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Call;
            n->name = t.text;
            n->args.push_back(parse_expr(0));
            for (int k = 1; k < it->second; ++k) {
                if (lex_.peek().kind != Token::Comma)
                    throw ParseError("expected ','", lex_.peek().offset);
                lex_.take();
                n->args.push_back(parse_expr(0));
            }
            expect_rparen();
            return n;
        }
        if (it != function_table().end())
            throw ParseError("function '" + t.text + "' requires arguments", t.offset);
        if (declared_ && !declared_->count(t.text))
            throw ParseError("unknown identifier '" + t.text + "'", t.offset);
        // without a declared-name set, free names are caught at evaluation time
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::Variable;
        n->name = t.text;
        return n;
    }

    void expect_rparen() {
        if (lex_.peek().kind != Token::RParen)
            throw ParseError("expected ')'", lex_.peek().offset);
        lex_.take();
    }

    Lexer lex_;
    const std::set<std::string>* declared_;
};

double eval_node(const Node& n, const Bindings& env) {
    switch (n.kind) {
        case NodeKind::Number:
            return n.number;
        case NodeKind::Variable: {
            auto it = env.find(n.name);
            if (it == env.end()) throw EvalError("unbound variable '" + n.name + "'");
            return it->second;
        }
        case NodeKind::Neg:
            return -eval_node(*n.args[0], env);
        case NodeKind::Binary: {
            double a = eval_node(*n.args[0], env);
            double b = eval_node(*n.args[1], env);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/':
                    if (b == 0.0) throw EvalError("division by zero");
                    return a / b;
                case '^': return std::pow(a, b);
            }
            throw EvalError("bad operator");
        }
        case NodeKind::Call: {
            double a = eval_node(*n.args[0], env);
            if (n.name == "sin") return std::sin(a);
            if (n.name == "cos") return std::cos(a);
            if (n.name == "tan") return std::tan(a);
            if (n.name == "exp") return std::exp(a);
            if (n.name == "abs") return std::fabs(a);
            if (n.name == "log") {
                if (a <= 0.0) throw EvalError("log of non-positive value");
                return std::log(a);
            }
            if (n.name == "sqrt") {
                if (a < 0.0) throw EvalError("sqrt of negative value");
                return std::sqrt(a);
            }
            if (n.name == "pow") return std::pow(a, eval_node(*n.args[1], env));
            throw EvalError("unknown function '" + n.name + "'");
        }
    }
    throw EvalError("corrupt AST");
}

void print_node(const Node& n, std::ostringstream& out) {
    switch (n.kind) {
        case NodeKind::Number: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", n.number);
            out << buf;
            return;
        }
        case NodeKind::Variable:
            out << n.name;
            return;
        case NodeKind::Neg:
            out << "(-";
            print_node(*n.args[0], out);
            out << ")";
            return;
        case NodeKind::Binary:
            out << "(";
            print_node(*n.args[0], out);
            out << n.op;
            print_node(*n.args[1], out);
            out << ")";
            return;
        case NodeKind::Call:
            out << n.name << "(";
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out << ",";
                print_node(*n.args[i], out);
            }
            out << ")";
            return;
    }
}

void collect_vars(const NodePtr& n, std::vector<std::string>& out) {
    if (!n) return;
    if (n->kind == NodeKind::Variable) {
        for (const auto& s : out)
            if (s == n->name) return;
        out.push_back(n->name);
    }
    for (const auto& a : n->args) collect_vars(a, out);
}

bool equal_node(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NodeKind::Number:
            return a.number == b.number;
        case NodeKind::Variable:
            return a.name == b.name;
        case NodeKind::Neg:
            return equal_node(*a.args[0], *b.args[0]);
        case NodeKind::Binary:
            return a.op == b.op && equal_node(*a.args[0], *b.args[0]) &&
                   equal_node(*a.args[1], *b.args[1]);
        case NodeKind::Call:
            if (a.name != b.name || a.args.size() != b.args.size()) return false;
            for (std::size_t i = 0; i < a.args.size(); ++i)
                if (!equal_node(*a.args[i], *b.args[i])) return false;
            return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> Expression::free_variables() const {
    std::vector<std::string> out;
    collect_vars(root_, out);
    return out;
}

std::set<std::string> chart_names(int dim, const std::set<std::string>& params) {
    std::set<std::string> names = params;
    names.insert("t");
    for (int k = 1; k <= dim; ++k) {
        names.insert("q" + std::to_string(k));
        names.insert("v" + std::to_string(k));
    }
    return names;
}

Expression parse(const std::string& source, const std::set<std::string>* declared) {
    return Parser(source, declared).run();
}

double evaluate(const Expression& expr, const Bindings& env) {
    if (!expr.valid()) throw EvalError("empty expression");
    double r = eval_node(*expr.root(), env);
    if (!std::isfinite(r)) throw EvalError("non-finite result");
    return r;
}

namespace {

CompiledFn compile_node(const Node& n, const std::map<std::string, int>& slots) {
    switch (n.kind) {
        case NodeKind::Number: {
            double v = n.number;
            return [v](const double*) { return v; };
        }
        case NodeKind::Variable: {
            auto it = slots.find(n.name);
            if (it == slots.end()) throw EvalError("unbound variable '" + n.name + "'");
            int idx = it->second;
            return [idx](const double* s) { return s[idx]; };
        }
        case NodeKind::Neg: {
            auto a = compile_node(*n.args[0], slots);
            return [a](const double* s) { return -a(s); };
        }
        case NodeKind::Binary: {
            auto a = compile_node(*n.args[0], slots);
            auto b = compile_node(*n.args[1], slots);
            switch (n.op) {
                case '+': return [a, b](const double* s) { return a(s) + b(s); };
                case '-': return [a, b](const double* s) { return a(s) - b(s); };
                case '*': return [a, b](const double* s) { return a(s) * b(s); };
                case '/':
                    return [a, b](const double* s) {
                        double d = b(s);
                        if (d == 0.0) throw EvalError("division by zero");
                        return a(s) / d;
                    };
                case '^': return [a, b](const double* s) { return std::pow(a(s), b(s)); };
            }
            throw EvalError("bad operator");
        }
        case NodeKind::Call: {
            auto a = compile_node(*n.args[0], slots);
            if (n.name == "sin") return [a](const double* s) { return std::sin(a(s)); };
            if (n.name == "cos") return [a](const double* s) { return std::cos(a(s)); };
            if (n.name == "tan") return [a](const double* s) { return std::tan(a(s)); };
            if (n.name == "exp") return [a](const double* s) { return std::exp(a(s)); };
            if (n.name == "abs") return [a](const double* s) { return std::fabs(a(s)); };
            if (n.name == "log")
                return [a](const double* s) {
                    double x = a(s);
                    if (x <= 0.0) throw EvalError("log of non-positive value");
                    return std::log(x);
                };
            if (n.name == "sqrt")
                return [a](const double* s) {
                    double x = a(s);
                    if (x < 0.0) throw EvalError("sqrt of negative value");
                    return std::sqrt(x);
                };
            if (n.name == "pow") {
                auto b = compile_node(*n.args[1], slots);
                return [a, b](const double* s) { return std::pow(a(s), b(s)); };
            }
            throw EvalError("unknown function '" + n.name + "'");
        }
    }
    throw EvalError("corrupt AST");
}

}  // namespace

CompiledFn compile(const Expression& expr, const std::map<std::string, int>& slots) {
    if (!expr.valid()) throw EvalError("empty expression");
    return compile_node(*expr.root(), slots);
}

std::string pretty_print(const Expression& expr) {
    std::ostringstream out;
    if (expr.valid()) print_node(*expr.root(), out);
    return out.str();
}

bool structurally_equal(const Expression& a, const Expression& b) {
    if (!a.valid() || !b.valid()) return a.valid() == b.valid();
    return equal_node(*a.root(), *b.root());
}

}  // namespace geomech::exprlang
