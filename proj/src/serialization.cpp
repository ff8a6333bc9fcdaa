#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "schurdirac/block_operator.hpp"
#include "schurdirac/error.hpp"

namespace schurdirac {

namespace {

constexpr std::string_view kHeader = "schurdirac-blockoperator v1";

void append_number(std::string& out, double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  out.append(buf, result.ptr);
}

void append_block(std::string& out, std::string_view name, const SparseMatrix& block) {
  out.append(name);
  out.push_back('\n');
  const DenseMatrix dense(block);
  for (Index i = 0; i < dense.rows(); ++i) {
    for (Index j = 0; j < dense.cols(); ++j) {
      if (j > 0) out.push_back(' ');
      append_number(out, dense(i, j));
    }
    out.push_back('\n');
  }
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view text) : text_(text) {}

  std::string_view line() {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const auto end = text_.find('\n', pos_);
    const auto stop = end == std::string_view::npos ? text_.size() : end;
    std::string_view out = text_.substr(pos_, stop - pos_);
    pos_ = stop + 1;
    ++line_no_;
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, "block operator text, line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

std::vector<double> parse_numbers(std::string_view line, const Tokenizer& tok) {
  std::vector<double> values;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    double value = 0.0;
    const auto result = std::from_chars(line.data() + i, line.data() + line.size(), value);
    if (result.ec != std::errc()) tok.fail("malformed number");
    values.push_back(value);
    i = static_cast<std::size_t>(result.ptr - line.data());
  }
  return values;
}

double keyed_value(std::string_view line, std::string_view key, const Tokenizer& tok) {
  if (line.substr(0, key.size()) != key || line.size() <= key.size() || line[key.size()] != ' ')
    tok.fail("expected '" + std::string(key) + " <value>'");
  const auto values = parse_numbers(line.substr(key.size() + 1), tok);
  if (values.size() != 1) tok.fail("expected a single value after " + std::string(key));
  return values.front();
}

SparseMatrix read_block(Tokenizer& tok, std::string_view name, Index n) {
  if (tok.line() != name) tok.fail("expected block " + std::string(name));
  DenseMatrix block(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto row = parse_numbers(tok.line(), tok);
    if (static_cast<Index>(row.size()) != n) tok.fail("row of block " + std::string(name) + " has wrong length");
    for (Index j = 0; j < n; ++j) block(i, j) = row[static_cast<std::size_t>(j)];
  }
  return block.sparseView();
}

}  // namespace

std::string to_text(const BlockOperator& op) {
  std::string out;
  out.append(kHeader);
  out.append("\nN ");
  out.append(std::to_string(op.half_dim()));
  out.append("\nc1 ");
  append_number(out, op.c1());
  out.push_back('\n');
  append_block(out, "P", op.p());
  append_block(out, "T", op.t());
  append_block(out, "S", op.s());
  return out;
}

BlockOperator from_text(std::string_view text) {
  Tokenizer tok(text);
  if (tok.line() != kHeader) tok.fail("missing header '" + std::string(kHeader) + "'");
  const double n_value = keyed_value(tok.line(), "N", tok);
  if (!(n_value >= 1.0) || n_value != static_cast<double>(static_cast<Index>(n_value)))
    tok.fail("N must be a positive integer");
  const auto n = static_cast<Index>(n_value);
  const double c1 = keyed_value(tok.line(), "c1", tok);
  SparseMatrix p = read_block(tok, "P", n);
  SparseMatrix t = read_block(tok, "T", n);
  SparseMatrix s = read_block(tok, "S", n);
  return BlockOperator::assemble(std::move(p), std::move(t), std::move(s), C1Policy::assert_bound(c1));
}

}  // namespace schurdirac
