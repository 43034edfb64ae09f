#include <charconv>
#include <stdexcept>
#include <string>

#include "galgraph/harmonics.hpp"

namespace galgraph {

Irreps::Irreps(std::vector<MulIrrep> items) : items_(std::move(items)) {
  offsets_.reserve(items_.size());
  int off = 0;
  for (const auto& it : items_) {
    if (it.mul < 1) throw std::invalid_argument("Irreps: multiplicity must be positive");
    if (it.l < 0 || it.l > kMaxDegree)
      throw std::invalid_argument("Irreps: degree " + std::to_string(it.l) + " outside 0.." +
                                  std::to_string(kMaxDegree));
    if (it.p != 1 && it.p != -1) throw std::invalid_argument("Irreps: parity must be +1 or -1");
    offsets_.push_back(off);
    off += it.dim();
  }
}

Irreps Irreps::parse(std::string_view text) {
  std::vector<MulIrrep> items;
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("Irreps::parse(\"" + std::string(text) + "\"): " + why);
  };
  while (pos < text.size()) {
    std::size_t end = text.find('+', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (tok.empty()) fail("empty term");
    MulIrrep ir;
    const std::size_t x = tok.find('x');
    if (x != std::string_view::npos) {
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + x, ir.mul);
      if (ec != std::errc() || p != tok.data() + x) fail("bad multiplicity");
      tok.remove_prefix(x + 1);
    }
    if (tok.size() < 2) fail("term needs a degree and parity");
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size() - 1, ir.l);
    if (ec != std::errc() || p != tok.data() + tok.size() - 1) fail("bad degree");
    const char par = tok.back();
    if (par == 'e') ir.p = 1;
    else if (par == 'o') ir.p = -1;
    else fail("parity must be 'e' or 'o'");
    items.push_back(ir);
    pos = end + 1;
  }
  return Irreps(std::move(items));
}

Irreps Irreps::spherical_harmonics(int lmax) {
  if (lmax < 0 || lmax > kMaxDegree) throw std::invalid_argument("Irreps::spherical_harmonics: lmax out of range");
  std::vector<MulIrrep> items;
  for (int l = 0; l <= lmax; ++l) items.push_back({1, l, (l % 2 == 0) ? 1 : -1});
  return Irreps(std::move(items));
}

std::string Irreps::str() const {
  std::string s;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (i) s += "+";
    s += std::to_string(items_[i].mul) + "x" + std::to_string(items_[i].l) + (items_[i].p > 0 ? "e" : "o");
  }
  return s;
}

int Irreps::dim() const {
  int d = 0;
  for (const auto& it : items_) d += it.dim();
  return d;
}

int Irreps::lmax() const {
  int l = 0;
  for (const auto& it : items_) l = std::max(l, it.l);
  return l;
}

int Irreps::n_scalars() const {
  int n = 0;
  for (const auto& it : items_)
    if (it.l == 0 && it.p == 1) n += it.mul;
  return n;
}

std::vector<int> Irreps::scalar_columns() const {
  std::vector<int> cols;
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (items_[i].l == 0 && items_[i].p == 1)
      for (int u = 0; u < items_[i].mul; ++u) cols.push_back(offsets_[i] + u);
  return cols;
}

Irreps Irreps::operator+(const Irreps& o) const {
  std::vector<MulIrrep> items = items_;
  items.insert(items.end(), o.items_.begin(), o.items_.end());
  return Irreps(std::move(items));
}

void SteerableFeature::validate() const {
  if (static_cast<int>(data.size()) != irreps.dim())
    throw std::invalid_argument("SteerableFeature: data length " + std::to_string(data.size()) +
                                " does not match irreps " + irreps.str());
}

}  // namespace galgraph
