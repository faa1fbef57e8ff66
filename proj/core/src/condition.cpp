#include "zsep/condition.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace zsep {

namespace {

template <typename Int>
Int parse_int(std::string_view s, std::string_view whole) {
  Int v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("Condition::parse: bad number in '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Condition Condition::label(int id) {
  if (id < 0) throw std::invalid_argument("Condition::label: negative id");
  Condition c;
  c.kind_ = Kind::label;
  c.ids_ = {id};
  return c;
}

Condition Condition::composite(std::vector<int> ids) {
  if (ids.empty()) throw std::invalid_argument("Condition::composite: empty id set");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.front() < 0) throw std::invalid_argument("Condition::composite: negative id");
  if (ids.size() == 1) return label(ids.front());
  Condition c;
  c.kind_ = Kind::composite;
  c.ids_ = std::move(ids);
  return c;
}

Condition Condition::random(std::uint64_t seed) {
  Condition c;
  c.kind_ = Kind::random;
  c.seed_ = seed;
  return c;
}

int Condition::label_id() const {
  if (kind_ != Kind::label) throw std::logic_error("Condition::label_id on " + to_string());
  return ids_.front();
}

std::string Condition::to_string() const {
  switch (kind_) {
    case Kind::null:
      return "null";
    case Kind::label:
      return "label:" + std::to_string(ids_.front());
    case Kind::composite: {
      std::string s = "composite:";
      for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (i) s += '+';
        s += std::to_string(ids_[i]);
      }
      return s;
    }
    case Kind::random:
      return "random:" + std::to_string(seed_);
  }
  return "?";
}

Condition Condition::parse(std::string_view text) {
  if (text == "null") return null();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("Condition::parse: expected null|label:N|composite:A+B|random:S, got '" +
                                std::string(text) + "'");
  }
  const auto head = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  if (head == "label") return label(parse_int<int>(rest, text));
  if (head == "random") return random(parse_int<std::uint64_t>(rest, text));
  if (head == "composite") {
    std::vector<int> ids;
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto plus = rest.find('+', start);
      const auto piece = rest.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
      ids.push_back(parse_int<int>(piece, text));
      if (plus == std::string_view::npos) break;
      start = plus + 1;
    }
    return composite(std::move(ids));
  }
  throw std::invalid_argument("Condition::parse: unknown kind in '" + std::string(text) + "'");
}

}  // namespace zsep
