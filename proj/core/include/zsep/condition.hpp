#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zsep {

/// Discrete stand-in for a text prompt: the null prompt, one source label, a
/// set of labels describing a mixture, or an unrelated "random" prompt that
/// carries its own seed.
class Condition {
 public:
  enum class Kind { null, label, composite, random };

  Condition() = default;

  static Condition null() { return Condition(); }
  static Condition label(int id);
  /// Ids are sorted and de-duplicated; a single id yields a Label condition.
  static Condition composite(std::vector<int> ids);
  static Condition random(std::uint64_t seed);

  Kind kind() const { return kind_; }
  bool is_null() const { return kind_ == Kind::null; }
  /// Label id; throws unless kind() == label.
  int label_id() const;
  /// One id for labels, the sorted set for composites, empty otherwise.
  std::span<const int> ids() const { return ids_; }
  std::uint64_t seed() const { return seed_; }

  /// "null", "label:3", "composite:1+2", "random:42".
  std::string to_string() const;
  static Condition parse(std::string_view text);

  friend bool operator==(const Condition&, const Condition&) = default;

 private:
  Kind kind_ = Kind::null;
  std::vector<int> ids_;
  std::uint64_t seed_ = 0;
};

}  // namespace zsep
