#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace iotchain {

template <typename E>
struct Failure {
  E code;
  std::string detail;
};

// Success-or-error outcome for operations that return no value.
template <typename E>
class Status {
 public:
  Status() = default;
  Status(E code, std::string detail = {}) : fail_(Failure<E>{code, std::move(detail)}) {}

  bool ok() const { return !fail_.has_value(); }
  explicit operator bool() const { return ok(); }

  E code() const {
    assert(fail_);
    return fail_->code;
  }
  const std::string& detail() const {
    assert(fail_);
    return fail_->detail;
  }

 private:
  std::optional<Failure<E>> fail_;
};

// Value-or-error outcome. Kept deliberately small; accessors assert on
// misuse instead of throwing.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Failure<E> failure) : v_(std::move(failure)) {}
  Result(E code, std::string detail = {}) : v_(Failure<E>{code, std::move(detail)}) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  T& value() {
    assert(ok());
    return std::get<T>(v_);
  }
  const T& value() const {
    assert(ok());
    return std::get<T>(v_);
  }
  T take() {
    assert(ok());
    return std::move(std::get<T>(v_));
  }

  E code() const {
    assert(!ok());
    return std::get<Failure<E>>(v_).code;
  }
  const std::string& detail() const {
    assert(!ok());
    return std::get<Failure<E>>(v_).detail;
  }

 private:
  std::variant<T, Failure<E>> v_;
};

}  // namespace iotchain
