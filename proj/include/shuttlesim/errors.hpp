#pragma once

#include <stdexcept>
#include <string>

namespace shuttlesim {

// Input is structurally valid but carries too little information to work
// with (e.g. a nearly empty scan handed to the matcher).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace osm {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line) : std::runtime_error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// A way references a node id that was never declared.
class ReferenceError : public std::runtime_error {
 public:
  ReferenceError(const std::string& what, long long way_id, long long node_ref)
      : std::runtime_error(what), way_id_(way_id), node_ref_(node_ref) {}
  long long way_id() const { return way_id_; }
  long long node_ref() const { return node_ref_; }

 private:
  long long way_id_;
  long long node_ref_;
};

// Selected ways cannot be chained into a single polyline.
class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace osm
}  // namespace shuttlesim
