#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "usecon/model.hpp"

namespace usecon {

class DescriptionError : public Error {
 public:
  DescriptionError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// System description format. '#' starts a comment; blank lines are ignored.
//
//   [entities]
//   subject s1 role=doctor
//   object o1 owner=@s1
//   [domains]
//   att = {0..2}
//   level = {low, high}
//   [model]
//   ongoing
//   [policy]
//   (< (attr use att) 2)
//   [updates]
//   onUpdate: st=activated, att=(+ (attr use att) 1)
//
// The policy section may span several lines.
SystemSpec parse_description(std::string_view text);
SystemSpec read_description(const std::filesystem::path& path);

/// Subjects s1.., actions a1.., objects o1.. with no attributes.
SystemSpec uniform_system(ModelKind model, int subjects, int actions, int objects);

/// Installs a built-in policy: true, false, id-parity, activated-lt-K or
/// completed-lt-K. id-parity also gives each object integer attributes index
/// (its 1-based position) and parity; with no objects it is constant false.
/// Returns false for an unknown name.
bool apply_builtin_policy(SystemSpec& spec, std::string_view name);

/// The built-in policies worth trying for a system of `uses` candidate uses.
std::vector<std::string> builtin_policy_names(int uses);

}  // namespace usecon
