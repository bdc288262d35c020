#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "reqsim/pump.hpp"

namespace reqsim {

struct SourceSpan {
    int line = 1;    // 1-based
    int column = 1;  // 1-based, bytes
    int length = 1;
};

class ParseError : public std::runtime_error {
public:
    ParseError(SourceSpan span, const std::string& message,
               std::vector<std::string> expected = {});
    SourceSpan span;
    std::string message;                // bare message, no position prefix
    std::vector<std::string> expected;  // acceptable tokens, may be empty
};

// Pulse-sequence DSL:
//
//   program   := material_stmt stmt*
//   material_stmt := "material" (path | "builtin:" name)
//   stmt      := burn | readout
//   burn      := "burn" ("fixed" freq | "scan" range)
//                ["repeat" int] "duration" time ["strength" number]
//   readout   := range "duration" time          (keyword "readout")
//   range     := freq ".." freq
//   freq      := number ("MHz" | "GHz")
//   time      := number ("us" | "ms" | "s")
//
// One statement per line; whitespace between tokens is free; "#" comments to
// end of line; units are mandatory. Throws ParseError with the exact span of
// the first offense. Built-in material references are resolved immediately;
// file references are loaded later by resolve_sequence_material.
PulseSequence parse_sequence(const std::string& source);

// Loads seq.material from seq.material_ref when it has not been loaded yet.
void resolve_sequence_material(PulseSequence& seq);

// Canonical text: MHz/ms everywhere, lo..hi ranges, repeat/strength omitted at
// their defaults. parse_sequence(print_sequence(s)) is structurally equal to s.
std::string print_sequence(const PulseSequence& seq);

}  // namespace reqsim
