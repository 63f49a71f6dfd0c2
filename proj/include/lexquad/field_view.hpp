#pragma once

#include <string_view>

namespace lexquad {

/// Which parts of a statute-case pair are rendered for retrieval or looked up
/// as a case embedding: hypothesis; context + hypothesis; statute + context +
/// hypothesis.
enum class FieldView { H, CH, SCH };

std::string_view to_string(FieldView view);
/// Accepts "H"/"CH"/"SCH" in either case. Throws UsageError otherwise.
FieldView parse_field_view(std::string_view token);

}  // namespace lexquad
