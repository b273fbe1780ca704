#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleuth/ingest/types.hpp"

namespace sleuth::ingest {

/// Parses a caption document into cues sorted by start time. Styling,
/// positioning and inline timing markup is stripped from cue text, entities
/// are decoded, and multi-line cue text is joined with single spaces. Cues
/// whose text is empty after stripping are dropped.
///
/// Throws MalformedTrack (with 1-based line and byte offset) on bad headers,
/// unparseable timestamps, or cues whose end is not after their start.
std::vector<CaptionCue> parse_caption_track(std::string_view raw, CaptionFormat format);

/// Best-effort sniffing for documents whose format the platform did not state.
CaptionFormat detect_caption_format(std::string_view raw);

/// Removes `<...>` tags and `{\...}` override blocks, then decodes entities.
std::string strip_caption_markup(std::string_view text);

/// Decodes named XML/HTML entities used in captions and numeric references.
std::string decode_entities(std::string_view text);

/// Canonical internal form of a cue list (a JSON array), and its inverse.
std::string serialize_cues(std::span<const CaptionCue> cues);
std::vector<CaptionCue> deserialize_cues(std::string_view canonical);

}  // namespace sleuth::ingest
