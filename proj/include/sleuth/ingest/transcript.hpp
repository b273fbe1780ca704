#pragma once

#include <span>
#include <string>
#include <vector>

#include "sleuth/ingest/types.hpp"
#include "sleuth/llm/model.hpp"

namespace sleuth::ingest {

struct NormalizeOptions {
    std::size_t chunk_chars = 6000;
    std::size_t overlap_chars = 200;
    llm::ModelConfig model = llm::factual_config();
};

/// A unit of normalization work. `context` is the tail of the previous
/// chunk, shown to the model for continuity only; `text` is what it edits.
struct TranscriptChunk {
    std::string context;
    std::string text;
};

/// Splits cue text into chunks of at most `chunk_chars` bytes, at cue
/// boundaries where possible and at word boundaries inside over-long cues.
/// Concatenating the chunks' `text` with spaces reproduces every cue's text
/// in order.
std::vector<TranscriptChunk> chunk_cues(std::span<const CaptionCue> cues, std::size_t chunk_chars,
                                        std::size_t overlap_chars);

/// Prompt sent for one chunk. The chunk body sits between `<<<CAPTIONS` and
/// `CAPTIONS>>>` lines.
std::string normalization_prompt(const TranscriptChunk& chunk);

/// Asks the model to restore punctuation and grammar chunk by chunk and joins
/// the results in cue order. No cues means no model call and empty text.
Transcript normalize_transcript(std::span<const CaptionCue> cues, llm::LanguageModel& model,
                                const NormalizeOptions& options = {}, std::string language = "und");

}  // namespace sleuth::ingest
