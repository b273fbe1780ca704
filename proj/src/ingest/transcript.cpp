#include "sleuth/ingest/transcript.hpp"

#include <fmt/format.h>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::ingest {
namespace {

/// Splits text longer than `limit` at the last space that fits, or hard at
/// a UTF-8 boundary when a single word is longer than the limit.
std::vector<std::string> split_long(std::string_view text, std::size_t limit) {
    std::vector<std::string> pieces;
    while (text.size() > limit) {
        std::string_view head = utf8_prefix(text, limit);
        const auto space = head.rfind(' ');
        if (space != std::string_view::npos && space > 0) head = head.substr(0, space);
        if (head.empty()) head = text.substr(0, limit);
        pieces.emplace_back(head);
        text.remove_prefix(head.size());
        while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    }
    if (!text.empty()) pieces.emplace_back(text);
    return pieces;
}

std::string tail_context(std::string_view text, std::size_t overlap) {
    if (overlap == 0 || text.empty()) return {};
    if (text.size() <= overlap) return std::string(text);
    std::size_t start = text.size() - overlap;
    while (start < text.size() && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) ++start;
    const auto space = text.find(' ', start);
    if (space != std::string_view::npos && space + 1 < text.size()) start = space + 1;
    return std::string(text.substr(start));
}

}  // namespace

std::vector<TranscriptChunk> chunk_cues(std::span<const CaptionCue> cues, std::size_t chunk_chars,
                                        std::size_t overlap_chars) {
    if (chunk_chars == 0) throw PreconditionError("chunk budget must be positive");
    std::vector<std::string> texts;
    std::string current;
    for (const auto& cue : cues) {
        for (auto& piece : split_long(collapse_whitespace(cue.text), chunk_chars)) {
            if (current.empty()) {
                current = std::move(piece);
            } else if (current.size() + 1 + piece.size() <= chunk_chars) {
                current += ' ';
                current += piece;
            } else {
                texts.push_back(std::move(current));
                current = std::move(piece);
            }
        }
    }
    if (!current.empty()) texts.push_back(std::move(current));

    std::vector<TranscriptChunk> chunks;
    chunks.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::string context = i == 0 ? std::string{} : tail_context(chunks.back().text, overlap_chars);
        chunks.push_back({std::move(context), std::move(texts[i])});
    }
    return chunks;
}

std::string normalization_prompt(const TranscriptChunk& chunk) {
    std::string context_block;
    if (!chunk.context.empty()) {
        context_block = fmt::format(
            "The text below directly precedes this section and is already edited. Use it only for continuity; "
            "do not repeat it in your answer.\n<<<CONTEXT\n{}\nCONTEXT>>>\n\n",
            chunk.context);
    }
    return fmt::format(
        "You are editing raw, automatically segmented video captions into readable prose.\n"
        "Restore punctuation, capitalization and sentence boundaries, and fix obvious grammar slips.\n"
        "Do not add, drop, summarize or reorder content, and keep the original language.\n"
        "Return only the edited text.\n\n"
        "{}<<<CAPTIONS\n{}\nCAPTIONS>>>\n",
        context_block, chunk.text);
}

Transcript normalize_transcript(std::span<const CaptionCue> cues, llm::LanguageModel& model,
                                const NormalizeOptions& options, std::string language) {
    Transcript transcript;
    transcript.language = std::move(language);
    transcript.source_cue_count = cues.size();
    if (cues.empty()) return transcript;

    std::string text;
    for (const auto& chunk : chunk_cues(cues, options.chunk_chars, options.overlap_chars)) {
        const std::string edited = trim(model.complete(normalization_prompt(chunk), options.model));
        if (edited.empty()) continue;
        if (!text.empty()) text += "\n\n";
        text += edited;
    }
    if (text.empty()) {
        // Keep the "text empty iff no cues" invariant even if the model returned nothing.
        for (const auto& cue : cues) {
            if (!text.empty()) text += ' ';
            text += cue.text;
        }
    }
    transcript.text = std::move(text);
    return transcript;
}

}  // namespace sleuth::ingest
