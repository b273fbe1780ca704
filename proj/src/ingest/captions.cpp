#include "sleuth/ingest/captions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

#include <nlohmann/json.hpp>

#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"

namespace sleuth::ingest {
namespace {

struct Line {
    std::string_view text;
    std::size_t number = 0;  // 1-based
    std::size_t offset = 0;  // byte offset into the original document
};

std::string_view strip_bom(std::string_view raw, std::size_t& skipped) {
    skipped = 0;
    if (raw.substr(0, 3) == "\xEF\xBB\xBF") {
        skipped = 3;
        raw.remove_prefix(3);
    }
    return raw;
}

std::vector<Line> split_lines(std::string_view raw, std::size_t base_offset) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    std::size_t number = 1;
    while (pos <= raw.size()) {
        std::size_t end = pos;
        while (end < raw.size() && raw[end] != '\n' && raw[end] != '\r') ++end;
        lines.push_back({raw.substr(pos, end - pos), number++, base_offset + pos});
        if (end >= raw.size()) break;
        if (raw[end] == '\r' && end + 1 < raw.size() && raw[end + 1] == '\n') ++end;
        pos = end + 1;
    }
    return lines;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<std::int64_t> parse_digits(std::string_view s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return std::nullopt;
    }
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

/// `[HH:]MM:SS(.|,)mmm`; WebVTT allows omitting hours, SRT always has them.
std::optional<std::int64_t> parse_clock(std::string_view s) {
    const auto sep = s.find_last_of(".,");
    if (sep == std::string_view::npos) return std::nullopt;
    const auto millis = parse_digits(s.substr(sep + 1));
    if (!millis || s.size() - sep - 1 != 3) return std::nullopt;

    std::string_view hms = s.substr(0, sep);
    std::vector<std::string_view> parts;
    while (true) {
        const auto colon = hms.find(':');
        parts.push_back(hms.substr(0, colon));
        if (colon == std::string_view::npos) break;
        hms.remove_prefix(colon + 1);
    }
    if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
    std::int64_t hours = 0;
    if (parts.size() == 3) {
        const auto h = parse_digits(parts[0]);
        if (!h) return std::nullopt;
        hours = *h;
    }
    const auto minutes = parse_digits(parts[parts.size() - 2]);
    const auto seconds = parse_digits(parts.back());
    if (!minutes || !seconds || parts[parts.size() - 2].size() != 2 || parts.back().size() != 2 || *minutes > 59 ||
        *seconds > 59) {
        return std::nullopt;
    }
    return ((hours * 60 + *minutes) * 60 + *seconds) * 1000 + *millis;
}

struct Timing {
    std::int64_t start = 0;
    std::int64_t end = 0;
};

Timing parse_timing_line(const Line& line) {
    const auto arrow = line.text.find("-->");
    const std::string start_text = trim(line.text.substr(0, arrow));
    std::string rest = trim(line.text.substr(arrow + 3));
    const auto space = rest.find_first_of(" \t");
    const std::string end_text = rest.substr(0, space);

    const auto start = parse_clock(start_text);
    if (!start) throw MalformedTrack("unparseable start timestamp '" + start_text + "'", line.number, line.offset);
    const auto end = parse_clock(end_text);
    if (!end) throw MalformedTrack("unparseable end timestamp '" + end_text + "'", line.number, line.offset);
    if (*end <= *start) throw MalformedTrack("cue end is not after its start", line.number, line.offset);
    return {*start, *end};
}

std::string join_text(std::span<const Line> lines) {
    std::string joined;
    for (const auto& line : lines) {
        if (!joined.empty()) joined += ' ';
        joined += line.text;
    }
    return collapse_whitespace(strip_caption_markup(joined));
}

/// Groups non-blank lines into blocks.
std::vector<std::vector<Line>> blocks_of(std::span<const Line> lines) {
    std::vector<std::vector<Line>> blocks;
    std::vector<Line> current;
    for (const auto& line : lines) {
        if (is_blank(line.text)) {
            if (!current.empty()) blocks.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(line);
        }
    }
    if (!current.empty()) blocks.push_back(std::move(current));
    return blocks;
}

bool starts_with_keyword(std::string_view line, std::string_view keyword) {
    if (line.substr(0, keyword.size()) != keyword) return false;
    return line.size() == keyword.size() || line[keyword.size()] == ' ' || line[keyword.size()] == '\t';
}

std::vector<CaptionCue> parse_webvtt(std::string_view raw) {
    std::size_t bom = 0;
    const std::string_view body = strip_bom(raw, bom);
    const auto lines = split_lines(body, bom);
    if (!starts_with_keyword(lines.front().text, "WEBVTT")) {
        throw MalformedTrack("missing WEBVTT signature", 1, 0);
    }
    // Header runs until the first blank line.
    std::size_t first = 0;
    while (first < lines.size() && !is_blank(lines[first].text)) ++first;

    std::vector<CaptionCue> cues;
    for (const auto& block : blocks_of(std::span(lines).subspan(first))) {
        const std::string_view head = block.front().text;
        if (starts_with_keyword(head, "NOTE") || starts_with_keyword(head, "STYLE") ||
            starts_with_keyword(head, "REGION")) {
            continue;
        }
        std::size_t timing_index = 0;
        if (head.find("-->") == std::string_view::npos) {
            timing_index = 1;
            if (block.size() < 2 || block[1].text.find("-->") == std::string_view::npos) {
                throw MalformedTrack("cue block without a timing line", block.front().number, block.front().offset);
            }
        }
        const Timing timing = parse_timing_line(block[timing_index]);
        std::string text = join_text(std::span(block).subspan(timing_index + 1));
        if (!text.empty()) cues.push_back({timing.start, timing.end, std::move(text)});
    }
    return cues;
}

std::vector<CaptionCue> parse_srt(std::string_view raw) {
    std::size_t bom = 0;
    const std::string_view body = strip_bom(raw, bom);
    const auto lines = split_lines(body, bom);

    std::vector<CaptionCue> cues;
    for (const auto& block : blocks_of(lines)) {
        std::size_t timing_index = 0;
        if (block.front().text.find("-->") == std::string_view::npos) {
            if (!parse_digits(trim(block.front().text))) {
                throw MalformedTrack("expected a cue index or timing line", block.front().number,
                                     block.front().offset);
            }
            timing_index = 1;
            if (block.size() < 2 || block[1].text.find("-->") == std::string_view::npos) {
                throw MalformedTrack("cue block without a timing line", block.front().number, block.front().offset);
            }
        }
        const Timing timing = parse_timing_line(block[timing_index]);
        std::string text = join_text(std::span(block).subspan(timing_index + 1));
        if (!text.empty()) cues.push_back({timing.start, timing.end, std::move(text)});
    }
    return cues;
}

std::size_t line_of(std::string_view raw, std::size_t offset) {
    return 1 + static_cast<std::size_t>(std::count(raw.begin(), raw.begin() + std::min(offset, raw.size()), '\n'));
}

std::optional<std::string> attribute(std::string_view tag, std::string_view name) {
    std::size_t pos = 0;
    while ((pos = tag.find(name, pos)) != std::string_view::npos) {
        const bool boundary = pos > 0 && std::isspace(static_cast<unsigned char>(tag[pos - 1]));
        std::size_t eq = pos + name.size();
        while (eq < tag.size() && std::isspace(static_cast<unsigned char>(tag[eq]))) ++eq;
        if (boundary && eq < tag.size() && tag[eq] == '=') {
            std::size_t q = eq + 1;
            while (q < tag.size() && std::isspace(static_cast<unsigned char>(tag[q]))) ++q;
            if (q < tag.size() && (tag[q] == '"' || tag[q] == '\'')) {
                const auto close = tag.find(tag[q], q + 1);
                if (close == std::string_view::npos) return std::nullopt;
                return decode_entities(tag.substr(q + 1, close - q - 1));
            }
        }
        pos += name.size();
    }
    return std::nullopt;
}

/// Seconds with an optional decimal fraction, rounded to the nearest millisecond.
std::optional<std::int64_t> parse_seconds(std::string_view s) {
    const auto dot = s.find('.');
    const auto whole = parse_digits(s.substr(0, dot));
    if (!whole) return std::nullopt;
    std::int64_t millis = *whole * 1000;
    if (dot != std::string_view::npos) {
        const std::string_view frac = s.substr(dot + 1);
        if (!parse_digits(frac)) return std::nullopt;
        std::int64_t scaled = 0;
        for (std::size_t i = 0; i < 3; ++i) scaled = scaled * 10 + (i < frac.size() ? frac[i] - '0' : 0);
        if (frac.size() > 3 && frac[3] >= '5') ++scaled;
        millis += scaled;
    }
    return millis;
}

std::vector<CaptionCue> parse_platform_xml(std::string_view raw) {
    std::size_t bom = 0;
    const std::string_view doc = strip_bom(raw, bom);
    auto fail = [&](const std::string& message, std::size_t offset) -> MalformedTrack {
        return MalformedTrack(message, line_of(doc, offset), offset + bom);
    };

    // Locate the root element, skipping the prolog and comments.
    std::size_t pos = 0;
    std::string_view root;
    while (true) {
        pos = doc.find('<', pos);
        if (pos == std::string_view::npos) throw fail("no root element", doc.size());
        if (doc.substr(pos, 2) == "<?") {
            pos = doc.find("?>", pos);
            if (pos == std::string_view::npos) throw fail("unterminated XML declaration", doc.size());
            continue;
        }
        if (doc.substr(pos, 4) == "<!--") {
            pos = doc.find("-->", pos);
            if (pos == std::string_view::npos) throw fail("unterminated comment", doc.size());
            continue;
        }
        auto name_end = pos + 1;
        while (name_end < doc.size() && (std::isalnum(static_cast<unsigned char>(doc[name_end])) || doc[name_end] == '_')) {
            ++name_end;
        }
        root = doc.substr(pos + 1, name_end - pos - 1);
        break;
    }
    if (root != "transcript" && root != "timedtext") {
        throw fail("unexpected root element <" + std::string(root) + ">", pos);
    }
    if (doc.find("</" + std::string(root) + ">", pos) == std::string_view::npos) {
        throw fail("missing closing </" + std::string(root) + ">", doc.size());
    }

    std::vector<CaptionCue> cues;
    while ((pos = doc.find('<', pos + 1)) != std::string_view::npos) {
        const bool legacy = doc.substr(pos, 5) == "<text" &&
                            (pos + 5 < doc.size() && (doc[pos + 5] == ' ' || doc[pos + 5] == '>' || doc[pos + 5] == '/'));
        const bool srv3 = doc.substr(pos, 2) == "<p" &&
                          (pos + 2 < doc.size() && (doc[pos + 2] == ' ' || doc[pos + 2] == '>' || doc[pos + 2] == '/'));
        if (!legacy && !srv3) continue;

        const auto tag_end = doc.find('>', pos);
        if (tag_end == std::string_view::npos) throw fail("unterminated element", pos);
        const std::string_view tag = doc.substr(pos, tag_end - pos + 1);
        std::string inner;
        std::size_t next = tag_end + 1;
        if (tag[tag.size() - 2] != '/') {
            const std::string closing = legacy ? "</text>" : "</p>";
            const auto close = doc.find(closing, tag_end);
            if (close == std::string_view::npos) throw fail("missing " + closing, pos);
            inner = std::string(doc.substr(tag_end + 1, close - tag_end - 1));
            next = close + closing.size();
        }

        std::int64_t start = 0;
        std::int64_t duration = 0;
        if (legacy) {
            const auto s = attribute(tag, "start");
            const auto d = attribute(tag, "dur");
            const auto start_ms = s ? parse_seconds(*s) : std::nullopt;
            const auto dur_ms = d ? parse_seconds(*d) : std::nullopt;
            if (!start_ms) throw fail("missing or invalid start attribute", pos);
            if (!dur_ms) throw fail("missing or invalid dur attribute", pos);
            start = *start_ms;
            duration = *dur_ms;
        } else {
            const auto t = attribute(tag, "t");
            const auto d = attribute(tag, "d");
            const auto start_ms = t ? parse_digits(*t) : std::nullopt;
            const auto dur_ms = d ? parse_digits(*d) : std::nullopt;
            if (!start_ms) throw fail("missing or invalid t attribute", pos);
            if (!dur_ms) throw fail("missing or invalid d attribute", pos);
            start = *start_ms;
            duration = *dur_ms;
        }

        // Text nodes are XML-escaped; the legacy format escapes HTML once more.
        std::string text = collapse_whitespace(strip_caption_markup(strip_caption_markup(inner)));
        if (!text.empty()) {
            if (duration <= 0) throw fail("cue end is not after its start", pos);
            cues.push_back({start, start + duration, std::move(text)});
        }
        pos = next - 1;
    }
    return cues;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp <= 0x10FFFF) {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

}  // namespace

std::string decode_entities(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto amp = text.find('&', pos);
        if (amp == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, amp - pos));
        const auto semi = text.find(';', amp);
        if (semi == std::string_view::npos || semi - amp > 10) {
            out += '&';
            pos = amp + 1;
            continue;
        }
        const std::string_view name = text.substr(amp + 1, semi - amp - 1);
        bool decoded = true;
        if (name == "amp") out += '&';
        else if (name == "lt") out += '<';
        else if (name == "gt") out += '>';
        else if (name == "quot") out += '"';
        else if (name == "apos") out += '\'';
        else if (name == "nbsp") out += ' ';
        else if (name == "lrm" || name == "rlm") {
        } else if (name.size() > 1 && name[0] == '#') {
            std::uint32_t cp = 0;
            const bool hex = name[1] == 'x' || name[1] == 'X';
            const std::string_view digits = name.substr(hex ? 2 : 1);
            const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
            if (ec == std::errc{} && ptr == digits.data() + digits.size() && !digits.empty()) {
                append_utf8(out, cp);
            } else {
                decoded = false;
            }
        } else {
            decoded = false;
        }
        if (decoded) {
            pos = semi + 1;
        } else {
            out += '&';
            pos = amp + 1;
        }
    }
    return out;
}

std::string strip_caption_markup(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == '<' && pos + 1 < text.size()) {
            const char next = text[pos + 1];
            const bool tag_like = std::isalpha(static_cast<unsigned char>(next)) || next == '/' ||
                                  std::isdigit(static_cast<unsigned char>(next)) || next == '!';
            const auto close = text.find('>', pos);
            if (tag_like && close != std::string_view::npos) {
                pos = close + 1;
                continue;
            }
        } else if (c == '{' && pos + 1 < text.size() && text[pos + 1] == '\\') {
            const auto close = text.find('}', pos);
            if (close != std::string_view::npos) {
                pos = close + 1;
                continue;
            }
        }
        stripped += c;
        ++pos;
    }
    return decode_entities(stripped);
}

std::vector<CaptionCue> parse_caption_track(std::string_view raw, CaptionFormat format) {
    std::vector<CaptionCue> cues;
    switch (format) {
        case CaptionFormat::WebVtt: cues = parse_webvtt(raw); break;
        case CaptionFormat::Srt: cues = parse_srt(raw); break;
        case CaptionFormat::PlatformXml: cues = parse_platform_xml(raw); break;
    }
    std::stable_sort(cues.begin(), cues.end(),
                     [](const CaptionCue& a, const CaptionCue& b) { return a.start_ms < b.start_ms; });
    return cues;
}

CaptionFormat detect_caption_format(std::string_view raw) {
    std::size_t bom = 0;
    const std::string_view body = strip_bom(raw, bom);
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos) {
        if (body.substr(first, 6) == "WEBVTT") return CaptionFormat::WebVtt;
        if (body[first] == '<') return CaptionFormat::PlatformXml;
    }
    return CaptionFormat::Srt;
}

std::string serialize_cues(std::span<const CaptionCue> cues) {
    nlohmann::json array = nlohmann::json::array();
    for (const auto& cue : cues) {
        array.push_back({{"start_ms", cue.start_ms}, {"end_ms", cue.end_ms}, {"text", cue.text}});
    }
    return array.dump();
}

std::vector<CaptionCue> deserialize_cues(std::string_view canonical) {
    const auto array = nlohmann::json::parse(canonical);
    std::vector<CaptionCue> cues;
    cues.reserve(array.size());
    for (const auto& item : array) {
        cues.push_back({item.at("start_ms").get<std::int64_t>(), item.at("end_ms").get<std::int64_t>(),
                        item.at("text").get<std::string>()});
    }
    return cues;
}

}  // namespace sleuth::ingest
