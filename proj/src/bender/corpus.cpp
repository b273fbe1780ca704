#include <algorithm>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sleuth/bender/bender.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/common/url.hpp"

namespace sleuth::bender {
namespace {

std::string unquote(std::string value) {
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
        return value.substr(1, value.size() - 2);
    }
    return value;
}

Article parse_article(const std::filesystem::path& file) {
    std::string content = read_file(file);
    if (content.rfind("\xEF\xBB\xBF", 0) == 0) content.erase(0, 3);
    std::erase(content, '\r');

    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "---") {
        throw MissingFrontMatter(file.string(), "file does not start with a '---' front-matter block");
    }
    Article article;
    bool closed = false;
    while (std::getline(in, line)) {
        if (trim(line) == "---") {
            closed = true;
            break;
        }
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        const std::string name = ascii_lower(trim(line.substr(0, colon)));
        const std::string value = unquote(trim(line.substr(colon + 1)));
        if (name == "title") article.title = value;
        if (name == "url") article.url = value;
    }
    if (!closed) throw MissingFrontMatter(file.string(), "front-matter block is not closed with '---'");
    if (article.url.empty()) throw MissingFrontMatter(file.string(), "front matter has no 'url'");
    if (!is_valid_url(article.url)) {
        throw MissingFrontMatter(file.string(), "front-matter 'url' is not an http(s) URL: " + article.url);
    }
    if (article.title.empty()) article.title = file.stem().string();

    std::ostringstream rest;
    rest << in.rdbuf();
    article.body = trim(rest.str());
    return article;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& directory, std::string theme) {
    if (!std::filesystem::is_directory(directory)) {
        throw PreconditionError("corpus directory does not exist: " + directory.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename().string().starts_with('.')) continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

    Corpus corpus;
    corpus.theme = std::move(theme);
    for (const auto& file : files) {
        Article article = parse_article(file);
        if (article.body.empty()) {
            spdlog::warn("corpus: skipping {} (empty body)", file.string());
            continue;
        }
        corpus.total_chars += article.body.size();
        corpus.articles.push_back(std::move(article));
    }
    return corpus;
}

}  // namespace sleuth::bender
