#include "bookrl/book_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bookrl {

namespace {
using ordered_json = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;
}  // namespace

std::string to_json_string(const PublishedBook& book) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["env_id"] = book.env_id;
    j["writer_algo"] = book.writer_algo;
    j["action_count"] = book.action_count;
    j["gamma"] = book.gamma;
    j["quantizer"] = {
        {"levels", book.quantizer.levels},
        {"lower", book.quantizer.lower},
        {"upper", book.quantizer.upper},
    };
    ordered_json entries = ordered_json::array();
    for (const PublishedEntry& e : book.entries) {
        ordered_json je;
        je["bins"] = e.bins;
        je["sample"] = e.sample;
        je["q"] = e.q;
        je["f"] = e.f;
        ordered_json known = ordered_json::array();
        for (uint8_t k : e.known) known.push_back(k != 0);
        je["known"] = std::move(known);
        entries.push_back(std::move(je));
    }
    j["entries"] = std::move(entries);
    return j.dump();
}

void save_published(const PublishedBook& book, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << to_json_string(book);
    if (!out) throw std::runtime_error("write failed: " + path);
}

PublishedBook published_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("book file is not valid JSON: ") + e.what());
    }
    try {
        PublishedBook book;
        book.format_version = j.at("format_version").get<int>();
        if (book.format_version != kFormatVersion) {
            throw std::runtime_error("unsupported book format_version");
        }
        book.env_id = j.at("env_id").get<std::string>();
        book.writer_algo = j.at("writer_algo").get<std::string>();
        book.action_count = j.at("action_count").get<int>();
        book.gamma = j.at("gamma").get<double>();
        const auto& jq = j.at("quantizer");
        book.quantizer.levels = jq.at("levels").get<int>();
        book.quantizer.lower = jq.at("lower").get<std::vector<double>>();
        book.quantizer.upper = jq.at("upper").get<std::vector<double>>();
        book.quantizer.validate();
        if (book.action_count < 1) throw std::runtime_error("book: action_count must be positive");

        size_t dims = book.quantizer.lower.size();
        auto a = static_cast<size_t>(book.action_count);
        for (const auto& je : j.at("entries")) {
            PublishedEntry e;
            e.bins = je.at("bins").get<std::vector<int32_t>>();
            e.sample = je.at("sample").get<std::vector<double>>();
            e.q = je.at("q").get<std::vector<double>>();
            e.f = je.at("f").get<std::vector<int>>();
            for (bool k : je.at("known").get<std::vector<bool>>()) e.known.push_back(k ? 1 : 0);
            if (e.bins.size() != dims || e.sample.size() != dims) {
                throw std::runtime_error("book entry: state dimension mismatch");
            }
            if (e.q.size() != a || e.f.size() != a || e.known.size() != a) {
                throw std::runtime_error("book entry: action dimension mismatch");
            }
            book.entries.push_back(std::move(e));
        }
        return book;
    } catch (const ordered_json::exception& e) {
        throw std::runtime_error(std::string("book file is malformed: ") + e.what());
    }
}

PublishedBook load_published(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open book file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return published_from_json(buf.str());
}

}  // namespace bookrl
