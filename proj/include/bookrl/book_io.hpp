#pragma once

#include <iosfwd>
#include <string>

#include "bookrl/book.hpp"

namespace bookrl {

// Versioned UTF-8 JSON document: header fields, quantizer, then entries
// in priority order. Numbers round-trip exactly (shortest decimal).
std::string to_json_string(const PublishedBook& book);
void save_published(const PublishedBook& book, const std::string& path);

PublishedBook published_from_json(const std::string& text);  // throws std::runtime_error on malformed input
PublishedBook load_published(const std::string& path);

}  // namespace bookrl
