#pragma once

#include <doctest.h>

#include <string>
#include <vector>

#include "pabi/dataset.hpp"
#include "pabi/error.hpp"

namespace testutil {

template <typename F>
void expect_error(pabi::ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected error " << pabi::to_string(code));
  } catch (const pabi::Error& e) {
    CHECK(e.code() == code);
  }
}

/// Sentences from whitespace-separated tokens and tags; "_" marks an unknown tag.
inline pabi::TagDataset make_dataset(const std::vector<std::pair<std::string, std::string>>& rows,
                                     const pabi::LabelSet& labels) {
  std::vector<pabi::Sentence> sentences;
  for (const auto& [tokens, tags] : rows) {
    pabi::Sentence s;
    auto split = [](const std::string& text) {
      std::vector<std::string> out;
      std::string cur;
      for (char c : text) {
        if (c == ' ') {
          if (!cur.empty()) out.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!cur.empty()) out.push_back(cur);
      return out;
    };
    s.tokens = split(tokens);
    for (const auto& t : split(tags)) s.tags.push_back(t == "_" ? pabi::Tag{} : pabi::Tag{labels.index(t)});
    sentences.push_back(std::move(s));
  }
  return pabi::TagDataset(std::move(sentences), labels);
}

}  // namespace testutil
