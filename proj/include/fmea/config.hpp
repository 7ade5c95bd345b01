#pragma once

#include <string>

#include "fmea/model.hpp"

namespace fmea {

// Merged view of config-file values, environment variables, and flags;
// precedence flags > env > file > defaults. Every run prints the resolved
// result so artifacts are reproducible from their own headers.
struct RunConfig {
  TrainConfig train;
  int shortlist_k = 5;
  std::string llm_backend = "mock";  // mock | replay | http
  std::string llm_model = "gpt-4o-2024-11-20";
  std::string embeddings = "offline";  // offline | http
  std::string embed_model = "text-embedding-3-small";
  int embed_dim = 1536;
  std::string llm_base_url;
  std::string llm_api_key;
  std::string transcripts;  // replay store path

  // Flat `key = value` text with '#' comments; unknown keys are rejected
  // with UsageError.
  void apply_file_text(const std::string& content);
  void apply_file(const std::string& path);
  void apply_env();

  std::string echo() const;
};

}  // namespace fmea
