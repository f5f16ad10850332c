#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "llmaug/types.hpp"

namespace llmaug {

using TableRows = std::vector<std::vector<std::string>>;

/// `title`, newline, then one "header: cell | header: cell" line per data
/// row. Throws InvalidInput on empty or ragged rows.
std::string linearize_table(std::string_view title, const TableRows& rows);

struct CorpusStats {
  std::size_t document_count = 0;
  double mean_body_tokens = 0.0;
};

/// Id-keyed document store. Documents keep insertion order; lookups go
/// through an id index.
class Corpus {
 public:
  Corpus() = default;

  /// Throws Ingest on a duplicate id.
  void add(Document doc);

  const Document* find(std::string_view id) const;
  const Document& at(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  const std::vector<Document>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const CorpusStats& stats() const { return stats_; }

  /// Drops links whose target is not in the corpus. Returns one message per
  /// dropped link.
  std::vector<std::string> prune_dangling_links();

 private:
  void recompute_stats();

  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
  CorpusStats stats_;
  std::size_t total_tokens_ = 0;
};

struct IngestResult {
  Corpus corpus;
  std::vector<std::string> warnings;
};

/// One JSON object per line: id, title, text, optional kind
/// ("passage"|"table"), optional links, optional rows for tables. Blank
/// lines are skipped.
IngestResult ingest_jsonl(std::istream& in, const std::string& source_name = "<stream>");
IngestResult ingest_jsonl(const std::filesystem::path& path);

/// Writes documents back in the ingest schema. Tables are written with
/// their linearized body as text, which ingest accepts verbatim.
void write_jsonl(const Corpus& corpus, std::ostream& out);

}  // namespace llmaug
