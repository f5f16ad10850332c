#include "llmaug/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "llmaug/error.hpp"
#include "llmaug/text.hpp"

namespace llmaug {

using json = nlohmann::json;

std::string linearize_table(std::string_view title, const TableRows& rows) {
  if (rows.empty()) throw Error(ErrorKind::InvalidInput, "table has no rows");
  const auto& header = rows.front();
  if (header.empty()) throw Error(ErrorKind::InvalidInput, "table header is empty");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error(ErrorKind::InvalidInput, "table row " + std::to_string(r) + " has " +
                                               std::to_string(rows[r].size()) + " cells, header has " +
                                               std::to_string(header.size()));
    }
  }
  std::string out(title);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    out += '\n';
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c > 0) out += " | ";
      out += header[c];
      out += ": ";
      out += rows[r][c];
    }
  }
  return out;
}

void Corpus::add(Document doc) {
  if (index_.count(doc.id) != 0) throw Error(ErrorKind::Ingest, "duplicate document id '" + doc.id + "'");
  index_.emplace(doc.id, docs_.size());
  total_tokens_ += tokenize(doc.body).size();
  docs_.push_back(std::move(doc));
  recompute_stats();
}

const Document* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(std::string_view id) const {
  const Document* doc = find(id);
  if (doc == nullptr) throw Error(ErrorKind::NotFound, "unknown document id '" + std::string(id) + "'");
  return *doc;
}

std::vector<std::string> Corpus::prune_dangling_links() {
  std::vector<std::string> messages;
  for (auto& doc : docs_) {
    std::vector<std::string> kept;
    for (auto& link : doc.links) {
      if (contains(link)) {
        kept.push_back(std::move(link));
      } else {
        messages.push_back("document '" + doc.id + "': dropped dangling link to '" + link + "'");
      }
    }
    doc.links = std::move(kept);
  }
  return messages;
}

void Corpus::recompute_stats() {
  stats_.document_count = docs_.size();
  stats_.mean_body_tokens =
      docs_.empty() ? 0.0 : static_cast<double>(total_tokens_) / static_cast<double>(docs_.size());
}

namespace {

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + msg);
}

Document parse_document(const json& obj, const std::string& source, std::size_t line) {
  if (!obj.is_object()) parse_fail(source, line, "expected a JSON object");
  auto string_field = [&](const char* name, bool required) -> std::string {
    auto it = obj.find(name);
    if (it == obj.end()) {
      if (required) parse_fail(source, line, std::string("missing field '") + name + "'");
      return {};
    }
    if (!it->is_string()) parse_fail(source, line, std::string("field '") + name + "' must be a string");
    return it->get<std::string>();
  };

  Document doc;
  doc.id = string_field("id", true);
  if (doc.id.empty()) parse_fail(source, line, "field 'id' is empty");
  doc.title = string_field("title", false);

  const std::string kind = obj.contains("kind") ? string_field("kind", true) : "passage";
  if (kind == "passage") {
    doc.kind = DocKind::Passage;
  } else if (kind == "table") {
    doc.kind = DocKind::Table;
  } else {
    parse_fail(source, line, "unknown kind '" + kind + "'");
  }

  if (auto it = obj.find("links"); it != obj.end()) {
    if (!it->is_array()) parse_fail(source, line, "field 'links' must be an array");
    for (const auto& l : *it) {
      if (!l.is_string()) parse_fail(source, line, "field 'links' must hold strings");
      doc.links.push_back(l.get<std::string>());
    }
  }

  if (auto it = obj.find("rows"); it != obj.end()) {
    if (doc.kind != DocKind::Table) parse_fail(source, line, "field 'rows' is only valid for tables");
    TableRows rows;
    if (!it->is_array()) parse_fail(source, line, "field 'rows' must be an array of arrays");
    for (const auto& row : *it) {
      if (!row.is_array()) parse_fail(source, line, "field 'rows' must be an array of arrays");
      auto& cells = rows.emplace_back();
      for (const auto& cell : row) {
        if (!cell.is_string()) parse_fail(source, line, "table cells must be strings");
        cells.push_back(cell.get<std::string>());
      }
    }
    try {
      doc.body = linearize_table(doc.title, rows);
    } catch (const Error& e) {
      parse_fail(source, line, e.what());
    }
  } else {
    doc.body = string_field("text", true);
  }
  return doc;
}

}  // namespace

IngestResult ingest_jsonl(std::istream& in, const std::string& source_name) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(source_name, line_no, std::string("malformed JSON: ") + e.what());
    }
    Document doc = parse_document(obj, source_name, line_no);
    if (result.corpus.contains(doc.id)) {
      throw Error(ErrorKind::Ingest,
                  source_name + ":" + std::to_string(line_no) + ": duplicate document id '" + doc.id + "'");
    }
    result.corpus.add(std::move(doc));
  }
  result.warnings = result.corpus.prune_dangling_links();
  return result;
}

IngestResult ingest_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Ingest, "cannot open corpus file " + path.string());
  return ingest_jsonl(in, path.string());
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents()) {
    json obj = {{"id", doc.id}, {"title", doc.title}, {"text", doc.body},
                {"kind", doc.kind == DocKind::Table ? "table" : "passage"}, {"links", doc.links}};
    out << obj.dump() << '\n';
  }
}

}  // namespace llmaug
