#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "docqg/corpus/vocab.hpp"
#include "docqg/nd/array.hpp"

namespace docqg::corpus {

inline constexpr std::uint64_t kDefaultEmbeddingSeed = 13;

template <typename T>
struct EmbeddingTable {
  nd::Array<T> matrix;  // |vocab| x d_emb
  bool frozen = true;
  std::size_t found = 0;  // rows taken from a pre-trained file
};

/// PAD row is zero; every other row is drawn from uniform(-0.1, 0.1) in row
/// order from a generator seeded with `seed`.
template <typename T>
EmbeddingTable<T> random_embeddings(const Vocab& vocab, std::size_t d_emb,
                                    std::uint64_t seed = kDefaultEmbeddingSeed) {
  if (d_emb == 0) throw DataError("embedding dimension must be positive");
  EmbeddingTable<T> table;
  table.matrix = nd::Array<T>({vocab.size(), d_emb});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    for (std::size_t c = 0; c < d_emb; ++c) {
      const double v = dist(rng);
      table.matrix.at(r, c) = r == kPad ? T{0} : static_cast<T>(v);
    }
  }
  return table;
}

/// Reads GloVe text format (token followed by d_emb reals per line). Rows for
/// vocabulary tokens absent from the file keep their seeded random values;
/// reserved rows are never overwritten.
template <typename T>
EmbeddingTable<T> load_embeddings(const std::string& path, const Vocab& vocab,
                                  std::size_t d_emb,
                                  std::uint64_t seed = kDefaultEmbeddingSeed) {
  EmbeddingTable<T> table = random_embeddings<T>(vocab, d_emb, seed);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<T> row(d_emb);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    is >> token;
    std::size_t count = 0;
    std::string field;
    while (is >> field) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != field.size()) {
        throw DataError(path + ":" + std::to_string(line_no) + ": malformed number '" +
                        field + "'");
      }
      if (count < d_emb) row[count] = static_cast<T>(v);
      ++count;
    }
    if (count != d_emb) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(d_emb) + " values, found " + std::to_string(count));
    }
    if (!vocab.contains(token)) continue;
    const std::size_t id = vocab.id(token);
    if (id < kReservedCount) continue;
    for (std::size_t c = 0; c < d_emb; ++c) table.matrix.at(id, c) = row[c];
    ++table.found;
  }
  return table;
}

}  // namespace docqg::corpus
