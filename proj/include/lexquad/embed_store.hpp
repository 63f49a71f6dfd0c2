#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexquad/corpus.hpp"
#include "lexquad/errors.hpp"
#include "lexquad/field_view.hpp"

namespace lexquad {

using Vector = std::vector<double>;

enum class KeyScheme { Statute, CaseH, CaseCH, CaseSCH, PairConcat };

std::string_view to_string(KeyScheme scheme);
KeyScheme case_scheme(FieldView view);

class KeySchemeError : public DataError {
public:
    using DataError::DataError;
};

/// Zero-norm operand handed to cosine().
class DegenerateVectorError : public DataError {
public:
    using DataError::DataError;
};

/// Typed embedding key:
///   statute:<sid> | case:<cid>:h | case:<cid>:ch | case:<cid>:sch | pair:<sid>:<cid>:concat
struct EmbeddingKey {
    KeyScheme scheme = KeyScheme::Statute;
    std::string statute_id;
    std::string case_id;

    static EmbeddingKey statute(std::string sid);
    static EmbeddingKey case_view(std::string cid, FieldView view);
    static EmbeddingKey pair_concat(std::string sid, std::string cid);
    /// Throws KeySchemeError for anything outside the five schemes.
    static EmbeddingKey parse(std::string_view text);

    std::string str() const;

    bool operator==(const EmbeddingKey&) const = default;
};

/// Immutable-after-load mapping from keys to vectors of one fixed dimension.
class EmbeddingStore {
public:
    EmbeddingStore(std::size_t dim, std::string encoder_name);

    std::size_t dim() const noexcept { return dim_; }
    const std::string& encoder_name() const noexcept { return encoder_name_; }
    std::size_t size() const noexcept { return keys_.size(); }
    /// Keys in insertion (file) order.
    const std::vector<std::string>& keys() const noexcept { return keys_; }

    /// Validates scheme, dimension and finiteness; rejects duplicates.
    void add(const EmbeddingKey& key, Vector v);

    bool contains(const EmbeddingKey& key) const;
    /// Throws MissingKeyError naming the key and its scheme.
    const Vector& get(const EmbeddingKey& key) const;
    /// Parses the key first (KeySchemeError), then looks it up.
    const Vector& get(std::string_view key) const;

private:
    std::size_t dim_;
    std::string encoder_name_;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, Vector> entries_;
};

EmbeddingStore load_store(std::istream& in);
EmbeddingStore load_store(const std::filesystem::path& path);

/// Header line then one row per key, components printed with 9 significant
/// digits.
void save_store(const EmbeddingStore& store, std::ostream& out);

/// Keys required by `schemes` for every statute and case of the corpus that
/// are absent from the store.
std::vector<std::string> missing_keys(const EmbeddingStore& store, const Corpus& corpus,
                                      std::span<const KeyScheme> schemes);

double dot(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> v);
/// Componentwise s - c.
Vector offset(std::span<const double> s, std::span<const double> c);
/// u.v / (|u| |v|), clamped to [-1, 1]. Throws DegenerateVectorError on a
/// zero-norm operand and DataError on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

}  // namespace lexquad
