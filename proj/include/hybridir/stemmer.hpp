#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace hybridir {

class Stemmer {
public:
    virtual ~Stemmer() = default;
    virtual std::string stem(std::string_view word) const = 0;
    virtual std::string name() const = 0;
};

/// The original Porter (1980) suffix-stripping algorithm, ANSI C reference
/// variant (bli->ble, logi->log). Only lowercase ASCII words are stemmed;
/// anything else is returned unchanged.
class PorterStemmer final : public Stemmer {
public:
    std::string stem(std::string_view word) const override;
    std::string name() const override { return "porter"; }
};

class IdentityStemmer final : public Stemmer {
public:
    std::string stem(std::string_view word) const override { return std::string(word); }
    std::string name() const override { return "none"; }
};

/// "porter" or "none"; throws ParameterError otherwise.
std::shared_ptr<const Stemmer> make_stemmer(std::string_view name);

}  // namespace hybridir
