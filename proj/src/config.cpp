#include "rvfield/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rvfield/error.hpp"

namespace rvf {

namespace {

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    Json document() {
        Json root = Json::object();
        Json* table = &root;
        while (true) {
            skip_blank(true);
            if (done()) break;
            if (peek() == '[') {
                ++pos_;
                table = &root;
                for (const auto& part : dotted_name(']')) {
                    Json& next = (*table)[part];
                    if (next.is_null()) next = Json::object();
                    if (!next.is_object()) fail("table name collides with key '" + part + "'");
                    table = &next;
                }
            } else {
                const std::string key = bare_key();
                skip_blank(false);
                expect('=');
                skip_blank(false);
                if (table->contains(key)) fail("duplicate key '" + key + "'");
                (*table)[key] = value();
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }
    bool done() const { return pos_ >= s_.size(); }
    char peek() const { return done() ? '\0' : s_[pos_]; }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    // Skips spaces and comments; also newlines when `newlines` is set.
    void skip_blank(bool newlines) {
        while (!done()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') {
                ++pos_;
            } else if (c == '#') {
                while (!done() && peek() != '\n') ++pos_;
            } else if (c == '\n' && newlines) {
                ++line_;
                ++pos_;
            } else {
                break;
            }
        }
    }

    void end_of_line() {
        skip_blank(false);
        if (done()) return;
        if (peek() != '\n') fail("unexpected trailing characters");
        ++pos_;
        ++line_;
    }

    static bool key_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    }

    std::string bare_key() {
        if (peek() == '"') return quoted();
        const std::size_t start = pos_;
        while (!done() && key_char(peek())) ++pos_;
        if (pos_ == start) fail("expected a key");
        return s_.substr(start, pos_ - start);
    }

    std::vector<std::string> dotted_name(char close) {
        std::vector<std::string> parts;
        while (true) {
            skip_blank(false);
            parts.push_back(bare_key());
            skip_blank(false);
            if (peek() == '.') {
                ++pos_;
                continue;
            }
            expect(close);
            return parts;
        }
    }

    std::string quoted() {
        expect('"');
        std::string out;
        while (true) {
            if (done() || peek() == '\n') fail("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') return out;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (done()) fail("unterminated escape");
            switch (s_[pos_++]) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: fail("unsupported escape sequence");
            }
        }
    }

    Json value() {
        const char c = peek();
        if (c == '"') return quoted();
        if (c == '[') return array();
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return true;
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return false;
        }
        return number();
    }

    Json array() {
        expect('[');
        Json arr = Json::array();
        while (true) {
            skip_blank(true);
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(value());
            skip_blank(true);
            if (peek() == ',') {
                ++pos_;
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    Json number() {
        const std::size_t start = pos_;
        bool floating = false;
        while (!done()) {
            const char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '_') {
                ++pos_;
            } else if (c == '.' || c == 'e' || c == 'E') {
                floating = true;
                ++pos_;
            } else {
                break;
            }
        }
        const std::string raw = s_.substr(start, pos_ - start);
        if (raw.empty()) fail("expected a value");
        // Underscores may only separate digits.
        std::string tok;
        for (std::size_t k = 0; k < raw.size(); ++k) {
            if (raw[k] != '_') {
                tok += raw[k];
                continue;
            }
            const bool between = k > 0 && k + 1 < raw.size() && std::isdigit(static_cast<unsigned char>(raw[k - 1])) &&
                                 std::isdigit(static_cast<unsigned char>(raw[k + 1]));
            if (!between) fail("malformed number '" + raw + "'");
        }
        const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
        const char* last = tok.data() + tok.size();
        if (floating) {
            double v = 0.0;
            auto [end, ec] = std::from_chars(first, last, v);
            if (ec != std::errc{} || end != last) fail("malformed number '" + tok + "'");
            return v;
        }
        std::int64_t v = 0;
        auto [end, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || end != last) fail("malformed number '" + tok + "'");
        return v;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const Json& model_key(const Json& doc, const char* key) {
    if (!doc.contains(key)) throw InvalidModel(std::string("model file lacks '") + key + "'");
    return doc.at(key);
}

double model_number(const Json& doc, const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc.at(key).is_number()) throw InvalidModel(std::string("'") + key + "' must be a number");
    return doc.at(key).get<double>();
}

std::vector<double> model_vector(const Json& v, const char* what) {
    if (!v.is_array()) throw InvalidModel(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw InvalidModel(std::string(what) + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace

Json parse_config(const std::string& text) { return Parser(text).document(); }

Json load_config_file(const std::filesystem::path& path) { return parse_config(read_file(path)); }

const Json& ConfigView::require(const std::string& key) const {
    if (!table_.contains(key)) throw ConfigError("missing config key '" + key + "'");
    return table_.at(key);
}

double ConfigView::number(const std::string& key, std::optional<double> fallback) {
    double v;
    if (!has(key) && fallback) {
        v = *fallback;
    } else {
        const Json& j = require(key);
        if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
        v = j.get<double>();
    }
    resolved_[key] = v;
    return v;
}

std::int64_t ConfigView::integer(const std::string& key, std::optional<std::int64_t> fallback) {
    std::int64_t v;
    if (!has(key) && fallback) {
        v = *fallback;
    } else {
        const Json& j = require(key);
        if (!j.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
        v = j.get<std::int64_t>();
    }
    resolved_[key] = v;
    return v;
}

std::string ConfigView::text(const std::string& key, std::optional<std::string> fallback) {
    std::string v;
    if (!has(key) && fallback) {
        v = *fallback;
    } else {
        const Json& j = require(key);
        if (!j.is_string()) throw ConfigError("'" + key + "' must be a string");
        v = j.get<std::string>();
    }
    resolved_[key] = v;
    return v;
}

bool ConfigView::flag(const std::string& key, std::optional<bool> fallback) {
    bool v;
    if (!has(key) && fallback) {
        v = *fallback;
    } else {
        const Json& j = require(key);
        if (!j.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
        v = j.get<bool>();
    }
    resolved_[key] = v;
    return v;
}

std::vector<double> ConfigView::numbers(const std::string& key, std::optional<std::vector<double>> fallback) {
    std::vector<double> v;
    if (!has(key) && fallback) {
        v = *fallback;
    } else {
        const Json& j = require(key);
        if (!j.is_array()) throw ConfigError("'" + key + "' must be an array of numbers");
        for (const auto& x : j) {
            if (!x.is_number()) throw ConfigError("'" + key + "' must be an array of numbers");
            v.push_back(x.get<double>());
        }
    }
    resolved_[key] = v;
    return v;
}

std::vector<std::int64_t> ConfigView::integers(const std::string& key,
                                               std::optional<std::vector<std::int64_t>> fallback) {
    std::vector<std::int64_t> v;
    if (!has(key) && fallback) {
        v = *fallback;
    } else {
        const Json& j = require(key);
        if (!j.is_array()) throw ConfigError("'" + key + "' must be an array of integers");
        for (const auto& x : j) {
            if (!x.is_number_integer()) throw ConfigError("'" + key + "' must be an array of integers");
            v.push_back(x.get<std::int64_t>());
        }
    }
    resolved_[key] = v;
    return v;
}

MAModel ma_model_from_json(const Json& doc) {
    MAModel m;
    const double dim = model_number(doc, "dim", 1.0);
    if (dim < 1.0 || dim != std::floor(dim)) throw InvalidModel("'dim' must be a positive integer");
    m.dim = static_cast<std::size_t>(dim);
    m.alpha = model_number(doc, "alpha", 1.0);
    m.p = model_number(doc, "p", 0.5);
    m.scale = model_number(doc, "scale", 1.0);
    const Json& coeffs = model_key(doc, "coeffs");
    if (!coeffs.is_array() || coeffs.empty()) throw InvalidModel("'coeffs' must be a nonempty array");
    for (const auto& entry : coeffs) {
        const auto row = model_vector(entry, "each coefficient entry");
        if (row.size() != m.dim + 1) throw InvalidModel("coefficient entries are [i_1, ..., i_d, value]");
        std::vector<Coord> idx;
        for (std::size_t k = 0; k < m.dim; ++k) {
            if (row[k] != std::floor(row[k])) throw InvalidModel("coefficient indices must be integers");
            idx.push_back(static_cast<Coord>(row[k]));
        }
        if (!m.coeffs.emplace(MultiIndex(std::move(idx)), row[m.dim]).second) {
            throw InvalidModel("duplicate coefficient index");
        }
    }
    m.validate();
    return m;
}

ScoreModel score_model_from_json(const Json& doc) {
    ScoreModel m;
    const Json& alphabet = model_key(doc, "alphabet");
    if (!alphabet.is_array()) throw InvalidModel("'alphabet' must be an array of strings");
    for (const auto& letter : alphabet) {
        if (!letter.is_string()) throw InvalidModel("'alphabet' must be an array of strings");
        m.alphabet.push_back(letter.get<std::string>());
    }
    m.freq_a = model_vector(model_key(doc, "freqsA"), "'freqsA'");
    m.freq_b = model_vector(model_key(doc, "freqsB"), "'freqsB'");
    const Json& rows = model_key(doc, "score");
    if (!rows.is_array()) throw InvalidModel("'score' must be an array of rows");
    for (const auto& row : rows) {
        const auto r = model_vector(row, "each score row");
        if (r.size() != m.alphabet.size()) throw InvalidModel("score rows must have one entry per letter");
        m.score.insert(m.score.end(), r.begin(), r.end());
    }
    m.check_well_formed();
    return m;
}

MAModel load_ma_model(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    Json doc;
    try {
        doc = parse_config(text);
    } catch (const ConfigError& e) {
        throw InvalidModel(path.string() + ": " + e.what());
    }
    return ma_model_from_json(doc);
}

ScoreModel load_score_model(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    Json doc;
    try {
        doc = parse_config(text);
    } catch (const ConfigError& e) {
        throw InvalidModel(path.string() + ": " + e.what());
    }
    return score_model_from_json(doc);
}

Json to_json(const MAModel& model) {
    Json coeffs = Json::array();
    for (const auto& [idx, c] : model.coeffs) {
        Json row = Json::array();
        for (std::size_t k = 0; k < idx.dim(); ++k) row.push_back(idx[k]);
        row.push_back(c);
        coeffs.push_back(row);
    }
    return {{"dim", model.dim}, {"alpha", model.alpha}, {"p", model.p}, {"scale", model.scale}, {"coeffs", coeffs}};
}

Json to_json(const ScoreModel& model) {
    Json rows = Json::array();
    for (std::size_t a = 0; a < model.size(); ++a) {
        Json row = Json::array();
        for (std::size_t b = 0; b < model.size(); ++b) row.push_back(model.s(a, b));
        rows.push_back(row);
    }
    return {{"alphabet", model.alphabet}, {"freqsA", model.freq_a}, {"freqsB", model.freq_b}, {"score", rows}};
}

Json to_json(const GumbelParams& p) {
    return {{"theta_star", p.theta_star}, {"theta", p.theta}, {"theta_se", p.theta_se},
            {"C", p.c},                   {"C_se", p.c_se},   {"u_probe", p.u_probe},
            {"K_star", p.k_star},         {"K_star_se", p.k_star_se},
            {"lattice", p.lattice},       {"span", p.span}};
}

GumbelParams gumbel_params_from_json(const Json& doc) {
    auto num = [&](const char* key) {
        if (!doc.contains(key) || !doc.at(key).is_number()) {
            throw ConfigError(std::string("parameter bundle lacks numeric '") + key + "'");
        }
        return doc.at(key).get<double>();
    };
    GumbelParams p{};
    p.theta_star = num("theta_star");
    p.theta = num("theta");
    p.theta_se = num("theta_se");
    p.c = num("C");
    p.c_se = num("C_se");
    p.u_probe = num("u_probe");
    p.k_star = num("K_star");
    p.k_star_se = num("K_star_se");
    p.lattice = doc.value("lattice", false);
    p.span = doc.value("span", 0.0);
    return p;
}

}  // namespace rvf
