#pragma once
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>
#include <sdwd/data.hpp>
#include <sdwd/format.hpp>
#include <sdwd/path.hpp>
#include <sdwd/solver.hpp>
#include <sdwd/sparse.hpp>

namespace sdwd {

enum class PenaltyMode { lasso, enet, aenet };

inline std::string_view to_string(PenaltyMode m) noexcept
{
    switch (m) {
    case PenaltyMode::lasso: return "lasso";
    case PenaltyMode::enet: return "enet";
    case PenaltyMode::aenet: return "aenet";
    }
    return "?";
}

inline PenaltyMode parse_mode(std::string_view s)
{
    if (s == "lasso") return PenaltyMode::lasso;
    if (s == "enet") return PenaltyMode::enet;
    if (s == "aenet") return PenaltyMode::aenet;
    throw InvalidArgument("unknown penalty mode '" + std::string(s) + "' (expected lasso, enet or aenet)");
}

/// Training summary stored with a model.
struct ModelMeta
{
    Index n = 0;
    Index p = 0;
    Index nlambda = 0;
    Index nlambda2 = 0;
    std::uint64_t seed = 0;

    bool operator==(const ModelMeta&) const = default;
};

/**
 * Fitted classifier. Coefficients live on the standardized scale; the
 * standardizer maps raw rows (input_dim features) to that scale.
 */
struct DwdModel
{
    PenaltyMode mode = PenaltyMode::lasso;
    double beta0 = 0.0;
    SparseCoefs beta;
    Standardizer standardizer;
    PenaltySpec penalty;
    double lambda1_selected = 0.0;
    ModelMeta meta;

    Index input_dim() const noexcept { return standardizer.input_dim(); }
    Index dim() const noexcept { return standardizer.output_dim(); }

    void validate() const
    {
        const Index p = dim();
        if (static_cast<Index>(standardizer.retained.size() + standardizer.dropped.size()) != input_dim()
            || standardizer.scales.size() != input_dim()) {
            throw InvalidArgument("model: inconsistent standardizer");
        }
        for (std::size_t k = 0; k < beta.index.size(); ++k) {
            if (beta.index[k] < 0 || beta.index[k] >= p) throw InvalidArgument("model: coefficient index out of range");
            if (k > 0 && beta.index[k] <= beta.index[k - 1]) throw InvalidArgument("model: coefficient indices not increasing");
        }
        if (beta.index.size() != beta.value.size()) throw InvalidArgument("model: coefficient index/value length mismatch");
        penalty.validate(p);
        if (mode == PenaltyMode::lasso && penalty.lambda2 != 0.0) throw InvalidArgument("model: lasso requires lambda2 = 0");
        if (mode != PenaltyMode::aenet && (penalty.weights.array() != 1.0).any()) {
            throw InvalidArgument("model: lasso and enet require unit weights");
        }
    }

    friend bool operator==(const DwdModel& a, const DwdModel& b)
    {
        auto same = [](const Vector& u, const Vector& v) { return u.size() == v.size() && (u.array() == v.array()).all(); };
        return a.mode == b.mode && a.beta0 == b.beta0 && a.beta == b.beta
               && same(a.standardizer.means, b.standardizer.means) && same(a.standardizer.scales, b.standardizer.scales)
               && a.standardizer.dropped == b.standardizer.dropped && a.standardizer.retained == b.standardizer.retained
               && a.penalty.lambda1 == b.penalty.lambda1 && a.penalty.lambda2 == b.penalty.lambda2
               && same(a.penalty.weights, b.penalty.weights) && a.lambda1_selected == b.lambda1_selected
               && a.meta == b.meta;
    }
};

/// Builds a model from a solution on standardized data.
inline DwdModel make_model(PenaltyMode mode, const Standardizer& s, const FitState& state, const PenaltySpec& pen)
{
    DwdModel m;
    m.mode = mode;
    m.beta0 = state.beta0;
    m.beta = SparseCoefs::from_dense(state.beta);
    m.standardizer = s;
    m.penalty = pen;
    m.lambda1_selected = pen.lambda1;
    m.meta.n = state.margins.size();
    m.meta.p = s.input_dim();
    return m;
}

/// beta0 + z'beta, z the standardized row.
inline double predict_score(const DwdModel& m, const Eigen::Ref<const Vector>& raw_row)
{
    const Vector z = apply_standardizer(m.standardizer, raw_row);
    double s = m.beta0;
    for (std::size_t k = 0; k < m.beta.index.size(); ++k) s += z[m.beta.index[k]] * m.beta.value[k];
    return s;
}

/// Sign of the score; a score of exactly 0 predicts +1.
inline int predict_class(const DwdModel& m, const Eigen::Ref<const Vector>& raw_row)
{
    return predict_score(m, raw_row) >= 0.0 ? 1 : -1;
}

inline Vector predict_scores(const DwdModel& m, const Matrix& raw)
{
    if (raw.cols() != m.input_dim()) {
        throw InvalidArgument("predict: data has " + std::to_string(raw.cols()) + " features, model expects "
                              + std::to_string(m.input_dim()));
    }
    Vector out(raw.rows());
    for (Index i = 0; i < raw.rows(); ++i) out[i] = predict_score(m, raw.row(i).transpose());
    return out;
}

/// Fraction of rows whose predicted class differs from the label.
inline double error_rate(const DwdModel& m, const Dataset& raw)
{
    if (raw.n() == 0) throw DataError("error_rate: empty dataset");
    const Vector s = predict_scores(m, raw.x);
    Index wrong = 0;
    for (Index i = 0; i < raw.n(); ++i) {
        if ((s[i] >= 0.0 ? 1.0 : -1.0) != raw.y[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(raw.n());
}

/// Coefficients on the raw feature scale; dropped features get 0.
struct OriginalScale
{
    double intercept = 0.0;
    Vector beta;
};

inline OriginalScale original_scale(const DwdModel& m)
{
    OriginalScale o;
    o.intercept = m.beta0;
    o.beta = Vector::Zero(m.input_dim());
    for (std::size_t k = 0; k < m.beta.index.size(); ++k) {
        const Index j = m.standardizer.retained[static_cast<std::size_t>(m.beta.index[k])];
        const double b = m.beta.value[k] / m.standardizer.scales[j];
        o.beta[j] = b;
        o.intercept -= b * m.standardizer.means[j];
    }
    return o;
}

/**
 * Fits one model on raw data at (lambda1, lambda2). aenet first fits the
 * elastic net at the same pair and takes weights 1 / (|b_j| + 1/n).
 */
inline DwdModel fit_model(const Dataset& raw, PenaltyMode mode, double lambda1, double lambda2,
                          const SolverConfig& cfg = {})
{
    if (mode == PenaltyMode::lasso && lambda2 != 0.0) throw InvalidArgument("fit_model: lasso requires lambda2 = 0");
    raw.validate_for_fit();
    const Standardized st = standardize(raw);
    const Index p = st.data.p();
    PenaltySpec pen = PenaltySpec::uniform(lambda1, lambda2, p);
    pen.validate(p);
    FitState state = fit_fixed(st.data, pen, cfg);
    if (mode == PenaltyMode::aenet) {
        pen.weights = adaptive_weights(state.beta, st.data.n());
        state = fit_fixed(st.data, pen, cfg);
    }
    DwdModel m = make_model(mode, st.standardizer, state, pen);
    return m;
}

inline constexpr int model_format_version = 1;

namespace detail {

inline void write_vector(std::ostream& os, std::string_view key, const Vector& v)
{
    os << key << ' ' << v.size();
    for (Index j = 0; j < v.size(); ++j) os << ' ' << format_double(v[j]);
    os << '\n';
}

inline void write_indices(std::ostream& os, std::string_view key, const std::vector<Index>& v)
{
    os << key << ' ' << v.size();
    for (Index j : v) os << ' ' << j + 1;
    os << '\n';
}

class ModelReader
{
public:
    explicit ModelReader(std::istream& is) : is_(is) {}

    std::vector<std::string> line(std::string_view key)
    {
        std::string text;
        for (;;) {
            if (!std::getline(is_, text)) throw FormatError("model file: unexpected end of file before '" + std::string(key) + "'");
            ++lineno_;
            if (!trim(text).empty()) break;
        }
        std::istringstream ss(text);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;) tok.push_back(t);
        if (tok.front() != key) fail("expected '" + std::string(key) + "', found '" + tok.front() + "'");
        return tok;
    }

    double number(std::string_view key)
    {
        const auto tok = line(key);
        if (tok.size() != 2) fail("'" + std::string(key) + "' takes one value");
        return to_double(tok[1]);
    }

    std::int64_t integer(std::string_view key)
    {
        const auto tok = line(key);
        std::int64_t v;
        if (tok.size() != 2 || !try_parse_int(tok[1], v) || v < 0) fail("'" + std::string(key) + "' takes one count");
        return v;
    }

    std::string word(std::string_view key)
    {
        const auto tok = line(key);
        if (tok.size() != 2) fail("'" + std::string(key) + "' takes one value");
        return tok[1];
    }

    Vector vector(std::string_view key)
    {
        const auto tok = line(key);
        const Index len = count(tok);
        Vector v(len);
        for (Index j = 0; j < len; ++j) v[j] = to_double(tok[static_cast<std::size_t>(j + 2)]);
        return v;
    }

    std::vector<Index> indices(std::string_view key)
    {
        const auto tok = line(key);
        const Index len = count(tok);
        std::vector<Index> v;
        for (Index j = 0; j < len; ++j) {
            Index k;
            if (!try_parse_int(tok[static_cast<std::size_t>(j + 2)], k) || k < 1) fail("bad index in '" + std::string(key) + "'");
            v.push_back(k - 1);
        }
        return v;
    }

    std::string raw(std::string_view what)
    {
        std::string text;
        if (!std::getline(is_, text)) fail("file ends inside " + std::string(what));
        ++lineno_;
        return text;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw FormatError("model file line " + std::to_string(lineno_) + ": " + msg);
    }

    double to_double(const std::string& s) const
    {
        double v;
        if (!try_parse_double(s, v)) fail("not a number: '" + s + "'");
        return v;
    }

private:
    Index count(const std::vector<std::string>& tok) const
    {
        Index len;
        if (tok.size() < 2 || !try_parse_int(tok[1], len) || len < 0) fail("missing length in '" + tok[0] + "'");
        if (static_cast<Index>(tok.size()) != len + 2) fail("'" + tok[0] + "' has the wrong number of values");
        return len;
    }

    std::istream& is_;
    Index lineno_ = 0;
};

} // namespace detail

/**
 * Line-oriented text format. Every line is a key followed by values; vectors
 * are written as "key length v1 v2 ...". Indices are 1-based. Reals use 17
 * significant digits, so a save/load round trip is exact.
 */
inline void write_model(const DwdModel& m, std::ostream& os)
{
    m.validate();
    os << "sdwd-model " << model_format_version << '\n';
    os << "mode " << to_string(m.mode) << '\n';
    os << "lambda1 " << format_double(m.penalty.lambda1) << '\n';
    os << "lambda2 " << format_double(m.penalty.lambda2) << '\n';
    os << "lambda1_selected " << format_double(m.lambda1_selected) << '\n';
    os << "n " << m.meta.n << '\n';
    os << "p " << m.meta.p << '\n';
    os << "nlambda " << m.meta.nlambda << '\n';
    os << "nlambda2 " << m.meta.nlambda2 << '\n';
    os << "seed " << m.meta.seed << '\n';
    detail::write_vector(os, "means", m.standardizer.means);
    detail::write_vector(os, "scales", m.standardizer.scales);
    detail::write_indices(os, "dropped", m.standardizer.dropped);
    detail::write_vector(os, "weights", m.penalty.weights);
    os << "intercept " << format_double(m.beta0) << '\n';
    os << "coefficients " << m.beta.nnz() << '\n';
    for (std::size_t k = 0; k < m.beta.nnz(); ++k) {
        os << m.beta.index[k] + 1 << ' ' << format_double(m.beta.value[k]) << '\n';
    }
    os << "end\n";
}

inline DwdModel read_model(std::istream& is)
{
    detail::ModelReader r(is);
    const auto head = r.line("sdwd-model");
    int version;
    if (head.size() != 2 || !try_parse_int(head[1], version)) r.fail("bad header");
    if (version != model_format_version) {
        throw FormatError("model file: format version " + head[1] + " is not supported (expected "
                          + std::to_string(model_format_version) + ")");
    }
    DwdModel m;
    try {
        m.mode = parse_mode(r.word("mode"));
    } catch (const InvalidArgument& e) {
        r.fail(e.what());
    }
    m.penalty.lambda1 = r.number("lambda1");
    m.penalty.lambda2 = r.number("lambda2");
    m.lambda1_selected = r.number("lambda1_selected");
    m.meta.n = r.integer("n");
    m.meta.p = r.integer("p");
    m.meta.nlambda = r.integer("nlambda");
    m.meta.nlambda2 = r.integer("nlambda2");
    m.meta.seed = static_cast<std::uint64_t>(r.integer("seed"));
    m.standardizer.means = r.vector("means");
    m.standardizer.scales = r.vector("scales");
    m.standardizer.dropped = r.indices("dropped");
    const Index p = m.standardizer.means.size();
    std::vector<char> is_dropped(static_cast<std::size_t>(p), 0);
    for (Index j : m.standardizer.dropped) {
        if (j >= p) r.fail("dropped index out of range");
        is_dropped[static_cast<std::size_t>(j)] = 1;
    }
    for (Index j = 0; j < p; ++j) {
        if (!is_dropped[static_cast<std::size_t>(j)]) m.standardizer.retained.push_back(j);
    }
    m.penalty.weights = r.vector("weights");
    m.beta0 = r.number("intercept");
    const std::int64_t nnz = r.integer("coefficients");
    for (std::int64_t k = 0; k < nnz; ++k) {
        const std::string text = r.raw("the coefficient list");
        std::istringstream ss(text);
        std::string a, b, extra;
        Index j;
        if (!(ss >> a >> b) || (ss >> extra) || !try_parse_int(a, j) || j < 1) r.fail("bad coefficient line '" + text + "'");
        m.beta.index.push_back(j - 1);
        m.beta.value.push_back(r.to_double(b));
    }
    const auto tail = r.line("end");
    if (tail.size() != 1) r.fail("trailing values after 'end'");
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    return m;
}

inline void save_model(const DwdModel& m, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write model file '" + path + "'");
    write_model(m, os);
    if (!os) throw DataError("error writing model file '" + path + "'");
}

inline DwdModel load_model(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read model file '" + path + "'");
    return read_model(is);
}

} // namespace sdwd
