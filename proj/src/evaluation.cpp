#include "gaitseq/evaluation.hpp"

#include "gaitseq/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace gaitseq {

namespace {

double ratio(double num, double den, bool& degenerate) {
    if (den == 0.0) {
        degenerate = true;
        return 0.0;
    }
    return num / den;
}

} // namespace

ConfusionMatrix confusion(std::span<const PredictionRecord> preds) {
    if (preds.empty()) throw DataError("confusion: no predictions");
    ConfusionMatrix cm;
    std::unordered_set<std::string> seen;
    for (const auto& p : preds) {
        if (!seen.insert(p.sequence_id).second) throw DataError("confusion: duplicate sequence id " + p.sequence_id);
        const bool truth = p.true_label == Label::Lame;
        const bool pred = p.predicted_label == Label::Lame;
        if (truth && pred) ++cm.tp;
        else if (truth) ++cm.fn;
        else if (pred) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

MetricSet metrics(const ConfusionMatrix& cm) {
    MetricSet m;
    const double tp = static_cast<double>(cm.tp);
    const double tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);
    m.accuracy = ratio(tp + tn, static_cast<double>(cm.total()), m.degenerate);
    m.sensitivity = ratio(tp, tp + fn, m.degenerate);
    m.specificity = ratio(tn, tn + fp, m.degenerate);
    const double f1_lame = ratio(2.0 * tp, 2.0 * tp + fp + fn, m.degenerate);
    const double f1_normal = ratio(2.0 * tn, 2.0 * tn + fn + fp, m.degenerate);
    m.macro_f1 = 0.5 * (f1_lame + f1_normal);
    return m;
}

double mcnemar_exact_p(std::size_t b, std::size_t c) {
    const std::size_t n = b + c;
    if (n == 0) return 1.0;
    const std::size_t k = std::min(b, c);
    long double tail = 0.0L;
    if (n <= 1000) {
        // pmf(0) = 2^-n is exact; the recurrence pmf(i+1) = pmf(i) (n-i)/(i+1) keeps small-n results exact.
        long double pmf = std::ldexp(1.0L, -static_cast<int>(n));
        for (std::size_t i = 0; i <= k; ++i) {
            tail += pmf;
            pmf = pmf * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
        }
    } else {
        const long double log_half_n = static_cast<long double>(n) * std::log(0.5L);
        for (std::size_t i = 0; i <= k; ++i) {
            const long double log_choose = std::lgamma(static_cast<long double>(n) + 1) -
                                           std::lgamma(static_cast<long double>(i) + 1) -
                                           std::lgamma(static_cast<long double>(n - i) + 1);
            tail += std::exp(log_choose + log_half_n);
        }
    }
    return static_cast<double>(std::min(1.0L, 2.0L * tail));
}

McNemarResult mcnemar_exact(std::span<const PredictionRecord> a, std::span<const PredictionRecord> b) {
    if (a.size() != b.size()) throw DataError("mcnemar: prediction sets differ in size");
    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& r : b) {
        if (!by_id.emplace(r.sequence_id, &r).second) throw DataError("mcnemar: duplicate sequence id " + r.sequence_id);
    }
    McNemarResult out;
    std::unordered_set<std::string> seen;
    for (const auto& ra : a) {
        if (!seen.insert(ra.sequence_id).second) throw DataError("mcnemar: duplicate sequence id " + ra.sequence_id);
        auto it = by_id.find(ra.sequence_id);
        if (it == by_id.end()) throw DataError("mcnemar: sequence " + ra.sequence_id + " missing from second set");
        const PredictionRecord& rb = *it->second;
        if (rb.true_label != ra.true_label) throw DataError("mcnemar: true labels differ for " + ra.sequence_id);
        const bool a_ok = ra.predicted_label == ra.true_label;
        const bool b_ok = rb.predicted_label == rb.true_label;
        if (a_ok && !b_ok) ++out.b;
        if (!a_ok && b_ok) ++out.c;
    }
    out.p_value = mcnemar_exact_p(out.b, out.c);
    return out;
}

MetricSummary aggregate_folds(std::span<const MetricSet> folds) {
    if (folds.empty()) throw std::invalid_argument("aggregate_folds: no folds");
    const double n = static_cast<double>(folds.size());
    MetricSummary s;
    auto fields = [](MetricSet& m) { return std::array<double*, 4>{&m.accuracy, &m.macro_f1, &m.sensitivity, &m.specificity}; };
    auto mean = fields(s.mean);
    auto sd = fields(s.stddev);
    for (const auto& f : folds) {
        MetricSet copy = f;
        auto v = fields(copy);
        for (int k = 0; k < 4; ++k) *mean[k] += *v[k] / n;
        s.mean.degenerate = s.mean.degenerate || f.degenerate;
    }
    for (const auto& f : folds) {
        MetricSet copy = f;
        auto v = fields(copy);
        for (int k = 0; k < 4; ++k) *sd[k] += (*v[k] - *mean[k]) * (*v[k] - *mean[k]) / n;
    }
    for (int k = 0; k < 4; ++k) *sd[k] = std::sqrt(*sd[k]);
    return s;
}

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> preds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "sequence_id,true_label,pred_label,score\n";
    for (const auto& p : preds) {
        out << p.sequence_id << ',' << to_string(p.true_label) << ',' << to_string(p.predicted_label) << ','
            << format_double(p.score) << '\n';
    }
}

std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::vector<PredictionRecord> out;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "sequence_id,true_label,pred_label,score") {
                throw DataError(path.string() + " line 1: unexpected header");
            }
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        const std::string at = path.string() + " line " + std::to_string(line_no);
        if (fields.size() != 4) throw DataError(at + ": expected 4 fields");
        PredictionRecord r;
        r.sequence_id = fields[0];
        auto truth = parse_label(fields[1]);
        auto pred = parse_label(fields[2]);
        if (!truth || !pred) throw DataError(at + ": unknown label");
        r.true_label = *truth;
        r.predicted_label = *pred;
        auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), r.score);
        if (ec != std::errc{} || ptr != fields[3].data() + fields[3].size()) throw DataError(at + ": bad score");
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
    return buf;
}

} // namespace gaitseq
