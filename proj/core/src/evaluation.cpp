#include "esgmix/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "esgmix/error.hpp"
#include "esgmix/hash.hpp"
#include "esgmix/text.hpp"

namespace esgmix {

using nlohmann::json;

std::vector<GoldLabel> gold_labels(const Dataset& d) {
    std::vector<GoldLabel> golds;
    golds.reserve(d.size());
    for (const auto& doc : d) {
        if (!doc.label) throw PreconditionError("gold_labels: document '" + doc.id + "' is unlabeled");
        golds.push_back({doc.id, *doc.label});
    }
    return golds;
}

void PredictionRecord::validate(const LabelRegistry* registry) const {
    std::unordered_set<std::string> ids;
    for (const auto& p : pairs) {
        if (!ids.insert(p.doc_id).second) throw DataError(model_name + ": duplicate prediction for '" + p.doc_id + "'");
        if (registry && !registry->contains(p.label)) {
            throw DataError(model_name + ": predicted label '" + p.label + "' is not in the registry");
        }
    }
}

void save_predictions(const PredictionRecord& record, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write predictions " + path.string());
    for (const auto& p : record.pairs) {
        json j = {{"doc_id", p.doc_id}, {"label", p.label}};
        if (p.score) j["score"] = *p.score;
        out << j.dump() << '\n';
    }
}

PredictionRecord load_predictions(const std::filesystem::path& path, std::string model_name) {
    std::ifstream in(path);
    if (!in) throw DataError("file not found: " + path.string());
    PredictionRecord record{model_name.empty() ? path.stem().string() : std::move(model_name), {}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            PredictedLabel p{j.at("doc_id").get<std::string>(), j.at("label").get<std::string>(), std::nullopt};
            if (j.contains("score") && !j["score"].is_null()) p.score = j["score"].get<double>();
            record.pairs.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": malformed prediction: " + e.what(), lineno);
        }
    }
    record.validate();
    return record;
}

namespace {

std::string fingerprint(std::span<const GoldLabel> golds) {
    std::vector<std::pair<std::string, std::string>> sorted;
    for (const auto& g : golds) sorted.emplace_back(g.doc_id, g.label);
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t h = hash_bytes(std::to_string(sorted.size()));
    for (const auto& [id, label] : sorted) h = hash_combine(h, hash_combine(hash_bytes(id), hash_bytes(label)));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

MetricsReport weighted_f1(std::span<const GoldLabel> golds, const PredictionRecord& preds) {
    preds.validate();
    std::unordered_map<std::string, const PredictedLabel*> by_id;
    for (const auto& p : preds.pairs) by_id.emplace(p.doc_id, &p);
    std::unordered_set<std::string> gold_ids;
    for (const auto& g : golds) {
        if (!gold_ids.insert(g.doc_id).second) throw DataError("duplicate gold id '" + g.doc_id + "'");
        if (!by_id.count(g.doc_id)) throw DataError(preds.model_name + ": missing prediction for '" + g.doc_id + "'");
    }
    for (const auto& p : preds.pairs) {
        if (!gold_ids.count(p.doc_id)) throw DataError(preds.model_name + ": prediction for unknown id '" + p.doc_id + "'");
    }

    MetricsReport report;
    std::set<std::string> label_set;
    for (const auto& g : golds) label_set.insert(g.label);
    for (const auto& p : preds.pairs) label_set.insert(p.label);
    report.labels.assign(label_set.begin(), label_set.end());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < report.labels.size(); ++i) index[report.labels[i]] = i;

    const std::size_t L = report.labels.size();
    report.confusion.assign(L, std::vector<std::size_t>(L, 0));
    for (const auto& g : golds) ++report.confusion[index[g.label]][index[by_id[g.doc_id]->label]];

    const double n = static_cast<double>(golds.size());
    for (std::size_t l = 0; l < L; ++l) {
        std::size_t tp = report.confusion[l][l], support = 0, predicted = 0;
        for (std::size_t k = 0; k < L; ++k) {
            support += report.confusion[l][k];
            predicted += report.confusion[k][l];
        }
        LabelMetrics m;
        m.support = support;
        m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        m.recall = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        report.per_label[report.labels[l]] = m;
        report.weighted_f1 += static_cast<double>(support) * m.f1;
    }
    if (n > 0) report.weighted_f1 = std::min(1.0, report.weighted_f1 / n);
    report.gold_fingerprint = fingerprint(golds);
    return report;
}

json to_json(const MetricsReport& report) {
    json per_label = json::object();
    for (const auto& [label, m] : report.per_label) {
        per_label[label] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    }
    return {{"weighted_f1", report.weighted_f1},
            {"labels", report.labels},
            {"per_label", per_label},
            {"confusion", report.confusion},
            {"gold_fingerprint", report.gold_fingerprint}};
}

std::vector<GateCandidate> baseline_gate(std::span<const GateCandidate> candidates, double threshold) {
    std::vector<GateCandidate> kept;
    for (const auto& c : candidates) {
        if (c.valid_f1 >= threshold) kept.push_back(c);
    }
    return kept;
}

PredictionRecord hard_vote(std::span<const PredictionRecord> records, TieBreak tie_break) {
    if (records.size() < 2) throw PreconditionError("hard_vote needs at least 2 prediction records");
    std::vector<std::unordered_map<std::string, const PredictedLabel*>> lookup(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        records[r].validate();
        for (const auto& p : records[r].pairs) lookup[r].emplace(p.doc_id, &p);
        if (records[r].pairs.size() != records[0].pairs.size()) {
            throw DataError("hard_vote: '" + records[r].model_name + "' covers a different document set");
        }
    }

    std::vector<std::string> names;
    for (const auto& r : records) names.push_back(r.model_name);
    std::sort(names.begin(), names.end());
    PredictionRecord out;
    out.model_name = "ensemble(";
    for (std::size_t i = 0; i < names.size(); ++i) out.model_name += (i ? "," : "") + names[i];
    out.model_name += ")";

    for (const auto& anchor : records[0].pairs) {
        struct Tally {
            std::size_t votes = 0;
            double score = 0.0;
        };
        std::map<std::string, Tally> tally;  // byte order
        bool all_scored = true;
        for (std::size_t r = 0; r < records.size(); ++r) {
            auto it = lookup[r].find(anchor.doc_id);
            if (it == lookup[r].end()) {
                throw DataError("hard_vote: '" + records[r].model_name + "' has no prediction for '" + anchor.doc_id + "'");
            }
            auto& t = tally[it->second->label];
            ++t.votes;
            if (it->second->score) {
                t.score += *it->second->score;
            } else {
                all_scored = false;
            }
        }
        const bool use_score = tie_break == TieBreak::score_then_label && all_scored;
        const std::pair<const std::string, Tally>* best = nullptr;
        for (const auto& entry : tally) {
            if (!best || entry.second.votes > best->second.votes ||
                (entry.second.votes == best->second.votes && use_score && entry.second.score > best->second.score)) {
                best = &entry;
            }
        }
        out.pairs.push_back({anchor.doc_id, best->first,
                             static_cast<double>(best->second.votes) / static_cast<double>(records.size())});
    }
    return out;
}

EnsembleComparison compare_to_members(const MetricsReport& ensemble,
                                      std::span<const std::pair<std::string, MetricsReport>> members) {
    EnsembleComparison c;
    c.ensemble_f1 = ensemble.weighted_f1;
    for (const auto& [name, report] : members) {
        if (report.gold_fingerprint != ensemble.gold_fingerprint) {
            throw DataError("compare_to_members: '" + name + "' was scored on a different gold set");
        }
        c.members.push_back({name, report.weighted_f1});
        c.best_member_f1 = std::max(c.best_member_f1, report.weighted_f1);
    }
    c.ensemble_at_least_best = c.ensemble_f1 >= c.best_member_f1;
    return c;
}

json to_json(const EnsembleComparison& c) {
    json members = json::array();
    for (const auto& m : c.members) members.push_back({{"name", m.name}, {"weighted_f1", m.weighted_f1}});
    return {{"ensemble_f1", c.ensemble_f1},
            {"members", members},
            {"best_member_f1", c.best_member_f1},
            {"ensemble_at_least_best", c.ensemble_at_least_best}};
}

} // namespace esgmix
