#include "cocur/objective.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace cocur {

namespace {

double dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double logsumexp(const Vec& v) {
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - m);
    return m + std::log(acc);
}

Vec softmax(const Vec& v) {
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    Vec p(v.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = std::exp(v[i] - m);
        acc += p[i];
    }
    for (double& x : p) x /= acc;
    return p;
}

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InputError("tau must be a finite positive number");
    }
}

// Flat view of the ragged label tensor.
struct FlatLabels {
    std::vector<std::size_t> owner; // flat index -> sample index
    std::vector<std::size_t> pos;   // flat index -> position within the owner's labels
    std::vector<const Vec*> vec;    // flat index -> label row
    std::size_t total = 0;
    std::size_t samples_with_labels = 0;
};

FlatLabels flatten(const std::vector<Mat>& labels) {
    FlatLabels f;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i].empty()) ++f.samples_with_labels;
        for (std::size_t l = 0; l < labels[i].size(); ++l) {
            f.owner.push_back(i);
            f.pos.push_back(l);
            f.vec.push_back(&labels[i][l]);
        }
    }
    f.total = f.owner.size();
    return f;
}

} // namespace

void ContrastiveBatch::validate() const {
    if (img.empty()) {
        throw InputError("batch is empty");
    }
    if (txt.size() != img.size() || labels.size() != img.size()) {
        throw InputError("img, txt and labels must have the same batch size");
    }
    check_tau(tau);
    const std::size_t d = img[0].size();
    if (d < 2) {
        throw InputError("embedding dimension must be >= 2");
    }
    auto check_row = [&](const Vec& v, const char* what) {
        if (v.size() != d) {
            throw InputError(std::string(what) + " row has dimension " + std::to_string(v.size()) +
                             ", expected " + std::to_string(d));
        }
        double norm = std::sqrt(dot(v, v));
        if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-4) {
            throw InputError(std::string(what) + " row is not unit-norm (norm " +
                             std::to_string(norm) + ")");
        }
    };
    for (const Vec& v : img) check_row(v, "img");
    for (const Vec& v : txt) check_row(v, "txt");
    for (const Mat& rows : labels) {
        for (const Vec& v : rows) check_row(v, "label");
    }
}

double nce_from_logits(const Mat& logits) {
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        acc += logsumexp(logits[i]) - logits[i][i];
    }
    return acc / static_cast<double>(logits.size());
}

std::pair<double, double> info_nce(const Mat& img, const Mat& txt, double tau) {
    check_tau(tau);
    if (img.empty() || img.size() != txt.size()) {
        throw InputError("info_nce: img and txt must be non-empty and the same size");
    }
    const std::size_t b = img.size();
    Mat i2t(b, Vec(b)), t2i(b, Vec(b));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            i2t[i][j] = dot(img[i], txt[j]) / tau;
            t2i[i][j] = dot(txt[i], img[j]) / tau;
        }
    }
    return {nce_from_logits(i2t), nce_from_logits(t2i)};
}

std::pair<double, double> multi_label_loss(const Mat& img, const std::vector<Mat>& labels,
                                           double tau) {
    check_tau(tau);
    if (img.empty() || labels.size() != img.size()) {
        throw InputError("multi_label_loss: labels must match the batch size");
    }
    const FlatLabels flat = flatten(labels);
    if (flat.total == 0) {
        throw InputError("multi_label_loss: undefined, every sample has zero labels");
    }
    const std::size_t b = img.size();

    // Image -> labels: per sample, positives are its own labels, the
    // denominator runs over every label of every sample.
    double l_i2l = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i].empty()) continue;
        Vec all(flat.total);
        Vec own;
        own.reserve(labels[i].size());
        for (std::size_t f = 0; f < flat.total; ++f) {
            all[f] = dot(img[i], *flat.vec[f]) / tau;
            if (flat.owner[f] == i) own.push_back(all[f]);
        }
        l_i2l += logsumexp(all) - logsumexp(own);
    }
    l_i2l /= static_cast<double>(flat.samples_with_labels);

    // Labels -> image: per label, softmax over the batch images, normalized
    // by the realized label count.
    double l_l2i = 0.0;
    for (std::size_t f = 0; f < flat.total; ++f) {
        Vec row(b);
        for (std::size_t j = 0; j < b; ++j) {
            row[j] = dot(*flat.vec[f], img[j]) / tau;
        }
        l_l2i += logsumexp(row) - row[flat.owner[f]];
    }
    l_l2i /= static_cast<double>(flat.total);

    return {l_i2l, l_l2i};
}

namespace {

// Analytic gradients of the four components, accumulated into `g`.
// Gradients flow through logits = dot / tau, so d(logit)/d(tau) = -logit/tau.
void accumulate_grads(const ContrastiveBatch& batch, LossGrads& g) {
    const std::size_t b = batch.batch_size();
    const std::size_t d = batch.dim();
    const double tau = batch.tau;
    const double inv_b = 1.0 / static_cast<double>(b);

    auto axpy = [d](double a, const Vec& x, Vec& y) {
        for (std::size_t t = 0; t < d; ++t) y[t] += a * x[t];
    };

    // InfoNCE, both directions. dL/dlogit[i][j] = (1/B) * (p_ij - [i==j]).
    {
        Mat i2t(b, Vec(b)), t2i(b, Vec(b));
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < b; ++j) {
                i2t[i][j] = dot(batch.img[i], batch.txt[j]) / tau;
                t2i[i][j] = dot(batch.txt[i], batch.img[j]) / tau;
            }
        }
        for (std::size_t i = 0; i < b; ++i) {
            Vec p = softmax(i2t[i]);
            for (std::size_t j = 0; j < b; ++j) {
                double gl = inv_b * (p[j] - (i == j ? 1.0 : 0.0));
                axpy(gl / tau, batch.txt[j], g.img[i]);
                axpy(gl / tau, batch.img[i], g.txt[j]);
                g.tau += gl * (-i2t[i][j] / tau);
            }
        }
        for (std::size_t i = 0; i < b; ++i) {
            Vec p = softmax(t2i[i]);
            for (std::size_t j = 0; j < b; ++j) {
                double gl = inv_b * (p[j] - (i == j ? 1.0 : 0.0));
                axpy(gl / tau, batch.img[j], g.txt[i]);
                axpy(gl / tau, batch.txt[i], g.img[j]);
                g.tau += gl * (-t2i[i][j] / tau);
            }
        }
    }

    const FlatLabels flat = flatten(batch.labels);
    if (flat.total == 0) return; // multi-label components undefined; caller errors first

    auto label_grad = [&](std::size_t f) -> Vec& {
        return g.labels[flat.owner[f]][flat.pos[f]];
    };

    // Image -> labels. For sample i: value = LSE_all - LSE_own;
    // dL/dlogit[i][f] = (1/B+) * (p_all[f] - [owner==i] * q_own[f]).
    {
        const double inv_bp = 1.0 / static_cast<double>(flat.samples_with_labels);
        for (std::size_t i = 0; i < b; ++i) {
            if (batch.labels[i].empty()) continue;
            Vec all(flat.total);
            for (std::size_t f = 0; f < flat.total; ++f) {
                all[f] = dot(batch.img[i], *flat.vec[f]) / tau;
            }
            Vec p = softmax(all);
            // softmax restricted to own labels
            Vec own_logits;
            for (std::size_t f = 0; f < flat.total; ++f) {
                if (flat.owner[f] == i) own_logits.push_back(all[f]);
            }
            Vec q = softmax(own_logits);
            std::size_t own_pos = 0;
            for (std::size_t f = 0; f < flat.total; ++f) {
                double gl = p[f];
                if (flat.owner[f] == i) {
                    gl -= q[own_pos];
                    ++own_pos;
                }
                gl *= inv_bp;
                axpy(gl / tau, *flat.vec[f], g.img[i]);
                axpy(gl / tau, batch.img[i], label_grad(f));
                g.tau += gl * (-all[f] / tau);
            }
        }
    }

    // Labels -> image. For flat label f: softmax over images, positive at owner.
    {
        const double inv_total = 1.0 / static_cast<double>(flat.total);
        for (std::size_t f = 0; f < flat.total; ++f) {
            Vec row(b);
            for (std::size_t j = 0; j < b; ++j) {
                row[j] = dot(*flat.vec[f], batch.img[j]) / tau;
            }
            Vec p = softmax(row);
            for (std::size_t j = 0; j < b; ++j) {
                double gl = inv_total * (p[j] - (flat.owner[f] == j ? 1.0 : 0.0));
                axpy(gl / tau, batch.img[j], label_grad(f));
                axpy(gl / tau, *flat.vec[f], g.img[j]);
                g.tau += gl * (-row[j] / tau);
            }
        }
    }
}

} // namespace

LossReport total_loss(const ContrastiveBatch& batch, bool with_grads) {
    check_tau(batch.tau);
    if (batch.img.empty() || batch.txt.size() != batch.img.size() ||
        batch.labels.size() != batch.img.size()) {
        throw InputError("total_loss: inconsistent batch shapes");
    }
    LossReport report;
    std::tie(report.l_i2t, report.l_t2i) = info_nce(batch.img, batch.txt, batch.tau);
    std::tie(report.l_i2l, report.l_l2i) = multi_label_loss(batch.img, batch.labels, batch.tau);
    report.total = report.l_i2t + report.l_t2i + report.l_i2l + report.l_l2i;

    if (with_grads) {
        LossGrads g;
        const std::size_t d = batch.dim();
        g.img.assign(batch.batch_size(), Vec(d, 0.0));
        g.txt.assign(batch.batch_size(), Vec(d, 0.0));
        g.labels.resize(batch.batch_size());
        for (std::size_t i = 0; i < batch.batch_size(); ++i) {
            g.labels[i].assign(batch.labels[i].size(), Vec(d, 0.0));
        }
        accumulate_grads(batch, g);
        report.grads = std::move(g);
    }
    return report;
}

double grad_check(const ContrastiveBatch& batch, double eps) {
    if (!(eps > 0.0)) {
        throw InputError("grad_check: eps must be positive");
    }
    const LossReport report = total_loss(batch, true);
    const LossGrads& g = *report.grads;

    ContrastiveBatch work = batch; // perturbed in place, coordinate by coordinate
    double max_rel = 0.0;
    auto probe = [&](double analytic, double* coord) {
        const double saved = *coord;
        *coord = saved + eps;
        const double f_plus = total_loss(work, false).total;
        *coord = saved - eps;
        const double f_minus = total_loss(work, false).total;
        *coord = saved;
        const double numeric = (f_plus - f_minus) / (2.0 * eps);
        const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    };

    for (std::size_t i = 0; i < work.batch_size(); ++i) {
        for (std::size_t t = 0; t < work.dim(); ++t) {
            probe(g.img[i][t], &work.img[i][t]);
            probe(g.txt[i][t], &work.txt[i][t]);
        }
        for (std::size_t l = 0; l < work.labels[i].size(); ++l) {
            for (std::size_t t = 0; t < work.dim(); ++t) {
                probe(g.labels[i][l][t], &work.labels[i][l][t]);
            }
        }
    }
    probe(g.tau, &work.tau);
    return max_rel;
}

ContrastiveBatch parse_batch_json(const std::string& text) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed batch JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("img") || !obj.contains("txt") ||
        !obj.contains("labels") || !obj.contains("tau")) {
        throw InputError("batch JSON must contain img, txt, labels and tau");
    }
    ContrastiveBatch batch;
    try {
        batch.img = obj["img"].get<Mat>();
        batch.txt = obj["txt"].get<Mat>();
        batch.labels = obj["labels"].get<std::vector<Mat>>();
        batch.tau = obj["tau"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad batch JSON field types: ") + e.what());
    }
    batch.validate();
    return batch;
}

std::string loss_report_to_json(const LossReport& report, std::optional<double> grad_check_err,
                                bool include_grads) {
    nlohmann::ordered_json out;
    out["l_i2t"] = report.l_i2t;
    out["l_t2i"] = report.l_t2i;
    out["l_i2l"] = report.l_i2l;
    out["l_l2i"] = report.l_l2i;
    out["total"] = report.total;
    if (grad_check_err) {
        out["grad_check_max_rel_err"] = *grad_check_err;
    }
    if (include_grads && report.grads) {
        out["grads"] = {{"img", report.grads->img},
                        {"txt", report.grads->txt},
                        {"labels", report.grads->labels},
                        {"tau", report.grads->tau}};
    }
    return out.dump(2);
}

} // namespace cocur
