#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cocur/common.hpp"

namespace cocur {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

// One evaluation batch: B image rows, B text rows, per-sample label rows
// (counts may vary, including zero), and the temperature. All rows are
// expected unit-norm on input; nothing is renormalized internally, so
// gradients are with respect to the raw coordinates as used in the loss.
struct ContrastiveBatch {
    Mat img;                      // B x d
    Mat txt;                      // B x d
    std::vector<Mat> labels;      // B x L_i x d
    double tau = 0.07;

    std::size_t batch_size() const { return img.size(); }
    std::size_t dim() const { return img.empty() ? 0 : img[0].size(); }
    void validate() const; // shape/norm checks for externally supplied batches
};

struct LossGrads {
    Mat img;
    Mat txt;
    std::vector<Mat> labels;
    double tau = 0.0;
};

struct LossReport {
    double l_i2t = 0.0;
    double l_t2i = 0.0;
    double l_i2l = 0.0;
    double l_l2i = 0.0;
    double total = 0.0;
    std::optional<LossGrads> grads;
};

/// Mean over rows of the softmax cross-entropy against the diagonal:
/// (1/R) * sum_i [logsumexp(row_i) - row_i[i]]. Shared core of both
/// contrastive directions; numerically stabilized.
double nce_from_logits(const Mat& logits);

/// Image<->text InfoNCE pair; logits are cosine / tau.
std::pair<double, double> info_nce(const Mat& img, const Mat& txt, double tau);

/// Image<->label multi-label pair. Samples with zero labels are excluded
/// from both the per-sample sums and the normalizing counts; the label->image
/// direction normalizes by the realized total label count. Throws when every
/// sample has zero labels.
std::pair<double, double> multi_label_loss(const Mat& img, const std::vector<Mat>& labels,
                                           double tau);

/// All four components and their sum; optionally analytic gradients with
/// respect to every embedding coordinate and tau.
LossReport total_loss(const ContrastiveBatch& batch, bool with_grads = false);

/// Max over all coordinates (embeddings and tau) of
/// |analytic - central difference| / max(1, |central difference|).
double grad_check(const ContrastiveBatch& batch, double eps = 1e-5);

/// Parses {img: [[...]], txt: [[...]], labels: [[[...]]], tau: float}.
ContrastiveBatch parse_batch_json(const std::string& text);
std::string loss_report_to_json(const LossReport& report, std::optional<double> grad_check_err,
                                bool include_grads);

} // namespace cocur
