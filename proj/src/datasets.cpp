#include "ipae/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "ipae/errors.hpp"
#include "ipae/io.hpp"
#include "ipae/rng.hpp"

namespace ipae {

void LabeledDataset::validate() const {
    if (labels.size() != x.rows()) {
        throw ContractError("dataset: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(x.rows()) + " rows");
    }
    for (std::size_t l : labels) {
        if (l >= num_classes) throw ContractError("dataset: label " + std::to_string(l) + " out of range");
    }
    if (centers && centers->rows() != num_classes) {
        throw ContractError("dataset: centers rows != number of classes");
    }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> idx) const {
    LabeledDataset out;
    out.x = x.gather_rows(idx);
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) out.labels.push_back(labels[i]);
    out.num_classes = num_classes;
    out.centers = centers;
    return out;
}

LabeledDataset gen_gmm(std::uint64_t seed, const GmmOptions& opts) {
    const std::size_t comps = opts.grid * opts.grid;
    const double offset = 0.5 * static_cast<double>(opts.grid - 1);
    LabeledDataset ds;
    ds.num_classes = comps;
    ds.centers = Matrix(comps, 2);
    for (std::size_t c = 0; c < comps; ++c) {
        (*ds.centers)(c, 0) = opts.spacing * (static_cast<double>(c % opts.grid) - offset);
        (*ds.centers)(c, 1) = opts.spacing * (static_cast<double>(c / opts.grid) - offset);
    }
    ds.x = Matrix(comps * opts.per_component, 2);
    ds.labels.resize(comps * opts.per_component);
    const double sd = std::sqrt(opts.variance);
    Rng rng(seed);
    for (std::size_t c = 0; c < comps; ++c) {
        for (std::size_t s = 0; s < opts.per_component; ++s) {
            const std::size_t r = c * opts.per_component + s;
            ds.x(r, 0) = (*ds.centers)(c, 0) + sd * rng.normal();
            ds.x(r, 1) = (*ds.centers)(c, 1) + sd * rng.normal();
            ds.labels[r] = c;
        }
    }
    return ds;
}

std::string dataset_to_csv(const LabeledDataset& ds) {
    ds.validate();
    const std::size_t d = ds.x.cols();
    std::string out;
    for (std::size_t c = 0; c < d; ++c) out += "x" + std::to_string(c) + ",";
    out += "label";
    if (ds.centers) {
        for (std::size_t c = 0; c < d; ++c) out += ",center_x" + std::to_string(c);
    }
    out += '\n';
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) out += format_double(ds.x(r, c)) + ",";
        out += std::to_string(ds.labels[r]);
        if (ds.centers) {
            for (std::size_t c = 0; c < d; ++c) out += "," + format_double((*ds.centers)(ds.labels[r], c));
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_number(std::string_view s, std::size_t line_no) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError("csv line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

LabeledDataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("csv: empty input");
    const auto header = split_commas(line);
    const auto label_it = std::find(header.begin(), header.end(), std::string_view("label"));
    if (label_it == header.end()) throw FormatError("csv: missing 'label' column");
    const std::size_t d = static_cast<std::size_t>(label_it - header.begin());
    if (d == 0) throw FormatError("csv: no feature columns");
    for (std::size_t c = 0; c < d; ++c) {
        if (header[c] != "x" + std::to_string(c)) throw FormatError("csv: expected column x" + std::to_string(c));
    }
    const std::size_t extra = header.size() - d - 1;
    const bool has_centers = extra == d;
    if (extra != 0 && !has_centers) throw FormatError("csv: unexpected trailing columns");
    for (std::size_t c = 0; has_centers && c < d; ++c) {
        if (header[d + 1 + c] != "center_x" + std::to_string(c)) {
            throw FormatError("csv: expected column center_x" + std::to_string(c));
        }
    }

    std::vector<double> values;
    std::vector<std::size_t> labels;
    std::vector<std::vector<double>> center_of;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != header.size()) {
            throw FormatError("csv line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " cells");
        }
        for (std::size_t c = 0; c < d; ++c) values.push_back(parse_number(cells[c], line_no));
        const double lab = parse_number(cells[d], line_no);
        if (lab < 0 || lab != std::floor(lab)) throw FormatError("csv line " + std::to_string(line_no) + ": bad label");
        const auto l = static_cast<std::size_t>(lab);
        labels.push_back(l);
        if (has_centers) {
            if (center_of.size() <= l) center_of.resize(l + 1);
            std::vector<double> c(d);
            for (std::size_t q = 0; q < d; ++q) c[q] = parse_number(cells[d + 1 + q], line_no);
            if (center_of[l].empty()) {
                center_of[l] = std::move(c);
            } else if (center_of[l] != c) {
                throw FormatError("csv line " + std::to_string(line_no) + ": inconsistent center for label");
            }
        }
    }
    LabeledDataset ds;
    ds.x = Matrix(labels.size(), d, std::move(values));
    ds.labels = std::move(labels);
    ds.num_classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    if (has_centers) {
        ds.centers = Matrix(ds.num_classes, d);
        for (std::size_t l = 0; l < ds.num_classes; ++l) {
            if (l >= center_of.size() || center_of[l].empty()) {
                throw FormatError("csv: label " + std::to_string(l) + " has no rows");
            }
            for (std::size_t q = 0; q < d; ++q) (*ds.centers)(l, q) = center_of[l][q];
        }
    }
    ds.validate();
    return ds;
}

SplitResult split(const LabeledDataset& ds, double train_fraction, double test_fraction,
                  std::uint64_t seed) {
    ds.validate();
    if (!(train_fraction >= 0.0 && test_fraction >= 0.0) ||
        std::abs(train_fraction + test_fraction - 1.0) > 1e-9) {
        throw ContractError("split: fractions must be non-negative and sum to 1");
    }
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

    Rng rng(seed);
    std::vector<std::size_t> train_idx, test_idx;
    for (auto& members : by_class) {
        rng.shuffle(members);
        const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
        train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(cut));
        test_idx.insert(test_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(cut), members.end());
    }
    if (train_idx.empty() || test_idx.empty()) throw ContractError("split: a part would be empty");
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {ds.subset(train_idx), ds.subset(test_idx)};
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size == 0) throw ContractError("batches: batch size must be positive");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, epoch));
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace ipae
