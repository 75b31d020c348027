#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "tell/common.hpp"
#include "tell/encoders.hpp"
#include "tell/eval.hpp"

namespace tell {

using nlohmann::json;

Table make_probe_table(int n_cells) {
  if (n_cells < 1) throw UsageError("probe: table size must be positive");
  Table t;
  t.id = "probe-" + std::to_string(n_cells);
  t.headers = {""};
  t.cells.reserve(static_cast<std::size_t>(n_cells));
  for (int i = 0; i < n_cells; ++i) {
    t.cells.push_back({"c" + std::to_string(i)});
  }
  return t;
}

EncoderModel make_probe_model(const std::vector<int>& sizes, int d, int layers, int heads,
                              std::uint64_t seed) {
  if (sizes.empty()) throw UsageError("probe: need at least one size");
  const int largest = *std::max_element(sizes.begin(), sizes.end());
  const Table table = make_probe_table(largest);
  ModelHyper hyper;
  hyper.d = d;
  hyper.layers = layers;
  hyper.heads = heads;
  hyper.max_seq_len = 16;
  hyper.max_table_len = largest + 16;
  hyper.seed = seed;
  return EncoderModel::init(hyper, Variant::Tell, Vocabulary::build({table}, KbStore{}));
}

double loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw DataError("loglog_slope: need at least two points");
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    if (x <= 0.0 || y <= 0.0) throw DataError("loglog_slope: points must be positive");
    mean_x += std::log(x);
    mean_y += std::log(y);
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());
  double num = 0.0, den = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mean_x;
    num += dx * (std::log(y) - mean_y);
    den += dx * dx;
  }
  if (den == 0.0) throw DataError("loglog_slope: degenerate x range");
  return num / den;
}

ScalingReport complexity_probe(const EncoderModel& base_model, Variant variant,
                               const std::vector<int>& sizes) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw UsageError("probe: sizes must be strictly increasing");
  }
  EncoderModel model = base_model;
  model.variant = variant;

  ScalingReport report;
  report.variant = variant;
  for (const int n : sizes) {
    const Table table = make_probe_table(n);
    ScalingPoint pt;
    pt.n_cells = n;
    const auto t0 = std::chrono::steady_clock::now();

    if (is_table_level(variant)) {
      TableLayout layout;
      try {
        layout = build_table_layout(model.vocab, table, uses_metadata(variant),
                                    model.hyper.max_table_len);
      } catch (const DataError&) {
        pt.out_of_budget = true;
        report.points.push_back(pt);
        continue;
      }
      if (variant == Variant::MaskAttMeta) {
        pt.attn_pairs = mask_pair_count(build_structural_mask(table, layout));
      } else {
        const long len = layout.seq.size();
        pt.attn_pairs = len * len;
      }
      nn::TensorMeter meter;
      encode_table(model, table, /*keep_cache=*/false, &meter);
      pt.peak_tensor_elems = meter.peak;
      pt.per_cell_peak = 0;
    } else {
      long max_cell_peak = 0;
      for (const Mention& mention : mention_iter(table)) {
        const CellMetadata meta = cell_metadata(table, mention.col);
        const TokenSeq seq =
            variant == Variant::Single
                ? build_cell_seq(model.vocab, mention.value, model.hyper.max_seq_len)
                : build_tell_seq(model.vocab, mention.value, meta, model.hyper.max_seq_len);
        const long len = seq.size();
        pt.attn_pairs += len * len;
        nn::TensorMeter meter;
        encode_mention(model, mention.value, meta, nullptr, &meter);
        max_cell_peak = std::max(max_cell_peak, meter.peak);
      }
      // Cells are encoded independently, so the table peak is one cell's peak.
      pt.peak_tensor_elems = max_cell_peak;
      pt.per_cell_peak = max_cell_peak;
    }

    pt.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.points.push_back(pt);
  }

  std::vector<std::pair<double, double>> fit_points;
  for (const ScalingPoint& pt : report.points) {
    if (!pt.out_of_budget) {
      fit_points.emplace_back(static_cast<double>(pt.n_cells),
                              static_cast<double>(pt.attn_pairs));
    }
  }
  report.slope = loglog_slope(fit_points);
  return report;
}

std::string ScalingReport::to_json_string() const {
  json pts = json::array();
  for (const ScalingPoint& pt : points) {
    pts.push_back(json{{"n_cells", pt.n_cells},
                       {"attn_pairs", pt.attn_pairs},
                       {"peak_tensor_elems", pt.peak_tensor_elems},
                       {"per_cell_peak", pt.per_cell_peak},
                       {"wall_seconds", pt.wall_seconds},
                       {"out_of_budget", pt.out_of_budget}});
  }
  const json j{{"variant", variant_name(variant)}, {"slope", slope}, {"points", std::move(pts)}};
  return j.dump(2);
}

std::string scaling_svg(const std::vector<ScalingReport>& reports) {
  constexpr int kWidth = 640;
  constexpr int kHeight = 480;
  constexpr int kMargin = 56;
  const std::vector<std::string> colors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#17becf"};

  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const ScalingReport& r : reports) {
    for (const ScalingPoint& pt : r.points) {
      if (pt.out_of_budget || pt.attn_pairs <= 0) continue;
      min_x = std::min(min_x, std::log10(static_cast<double>(pt.n_cells)));
      max_x = std::max(max_x, std::log10(static_cast<double>(pt.n_cells)));
      min_y = std::min(min_y, std::log10(static_cast<double>(pt.attn_pairs)));
      max_y = std::max(max_y, std::log10(static_cast<double>(pt.attn_pairs)));
    }
  }
  if (min_x >= max_x) max_x = min_x + 1.0;
  if (min_y >= max_y) max_y = min_y + 1.0;

  const auto sx = [&](double lx) {
    return kMargin + (lx - min_x) / (max_x - min_x) * (kWidth - 2 * kMargin);
  };
  const auto sy = [&](double ly) {
    return kHeight - kMargin - (ly - min_y) / (max_y - min_y) * (kHeight - 2 * kMargin);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">log10 cells</text>\n";
  svg << "<text x=\"16\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << kHeight / 2 << ")\">log10 attention pairs</text>\n";

  for (std::size_t ri = 0; ri < reports.size(); ++ri) {
    const ScalingReport& r = reports[ri];
    const std::string& color = colors[ri % colors.size()];
    std::ostringstream path;
    bool first = true;
    for (const ScalingPoint& pt : r.points) {
      if (pt.out_of_budget || pt.attn_pairs <= 0) continue;
      const double x = sx(std::log10(static_cast<double>(pt.n_cells)));
      const double y = sy(std::log10(static_cast<double>(pt.attn_pairs)));
      path << (first ? "M" : " L") << x << " " << y;
      first = false;
      svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    std::ostringstream label;
    label.precision(2);
    label << std::fixed << variant_name(r.variant) << " (slope " << r.slope << ")";
    svg << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 16 * (ri + 1)
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << label.str()
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tell
