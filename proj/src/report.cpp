#include <cstdio>
#include <fstream>
#include <sstream>

#include "paramforge/analysis_viz.hpp"
#include "paramforge/error.hpp"

namespace paramforge::analysis {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

constexpr double kPlot = 360.0;

std::string map_svg(const IntertopicMap& map) {
  const auto K = static_cast<std::size_t>(map.coords.rows());
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t t = 0; t < K; ++t) {
    for (int c = 0; c < 2; ++c) {
      const double v = map.coords(static_cast<Eigen::Index>(t), c);
      lo = std::min(lo, v - map.radii[t]);
      hi = std::max(hi, v + map.radii[t]);
    }
  }
  const double range = hi - lo > 0.0 ? hi - lo : 1.0;
  auto px = [&](double v) { return 20.0 + (v - lo) / range * (kPlot - 40.0); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPlot << "\" height=\""
      << kPlot << "\" style=\"border:1px solid #ccc\">\n";
  svg << "<line x1=\"" << num(px(0)) << "\" y1=\"0\" x2=\"" << num(px(0)) << "\" y2=\""
      << kPlot << "\" stroke=\"#ddd\"/>\n";
  svg << "<line x1=\"0\" y1=\"" << num(kPlot - px(0)) << "\" x2=\"" << kPlot << "\" y2=\""
      << num(kPlot - px(0)) << "\" stroke=\"#ddd\"/>\n";
  for (std::size_t t = 0; t < K; ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    const double cx = px(map.coords(i, 0));
    const double cy = kPlot - px(map.coords(i, 1));
    const double r = std::max(2.0, map.radii[t] / range * (kPlot - 40.0));
    svg << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
        << "\" fill=\"steelblue\" fill-opacity=\"0.35\" stroke=\"steelblue\"/>"
        << "<text x=\"" << num(cx) << "\" y=\"" << num(cy + 4)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string bar_svg(const std::vector<std::pair<std::string, double>>& bars) {
  double top = 0.0;
  for (const auto& [label, v] : bars) top = std::max(top, v);
  if (top <= 0.0) top = 1.0;
  const double bar_h = 16.0;
  const double height = bar_h * static_cast<double>(bars.size()) + 10.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"460\" height=\"" << num(height)
      << "\">\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double y = 5.0 + bar_h * static_cast<double>(i);
    const double w = bars[i].second / top * 300.0;
    svg << "<text x=\"0\" y=\"" << num(y + 12) << "\" font-size=\"11\">"
        << html_escape(bars[i].first) << "</text><rect x=\"110\" y=\"" << num(y)
        << "\" width=\"" << num(w) << "\" height=\"" << num(bar_h - 3)
        << "\" fill=\"#e07b39\"/><text x=\"" << num(115 + w) << "\" y=\"" << num(y + 12)
        << "\" font-size=\"10\">" << num(bars[i].second) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::vector<std::filesystem::path> write_report(const std::filesystem::path& out_dir,
                                                const Corpus& corpus,
                                                const lda::LdaModel& model,
                                                const lda::TopicDistributions& dists,
                                                const std::optional<TaxonomyLabels>& labels,
                                                const ReportSettings& settings) {
  std::filesystem::create_directories(out_dir);
  const auto& vocab = corpus.vocabulary;
  const auto map = build_intertopic_map(dists, model);
  const auto scores = term_scores(dists, corpus, settings.lambda,
                                  std::min(settings.term_top_n, dists.vocab_size));
  const auto topic_hist = topic_histogram(dists);
  const auto length_hist = length_histogram(corpus, settings.length_bin_width);
  const auto clouds = wordcloud_weights(dists, settings.wordcloud_top_n);
  const auto taxonomy =
      build_taxonomy(labels ? *labels : TaxonomyLabels::unlabeled(dists.k), dists, model,
                     std::min(settings.taxonomy_top_n, dists.vocab_size));

  std::vector<std::filesystem::path> written;
  auto emit = [&](const char* name, const std::string& text) {
    write_text(out_dir / name, text);
    written.push_back(out_dir / name);
  };

  emit("intertopic_map.json", to_json(map).dump(2) + "\n");
  emit("term_scores.json", to_json(scores, vocab).dump(2) + "\n");
  {
    std::ostringstream csv;
    csv << "topic,documents\n";
    for (std::size_t t = 0; t < topic_hist.size(); ++t) csv << t << ',' << topic_hist[t] << '\n';
    emit("topic_histogram.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "bin,lower,upper,documents\n";
    for (const auto& b : length_hist) {
      csv << b.bin << ',' << b.bin * settings.length_bin_width << ','
          << (b.bin + 1) * settings.length_bin_width << ',' << b.count << '\n';
    }
    emit("length_histogram.csv", csv.str());
  }
  emit("wordclouds.json", wordclouds_to_json(clouds, vocab).dump(2) + "\n");
  emit("taxonomy.json", to_json(taxonomy, vocab).dump(2) + "\n");

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Topic model report"
          "</title>\n<style>body{font-family:sans-serif;margin:2em}h2{margin-top:1.5em}"
          ".topic{display:inline-block;vertical-align:top;margin:0 1em 1em 0}</style>"
          "</head><body>\n";
  html << "<h1>Topic model report</h1>\n<p>" << dists.k << " topics, " << dists.vocab_size
       << " terms, " << corpus.documents.size() << " documents (" << corpus.nonempty_documents()
       << " non-empty), " << corpus.total_tokens << " tokens.</p>\n";
  html << "<h2>Intertopic distance map</h2>\n<p>Jensen-Shannon distances projected with "
          "classical MDS; circle area follows topic token share. Overlapping circle pairs: "
       << map.overlap_count << ".</p>\n"
       << map_svg(map);

  html << "<h2>Term scores</h2>\n";
  for (std::size_t t = 0; t < scores.topics.size(); ++t) {
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& s : scores.topics[t]) {
      bars.emplace_back(vocab.term(s.term), dists.phi_at(t, s.term));
    }
    html << "<div class=\"topic\"><h3>Topic " << t << "</h3>\n" << bar_svg(bars) << "</div>\n";
  }

  html << "<h2>Documents per topic</h2>\n";
  {
    std::vector<std::pair<std::string, double>> bars;
    for (std::size_t t = 0; t < topic_hist.size(); ++t) {
      bars.emplace_back("topic " + std::to_string(t), static_cast<double>(topic_hist[t]));
    }
    html << bar_svg(bars);
  }
  html << "<h2>Document lengths</h2>\n";
  {
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& b : length_hist) {
      bars.emplace_back(std::to_string(b.bin * settings.length_bin_width) + "-" +
                            std::to_string((b.bin + 1) * settings.length_bin_width),
                        static_cast<double>(b.count));
    }
    html << bar_svg(bars);
  }

  html << "<h2>Taxonomy</h2>\n<ul>\n";
  for (const auto& m : taxonomy.macro_parameters) {
    html << "<li><b>" << html_escape(m.name) << "</b><ul>\n";
    for (const auto& p : m.parameters) {
      html << "<li>" << html_escape(p.name) << " (" << num(p.token_share_percent) << "%): ";
      for (std::size_t i = 0; i < p.keywords.size(); ++i) {
        html << (i ? ", " : "") << html_escape(vocab.term(p.keywords[i]));
      }
      html << "</li>\n";
    }
    html << "</ul></li>\n";
  }
  html << "</ul>\n</body></html>\n";
  emit("report.html", html.str());
  return written;
}

}  // namespace paramforge::analysis
