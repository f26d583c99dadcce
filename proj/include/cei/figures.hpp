#pragma once

// SVG panels built from the aggregate tables.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cei/analysis.hpp"
#include "cei/svg.hpp"

namespace cei {

struct Figure {
  std::string name;  // file stem
  SvgChart chart;
};

namespace detail {

inline std::vector<std::pair<double, std::string>> condition_ticks(const std::vector<Condition>& conds) {
  std::vector<std::pair<double, std::string>> ticks;
  for (std::size_t i = 0; i < conds.size(); ++i) ticks.emplace_back(static_cast<double>(i), conds[i].label());
  return ticks;
}

inline SvgChart chart(std::string title, std::string x_label, std::string y_label) {
  SvgChart c;
  c.title = std::move(title);
  c.x_label = std::move(x_label);
  c.y_label = std::move(y_label);
  return c;
}

inline SvgPoint point(double x, double y) { return {x, y, std::nullopt, std::nullopt}; }
inline SvgPoint point(double x, double y, double low, double high) { return {x, y, low, high}; }

inline std::string dv_name(double dv) { return "dv " + fmt(dv, 1) + " m/s"; }

}  // namespace detail

inline std::vector<Figure> build_figures(const std::vector<TrialMetrics>& trials,
                                         const std::vector<AggregateRow>& rows) {
  std::set<std::string> sources;
  for (const auto& r : rows) sources.insert(r.source);
  std::vector<Figure> out;

  for (const auto& source : sources) {
    std::vector<const AggregateRow*> mine;
    std::set<Condition> cond_set;
    std::set<int> pairs;
    for (const auto& r : rows) {
      if (r.source != source) continue;
      mine.push_back(&r);
      cond_set.insert(r.condition);
      pairs.insert(r.pair);
    }
    const std::vector<Condition> conds(cond_set.begin(), cond_set.end());
    auto index_of = [&](const Condition& c) {
      return static_cast<double>(std::lower_bound(conds.begin(), conds.end(), c) - conds.begin());
    };

    {
      SvgChart c = detail::chart("Mean absolute max deviation per condition (" + source + ")", "condition", "|dv| max (m/s)");
      c.x_ticks = detail::condition_ticks(conds);
      for (Side s : {Side::kLeft, Side::kRight}) {
        SvgSeries series{std::string(to_string(s)) + " driver", {}, false};
        for (const auto& cond : conds) {
          std::vector<double> v;
          for (const auto* r : mine) {
            if (r->condition == cond && !std::isnan(r->mean_max_abs_dev[side_index(s)])) {
              v.push_back(r->mean_max_abs_dev[side_index(s)]);
            }
          }
          if (!v.empty()) series.points.push_back(detail::point(index_of(cond), mean_of(v), quantile(v, 0.25), quantile(v, 0.75)));
        }
        c.series.push_back(series);
      }
      out.push_back({"fig3b_" + source, c});
    }
    {
      SvgChart c = detail::chart("Absolute max deviation by own kinematics (" + source + ")", "own projected headway (m)",
                 "|dv| max (m/s)");
      std::map<double, SvgSeries> by_dv;
      for (const auto& k : abs_deviation_by_kinematics(rows)) {
        if (k.source != source) continue;
        auto& s = by_dv[k.relative_velocity];
        s.name = detail::dv_name(k.relative_velocity);
        s.points.push_back(detail::point(k.headway, k.mean, k.q25, k.q75));
      }
      for (auto& [dv, s] : by_dv) c.series.push_back(s);
      out.push_back({"fig3c_" + source, c});
    }
    {
      SvgChart c = detail::chart("Mean gap at merge per pair (" + source + ")", "condition", "gap (m)");
      c.x_ticks = detail::condition_ticks(conds);
      for (int pair : pairs) {
        SvgSeries s{"pair " + std::to_string(pair), {}, true};
        for (const auto* r : mine) {
          if (r->pair == pair && !std::isnan(r->mean_gap)) s.points.push_back(detail::point(index_of(r->condition), r->mean_gap));
        }
        c.series.push_back(s);
      }
      out.push_back({"fig4a_" + source, c});
    }
    {
      SvgChart c = detail::chart("Gap at merge by condition, mean and IQR (" + source + ")", "condition", "gap (m)");
      c.x_ticks = detail::condition_ticks(conds);
      SvgSeries s{"all pairs", {}, false};
      for (const auto& g : gap_by_condition(trials)) {
        if (g.source == source) s.points.push_back(detail::point(index_of(g.condition), g.mean, g.q25, g.q75));
      }
      c.series.push_back(s);
      out.push_back({"fig4b_" + source, c});
    }
    {
      SvgChart c = detail::chart("Signed max / min deviation (" + source + ")", "condition", "deviation (m/s)");
      c.x_ticks = detail::condition_ticks(conds);
      for (Side side : {Side::kLeft, Side::kRight}) {
        for (bool max : {true, false}) {
          SvgSeries s{std::string(to_string(side)) + (max ? " max" : " min"), {}, false};
          for (const auto& cond : conds) {
            std::vector<double> v;
            for (const auto* r : mine) {
              if (r->condition != cond) continue;
              const double x = max ? r->mean_max_dev[side_index(side)] : r->mean_min_dev[side_index(side)];
              if (!std::isnan(x)) v.push_back(x);
            }
            if (!v.empty()) s.points.push_back(detail::point(index_of(cond), mean_of(v)));
          }
          c.series.push_back(s);
        }
      }
      out.push_back({"fig5a_" + source, c});
    }
    {
      SvgChart c = detail::chart("P(left merges first) (" + source + ")", "projected headway (m)", "P(left first)");
      c.y_range = std::make_pair(0.0, 1.0);
      std::map<double, SvgSeries> by_dv;
      for (const auto& o : order_by_condition(trials)) {
        if (o.source != source) continue;
        auto& s = by_dv[o.condition.relative_velocity()];
        s.name = detail::dv_name(o.condition.relative_velocity());
        s.points.push_back(detail::point(o.condition.projected_headway(), o.p_left_first, o.ci.low, o.ci.high));
      }
      for (auto& [dv, s] : by_dv) c.series.push_back(s);
      out.push_back({"fig5b_" + source, c});
    }
  }

  for (const auto& source : sources) {
    if (source == "model") continue;
    const auto paired = paired_comparison(rows, source);
    if (paired.empty()) continue;
    for (const std::string metric : {"max_abs_dev", "gap", "p_left_first"}) {
      SvgChart c = detail::chart("Human (" + source + ") vs model: " + metric, "human", "model");
      c.identity_line = true;
      SvgSeries s{metric, {}, false};
      for (const auto& p : paired) {
        if (p.metric == metric && !std::isnan(p.human) && !std::isnan(p.model)) s.points.push_back(detail::point(p.human, p.model));
      }
      c.series.push_back(s);
      out.push_back({"paired_" + metric + "_" + source, c});
    }
  }
  return out;
}

}  // namespace cei
