// Copyright 2026 The ttsdiag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdio>

#include "ttsdiag/metrics.hpp"
#include "ttsdiag/runner.hpp"

namespace ttsdiag {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string display_name(const std::string& method) {
  if (method == "zero_shot") return "Zero-shot";
  if (method == "cot") return "One-stage CoT";
  if (method == "describe_then_diagnose") return "Describe-then-Diagnose";
  return method;
}

const CellMetrics* cell(const RunResult& run, const std::string& method, int n) {
  auto m = run.metrics.find(method);
  if (m == run.metrics.end()) return nullptr;
  auto c = m->second.find(n);
  return c == m->second.end() ? nullptr : &c->second;
}

int tts_n(const RunResult& run) {
  return run.n_values.empty() ? 1 : *std::max_element(run.n_values.begin(), run.n_values.end());
}

struct Fit {
  bool ok = false;
  PowerLawFit fit;
  std::string why;
};

Fit fit_metric(const RunResult& run, const std::string& method, bool use_auc) {
  std::vector<PowerLawPoint> pts;
  auto m = run.metrics.find(method);
  if (m != run.metrics.end()) {
    for (const auto& [n, c] : m->second) pts.push_back({n, use_auc ? c.auc : c.ap});
  }
  try {
    return {true, fit_power_law(pts), {}};
  } catch (const Error& e) {
    return {false, {}, e.what()};
  }
}

json fit_json(const Fit& f) {
  if (!f.ok) return {{"error", f.why}};
  return {{"alpha", f.fit.alpha}, {"beta", f.fit.beta}, {"rmse", f.fit.rmse}};
}

std::string curve_csv(const RunResult& run) {
  std::string out = "method,n,auc,ap,degraded_count\n";
  for (const std::string& method : run.method_order) {
    auto m = run.metrics.find(method);
    if (m == run.metrics.end()) continue;
    for (const auto& [n, c] : m->second) {
      out += method + "," + std::to_string(n) + "," + fixed(c.auc, 6) + "," + fixed(c.ap, 6) +
             "," + std::to_string(c.degraded_count) + "\n";
    }
  }
  return out;
}

std::string markdown(const RunResult& run) {
  const int tts = tts_n(run);
  auto value = [&](const std::string& method, int n, bool use_auc) -> std::string {
    const CellMetrics* c = cell(run, method, n);
    return c ? fixed(use_auc ? c->auc : c->ap, 3) : "-";
  };

  std::string groups = "| Dataset |";
  std::string rule = "|---|";
  std::string settings = "| |";
  std::string columns = "| |";
  std::string row = "| " + (run.dataset_name.empty() ? std::string("-") : run.dataset_name) + " |";
  for (const std::string& method : run.method_order) {
    groups += " " + display_name(method) + " | | | |";
    rule += "---|---|---|---|";
    settings += " Single | | TTS | |";
    columns += " AUC | AP | AUC | AP |";
    row += " " + value(method, 1, true) + " | " + value(method, 1, false) + " | " +
           (tts > 1 ? value(method, tts, true) : "-") + " | " +
           (tts > 1 ? value(method, tts, false) : "-") + " |";
  }

  std::string out = "## Method comparison (Single: n=1, TTS: n=" + std::to_string(tts) + ")\n\n";
  out += groups + "\n" + rule + "\n" + settings + "\n" + columns + "\n" + row + "\n\n";

  out += "## Scaling curve\n\n| Method | n | AUC | AP | degraded |\n|---|---|---|---|---|\n";
  for (const std::string& method : run.method_order) {
    auto m = run.metrics.find(method);
    if (m == run.metrics.end()) continue;
    for (const auto& [n, c] : m->second) {
      out += "| " + method + " | " + std::to_string(n) + " | " + fixed(c.auc, 4) + " | " +
             fixed(c.ap, 4) + " | " + std::to_string(c.degraded_count) + " |\n";
    }
  }

  out += "\n## Power-law fit of 1 - metric = alpha * n^(-beta)\n\n";
  out += "| Method | metric | alpha | beta | rmse (log) |\n|---|---|---|---|---|\n";
  for (const std::string& method : run.method_order) {
    for (bool use_auc : {true, false}) {
      const Fit f = fit_metric(run, method, use_auc);
      out += "| " + method + " | " + (use_auc ? "AUC" : "AP") + " | ";
      out += f.ok ? fixed(f.fit.alpha, 4) + " | " + fixed(f.fit.beta, 4) + " | " +
                        fixed(f.fit.rmse, 4) + " |\n"
                  : std::string("n/a | n/a | n/a |\n");
    }
  }
  return out;
}

json report_json(const RunResult& run) {
  const int tts = tts_n(run);
  json table = json::object();
  json fits = json::object();
  json curve = json::array();
  for (const std::string& method : run.method_order) {
    json entry = json::object();
    if (const CellMetrics* c = cell(run, method, 1)) entry["single"] = {{"auc", c->auc}, {"ap", c->ap}};
    if (tts > 1) {
      if (const CellMetrics* c = cell(run, method, tts)) {
        entry["tts"] = {{"n", tts}, {"auc", c->auc}, {"ap", c->ap}};
      }
    }
    table[method] = entry;
    fits[method] = {{"auc", fit_json(fit_metric(run, method, true))},
                    {"ap", fit_json(fit_metric(run, method, false))}};
    if (auto m = run.metrics.find(method); m != run.metrics.end()) {
      for (const auto& [n, c] : m->second) {
        curve.push_back({{"method", method},
                         {"n", n},
                         {"auc", c.auc},
                         {"ap", c.ap},
                         {"degraded_count", c.degraded_count}});
      }
    }
  }
  return {{"dataset", run.dataset_name},
          {"methods", run.method_order},
          {"table", table},
          {"curve", curve},
          {"power_law", fits}};
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw Error(ErrorCode::InvalidArgument,
              "unknown report format '" + std::string(s) + "' (expected markdown, csv or json)");
}

std::string render_report(const RunResult& run, ReportFormat format) {
  if (!run.complete) throw Error(ErrorCode::Incomplete, "cannot report an incomplete run");
  switch (format) {
    case ReportFormat::Markdown: return markdown(run);
    case ReportFormat::Csv: return curve_csv(run);
    case ReportFormat::Json: return report_json(run).dump(2) + "\n";
  }
  return {};
}

}  // namespace ttsdiag
