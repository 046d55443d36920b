// Copyright 2026 The semalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "semalign/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "semalign/data.h"
#include "semalign/embedder.h"
#include "semalign/error.h"
#include "semalign/metrics.h"
#include "semalign/synthetic.h"
#include "semalign/tiny_transformer.h"
#include "semalign/trainer.h"

namespace semalign {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  }
  return hex.str();
}

std::vector<ReportTable> build_report(const std::vector<MetricRecord>& records) {
  std::vector<ReportTable> tables;
  auto index_of = [](std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
    v.push_back(s);
    return v.size() - 1;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : records) {
    auto t = std::find_if(tables.begin(), tables.end(),
                          [&](const ReportTable& x) { return x.metric == r.metric; });
    if (t == tables.end()) {
      tables.push_back({r.metric, {}, {}, {}, {}});
      t = tables.end() - 1;
    }
    const std::size_t d = index_of(t->datasets, r.dataset);
    const std::size_t m = index_of(t->models, r.model.empty() ? "-" : r.model);
    t->values.resize(t->models.size());
    for (auto& row : t->values) row.resize(t->datasets.size(), nan);
    t->values[m][d] = r.value;
  }
  for (auto& t : tables) {
    for (const auto& row : t.values) {
      double sum = 0.0;
      std::size_t n = 0;
      for (double v : row) {
        if (!std::isnan(v)) {
          sum += v;
          ++n;
        }
      }
      t.average.push_back(n == 0 ? nan : sum / static_cast<double>(n));
    }
  }
  return tables;
}

std::string report_text(const std::vector<ReportTable>& tables) {
  std::ostringstream os;
  for (const auto& t : tables) {
    std::vector<std::string> header = {"model"};
    header.insert(header.end(), t.datasets.begin(), t.datasets.end());
    header.push_back("Avg.");
    std::vector<std::vector<std::string>> rows = {header};
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      std::vector<std::string> row = {t.models[m]};
      auto cell = [](double v) {
        if (std::isnan(v)) return std::string("-");
        std::ostringstream c;
        c << std::fixed << std::setprecision(4) << v;
        return c.str();
      };
      for (double v : t.values[m]) row.push_back(cell(v));
      row.push_back(cell(t.average[m]));
      rows.push_back(row);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    os << "# " << t.metric << '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c > 0) os << "  ";
        os << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c]))
           << row[c];
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

ordered_json report_json(const std::vector<ReportTable>& tables) {
  ordered_json j = ordered_json::array();
  for (const auto& t : tables) {
    ordered_json table;
    table["metric"] = t.metric;
    table["columns"] = t.datasets;
    table["columns"].push_back("Avg.");
    ordered_json rows = ordered_json::array();
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      ordered_json row;
      row["model"] = t.models[m];
      ordered_json values = ordered_json::array();
      for (double v : t.values[m]) {
        values.push_back(std::isnan(v) ? ordered_json(nullptr) : ordered_json(v));
      }
      row["values"] = values;
      row["avg"] = t.average[m];
      rows.push_back(row);
    }
    table["rows"] = rows;
    j.push_back(table);
  }
  return j;
}

std::vector<ReportTable> write_report(const std::string& run_dir) {
  const fs::path metrics = fs::path(run_dir) / "metrics.jsonl";
  if (!fs::exists(metrics)) {
    throw FormatError("no metric records in '" + run_dir + "'");
  }
  const auto records = load_metric_records(metrics.string());
  if (records.empty()) throw FormatError("no metric records in '" + run_dir + "'");
  const auto tables = build_report(records);
  std::ofstream txt(fs::path(run_dir) / "report.txt", std::ios::binary);
  std::ofstream json(fs::path(run_dir) / "report.json", std::ios::binary);
  if (!txt || !json) throw IoError("cannot write report into '" + run_dir + "'");
  txt << report_text(tables);
  json << report_json(tables).dump(2) << '\n';
  return tables;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Provenance for one invocation, appended to <run-dir>/manifest.jsonl.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  ordered_json config = ordered_json::object();
  ordered_json inputs = ordered_json::object();
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string started_at;

  void input(const std::string& path) { inputs[path] = sha256_file(path); }

  void append(const fs::path& run_dir, const std::string& status) const {
    ordered_json j;
    j["command"] = command;
    j["args"] = args;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seed"] = seed;
    j["version"] = SEMALIGN_VERSION;
    j["started_at"] = started_at;
    j["finished_at"] = utc_now();
    j["status"] = status;
    fs::create_directories(run_dir);
    std::ofstream out(run_dir / "manifest.jsonl", std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to manifest in '" + run_dir.string() + "'");
    out << j.dump() << '\n';
  }
};

struct Context {
  std::ostream& out;
  fs::path run_dir;
  RunManifest manifest;
};

void setup_logging(const std::string& level) {
  static bool installed = false;
  if (!installed) {
    spdlog::set_default_logger(spdlog::stderr_color_st("semalign"));
    installed = true;
  }
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") {
    throw ConfigError("unknown log level '" + level + "'");
  }
  spdlog::set_level(lvl);
}

std::vector<PromptTemplate> template_registry(const std::string& registry_path,
                                              Context& ctx) {
  if (registry_path.empty()) return builtin_templates();
  ctx.manifest.input(registry_path);
  return load_template_registry(registry_path);
}

TinyTransformer load_model(const std::string& path, Context& ctx) {
  ctx.manifest.input(path);
  return TinyTransformer::load(path);
}

void append_metrics(Context& ctx, const std::vector<MetricRecord>& records) {
  fs::create_directories(ctx.run_dir);
  const auto path = (ctx.run_dir / "metrics.jsonl").string();
  append_metric_records(records, path);
  ctx.manifest.outputs.push_back(path);
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

// ---- build-pairs ----

struct BuildPairsArgs {
  std::string nli, tmpl = "paraphrase-1", registry, out;
  std::size_t subsample = 0;
  std::uint64_t seed = 0;
};

void run_build_pairs(const BuildPairsArgs& a, Context& ctx) {
  ctx.manifest.input(a.nli);
  const auto registry = template_registry(a.registry, ctx);
  const auto& tmpl = find_template(registry, a.tmpl);
  auto parsed = parse_nli_csv(a.nli);
  if (parsed.skipped_rows > 0) {
    spdlog::warn("{}: skipped {} rows with empty fields", a.nli, parsed.skipped_rows);
  }
  TripletDataset ds = a.subsample > 0 ? subsample(parsed.dataset, a.subsample, a.seed)
                                      : parsed.dataset;
  const auto built = build_preference_pairs(ds, tmpl);
  save_preference_pairs(built.pairs, a.out);
  ctx.manifest.config = {{"template", tmpl.name()},
                         {"subsample", a.subsample},
                         {"seed", a.seed}};
  ctx.manifest.seed = a.seed;
  ctx.manifest.outputs.push_back(a.out);
  ctx.out << "pairs\t" << built.pairs.size() << "\ndropped\t" << built.dropped
          << "\nskipped_rows\t" << parsed.skipped_rows << '\n';
}

// ---- train ----

struct TrainArgs {
  std::string pairs, config, out;
  std::vector<std::string> vocab;
  nlohmann::json overrides = nlohmann::json::object();
};

const std::vector<std::string> kModelKeys = {
    "layers", "heads", "hidden_dim", "mlp_dim", "max_seq_len", "model_seed",
    "embedding_std", "max_vocab", "init_checkpoint", "vocab_files"};

struct ModelSettings {
  TinyTransformerConfig model;
  std::size_t max_vocab = 4096;
  std::string init_checkpoint;
  std::vector<std::string> vocab_files;
};

void apply_model_config(const nlohmann::json& j, ModelSettings& s) {
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "layers") s.model.layers = value.get<std::size_t>();
      else if (key == "heads") s.model.heads = value.get<std::size_t>();
      else if (key == "hidden_dim") s.model.hidden_dim = value.get<std::size_t>();
      else if (key == "mlp_dim") s.model.mlp_dim = value.get<std::size_t>();
      else if (key == "max_seq_len") s.model.max_seq_len = value.get<std::size_t>();
      else if (key == "model_seed") s.model.seed = value.get<std::uint64_t>();
      else if (key == "embedding_std") s.model.embedding_std = value.get<double>();
      else if (key == "max_vocab") s.max_vocab = value.get<std::size_t>();
      else if (key == "init_checkpoint") s.init_checkpoint = value.get<std::string>();
      else if (key == "vocab_files") s.vocab_files = value.get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model config value: ") + e.what());
  }
}

// Splits a flat config object into model keys and trainer keys.
void apply_flat_config(const nlohmann::json& j, ModelSettings& model,
                       DpoTrainConfig& train) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  nlohmann::json model_part = nlohmann::json::object();
  nlohmann::json train_part = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    const bool is_model =
        std::find(kModelKeys.begin(), kModelKeys.end(), key) != kModelKeys.end();
    (is_model ? model_part : train_part)[key] = value;
  }
  apply_model_config(model_part, model);
  apply_train_config(train_part, train);
}

void run_train(const TrainArgs& a, Context& ctx) {
  ModelSettings settings;
  DpoTrainConfig train = DpoTrainConfig::desk_scale();
  if (!a.config.empty()) {
    ctx.manifest.input(a.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(a.config));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(a.config + ": " + e.what());
    }
    apply_flat_config(j, settings, train);
  }
  apply_flat_config(a.overrides, settings, train);
  for (const auto& v : a.vocab) settings.vocab_files.push_back(v);
  train.validate();

  ctx.manifest.input(a.pairs);
  const auto pairs = load_preference_pairs(a.pairs);

  std::optional<TinyTransformer> model;
  if (!settings.init_checkpoint.empty()) {
    model.emplace(load_model(settings.init_checkpoint, ctx));
    const auto& have = model->config().adapter;
    if (have.has_value() != train.adapter.has_value() ||
        (have && (have->rank != train.adapter->rank ||
                  have->alpha != train.adapter->alpha))) {
      throw ConfigError("adapter settings differ from the initial checkpoint");
    }
    settings.model = model->config();
  } else {
    std::vector<std::string> extra;
    for (const auto& path : settings.vocab_files) {
      ctx.manifest.input(path);
      if (fs::path(path).extension() == ".tsv") {
        for (const auto& r : load_sts_tsv(path).records) {
          extra.push_back(r.sentence1);
          extra.push_back(r.sentence2);
        }
        continue;
      }
      for (const auto& s : load_sentences(path)) extra.push_back(s.text());
    }
    settings.model.adapter = train.adapter;
    settings.model.validate();
    model.emplace(settings.model,
                  build_pair_tokenizer(pairs, extra, settings.max_vocab));
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  auto resolved = train_config_to_json(train);
  resolved["layers"] = settings.model.layers;
  resolved["heads"] = settings.model.heads;
  resolved["hidden_dim"] = settings.model.hidden_dim;
  resolved["mlp_dim"] = settings.model.effective_mlp_dim();
  resolved["max_seq_len"] = settings.model.max_seq_len;
  resolved["model_seed"] = settings.model.seed;
  resolved["embedding_std"] = settings.model.embedding_std;
  resolved["max_vocab"] = settings.max_vocab;
  resolved["vocab_size"] = model->vocab_size();
  resolved["init_checkpoint"] = settings.init_checkpoint;
  resolved["vocab_files"] = settings.vocab_files;
  ctx.manifest.config = resolved;
  ctx.manifest.seed = train.seed;
  {
    std::ofstream cfg(out / "config.json", std::ios::binary);
    cfg << resolved.dump(2) << '\n';
  }

  model->save((out / "reference.ckpt").string());
  const auto result = train_dpo(*model, pairs, train, (out / "checkpoints").string());
  model->save((out / "model.ckpt").string());
  save_train_log(result.log, (out / "train_log.jsonl").string());
  for (const char* f : {"config.json", "reference.ckpt", "model.ckpt", "train_log.jsonl"}) {
    ctx.manifest.outputs.push_back((out / f).string());
  }
  for (const auto& c : result.checkpoints) ctx.manifest.outputs.push_back(c.path);

  const auto& steps = result.log.steps;
  ctx.out << "steps\t" << steps.size() << "\nupdates\t" << result.optimizer_updates
          << "\nskipped_pairs\t" << result.skipped_pairs << '\n';
  if (!steps.empty()) {
    ctx.out << "first_loss\t" << steps.front().loss << "\nlast_loss\t"
            << steps.back().loss << '\n';
  }
}

// ---- embed ----

struct EmbedArgs {
  std::string model, tmpl = "prompteol", registry, in, out, pooling = "last";
  std::size_t threads = 1;
};

EmbedOptions embed_options(const std::string& pooling, std::size_t threads,
                           const std::string& model_path) {
  EmbedOptions o;
  if (pooling == "last") o.pooling = Pooling::kLastToken;
  else if (pooling == "mean") o.pooling = Pooling::kMean;
  else throw ConfigError("unknown pooling '" + pooling + "'");
  o.threads = threads;
  o.model_tag = stem(model_path);
  return o;
}

void run_embed(const EmbedArgs& a, Context& ctx) {
  const auto model = load_model(a.model, ctx);
  const auto registry = template_registry(a.registry, ctx);
  const auto& tmpl = find_template(registry, a.tmpl);
  ctx.manifest.input(a.in);
  const auto sentences = load_sentences(a.in);
  const auto m = embed_corpus(model, tmpl, sentences,
                              embed_options(a.pooling, a.threads, a.model));
  save_embeddings(m, a.out);
  ctx.manifest.config = {{"template", tmpl.name()}, {"pooling", a.pooling}};
  ctx.manifest.outputs.push_back(a.out);
  ctx.out << "rows\t" << m.n() << "\ndim\t" << m.d() << '\n';
}

// ---- eval-sts ----

struct EvalStsArgs {
  std::string model, tmpl = "prompteol", registry, label, pooling = "last";
  std::vector<std::string> data;
  std::size_t threads = 1;
};

void run_eval_sts(const EvalStsArgs& a, Context& ctx) {
  const auto model = load_model(a.model, ctx);
  const auto registry = template_registry(a.registry, ctx);
  const auto& tmpl = find_template(registry, a.tmpl);
  const auto options = embed_options(a.pooling, a.threads, a.model);
  const std::string label = a.label.empty() ? stem(a.model) : a.label;
  std::vector<MetricRecord> records;
  for (const auto& path : a.data) {
    ctx.manifest.input(path);
    const auto set = load_sts_tsv(path);
    const auto r = eval_sts(model, tmpl, set, options);
    records.push_back({"sts_spearman", set.name, r.spearman_x100, label});
    ctx.out << set.name << '\t' << std::fixed << std::setprecision(2)
            << r.spearman_x100 << '\n';
  }
  append_metrics(ctx, records);
  ctx.manifest.config = {{"template", tmpl.name()}, {"pooling", a.pooling},
                         {"label", label}};
}

// ---- eval-space ----

struct EvalSpaceArgs {
  std::string emb, dataset, label;
};

void run_eval_space(const EvalSpaceArgs& a, Context& ctx) {
  ctx.manifest.input(a.emb);
  const auto m = load_embeddings(a.emb);
  const double u = uniformity(m.rows);
  const auto iso = isotropy(m.rows);
  const std::string dataset = a.dataset.empty() ? stem(a.emb) : a.dataset;
  const std::string label = a.label.empty() ? m.model_tag : a.label;
  append_metrics(ctx, {{"uniformity", dataset, u, label},
                       {"isotropy", dataset, iso.score, label}});
  ctx.manifest.config = {{"dataset", dataset}, {"label", label}};
  ctx.out << std::setprecision(6) << "uniformity\t" << u << "\nisotropy\t"
          << iso.score << '\n';
  if (iso.degenerate_pairs > 0) {
    spdlog::info("isotropy: {} near-equal eigenvalue pairs", iso.degenerate_pairs);
  }
}

// ---- eval-gar ----

struct EvalGarArgs {
  std::string model, tmpl = "prompteol", registry, in, report, label,
      normalizer = "none";
  std::size_t k = 10;
};

void run_eval_gar(const EvalGarArgs& a, Context& ctx) {
  const auto model = load_model(a.model, ctx);
  const auto registry = template_registry(a.registry, ctx);
  const auto& tmpl = find_template(registry, a.tmpl);
  ctx.manifest.input(a.in);
  const auto sentences = load_sentences(a.in);
  TokenNormalizer normalizer;
  if (a.normalizer == "lower") {
    normalizer = [](const std::string& s) {
      std::string t = s;
      std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
      });
      return t;
    };
  } else if (a.normalizer != "none") {
    throw ConfigError("unknown normalizer '" + a.normalizer + "'");
  }
  const auto report = aligned_token_report(model, tmpl, sentences, a.k, normalizer);
  const std::string label = a.label.empty() ? stem(a.model) : a.label;
  append_metrics(ctx, {{"gar", stem(a.in), report.gar, label}});
  if (!a.report.empty()) {
    ordered_json j;
    j["k"] = report.k;
    j["gar"] = report.gar;
    ordered_json rows = ordered_json::array();
    for (const auto& s : report.sentences) {
      ordered_json row;
      row["sentence"] = s.sentence;
      ordered_json top = ordered_json::array();
      for (const auto& t : s.top_tokens) top.push_back({{"token", t.piece}, {"logit", t.score}});
      row["top_tokens"] = top;
      row["hits"] = s.hits;
      rows.push_back(row);
    }
    j["sentences"] = rows;
    std::ofstream out(a.report, std::ios::binary);
    if (!out) throw IoError("cannot open '" + a.report + "' for writing");
    out << j.dump(2) << '\n';
    ctx.manifest.outputs.push_back(a.report);
  }
  ctx.manifest.config = {{"template", tmpl.name()}, {"k", a.k},
                         {"normalizer", a.normalizer}, {"label", label}};
  ctx.out << "gar\t" << std::fixed << std::setprecision(6) << report.gar << '\n';
}

// ---- plot-pca ----

struct PlotPcaArgs {
  std::string emb, labels, out, image;
};

// Binary PPM scatter plot, one colour per distinct label.
void write_ppm(const std::string& path, const Eigen::MatrixXd& coords,
               const std::vector<std::size_t>& label_ids) {
  constexpr int kSize = 480;
  constexpr int kMargin = 24;
  static const unsigned char kPalette[][3] = {
      {31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
      {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
  std::vector<unsigned char> img(kSize * kSize * 3, 255);
  const Eigen::Vector2d lo = coords.colwise().minCoeff();
  const Eigen::Vector2d hi = coords.colwise().maxCoeff();
  auto to_px = [&](double v, int axis) {
    const double span = hi(axis) - lo(axis);
    const double t = span > 0 ? (v - lo(axis)) / span : 0.5;
    return kMargin + static_cast<int>(std::lround(t * (kSize - 2 * kMargin - 1)));
  };
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const int cx = to_px(coords(i, 0), 0);
    const int cy = kSize - 1 - to_px(coords(i, 1), 1);
    const auto* color = kPalette[label_ids[static_cast<std::size_t>(i)] % 8];
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const std::size_t p = (static_cast<std::size_t>(cy + dy) * kSize +
                               static_cast<std::size_t>(cx + dx)) * 3;
        std::copy(color, color + 3, img.begin() + static_cast<long>(p));
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "P6\n" << kSize << ' ' << kSize << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<long>(img.size()));
}

void run_plot_pca(const PlotPcaArgs& a, Context& ctx) {
  ctx.manifest.input(a.emb);
  const auto m = load_embeddings(a.emb);
  std::vector<std::string> labels(m.n(), "");
  if (!a.labels.empty()) {
    ctx.manifest.input(a.labels);
    std::ifstream in(a.labels, std::ios::binary);
    if (!in) throw IoError("cannot open '" + a.labels + "'");
    labels.clear();
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      labels.push_back(line);
    }
    if (labels.size() != m.n()) {
      throw FormatError(a.labels + ": " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(m.n()) + " rows");
    }
  }
  const auto proj = pca_2d(m.rows);
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw IoError("cannot open '" + a.out + "' for writing");
  out << "index\tlabel\tpc1\tpc2\n" << std::setprecision(17);
  std::vector<std::string> distinct;
  std::vector<std::size_t> label_ids;
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << i << '\t' << labels[i] << '\t' << proj.coords(r, 0) << '\t'
        << proj.coords(r, 1) << '\n';
    auto it = std::find(distinct.begin(), distinct.end(), labels[i]);
    label_ids.push_back(static_cast<std::size_t>(it - distinct.begin()));
    if (it == distinct.end()) distinct.push_back(labels[i]);
  }
  ctx.manifest.outputs.push_back(a.out);
  if (!a.image.empty()) {
    write_ppm(a.image, proj.coords, label_ids);
    ctx.manifest.outputs.push_back(a.image);
  }
  ctx.out << "rows\t" << m.n() << "\nvariance\t" << proj.variance(0) << '\t'
          << proj.variance(1) << '\n';
}

// ---- make-synthetic ----

struct SyntheticArgs {
  std::string out_dir;
  SyntheticConfig config;
};

void run_make_synthetic(const SyntheticArgs& a, Context& ctx) {
  const auto corpus = make_synthetic(a.config);
  fs::create_directories(a.out_dir);
  const auto nli = (fs::path(a.out_dir) / "synthetic-nli.csv").string();
  const auto sts = (fs::path(a.out_dir) / "synthetic-sts.tsv").string();
  write_nli_csv(corpus.nli, nli);
  save_sts_tsv(corpus.sts, sts);
  ctx.manifest.config = {{"triplets", a.config.triplets},
                         {"sts_pairs", a.config.sts_pairs},
                         {"seed", a.config.seed}};
  ctx.manifest.seed = a.config.seed;
  ctx.manifest.outputs = {nli, sts};
  ctx.out << nli << '\n' << sts << '\n';
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Sentence embeddings from causal language models with "
               "preference alignment.",
               "semalign"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(SEMALIGN_VERSION));
  std::string run_dir = env_or("SEMALIGN_OUTPUT_DIR", ".");
  std::string log_level = env_or("SEMALIGN_LOG_LEVEL", "warn");
  app.add_option("--run-dir", run_dir,
                 "Directory for manifest.jsonl and metrics.jsonl "
                 "(env SEMALIGN_OUTPUT_DIR)");
  app.add_option("--log-level", log_level,
                 "trace|debug|info|warn|error|off (env SEMALIGN_LOG_LEVEL)");

  std::function<void(Context&)> handler;

  BuildPairsArgs bp;
  auto* c_bp = app.add_subcommand("build-pairs", "NLI triplets to preference pairs");
  c_bp->add_option("--nli", bp.nli, "CSV with sent0,sent1,hard_neg")->required();
  c_bp->add_option("--template", bp.tmpl, "Paraphrase template name or index");
  c_bp->add_option("--templates", bp.registry, "Template registry file");
  c_bp->add_option("--n", bp.subsample, "Keep N seeded samples");
  c_bp->add_option("--seed", bp.seed, "Subsampling seed");
  c_bp->add_option("--out", bp.out, "Output JSONL")->required();
  c_bp->callback([&] { handler = [&](Context& c) { run_build_pairs(bp, c); }; });

  TrainArgs tr;
  double o_beta = 0, o_lr = 0, o_warmup = 0;
  std::size_t o_epochs = 0, o_batch = 0, o_accum = 0, o_budget = 0, o_ckpt = 0,
              o_rank = 0;
  double o_alpha = 0;
  std::uint64_t o_seed = 0, o_model_seed = 0;
  std::string o_init;
  auto* c_tr = app.add_subcommand("train", "Preference-align a model on pairs");
  c_tr->add_option("--pairs", tr.pairs, "Preference pairs JSONL")->required();
  c_tr->add_option("--config", tr.config, "Flat JSON config");
  c_tr->add_option("--out-dir", tr.out, "Output directory")->required();
  c_tr->add_option("--vocab", tr.vocab, "Sentence files or STS .tsv sets for the vocabulary");
  std::vector<std::pair<std::string, CLI::Option*>> tr_flags = {
      {"beta", c_tr->add_option("--beta", o_beta)},
      {"peak_lr", c_tr->add_option("--peak-lr", o_lr)},
      {"warmup_ratio", c_tr->add_option("--warmup-ratio", o_warmup)},
      {"epochs", c_tr->add_option("--epochs", o_epochs)},
      {"per_step_batch", c_tr->add_option("--per-step-batch", o_batch)},
      {"grad_accum_steps", c_tr->add_option("--grad-accum-steps", o_accum)},
      {"sample_budget", c_tr->add_option("--sample-budget", o_budget)},
      {"checkpoint_every", c_tr->add_option("--checkpoint-every", o_ckpt)},
      {"adapter_rank", c_tr->add_option("--adapter-rank", o_rank)},
      {"adapter_alpha", c_tr->add_option("--adapter-alpha", o_alpha)},
      {"seed", c_tr->add_option("--seed", o_seed)},
      {"model_seed", c_tr->add_option("--model-seed", o_model_seed)},
      {"init_checkpoint", c_tr->add_option("--init", o_init)},
  };
  c_tr->callback([&] {
    auto& o = tr.overrides;
    for (const auto& [key, opt] : tr_flags) {
      if (opt->count() == 0) continue;
      if (key == "beta") o[key] = o_beta;
      else if (key == "peak_lr") o[key] = o_lr;
      else if (key == "warmup_ratio") o[key] = o_warmup;
      else if (key == "epochs") o[key] = o_epochs;
      else if (key == "per_step_batch") o[key] = o_batch;
      else if (key == "grad_accum_steps") o[key] = o_accum;
      else if (key == "sample_budget") o[key] = o_budget;
      else if (key == "checkpoint_every") o[key] = o_ckpt;
      else if (key == "adapter_rank") o[key] = o_rank;
      else if (key == "adapter_alpha") o[key] = o_alpha;
      else if (key == "seed") o[key] = o_seed;
      else if (key == "model_seed") o[key] = o_model_seed;
      else if (key == "init_checkpoint") o[key] = o_init;
    }
    handler = [&](Context& c) { run_train(tr, c); };
  });

  EmbedArgs em;
  auto* c_em = app.add_subcommand("embed", "Embed sentences with a template");
  c_em->add_option("--model", em.model, "Checkpoint")->required();
  c_em->add_option("--template", em.tmpl, "Extraction template name or index");
  c_em->add_option("--templates", em.registry, "Template registry file");
  c_em->add_option("--in", em.in, "Sentences, one per line")->required();
  c_em->add_option("--out", em.out, "Embedding file")->required();
  c_em->add_option("--pooling", em.pooling, "last|mean");
  c_em->add_option("--threads", em.threads, "Worker threads, 0 = all cores");
  c_em->callback([&] { handler = [&](Context& c) { run_embed(em, c); }; });

  EvalStsArgs es;
  auto* c_es = app.add_subcommand("eval-sts", "Spearman x100 on STS sets");
  c_es->add_option("--model", es.model, "Checkpoint")->required();
  c_es->add_option("--template", es.tmpl, "Extraction template name or index");
  c_es->add_option("--templates", es.registry, "Template registry file");
  c_es->add_option("--data", es.data, "sentence1<TAB>sentence2<TAB>gold files")
      ->required();
  c_es->add_option("--label", es.label, "Row label in reports");
  c_es->add_option("--pooling", es.pooling, "last|mean");
  c_es->add_option("--threads", es.threads, "Worker threads, 0 = all cores");
  c_es->callback([&] { handler = [&](Context& c) { run_eval_sts(es, c); }; });

  EvalSpaceArgs sp;
  auto* c_sp = app.add_subcommand("eval-space", "Uniformity and isotropy");
  c_sp->add_option("--emb", sp.emb, "Embedding file")->required();
  c_sp->add_option("--dataset", sp.dataset, "Dataset tag");
  c_sp->add_option("--label", sp.label, "Row label in reports");
  c_sp->callback([&] { handler = [&](Context& c) { run_eval_space(sp, c); }; });

  EvalGarArgs ga;
  auto* c_ga = app.add_subcommand("eval-gar", "Aligned tokens and GAR");
  c_ga->add_option("--model", ga.model, "Checkpoint")->required();
  c_ga->add_option("--template", ga.tmpl, "Extraction template name or index");
  c_ga->add_option("--templates", ga.registry, "Template registry file");
  c_ga->add_option("--in", ga.in, "Sentences, one per line")->required();
  c_ga->add_option("--k", ga.k, "Aligned tokens per sentence");
  c_ga->add_option("--normalizer", ga.normalizer, "none|lower");
  c_ga->add_option("--report", ga.report, "Per-sentence JSON report");
  c_ga->add_option("--label", ga.label, "Row label in reports");
  c_ga->callback([&] { handler = [&](Context& c) { run_eval_gar(ga, c); }; });

  PlotPcaArgs pp;
  auto* c_pp = app.add_subcommand("plot-pca", "2-D PCA projection");
  c_pp->add_option("--emb", pp.emb, "Embedding file")->required();
  c_pp->add_option("--labels", pp.labels, "One label per row");
  c_pp->add_option("--out", pp.out, "Coordinate TSV")->required();
  c_pp->add_option("--image", pp.image, "Optional PPM scatter plot");
  c_pp->callback([&] { handler = [&](Context& c) { run_plot_pca(pp, c); }; });

  std::string report_dir;
  auto* c_rp = app.add_subcommand("report", "Aggregate metric records");
  c_rp->add_option("run_dir", report_dir, "Run directory (default --run-dir)");
  c_rp->callback([&] {
    handler = [&](Context& c) {
      const std::string dir = report_dir.empty() ? c.run_dir.string() : report_dir;
      const auto tables = write_report(dir);
      c.manifest.outputs = {(fs::path(dir) / "report.txt").string(),
                            (fs::path(dir) / "report.json").string()};
      c.out << report_text(tables);
    };
  });

  SyntheticArgs sy;
  auto* c_sy = app.add_subcommand("make-synthetic", "Write the toy NLI and STS sets");
  c_sy->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  c_sy->add_option("--triplets", sy.config.triplets, "NLI triplets");
  c_sy->add_option("--sts-pairs", sy.config.sts_pairs, "STS records");
  c_sy->add_option("--seed", sy.config.seed, "Generator seed");
  c_sy->callback([&] { handler = [&](Context& c) { run_make_synthetic(sy, c); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << SEMALIGN_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  Context ctx{out, fs::path(run_dir), {}};
  ctx.manifest.command = app.get_subcommands().front()->get_name();
  ctx.manifest.args = args;
  ctx.manifest.started_at = utc_now();
  try {
    setup_logging(log_level);
    handler(ctx);
    ctx.manifest.append(ctx.run_dir, "ok");
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
  }
  try {
    ctx.manifest.append(ctx.run_dir, "error");
  } catch (const std::exception&) {
  }
  return kExitDataError;
}

}  // namespace semalign
