// vee: command-line front end for fingerprinting, codebook training,
// indexing, querying and evaluation.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "vee/config.hpp"
#include "vee/evalkit.hpp"
#include "vee/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vee;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

// Flags that mirror SearchConfig keys. Values stay strings so that
// SearchConfig::set() is the only parser.
struct ConfigFlags {
  struct Entry {
    Entry(const char* k, const char* f, const char* h) : key(k), flag(f), help(h) {}

    const char* key;
    const char* flag;
    const char* help;
    std::string value;
    std::vector<CLI::Option*> options;  // one per subcommand

    bool given() const {
      return std::any_of(options.begin(), options.end(), [](const CLI::Option* o) { return o->count() > 0; });
    }
  };
  std::vector<Entry> entries{
      {"nt", "--nt", "window half-width N_T"},
      {"nf", "--nf", "descriptor length N_F"},
      {"nc", "--nc", "codebook size N_C"},
      {"nnn", "--nnn", "neighbours kept per query signature"},
      {"tol_err", "--tol-err", "offset tolerance in frames"},
      {"tol_delete", "--tol-delete", "idle frames before a segment is purged (or 'inf')"},
      {"n_conf", "--n-conf", "minimum votes for a reported segment"},
      {"tau_sc", "--tau-sc", "minimum similarity score (0 = off)"},
      {"min_sep", "--min-sep", "minimum extremum separation"},
      {"seed", "--seed", "random seed"},
      {"kmeans_iters", "--kmeans-iters", "k-means iterations"},
  };
  std::string config_file;
  bool print_config = false;

  void attach(CLI::App& app) {
    for (auto& e : entries) e.options.push_back(app.add_option(e.flag, e.value, e.help));
    app.add_option("--config", config_file, "key=value configuration file");
    app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  }

  bool explicitly_set(std::string_view key, const SearchConfig& file_cfg, const SearchConfig& defaults) const {
    for (const auto& e : entries) {
      if (e.key == key && e.given()) return true;
    }
    // A value the config file changed counts as pinned too.
    if (key == "nt") return file_cfg.window_half != defaults.window_half;
    if (key == "nf") return file_cfg.feature_dim != defaults.feature_dim;
    if (key == "min_sep") return file_cfg.min_separation != defaults.min_separation;
    return false;
  }

  // default < config file < flag
  SearchConfig resolve(SearchConfig* file_only = nullptr) const {
    SearchConfig cfg;
    if (!config_file.empty()) apply_config_file(cfg, config_file);
    if (file_only != nullptr) *file_only = cfg;
    for (const auto& e : entries) {
      if (e.given()) cfg.set(e.key, e.value);
    }
    cfg.validate();
    return cfg;
  }
};

void write_text_atomic(const fs::path& path, const std::string& text) { io::write_file_atomic(path, text); }

bool has_magic(const std::vector<std::uint8_t>& bytes, std::string_view magic) {
  return bytes.size() >= 4 && std::equal(magic.begin(), magic.end(), bytes.begin());
}

// Accepts either a raw frame stream or a precomputed fingerprint file.
VideoFingerprints load_video_fingerprints(const fs::path& path, const FingerprintParams& params) {
  const auto bytes = io::read_file(path);
  if (has_magic(bytes, "VEEF")) return fingerprint_stream(decode_frame_stream(bytes), params);
  auto fp = decode_fingerprints(bytes);
  if (!(fp.params == params)) {
    throw InvalidInput(path.string() + " was fingerprinted with nt=" + std::to_string(fp.params.window_half) +
                       " nf=" + std::to_string(fp.params.feature_dim) +
                       " min_sep=" + std::to_string(fp.params.min_separation) + ", configuration says nt=" +
                       std::to_string(params.window_half) + " nf=" + std::to_string(params.feature_dim) +
                       " min_sep=" + std::to_string(params.min_separation));
  }
  return fp;
}

// N_T, N_F and min_sep come from the index unless the user pinned them, in
// which case they must agree with it.
SearchConfig adopt_index_params(SearchConfig cfg, const InvertedIndex& index, const ConfigFlags& flags,
                                const SearchConfig& file_cfg) {
  const SearchConfig defaults;
  auto check = [&](const char* key, std::size_t configured, std::size_t stored, std::size_t& slot) {
    if (flags.explicitly_set(key, file_cfg, defaults) && configured != stored) {
      throw InvalidInput(std::string("configured ") + key + "=" + std::to_string(configured) +
                         " does not match the index (" + key + "=" + std::to_string(stored) + ")");
    }
    slot = stored;
  };
  check("nt", cfg.window_half, index.window_half(), cfg.window_half);
  check("nf", cfg.feature_dim, index.codebook().dim, cfg.feature_dim);
  check("min_sep", cfg.min_separation, index.min_separation(), cfg.min_separation);
  cfg.validate();
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vee: edge-energy video fingerprinting and subclip search"};
  app.require_subcommand(1);
  ConfigFlags flags;

  // fingerprint
  auto* fp_cmd = app.add_subcommand("fingerprint", "extract descriptors from a VEEF frame stream");
  std::string fp_in, fp_out;
  fp_cmd->add_option("input", fp_in, "VEEF frame stream")->required();
  fp_cmd->add_option("-o,--output", fp_out, "fingerprint file to write")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a codebook on fingerprint files");
  std::vector<std::string> train_in;
  std::string train_out;
  train_cmd->add_option("inputs", train_in, "fingerprint (or VEEF) files")->required();
  train_cmd->add_option("-o,--output", train_out, "codebook file to write")->required();

  // index
  auto* index_cmd = app.add_subcommand("index", "build an inverted index of reference videos");
  std::vector<std::string> index_in;
  std::string index_codebook, index_out;
  index_cmd->add_option("inputs", index_in, "reference fingerprint (or VEEF) files; name = file stem");
  index_cmd->add_option("-c,--codebook", index_codebook, "codebook file")->required();
  index_cmd->add_option("-o,--output", index_out, "index file to write")->required();

  // query
  auto* query_cmd = app.add_subcommand("query", "search one query video against an index");
  std::string query_index, query_in, query_id;
  query_cmd->add_option("-i,--index", query_index, "index file")->required();
  query_cmd->add_option("input", query_in, "query VEEF stream or fingerprint file")->required();
  query_cmd->add_option("--id", query_id, "query id printed in results (default: file stem)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "run a labelled query set and report mAP");
  std::string eval_index, eval_truth, eval_out;
  std::vector<std::string> eval_in;
  eval_cmd->add_option("-i,--index", eval_index, "index file")->required();
  eval_cmd->add_option("-g,--ground-truth", eval_truth, "ground truth TSV")->required();
  eval_cmd->add_option("inputs", eval_in, "query VEEF streams; id = file stem");
  eval_cmd->add_option("-o,--output", eval_out, "also write the report here");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic reference/query corpus");
  std::string synth_dir;
  CorpusSpec spec;
  double synth_noise = 0.0;
  std::uint64_t synth_seed = 1;
  synth_cmd->add_option("-o,--output", synth_dir, "output directory")->required();
  synth_cmd->add_option("--corpus-seed", synth_seed, "corpus seed");
  synth_cmd->add_option("--videos", spec.n_videos, "reference video count");
  synth_cmd->add_option("--min-frames", spec.min_frames);
  synth_cmd->add_option("--max-frames", spec.max_frames);
  synth_cmd->add_option("--query-min-frames", spec.query_min_frames);
  synth_cmd->add_option("--query-max-frames", spec.query_max_frames);
  synth_cmd->add_option("--window-half", spec.window_half, "queries host at least one 2*N+1 window");
  synth_cmd->add_option("--width", spec.width);
  synth_cmd->add_option("--height", spec.height);
  synth_cmd->add_option("--noise", synth_noise, "Gaussian noise sigma added to queries");

  for (auto* sub : {fp_cmd, train_cmd, index_cmd, query_cmd, eval_cmd}) flags.attach(*sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    SearchConfig file_cfg;
    const auto cfg = app.got_subcommand(synth_cmd) ? SearchConfig{} : flags.resolve(&file_cfg);
    if (flags.print_config) {
      std::cout << cfg.to_string();
      return kOk;
    }

    if (app.got_subcommand(fp_cmd)) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto fp = fingerprint_stream(read_frame_stream(fp_in), cfg.fingerprint());
      io::write_file_atomic(fp_out, encode_fingerprints(fp));
      std::cout << "descriptors\t" << fp.descriptors.size() << "\nseconds\t" << seconds_since(t0) << '\n';
    } else if (app.got_subcommand(train_cmd)) {
      std::vector<VideoFingerprints> videos;
      for (const auto& path : train_in) videos.push_back(load_video_fingerprints(path, cfg.fingerprint()));
      const auto cb = train_from(videos, cfg);
      io::write_file_atomic(train_out, encode_codebook_file(cb));
      std::cout << "centroids\t" << cb.size() << "\ndim\t" << cb.dim << '\n';
    } else if (app.got_subcommand(index_cmd)) {
      const auto cb = decode_codebook_file(io::read_file(index_codebook));
      std::vector<NamedFingerprints> named;
      for (const auto& path : index_in) {
        named.push_back({fs::path(path).stem().string(), load_video_fingerprints(path, cfg.fingerprint())});
      }
      const auto index = build_index(cb, cfg.fingerprint(), named);
      const auto bytes = index.serialize();
      io::write_file_atomic(index_out, bytes);
      std::cout << "videos\t" << index.videos().size() << "\npostings\t" << index.posting_count() << "\nbytes\t"
                << bytes.size() << '\n';
    } else if (app.got_subcommand(query_cmd)) {
      const auto index = InvertedIndex::load(query_index);
      const auto qcfg = adopt_index_params(cfg, index, flags, file_cfg);
      const auto t0 = std::chrono::steady_clock::now();
      const auto fp = load_video_fingerprints(query_in, qcfg.fingerprint());
      const double fingerprint_seconds = seconds_since(t0);
      const auto outcome = search(index, fp.descriptors, qcfg.search());
      const auto id = query_id.empty() ? fs::path(query_in).stem().string() : query_id;
      if (outcome.results.empty()) {
        std::cout << id << "\tno match\n";
      } else {
        std::cout << format_results(id, outcome.results);
      }
      nlohmann::json stats{{"query", id},
                           {"signatures", outcome.stats.signatures},
                           {"matches", outcome.stats.matches},
                           {"results", outcome.results.size()},
                           {"peak_queue_length", outcome.stats.peak_queue_length},
                           {"peak_queue_bytes", outcome.stats.peak_queue_bytes},
                           {"fingerprint_seconds", fingerprint_seconds},
                           {"search_seconds", outcome.stats.seconds}};
      std::cerr << stats.dump() << '\n';
    } else if (app.got_subcommand(eval_cmd)) {
      const auto index = InvertedIndex::load(eval_index);
      const auto ecfg = adopt_index_params(cfg, index, flags, file_cfg);
      const auto truth = parse_ground_truth([&] {
        const auto raw = io::read_file(eval_truth);
        return std::string(raw.begin(), raw.end());
      }());
      std::vector<LabeledQuery> queries;
      for (const auto& path : eval_in) {
        queries.push_back({fs::path(path).stem().string(), read_frame_stream(path).frames});
      }
      const auto report = evaluate(index, queries, truth, ecfg);
      for (const auto& q : report.excluded) std::cerr << "warning: no ground truth for query " << q << ", excluded\n";
      const auto text = format_report(report);
      if (!eval_out.empty()) write_text_atomic(eval_out, text);
      std::cout << text;
    } else if (app.got_subcommand(synth_cmd)) {
      const auto corpus = make_corpus(synth_seed, spec);
      fs::create_directories(synth_dir);
      const fs::path dir(synth_dir);
      for (std::size_t i = 0; i < corpus.references.size(); ++i) {
        write_frame_stream(dir / (corpus.reference_names[i] + ".veef"), corpus.references[i]);
      }
      for (std::size_t i = 0; i < corpus.queries.size(); ++i) {
        auto q = corpus.queries[i];
        if (synth_noise > 0) q.frames = distort(q.frames, NoiseDistortion{synth_noise}, synth_seed * 1000 + i);
        write_frame_stream(dir / (corpus.query_ids[i] + ".veef"), q);
      }
      write_text_atomic(dir / "truth.tsv", format_ground_truth(corpus.truth));
      std::cout << "references\t" << corpus.references.size() << "\nqueries\t" << corpus.queries.size() << '\n';
    }
    return kOk;
  } catch (const ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
