// Builds a small synthetic reference set, indexes it and looks up a noisy
// subclip of one reference.

#include <iostream>

#include "vee/evalkit.hpp"
#include "vee/pipeline.hpp"

int main() {
  using namespace vee;

  CorpusSpec spec;
  spec.n_videos = 6;
  const auto corpus = make_corpus(2024, spec);

  SearchConfig cfg;
  cfg.window_half = 50;
  cfg.feature_dim = 48;
  cfg.num_centroids = 64;
  cfg.n_conf = 5;

  std::vector<VideoFingerprints> fps;
  std::vector<NamedFingerprints> named;
  for (std::size_t i = 0; i < corpus.references.size(); ++i) {
    fps.push_back(fingerprint_stream(corpus.references[i], cfg.fingerprint()));
    named.push_back({corpus.reference_names[i], fps.back()});
  }
  const auto index = build_index(train_from(fps, cfg), cfg.fingerprint(), named);
  std::cout << "indexed " << index.videos().size() << " videos, " << index.posting_count() << " postings\n";

  const auto& truth = corpus.truth[3];
  const auto query = distort(corpus.queries[3].frames, NoiseDistortion{8.0}, 1);
  const auto outcome = search(index, fingerprint_video(query, cfg.fingerprint()), cfg.search());

  std::cout << "truth: " << corpus.reference_names[truth.video_id] << " frames " << truth.r_start << ".."
            << truth.r_end << '\n';
  for (const auto& r : outcome.results) {
    std::cout << index.videos().at(r.video_id).name << " frames " << r.r_start << ".." << r.r_end << " offset "
              << r.offset << " votes " << r.votes << '\n';
  }
  std::cout << "peak queue length " << outcome.stats.peak_queue_length << '\n';
}
