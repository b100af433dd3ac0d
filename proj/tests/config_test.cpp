#include <gtest/gtest.h>

#include "vee/config.hpp"

using namespace vee;

TEST(SearchConfig, Defaults) {
  const SearchConfig cfg;
  EXPECT_EQ(cfg.window_half, 100u);
  EXPECT_EQ(cfg.feature_dim, 48u);
  EXPECT_EQ(cfg.num_centroids, 4000u);
  EXPECT_EQ(cfg.n_nn, 200u);
  EXPECT_EQ(cfg.tol_err, 2);
  EXPECT_EQ(cfg.n_conf, 200);
  EXPECT_EQ(cfg.tol_delete, 250);
  EXPECT_EQ(cfg.tau_sc, 0);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(SearchConfig, TextRoundTrip) {
  SearchConfig cfg;
  apply_config_text(cfg, "# tuned\nnt = 30\nnf=12  # trailing comment\n\ntol_delete=inf\nseed=9\n");
  EXPECT_EQ(cfg.window_half, 30u);
  EXPECT_EQ(cfg.feature_dim, 12u);
  EXPECT_EQ(cfg.tol_delete, kNeverPurge);
  SearchConfig again;
  apply_config_text(again, cfg.to_string());
  EXPECT_EQ(again.to_string(), cfg.to_string());
}

TEST(SearchConfig, LaterSettingsOverrideEarlier) {
  SearchConfig cfg;
  apply_config_text(cfg, "nnn=10\n");
  cfg.set("nnn", "25");
  EXPECT_EQ(cfg.n_nn, 25u);
}

TEST(SearchConfig, Errors) {
  SearchConfig cfg;
  EXPECT_THROW(cfg.set("bogus", "1"), InvalidInput);
  EXPECT_THROW(cfg.set("nt", "12x"), InvalidInput);
  EXPECT_THROW(cfg.set("nf", "-1"), InvalidInput);
  EXPECT_THROW(apply_config_text(cfg, "nt 5\n"), InvalidInput);
  cfg.feature_dim = 200;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = SearchConfig{};
  cfg.n_conf = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}
