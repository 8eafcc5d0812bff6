#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "autocf/service.hpp"

namespace autocf {
namespace {

using nlohmann::json;

const Date kToday = std::chrono::sys_days{std::chrono::year{2024} / std::chrono::May / 15};

std::string projects_csv() {
  std::ifstream in(std::string(AUTOCF_FIXTURE_DIR) + "/projects.csv");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Engine& engine() {
  static const Engine e(RankerModel::load_default(), {});
  return e;
}

class ServiceTest : public ::testing::Test {
 protected:
  ServiceConfig config() {
    ServiceConfig cfg;
    cfg.today = kToday;
    cfg.static_dir = std::string(AUTOCF_ASSET_DIR) + "/web";
    return cfg;
  }

  HttpResponse post(Service& s, const std::string& path, const json& body) {
    return s.handle("POST", path, body.dump(), "application/json");
  }

  std::string upload(Service& s) {
    const auto r = post(s, "/tables", {{"csv", projects_csv()}});
    EXPECT_EQ(r.status, 200) << r.body;
    return json::parse(r.body)["table_id"];
  }
};

TEST_F(ServiceTest, HealthAndIndex) {
  Service s(engine(), config());
  EXPECT_EQ(json::parse(s.handle("GET", "/health", "", "").body)["status"], "ok");
  const auto page = s.handle("GET", "/", "", "");
  EXPECT_EQ(page.status, 200);
  EXPECT_NE(page.body.find("/suggest"), std::string::npos);
  EXPECT_TRUE(page.content_type.starts_with("text/html"));
  ServiceConfig bare = config();
  bare.static_dir.clear();
  Service without(engine(), bare);
  EXPECT_EQ(without.handle("GET", "/", "", "").status, 404);
}

TEST_F(ServiceTest, UploadAndReadBack) {
  Service s(engine(), config());
  const auto created = json::parse(post(s, "/tables", {{"csv", projects_csv()}}).body);
  EXPECT_EQ(created["n_rows"], 8);
  EXPECT_EQ(created["revision"], 0);
  const auto csv = s.handle("POST", "/tables", projects_csv(), "text/csv");
  EXPECT_EQ(csv.status, 200);
  EXPECT_NE(json::parse(csv.body)["table_id"], created["table_id"]);
  const std::string id = created["table_id"];
  EXPECT_EQ(json::parse(s.handle("GET", "/tables/" + id, "", "").body)["headers"][0], "Project ID");
  const auto rev = json::parse(s.handle("GET", "/tables/" + id + "/revisions/0", "", "").body);
  EXPECT_EQ(rev["n_rows"], 8);
  EXPECT_EQ(s.handle("GET", "/tables/" + id + "/revisions/1", "", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/tables/" + id + "/revisions/x", "", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/tables/nope", "", "").status, 404);
}

TEST_F(ServiceTest, BadRequests) {
  ServiceConfig cfg = config();
  cfg.max_body_bytes = 64;
  Service s(engine(), cfg);
  EXPECT_EQ(s.handle("POST", "/tables", std::string(100, 'x'), "text/csv").status, 413);
  EXPECT_EQ(s.handle("POST", "/tables", "{oops", "application/json").status, 400);
  EXPECT_EQ(post(s, "/tables", {{"nocsv", 1}}).status, 400);
  const auto ragged = s.handle("POST", "/tables", "a,b\n1,2\n3\n", "text/csv");
  EXPECT_EQ(ragged.status, 400);
  EXPECT_TRUE(json::parse(ragged.body).contains("row"));
  EXPECT_EQ(s.handle("DELETE", "/tables", "", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/elsewhere", "", "").status, 404);
}

TEST_F(ServiceTest, SuggestValidationAndDeterminism) {
  Service s(engine(), config());
  const std::string id = upload(s);
  EXPECT_EQ(post(s, "/suggest", {{"table_id", "t999"}, {"column", "Cost"}}).status, 404);
  EXPECT_EQ(post(s, "/suggest", {{"table_id", id}, {"column", "Nope"}}).status, 422);
  EXPECT_EQ(post(s, "/suggest", {{"table_id", id}, {"column", "Cost"}, {"k", 0}}).status, 422);
  EXPECT_EQ(post(s, "/suggest", {{"table_id", id}, {"column", "Cost"}, {"k", 51}}).status, 422);
  EXPECT_EQ(post(s, "/suggest", {{"table_id", id}, {"column", "Cost"}, {"today", "soon"}}).status, 422);
  EXPECT_EQ(post(s, "/suggest", {{"table_id", id}, {"column", "Cost"}, {"k", "three"}}).status, 400);

  const json req{{"table_id", id}, {"column", "cost"}, {"k", 3}, {"use_llm", false}};
  const auto a = post(s, "/suggest", req), b = post(s, "/suggest", req);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  const auto j = json::parse(a.body);
  EXPECT_EQ(j["column"], "Cost");
  EXPECT_LE(j["suggestions"].size(), 3u);
  EXPECT_FALSE(j["symbolic_only_fallback"].get<bool>());
}

TEST_F(ServiceTest, GeneratorUnavailableGives503WithSymbolicResults) {
  Service s(engine(), config());
  const std::string id = upload(s);
  const auto r = post(s, "/suggest", {{"table_id", id}, {"column", "Cost"}, {"use_llm", true}});
  EXPECT_EQ(r.status, 503);
  const auto j = json::parse(r.body);
  EXPECT_TRUE(j["symbolic_only_fallback"].get<bool>());
  EXPECT_FALSE(j["suggestions"].empty());

  ServiceConfig cfg = config();
  cfg.client_factory = [] { return std::make_unique<MockClient>(std::string("garbage")); };
  Service failing(engine(), cfg);
  const std::string id2 = upload(failing);
  EXPECT_EQ(post(failing, "/suggest", {{"table_id", id2}, {"column", "Cost"}, {"use_llm", true}}).status, 503);
}

TEST_F(ServiceTest, GeneratorPathUsesTranscript) {
  ServiceConfig cfg = config();
  const std::string transcript = std::string(AUTOCF_FIXTURE_DIR) + "/budget_cost_transcript.jsonl";
  cfg.client_factory = [transcript] { return std::make_unique<ReplayClient>(transcript); };
  Service s(engine(), cfg);
  const std::string id = upload(s);
  const auto r = post(s, "/suggest", {{"table_id", id}, {"column", "Project ID"}, {"use_llm", true}, {"seed", 1}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(normalize(parse_condition(j["suggestions"][0]["rule_text"].get<std::string>())),
            normalize(parse_condition("[@Budget]-[@Cost]>1000")));
}

TEST_F(ServiceTest, ApplyCreatesRevisionsAndFeedsFormats) {
  Service s(engine(), config());
  const std::string id = upload(s);
  const auto bad = post(s, "/apply", {{"table_id", id}, {"column", "Cost"}, {"rule", "[@Cost]>>1"}});
  EXPECT_EQ(bad.status, 422);
  EXPECT_TRUE(json::parse(bad.body).contains("position"));
  EXPECT_EQ(post(s, "/apply", {{"table_id", id}, {"column", "Cost"}, {"rule", "[@Nope]>1"}}).status, 422);
  EXPECT_EQ(post(s, "/apply", {{"table_id", id}, {"column", "Cost"}, {"rule", "TextContains(\"a\")"}}).status, 422);
  EXPECT_EQ(post(s, "/apply", {{"table_id", id}, {"column", "Nope"}, {"rule", "[@Cost]>1"}}).status, 422);

  const json rule{{"condition", "[@Budget]-[@Cost]>1000"}, {"format", {{"fill", "#0000FF"}}}};
  const auto ok = post(s, "/apply", {{"table_id", id}, {"column", "Project ID"}, {"rule", rule}});
  ASSERT_EQ(ok.status, 200) << ok.body;
  const auto applied = json::parse(ok.body);
  EXPECT_EQ(applied["revision"], 1);
  EXPECT_EQ(applied["highlighted"], 3);
  const auto rev1 = json::parse(s.handle("GET", "/tables/" + id + "/revisions/1", "", "").body);
  EXPECT_EQ(json::parse(s.handle("GET", "/tables/" + id, "", "").body)["revision"], 1);
  // revision 0 is untouched
  EXPECT_NE(s.handle("GET", "/tables/" + id + "/revisions/0", "", "").body, rev1.dump());

  // the applied format now comes from the sheet
  const auto sug = json::parse(post(s, "/suggest", {{"table_id", id}, {"column", "Cost"}}).body);
  EXPECT_EQ(sug["revision"], 1);
  for (const auto& x : sug["suggestions"]) EXPECT_EQ(x["format"]["fill"], "#0000FF");

  const auto plain = post(s, "/apply", {{"table_id", id}, {"column", "Cost"}, {"rule", "[@Cost]>5000"}});
  ASSERT_EQ(plain.status, 200);
  EXPECT_EQ(json::parse(plain.body)["revision"], 2);
}

TEST_F(ServiceTest, ServesOverHttp) {
  Service s(engine(), config());
  const int port = s.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread th([&] { s.run(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_connection_timeout(5);
  auto health = cli.Get("/health");
  for (int i = 0; i < 50 && !health; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    health = cli.Get("/health");
  }
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto created = cli.Post("/tables", projects_csv(), "text/csv");
  ASSERT_TRUE(created);
  const std::string id = json::parse(created->body)["table_id"];
  auto sug = cli.Post("/suggest", json{{"table_id", id}, {"column", "Cost"}, {"k", 2}}.dump(), "application/json");
  ASSERT_TRUE(sug);
  EXPECT_EQ(sug->status, 200);
  EXPECT_EQ(json::parse(sug->body)["suggestions"].size(), 2u);
  EXPECT_EQ(cli.Get("/missing")->status, 404);
  s.stop();
  th.join();
}

}  // namespace
}  // namespace autocf
